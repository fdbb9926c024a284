#include "unmix/model.hpp"

namespace unmix {

DtuNet::DtuNet(int bands, int endmembers, const EncoderConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    Rng enc_rng = rng.split(1);
    Rng dec_rng = rng.split(2);
    encoder = Encoder(bands, endmembers, cfg, enc_rng);
    decoder = Decoder(endmembers, bands, dec_rng);
}

DtuNet::Outputs DtuNet::forward(const Tensor& y) const {
    Outputs out;
    out.abundance = encoder.forward(y, ablation);
    const auto dec = decoder.forward(y, out.abundance);
    out.y_linear = dec.y_linear;
    out.b_field = dec.b_field;
    out.y_hat = dec.y_hat;
    return out;
}

ParamList DtuNet::params() {
    ParamList list;
    encoder.collect("encoder", list);
    decoder.collect("decoder", list);
    return list;
}

}  // namespace unmix
