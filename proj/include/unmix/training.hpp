#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "unmix/model.hpp"

namespace unmix {

struct TrainConfig {
    float alpha = 0.5f;  // RE weight in alpha*L_RE + L_SAD
    int epochs = 600;
    float lr_endmember = 1e-5f;  // decoder 1x1 conv
    float lr_rest = 1e-2f;       // everything else
    float weight_decay = 1e-3f;  // decoupled, all parameters
    std::uint64_t seed = 0;
    float clip_norm = 0.0f;  // global grad-norm clip; 0 disables

    void validate() const;
};

struct EpochStats {
    float total = 0.0f;
    float re = 0.0f;
    float sad = 0.0f;
};

struct TrainRecord {
    std::vector<EpochStats> epochs;
    double wall_seconds = 0.0;
};

// (1/pixel_count) * ||y_hat - y||_F^2
Tensor loss_re(const Tensor& y, const Tensor& y_hat);
// mean over pixels of the spectral angle, scale-invariant
Tensor loss_sad(const Tensor& y, const Tensor& y_hat);
// alpha * L_RE + L_SAD
Tensor total_loss(const Tensor& y, const Tensor& y_hat, float alpha);

// Adam with decoupled weight decay and two learning-rate groups (the decoder
// endmember weight vs everything else).
class Adam {
public:
    Adam(const ParamList& params, const TrainConfig& cfg,
         const std::string& endmember_param_name);

    void step();
    void zero_grad();

private:
    struct Slot {
        Tensor param;
        float lr;
        std::vector<float> m;
        std::vector<float> v;
    };
    std::vector<Slot> slots_;
    float beta1_, beta2_, eps_;
    float weight_decay_;
    float clip_norm_;
    std::int64_t step_count_ = 0;
};

using EpochCallback = std::function<void(int epoch, const EpochStats&)>;

// Full-image training (the batch is the single cube). Deterministic for a
// fixed seed; throws NumericError naming the epoch when a loss goes
// non-finite.
TrainRecord train(DtuNet& model, const HsiCube& y, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

}  // namespace unmix
