#include "unmix/training.hpp"

#include <chrono>
#include <cmath>

#include "unmix/ops.hpp"

namespace unmix {

void TrainConfig::validate() const {
    require_value(alpha > 0.0f, "train: alpha must be > 0");
    require_value(epochs >= 1, "train: epochs must be >= 1");
    require_value(lr_endmember >= 0.0f && lr_rest >= 0.0f, "train: learning rates must be >= 0");
    require_value(weight_decay >= 0.0f, "train: weight decay must be >= 0");
    require_value(clip_norm >= 0.0f, "train: clip norm must be >= 0");
}

Tensor loss_re(const Tensor& y, const Tensor& y_hat) {
    require_shape(y.shape() == y_hat.shape(), "loss_re: shape mismatch");
    const std::int64_t pixels = static_cast<std::int64_t>(y.extent(0)) * y.extent(1);
    Tensor diff = sub(y_hat, y);
    return scale(sum(hadamard(diff, diff)), 1.0f / static_cast<float>(pixels));
}

Tensor loss_sad(const Tensor& y, const Tensor& y_hat) {
    return spectral_angle_mean(y, y_hat);
}

Tensor total_loss(const Tensor& y, const Tensor& y_hat, float alpha) {
    require_value(alpha > 0.0f, "total_loss: alpha must be > 0");
    return add(scale(loss_re(y, y_hat), alpha), loss_sad(y, y_hat));
}

Adam::Adam(const ParamList& params, const TrainConfig& cfg,
           const std::string& endmember_param_name)
    : beta1_(0.9f), beta2_(0.999f), eps_(1e-8f), weight_decay_(cfg.weight_decay),
      clip_norm_(cfg.clip_norm) {
    for (const auto& p : params) {
        Slot s;
        s.param = p.value;
        s.lr = p.name == endmember_param_name ? cfg.lr_endmember : cfg.lr_rest;
        s.m.assign(static_cast<std::size_t>(p.value.numel()), 0.0f);
        s.v.assign(static_cast<std::size_t>(p.value.numel()), 0.0f);
        slots_.push_back(std::move(s));
    }
}

void Adam::zero_grad() {
    for (auto& s : slots_) s.param.zero_grad();
}

void Adam::step() {
    ++step_count_;
    const float bc1 = 1.0f - std::pow(beta1_, static_cast<float>(step_count_));
    const float bc2 = 1.0f - std::pow(beta2_, static_cast<float>(step_count_));

    float clip_scale = 1.0f;
    if (clip_norm_ > 0.0f) {
        double total = 0.0;
        for (const auto& s : slots_) {
            if (!s.param.has_grad()) continue;
            for (float g : s.param.grad()) total += static_cast<double>(g) * g;
        }
        const double norm = std::sqrt(total);
        if (norm > clip_norm_) clip_scale = static_cast<float>(clip_norm_ / norm);
    }

    for (auto& s : slots_) {
        if (!s.param.has_grad()) continue;
        auto g = s.param.grad();
        float* w = s.param.data();
        const std::size_t n = s.m.size();
        for (std::size_t i = 0; i < n; ++i) {
            const float gi = g[i] * clip_scale;
            s.m[i] = beta1_ * s.m[i] + (1.0f - beta1_) * gi;
            s.v[i] = beta2_ * s.v[i] + (1.0f - beta2_) * gi * gi;
            const float mhat = s.m[i] / bc1;
            const float vhat = s.v[i] / bc2;
            w[i] -= s.lr * (mhat / (std::sqrt(vhat) + eps_) + weight_decay_ * w[i]);
        }
    }
}

TrainRecord train(DtuNet& model, const HsiCube& y, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();

    ParamList params = model.params();
    Adam optimizer(params, cfg, DtuNet::kEndmemberParamName);

    TrainRecord record;
    record.epochs.reserve(static_cast<std::size_t>(cfg.epochs));

    const Tensor& input = y.data;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        EpochStats stats;
        try {
            Tape tape;
            const auto out = model.forward(input);
            Tensor re = loss_re(input, out.y_hat);
            Tensor sad = loss_sad(input, out.y_hat);
            Tensor total = add(scale(re, cfg.alpha), sad);
            stats.re = re.item();
            stats.sad = sad.item();
            stats.total = total.item();
            if (!std::isfinite(stats.total))
                throw NumericError("non-finite total loss");
            optimizer.zero_grad();
            tape.backward(total);
        } catch (const NumericError& e) {
            throw NumericError("training aborted at epoch " + std::to_string(epoch + 1) + ": " +
                               e.what());
        }
        optimizer.step();
        record.epochs.push_back(stats);
        if (on_epoch) on_epoch(epoch, stats);
    }

    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return record;
}

}  // namespace unmix
