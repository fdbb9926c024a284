#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "unmix/endmember_init.hpp"
#include "unmix/mixing.hpp"
#include "unmix/ops.hpp"
#include "unmix/training.hpp"

using namespace unmix;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed, float lo = 0.1f, float hi = 1.0f) {
    Rng rng(seed);
    std::vector<float> v(static_cast<std::size_t>(shape_numel(shape)));
    for (auto& x : v) x = rng.uniform(lo, hi);
    return Tensor::from_data(std::move(shape), std::move(v));
}

EncoderConfig toy_encoder() {
    EncoderConfig cfg;
    cfg.embed_channels = 6;
    cfg.spectral_channels = 4;
    cfg.ca_reduction = 2;
    cfg.spectral_stages = 2;
    return cfg;
}

}  // namespace

TEST_CASE("loss_re") {
    Tensor y = random_tensor({3, 3, 4}, 1);
    CHECK(loss_re(y, y).item() == 0.0f);

    Tensor a = Tensor::from_data({1, 1, 2}, {0.0f, 0.0f});
    Tensor b = Tensor::from_data({1, 1, 2}, {0.1f, 0.1f});
    CHECK(loss_re(a, b).item() == doctest::Approx(0.02).epsilon(1e-6));

    // homogeneity: doubling all residuals quadruples the loss
    Tensor base = random_tensor({2, 2, 3}, 2);
    Tensor delta = random_tensor({2, 2, 3}, 3, -0.2f, 0.2f);
    Tensor y1 = add(base, delta);
    Tensor y2 = add(base, scale(delta, 2.0f));
    CHECK(loss_re(base, y2).item() ==
          doctest::Approx(4.0 * loss_re(base, y1).item()).epsilon(1e-4));

    CHECK_THROWS_AS(loss_re(y, random_tensor({3, 3, 5}, 4)), ShapeError);
}

TEST_CASE("loss_sad") {
    Tensor y = random_tensor({3, 3, 4}, 11);
    CHECK(loss_sad(y, y).item() == doctest::Approx(0.0).epsilon(1e-4));
    CHECK(loss_sad(y, scale(y, 2.0f)).item() == doctest::Approx(0.0).epsilon(1e-4));

    // orthogonal spectra give pi/2
    Tensor e0 = Tensor::from_data({1, 1, 2}, {1.0f, 0.0f});
    Tensor e1 = Tensor::from_data({1, 1, 2}, {0.0f, 1.0f});
    CHECK(loss_sad(e0, e1).item() == doctest::Approx(3.14159265 / 2).epsilon(1e-6));

    // invariance under positive per-pixel scaling
    for (float c : {0.5f, 3.0f, 42.0f}) {
        CHECK(std::abs(loss_sad(y, scale(y, c)).item() - loss_sad(y, y).item()) < 1e-6);
    }

    CHECK_THROWS_AS(loss_sad(y, Tensor::zeros({3, 3, 4})), ValueError);
}

TEST_CASE("total_loss") {
    Tensor y = random_tensor({3, 3, 4}, 21);
    Tensor yh = random_tensor({3, 3, 4}, 22);
    const float re = loss_re(y, yh).item();
    const float sad = loss_sad(y, yh).item();
    CHECK(total_loss(y, yh, 1.0f).item() == doctest::Approx(re + sad).epsilon(1e-6));
    CHECK(total_loss(y, yh, 0.5f).item() == doctest::Approx(0.5f * re + sad).epsilon(1e-6));
    for (float alpha : {0.5f, 1.0f, 3.0f})
        CHECK(total_loss(y, y, alpha).item() == doctest::Approx(0.0).epsilon(1e-5));
    CHECK_THROWS_AS(total_loss(y, yh, 0.0f), ValueError);
}

TEST_CASE("table-one defaults") {
    TrainConfig cfg;
    CHECK(cfg.alpha == 0.5f);
    CHECK(cfg.epochs == 600);
    CHECK(cfg.lr_rest == doctest::Approx(1e-2));
    CHECK(cfg.lr_endmember == doctest::Approx(1e-5));
    CHECK(cfg.weight_decay == doctest::Approx(1e-3));
    CHECK(cfg.clip_norm == 0.0f);  // clipping off unless asked for
}

TEST_CASE("zero learning rates freeze the run") {
    auto ds = gen_dataset(MixModel::lmm, 16, 16, 3, 16, std::nullopt, 31);
    DtuNet model(16, 3, toy_encoder(), 32);
    model.decoder.set_endmembers(ds.endmembers);

    auto params = model.params();
    std::vector<float> snapshot;
    for (const auto& p : params)
        snapshot.insert(snapshot.end(), p.value.data(), p.value.data() + p.value.numel());

    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.lr_endmember = 0.0f;
    cfg.lr_rest = 0.0f;
    const auto record = train(model, ds.cube, cfg);

    for (int e = 1; e < 3; ++e) {
        CHECK(record.epochs[static_cast<std::size_t>(e)].total == record.epochs[0].total);
        CHECK(record.epochs[static_cast<std::size_t>(e)].re == record.epochs[0].re);
        CHECK(record.epochs[static_cast<std::size_t>(e)].sad == record.epochs[0].sad);
    }
    std::size_t k = 0;
    for (const auto& p : params)
        for (std::int64_t i = 0; i < p.value.numel(); ++i)
            CHECK(p.value.data()[i] == snapshot[k++]);
}

TEST_CASE("adam group split") {
    auto ds = gen_dataset(MixModel::lmm, 16, 16, 3, 16, std::nullopt, 41);
    DtuNet model(16, 3, toy_encoder(), 42);
    model.decoder.set_endmembers(ds.endmembers);

    const auto before_w = model.decoder.endmember_weights.detached_copy();
    const auto before_tok = model.encoder.spatial.tokenizer.conv1.kernel.detached_copy();

    // only the endmember group moves
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.lr_rest = 0.0f;
    cfg.lr_endmember = 1e-3f;
    cfg.weight_decay = 0.0f;
    train(model, ds.cube, cfg);

    bool w_moved = false;
    for (std::int64_t i = 0; i < before_w.numel(); ++i)
        if (model.decoder.endmember_weights.data()[i] != before_w.values()[i]) w_moved = true;
    CHECK(w_moved);
    for (std::int64_t i = 0; i < before_tok.numel(); ++i)
        CHECK(model.encoder.spatial.tokenizer.conv1.kernel.data()[i] == before_tok.values()[i]);
}

TEST_CASE("training is deterministic for a seed") {
    auto ds = gen_dataset(MixModel::ppnmm, 16, 16, 3, 16, 30.0f, 51);
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.seed = 7;

    auto run = [&] {
        DtuNet model(16, 3, toy_encoder(), cfg.seed);
        model.decoder.set_endmembers(farthest_point_init(ds.cube, 3));
        return train(model, ds.cube, cfg);
    };
    const auto a = run();
    const auto b = run();
    for (std::size_t e = 0; e < a.epochs.size(); ++e) {
        CHECK(a.epochs[e].total == b.epochs[e].total);
        CHECK(a.epochs[e].re == b.epochs[e].re);
        CHECK(a.epochs[e].sad == b.epochs[e].sad);
    }
}

TEST_CASE("warm-started LMM toy fits quickly") {
    auto ds = gen_dataset(MixModel::lmm, 20, 20, 3, 16, std::nullopt, 61);
    EncoderConfig enc = toy_encoder();
    DtuNet model(16, 3, enc, 62);
    model.decoder.set_endmembers(ds.endmembers);  // oracle init

    TrainConfig cfg;
    cfg.epochs = 100;
    const auto record = train(model, ds.cube, cfg);
    CHECK(record.epochs.back().total < 0.1f * record.epochs.front().total);
}

TEST_CASE("non-finite loss aborts with an epoch diagnostic") {
    auto ds = gen_dataset(MixModel::lmm, 16, 16, 3, 16, std::nullopt, 71);
    DtuNet model(16, 3, toy_encoder(), 72);
    model.decoder.set_endmembers(ds.endmembers);

    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.lr_rest = 1e12f;  // guaranteed blow-up
    cfg.lr_endmember = 1e12f;
    try {
        train(model, ds.cube, cfg);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("epoch") != std::string::npos);
    }
}
