#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "unmix/io.hpp"
#include "unmix/mixing.hpp"
#include "unmix/model.hpp"

using namespace unmix;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    const auto dir = fs::temp_directory_path() / "unmix_io_test";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("cube round trip is bit exact") {
    const auto dir = scratch_dir();
    auto ds = gen_dataset(MixModel::ppnmm, 5, 7, 3, 11, 25.0f, 1);
    save_cube(dir / "cube", ds.cube);

    auto loaded = load_cube(dir / "cube");
    CHECK(loaded.rows == 5);
    CHECK(loaded.cols == 7);
    CHECK(loaded.bands == 11);
    for (std::int64_t i = 0; i < ds.cube.data.numel(); ++i)
        CHECK(loaded.data.values()[i] == ds.cube.data.values()[i]);
}

TEST_CASE("cube payload sizing and errors") {
    const auto dir = scratch_dir();
    auto small = HsiCube::wrap(Tensor::from_data(
        {2, 2, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12}));
    save_cube(dir / "small", small);
    CHECK(fs::file_size(dir / "small.bin") == 48);  // 2*2*3*4 bytes

    // truncated payload is a length-mismatch error
    fs::resize_file(dir / "small.bin", 40);
    CHECK_THROWS_AS(load_cube(dir / "small"), IoError);

    CHECK_THROWS_AS(load_cube(dir / "absent"), IoError);
}

TEST_CASE("endmember csv round trip") {
    const auto dir = scratch_dir();
    auto m = gen_endmembers(3, 16, 2);
    save_matrix_csv(dir / "end.csv", m.values);
    auto loaded = load_endmembers(dir / "end.csv");
    CHECK(loaded.count == 3);
    CHECK(loaded.bands == 16);
    for (std::int64_t i = 0; i < m.values.numel(); ++i)
        CHECK(loaded.values.values()[i] == m.values.values()[i]);
}

TEST_CASE("run config defaults match the paper protocol") {
    RunConfig cfg;
    CHECK(cfg.c_embed == 108);
    CHECK(cfg.gamma == 1.0f);
    CHECK(cfg.alpha == 0.5f);
    CHECK(cfg.epochs == 600);
    CHECK(cfg.lr_rest == doctest::Approx(1e-2));
    CHECK(cfg.lr_endmember == doctest::Approx(1e-5));
    CHECK(cfg.weight_decay == doctest::Approx(1e-3));
    CHECK(cfg.init == "vca");
}

TEST_CASE("run config file parsing") {
    const auto dir = scratch_dir();
    {
        std::ofstream out(dir / "cfg.txt");
        out << "# comment line\n";
        out << "c_embed = 36\n";
        out << "gamma = 1.2\n";
        out << "epochs = 300\n";
        out << "init = farthest_point\n";
    }
    auto cfg = RunConfig::from_file(dir / "cfg.txt");
    CHECK(cfg.c_embed == 36);
    CHECK(cfg.gamma == doctest::Approx(1.2));
    CHECK(cfg.epochs == 300);
    CHECK(cfg.init == "farthest_point");
    CHECK(cfg.alpha == 0.5f);  // untouched default

    {
        std::ofstream out(dir / "bad.txt");
        out << "embedd_chans = 36\n";
    }
    CHECK_THROWS_AS(RunConfig::from_file(dir / "bad.txt"), ValueError);

    {
        std::ofstream out(dir / "badval.txt");
        out << "init = simplex\n";
    }
    CHECK_THROWS_AS(RunConfig::from_file(dir / "badval.txt"), ValueError);
}

TEST_CASE("run config serialization round trip") {
    RunConfig cfg;
    cfg.c_embed = 36;
    cfg.gamma = 1.2f;
    cfg.alpha = 0.55f;
    cfg.lr_rest = 8e-3f;
    cfg.seed = 1234567;
    cfg.ablate = "spectral";

    const auto dir = scratch_dir();
    std::ofstream(dir / "echo.txt") << cfg.serialize();
    auto parsed = RunConfig::from_file(dir / "echo.txt");
    CHECK(parsed == cfg);
    CHECK(parsed.hash() == cfg.hash());
}

TEST_CASE("checkpoint round trip") {
    const auto dir = scratch_dir();
    EncoderConfig enc;
    enc.embed_channels = 6;
    enc.spectral_channels = 4;
    enc.ca_reduction = 2;
    enc.spectral_stages = 2;
    DtuNet model(12, 3, enc, 7);
    auto params = model.params();
    save_checkpoint(dir / "ckpt.bin", params, "cafe");

    DtuNet twin(12, 3, enc, 8);  // different seed, different weights
    auto twin_params = twin.params();
    std::string hash;
    load_checkpoint(dir / "ckpt.bin", twin_params, &hash);
    CHECK(hash == "cafe");
    for (std::size_t i = 0; i < params.size(); ++i)
        for (std::int64_t j = 0; j < params[i].value.numel(); ++j)
            CHECK(twin_params[i].value.values()[j] == params[i].value.values()[j]);

    DtuNet other(12, 4, enc, 9);
    auto other_params = other.params();
    CHECK_THROWS_AS(load_checkpoint(dir / "ckpt.bin", other_params), IoError);
}

TEST_CASE("loss csv bytes are deterministic") {
    TrainRecord rec;
    rec.epochs = {{0.5f, 0.25f, 0.25f}, {0.25f, 0.1f, 0.15f}};
    const auto dir = scratch_dir();
    save_train_record_csv(dir / "a.csv", rec);
    save_train_record_csv(dir / "b.csv", rec);
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
    CHECK(slurp(dir / "a.csv").rfind("epoch,total,re,sad\n", 0) == 0);
}

TEST_CASE("pgm export") {
    const auto dir = scratch_dir() / "pgm";
    fs::create_directories(dir);
    auto a = gen_abundance_field(6, 5, 3, 2.0f, 3);
    save_abundance_pgm(dir, a);
    for (int c = 0; c < 3; ++c) {
        const auto p = dir / ("abund_" + std::to_string(c) + ".pgm");
        REQUIRE(fs::exists(p));
        CHECK(slurp(p).rfind("P5\n5 6\n255\n", 0) == 0);
    }
}

TEST_CASE("eval report json") {
    const auto dir = scratch_dir();
    EvalReport rep;
    rep.rmse_abun = 0.05;
    rep.sad_end = 0.01;
    rep.permutation = {1, 0, 2};
    save_eval_report(dir / "r1.json", rep);
    const auto text = slurp(dir / "r1.json");
    CHECK(text.find("rmse_b") == std::string::npos);
    CHECK(text.find("permutation") != std::string::npos);

    rep.rmse_b = 0.09;
    save_eval_report(dir / "r2.json", rep);
    CHECK(slurp(dir / "r2.json").find("rmse_b") != std::string::npos);
}

TEST_CASE("histogram csv") {
    Histogram h;
    h.bin_centers = {-0.2, 0.0, 0.2};
    h.counts = {3, 5, 2};
    const auto dir = scratch_dir();
    save_histogram_csv(dir / "h.csv", h);
    const auto text = slurp(dir / "h.csv");
    CHECK(text.rfind("bin_center,count\n", 0) == 0);
    CHECK(text.find("0,5") != std::string::npos);
}
