#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "unmix/endmember_init.hpp"
#include "unmix/gradcheck.hpp"
#include "unmix/io.hpp"
#include "unmix/mixing.hpp"
#include "unmix/model.hpp"
#include "unmix/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::optional<float> parse_snr(const std::string& text) {
    if (text == "clean") return std::nullopt;
    try {
        return std::stof(text);
    } catch (const std::exception&) {
        throw unmix::ValueError("--snr expects a dB value or 'clean', got '" + text + "'");
    }
}

struct SynthArgs {
    std::string model = "ppnmm";
    int rows = 100, cols = 100;
    int endmembers = 4;
    int bands = 224;
    std::string snr = "30";
    std::uint64_t seed = 0;
    float smoothness = 2.0f;
    std::string out;
};

int run_synth(const SynthArgs& a) {
    const auto model = unmix::parse_mix_model(a.model);
    const auto snr = parse_snr(a.snr);
    auto ds = unmix::gen_dataset(model, a.rows, a.cols, a.endmembers, a.bands, snr, a.seed,
                                 a.smoothness);
    const fs::path dir(a.out);
    fs::create_directories(dir);
    unmix::save_cube(dir / "cube", ds.cube);
    unmix::save_cube(dir / "abund", unmix::HsiCube::wrap(ds.abundance.values.detached_copy()));
    unmix::save_matrix_csv(dir / "endmembers.csv", ds.endmembers.values);
    if (ds.bfield)
        unmix::save_cube(dir / "bfield", unmix::HsiCube::wrap(ds.bfield->values.detached_copy()));

    json manifest;
    manifest["model"] = a.model;
    manifest["rows"] = a.rows;
    manifest["cols"] = a.cols;
    manifest["endmembers"] = a.endmembers;
    manifest["bands"] = a.bands;
    manifest["snr_db"] = snr ? json(*snr) : json("clean");
    manifest["seed"] = a.seed;
    manifest["smoothness"] = a.smoothness;
    std::ofstream(dir / "dataset.json") << manifest.dump(2) << "\n";

    std::cout << "wrote dataset to " << dir.string() << "\n";
    return kExitOk;
}

struct TrainArgs {
    std::string data;
    std::string config;
    std::string out;
    int endmembers = 0;  // 0 = infer from the dataset directory
    // CLI overrides; only applied when the flag was passed
    CLI::App* cmd = nullptr;
};

int infer_endmember_count(const fs::path& data_dir) {
    const fs::path manifest = data_dir / "dataset.json";
    if (fs::exists(manifest)) {
        std::ifstream in(manifest);
        json j;
        in >> j;
        if (j.contains("endmembers")) return j["endmembers"].get<int>();
    }
    const fs::path csv = data_dir / "endmembers.csv";
    if (fs::exists(csv)) return unmix::load_endmembers(csv).count;
    throw unmix::ValueError("cannot infer R from " + data_dir.string() +
                            "; pass -R explicitly");
}

int run_train(const TrainArgs& a, unmix::RunConfig cfg) {
    const fs::path data_dir(a.data);
    if (!fs::exists(data_dir / "cube.json"))
        throw unmix::IoError("dataset directory " + data_dir.string() + " has no cube");
    const auto cube = unmix::load_cube(data_dir / "cube");
    const int r = a.endmembers > 0 ? a.endmembers : infer_endmember_count(data_dir);

    const fs::path out_dir(a.out);
    fs::create_directories(out_dir);

    // resolved configuration is echoed next to the run outputs
    std::ofstream(out_dir / "config.txt") << cfg.serialize();

    unmix::DtuNet model(cube.bands, r, cfg.encoder_config(), cfg.seed);
    model.ablation = unmix::parse_ablation(cfg.ablate);

    unmix::InitConfig init;
    init.method = unmix::InitConfig::parse_method(cfg.init);
    init.seed = cfg.seed;
    model.decoder.set_endmembers(unmix::init_endmembers(cube, r, init));

    const auto train_cfg = cfg.train_config();
    int last_printed = -1;
    const auto record = unmix::train(model, cube, train_cfg,
                                     [&](int epoch, const unmix::EpochStats& s) {
                                         if ((epoch + 1) % 50 == 0 || epoch == 0) {
                                             std::fprintf(stderr,
                                                          "epoch %4d  total %.6f  re %.6f  sad %.6f\n",
                                                          epoch + 1, s.total, s.re, s.sad);
                                             last_printed = epoch;
                                         }
                                     });
    (void)last_printed;

    unmix::save_train_record_csv(out_dir / "losses.csv", record);

    auto params = model.params();
    unmix::save_checkpoint(out_dir / "checkpoint.bin", params, cfg.hash());

    const auto est = model.decoder.extract_endmembers();
    unmix::save_matrix_csv(out_dir / "endmembers_est.csv", est.values);

    const auto outputs = model.forward(cube.data);
    unmix::AbundanceTensor abund;
    abund.values = outputs.abundance.detached_copy();
    unmix::save_cube(out_dir / "abund_est", unmix::HsiCube::wrap(abund.values.detached_copy()));
    unmix::save_cube(out_dir / "bfield_est",
                     unmix::HsiCube::wrap(outputs.b_field.detached_copy()));
    unmix::save_abundance_pgm(out_dir, abund);

    json run_info;
    run_info["endmembers"] = r;
    run_info["epochs"] = static_cast<int>(record.epochs.size());
    run_info["final_total_loss"] = record.epochs.back().total;
    run_info["wall_seconds"] = record.wall_seconds;
    run_info["config_hash"] = cfg.hash();
    run_info["ablate"] = cfg.ablate;
    std::ofstream(out_dir / "run.json") << run_info.dump(2) << "\n";

    std::cout << "run written to " << out_dir.string() << "\n";
    return kExitOk;
}

struct EvalArgs {
    std::string run;
    std::string truth;
    std::string out;
    int bins = 30;
};

int run_eval(const EvalArgs& a) {
    const fs::path run_dir(a.run);
    const fs::path truth_dir(a.truth);
    const auto est_end = unmix::load_endmembers(run_dir / "endmembers_est.csv");
    const auto true_end = unmix::load_endmembers(truth_dir / "endmembers.csv");
    if (est_end.count != true_end.count)
        throw unmix::ValueError("R mismatch: run has " + std::to_string(est_end.count) +
                                " endmembers, truth has " + std::to_string(true_end.count));

    unmix::AbundanceTensor est_ab, true_ab;
    est_ab.values = unmix::load_cube(run_dir / "abund_est").data;
    true_ab.values = unmix::load_cube(truth_dir / "abund").data;

    unmix::EvalReport report;
    report.permutation = unmix::match_endmembers(est_end, true_end);
    report.rmse_abun = unmix::rmse_abun(est_ab, true_ab, report.permutation);
    report.sad_end = unmix::sad_end(est_end, true_end, report.permutation);

    const bool have_est_b = fs::exists(run_dir / "bfield_est.json");
    const bool have_true_b = fs::exists(truth_dir / "bfield.json");
    if (have_est_b && have_true_b) {
        unmix::NonlinearField est_b, true_b;
        est_b.values = unmix::load_cube(run_dir / "bfield_est").data;
        true_b.values = unmix::load_cube(truth_dir / "bfield").data;
        report.rmse_b = unmix::rmse_b(est_b, true_b);
    }

    const fs::path out_path = a.out.empty() ? run_dir / "eval.json" : fs::path(a.out);
    unmix::save_eval_report(out_path, report);

    if (have_est_b) {
        unmix::NonlinearField est_b;
        est_b.values = unmix::load_cube(run_dir / "bfield_est").data;
        unmix::save_histogram_csv(out_path.parent_path() / "b_hist.csv",
                                  unmix::b_histogram(est_b, a.bins));
    }

    std::cout << "rmse_abun " << report.rmse_abun << "  sad_end " << report.sad_end;
    if (report.rmse_b) std::cout << "  rmse_b " << *report.rmse_b;
    std::cout << "\n";
    return kExitOk;
}

struct GradcheckArgs {
    std::string op;
    double eps = 3e-3;
};

int run_gradcheck(const GradcheckArgs& a) {
    bool any_matched = false;
    bool all_ok = true;
    for (const auto& c : unmix::gradcheck_suite()) {
        if (!a.op.empty() && c.name.find(a.op) == std::string::npos) continue;
        any_matched = true;
        const double err = c.run(a.eps);
        const bool ok = err < c.tolerance;
        all_ok = all_ok && ok;
        std::printf("[%s] %-32s max_rel_err %.3e  (tol %.1e)\n", ok ? "PASS" : "FAIL",
                    c.name.c_str(), err, c.tolerance);
    }
    if (!any_matched) throw unmix::ValueError("no gradcheck case matches '" + a.op + "'");
    if (!all_ok) throw unmix::NumericError("gradient check failed");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonlinear hyperspectral unmixing toolkit (dilated-transformer encoder + "
                 "PPNMM decoder)"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
    synth_cmd->add_option("--model", synth.model, "Mixing model: lmm, gbm or ppnmm");
    synth_cmd->add_option("--rows", synth.rows, "Image rows");
    synth_cmd->add_option("--cols", synth.cols, "Image cols");
    synth_cmd->add_option("-R,--endmembers", synth.endmembers, "Endmember count");
    synth_cmd->add_option("-L,--bands", synth.bands, "Band count");
    synth_cmd->add_option("--snr", synth.snr, "SNR in dB, or 'clean'");
    synth_cmd->add_option("--seed", synth.seed, "Random seed");
    synth_cmd->add_option("--smoothness", synth.smoothness, "Abundance field smoothness");
    synth_cmd->add_option("-o,--out", synth.out, "Output directory")->required();

    TrainArgs train_args;
    unmix::RunConfig cli_cfg;
    auto* train_cmd = app.add_subcommand("train", "Train the unmixing network on a dataset");
    train_cmd->add_option("-d,--data", train_args.data, "Dataset directory")->required();
    train_cmd->add_option("-c,--config", train_args.config, "Config file (key=value lines)");
    train_cmd->add_option("-o,--out", train_args.out, "Run output directory")->required();
    train_cmd->add_option("-R,--endmembers", train_args.endmembers,
                          "Endmember count (default: inferred from the dataset)");
    train_cmd->add_option("--seed", cli_cfg.seed, "Seed for init and training");
    train_cmd->add_option("--epochs", cli_cfg.epochs, "Training epochs");
    train_cmd->add_option("--alpha", cli_cfg.alpha, "RE loss weight");
    train_cmd->add_option("--gamma", cli_cfg.gamma, "Abundance softmax sharpness");
    train_cmd->add_option("-C,--c-embed", cli_cfg.c_embed, "Embedding channels");
    train_cmd->add_option("--lr-endmember", cli_cfg.lr_endmember, "LR for the endmember conv");
    train_cmd->add_option("--lr-rest", cli_cfg.lr_rest, "LR for all other parameters");
    train_cmd->add_option("--weight-decay", cli_cfg.weight_decay, "Decoupled weight decay");
    train_cmd->add_option("--clip-norm", cli_cfg.clip_norm, "Global grad clip (0 = off)");
    train_cmd->add_option("--spectral-stages", cli_cfg.spectral_stages,
                          "Spectral branch stages (0 = auto)");
    train_cmd->add_option("--spectral-channels", cli_cfg.spectral_channels,
                          "Spectral branch conv width");
    train_cmd->add_option("--ca-reduction", cli_cfg.ca_reduction, "Channel attention reduction");
    train_cmd->add_option("--window", cli_cfg.window, "SWDA window size (odd)");
    train_cmd->add_option("--init", cli_cfg.init, "Endmember init: vca or farthest_point");
    train_cmd->add_option("--ablate", cli_cfg.ablate,
                          "Zero one encoder branch: none, spatial or spectral");

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "Score a run against ground truth");
    eval_cmd->add_option("-r,--run", eval_args.run, "Run directory")->required();
    eval_cmd->add_option("-t,--truth", eval_args.truth, "Dataset (truth) directory")->required();
    eval_cmd->add_option("-o,--out", eval_args.out, "Report path (default <run>/eval.json)");
    eval_cmd->add_option("--bins", eval_args.bins, "Histogram bins");

    GradcheckArgs gc_args;
    auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every op");
    gc_cmd->add_option("--op", gc_args.op, "Only run cases whose name contains this substring");
    gc_cmd->add_option("--eps", gc_args.eps, "Finite-difference step");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (synth_cmd->parsed()) return run_synth(synth);
        if (train_cmd->parsed()) {
            // file config first, explicit CLI flags override it
            unmix::RunConfig cfg;
            if (!train_args.config.empty()) cfg = unmix::RunConfig::from_file(train_args.config);
            auto maybe = [&](const char* flag, auto member) {
                if (train_cmd->count(flag) > 0) cfg.*member = cli_cfg.*member;
            };
            maybe("--seed", &unmix::RunConfig::seed);
            maybe("--epochs", &unmix::RunConfig::epochs);
            maybe("--alpha", &unmix::RunConfig::alpha);
            maybe("--gamma", &unmix::RunConfig::gamma);
            maybe("--c-embed", &unmix::RunConfig::c_embed);
            maybe("--lr-endmember", &unmix::RunConfig::lr_endmember);
            maybe("--lr-rest", &unmix::RunConfig::lr_rest);
            maybe("--weight-decay", &unmix::RunConfig::weight_decay);
            maybe("--clip-norm", &unmix::RunConfig::clip_norm);
            maybe("--spectral-stages", &unmix::RunConfig::spectral_stages);
            maybe("--spectral-channels", &unmix::RunConfig::spectral_channels);
            maybe("--ca-reduction", &unmix::RunConfig::ca_reduction);
            maybe("--window", &unmix::RunConfig::window);
            maybe("--init", &unmix::RunConfig::init);
            maybe("--ablate", &unmix::RunConfig::ablate);
            return run_train(train_args, cfg);
        }
        if (eval_cmd->parsed()) return run_eval(eval_args);
        if (gc_cmd->parsed()) return run_gradcheck(gc_args);
    } catch (const unmix::NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const unmix::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const unmix::ShapeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const unmix::ValueError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
