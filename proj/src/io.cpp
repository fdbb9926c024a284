#include "unmix/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "unmix/endmember_init.hpp"

namespace unmix {

namespace {

using nlohmann::json;

// shortest float32-exact decimal form
std::string fmt_float(float v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
    return buf;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

void save_cube(const std::filesystem::path& base, const HsiCube& cube) {
    json header;
    header["rows"] = cube.rows;
    header["cols"] = cube.cols;
    header["bands"] = cube.bands;
    header["dtype"] = "f32le";
    header["order"] = "band-interleaved-by-pixel";
    write_file(base.string() + ".json", header.dump(2) + "\n");

    std::ofstream bin(base.string() + ".bin", std::ios::binary);
    if (!bin) throw IoError("cannot write " + base.string() + ".bin");
    bin.write(reinterpret_cast<const char*>(cube.data.data()),
              static_cast<std::streamsize>(cube.data.numel() * sizeof(float)));
}

HsiCube load_cube(const std::filesystem::path& base) {
    const auto sidecar = base.string() + ".json";
    json header;
    try {
        header = json::parse(read_file(sidecar));
    } catch (const json::exception& e) {
        throw IoError("bad cube sidecar " + sidecar + ": " + e.what());
    }
    const int rows = header.at("rows").get<int>();
    const int cols = header.at("cols").get<int>();
    const int bands = header.at("bands").get<int>();
    const std::string dtype = header.at("dtype").get<std::string>();
    if (dtype != "f32le") throw IoError("unknown dtype '" + dtype + "' in " + sidecar);

    const auto bin_path = base.string() + ".bin";
    std::ifstream bin(bin_path, std::ios::binary | std::ios::ate);
    if (!bin) throw IoError("cannot read " + bin_path);
    const auto size = static_cast<std::int64_t>(bin.tellg());
    const std::int64_t expect = static_cast<std::int64_t>(rows) * cols * bands * 4;
    if (size != expect)
        throw IoError("cube payload length mismatch in " + bin_path + ": expected " +
                      std::to_string(expect) + " bytes, found " + std::to_string(size));
    bin.seekg(0);
    std::vector<float> data(static_cast<std::size_t>(rows) * cols * bands);
    bin.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(size));
    if (!bin) throw IoError("short read on " + bin_path);
    return HsiCube::wrap(Tensor::from_data({rows, cols, bands}, std::move(data)));
}

void save_matrix_csv(const std::filesystem::path& path, const Tensor& matrix) {
    require_shape(matrix.rank() == 2, "save_matrix_csv: rank-2 tensor expected");
    std::ostringstream out;
    const int rows = matrix.extent(0), cols = matrix.extent(1);
    const float* p = matrix.data();
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            if (c) out << ',';
            out << fmt_float(p[static_cast<std::int64_t>(r) * cols + c]);
        }
        out << '\n';
    }
    write_file(path, out.str());
}

void save_train_record_csv(const std::filesystem::path& path, const TrainRecord& record) {
    std::ostringstream out;
    out << "epoch,total,re,sad\n";
    for (std::size_t i = 0; i < record.epochs.size(); ++i) {
        const auto& e = record.epochs[i];
        out << (i + 1) << ',' << fmt_float(e.total) << ',' << fmt_float(e.re) << ','
            << fmt_float(e.sad) << '\n';
    }
    write_file(path, out.str());
}

void save_abundance_pgm(const std::filesystem::path& dir, const AbundanceTensor& a) {
    const int rows = a.values.extent(0), cols = a.values.extent(1), r = a.values.extent(2);
    const float* p = a.values.data();
    for (int ch = 0; ch < r; ++ch) {
        std::ostringstream out;
        out << "P5\n" << cols << ' ' << rows << "\n255\n";
        for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < cols; ++j) {
                float v = p[(static_cast<std::int64_t>(i) * cols + j) * r + ch];
                v = std::min(1.0f, std::max(0.0f, v));
                out << static_cast<char>(static_cast<int>(v * 255.0f + 0.5f));
            }
        }
        write_file(dir / ("abund_" + std::to_string(ch) + ".pgm"), out.str());
    }
}

void save_eval_report(const std::filesystem::path& path, const EvalReport& report) {
    json j;
    j["rmse_abun"] = report.rmse_abun;
    j["sad_end"] = report.sad_end;
    if (report.rmse_b.has_value()) j["rmse_b"] = *report.rmse_b;
    j["permutation"] = report.permutation;
    write_file(path, j.dump(2) + "\n");
}

void save_histogram_csv(const std::filesystem::path& path, const Histogram& h) {
    std::ostringstream out;
    out << "bin_center,count\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i)
        out << fmt_double(h.bin_centers[i]) << ',' << h.counts[i] << '\n';
    write_file(path, out.str());
}

void save_checkpoint(const std::filesystem::path& path, const ParamList& params,
                     const std::string& config_hash) {
    json header;
    header["format"] = "hsunmix-checkpoint-v1";
    header["config_hash"] = config_hash;
    json plist = json::array();
    std::int64_t total = 0;
    for (const auto& p : params) {
        json e;
        e["name"] = p.name;
        e["shape"] = p.value.shape();
        plist.push_back(e);
        total += p.value.numel();
    }
    header["params"] = plist;
    header["scalar_count"] = total;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << header.dump() << '\n';
    for (const auto& p : params) {
        out.write(reinterpret_cast<const char*>(p.value.data()),
                  static_cast<std::streamsize>(p.value.numel() * sizeof(float)));
    }
}

void load_checkpoint(const std::filesystem::path& path, ParamList& params,
                     std::string* config_hash) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError("checkpoint " + path.string() + " is empty");
    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& e) {
        throw IoError("bad checkpoint header in " + path.string() + ": " + e.what());
    }
    if (header.value("format", "") != "hsunmix-checkpoint-v1")
        throw IoError("unknown checkpoint format in " + path.string());
    if (config_hash) *config_hash = header.value("config_hash", "");

    const auto& plist = header.at("params");
    if (plist.size() != params.size())
        throw IoError("checkpoint parameter count mismatch in " + path.string());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto name = plist[i].at("name").get<std::string>();
        const auto shape = plist[i].at("shape").get<Shape>();
        if (name != params[i].name || shape != params[i].value.shape())
            throw IoError("checkpoint parameter mismatch at '" + name + "'");
        in.read(reinterpret_cast<char*>(params[i].value.data()),
                static_cast<std::streamsize>(params[i].value.numel() * sizeof(float)));
        if (!in) throw IoError("checkpoint blob truncated in " + path.string());
    }
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path.string());
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValueError("config " + path.string() + ":" + std::to_string(lineno) +
                             ": expected key=value");
        cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    auto as_int = [&](int& slot) { slot = std::stoi(value); };
    auto as_float = [&](float& slot) { slot = std::stof(value); };
    if (key == "c_embed") as_int(c_embed);
    else if (key == "gamma") as_float(gamma);
    else if (key == "spectral_stages") as_int(spectral_stages);
    else if (key == "spectral_channels") as_int(spectral_channels);
    else if (key == "ca_reduction") as_int(ca_reduction);
    else if (key == "window") as_int(window);
    else if (key == "alpha") as_float(alpha);
    else if (key == "epochs") as_int(epochs);
    else if (key == "lr_endmember") as_float(lr_endmember);
    else if (key == "lr_rest") as_float(lr_rest);
    else if (key == "weight_decay") as_float(weight_decay);
    else if (key == "seed") seed = std::stoull(value);
    else if (key == "clip_norm") as_float(clip_norm);
    else if (key == "init") {
        InitConfig::parse_method(value);  // validates
        init = value;
    } else if (key == "ablate") {
        parse_ablation(value);  // validates
        ablate = value;
    } else if (key == "smoothness") as_float(smoothness);
    else throw ValueError("unknown config key '" + key + "'");
}

std::string RunConfig::serialize() const {
    std::ostringstream out;
    out << "c_embed = " << c_embed << '\n';
    out << "gamma = " << fmt_float(gamma) << '\n';
    out << "spectral_stages = " << spectral_stages << '\n';
    out << "spectral_channels = " << spectral_channels << '\n';
    out << "ca_reduction = " << ca_reduction << '\n';
    out << "window = " << window << '\n';
    out << "alpha = " << fmt_float(alpha) << '\n';
    out << "epochs = " << epochs << '\n';
    out << "lr_endmember = " << fmt_float(lr_endmember) << '\n';
    out << "lr_rest = " << fmt_float(lr_rest) << '\n';
    out << "weight_decay = " << fmt_float(weight_decay) << '\n';
    out << "seed = " << seed << '\n';
    out << "clip_norm = " << fmt_float(clip_norm) << '\n';
    out << "init = " << init << '\n';
    out << "ablate = " << ablate << '\n';
    out << "smoothness = " << fmt_float(smoothness) << '\n';
    return out.str();
}

std::string RunConfig::hash() const {
    // FNV-1a over the serialized text
    const std::string text = serialize();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

EncoderConfig RunConfig::encoder_config() const {
    EncoderConfig cfg;
    cfg.embed_channels = c_embed;
    cfg.gamma = gamma;
    cfg.spectral_stages = spectral_stages;
    cfg.spectral_channels = spectral_channels;
    cfg.ca_reduction = ca_reduction;
    cfg.window = window;
    return cfg;
}

TrainConfig RunConfig::train_config() const {
    TrainConfig cfg;
    cfg.alpha = alpha;
    cfg.epochs = epochs;
    cfg.lr_endmember = lr_endmember;
    cfg.lr_rest = lr_rest;
    cfg.weight_decay = weight_decay;
    cfg.seed = seed;
    cfg.clip_norm = clip_norm;
    return cfg;
}

}  // namespace unmix
