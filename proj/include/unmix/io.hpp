#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "unmix/encoder.hpp"
#include "unmix/hsi_types.hpp"
#include "unmix/metrics.hpp"
#include "unmix/nn.hpp"
#include "unmix/training.hpp"

namespace unmix {

// Binary cube format: <base>.bin holds little-endian float32 in row-major
// (rows, cols, bands) order ("band-interleaved-by-pixel"); <base>.json is the
// self-describing sidecar.
void save_cube(const std::filesystem::path& base, const HsiCube& cube);
HsiCube load_cube(const std::filesystem::path& base);

void save_matrix_csv(const std::filesystem::path& path, const Tensor& matrix);  // rank 2

// losses.csv: epoch,total,re,sad - deterministic bytes for a fixed run
void save_train_record_csv(const std::filesystem::path& path, const TrainRecord& record);

// One 8-bit PGM per abundance channel, for quick visual inspection only.
void save_abundance_pgm(const std::filesystem::path& dir, const AbundanceTensor& a);

void save_eval_report(const std::filesystem::path& path, const EvalReport& report);
void save_histogram_csv(const std::filesystem::path& path, const Histogram& h);

// Checkpoint: one JSON header line (shapes + config hash) followed by the raw
// little-endian float32 parameter blob in declaration order.
void save_checkpoint(const std::filesystem::path& path, const ParamList& params,
                     const std::string& config_hash);
void load_checkpoint(const std::filesystem::path& path, ParamList& params,
                     std::string* config_hash = nullptr);

// Every tunable, flat key=value text file; unknown keys are rejected.
struct RunConfig {
    int c_embed = 108;
    float gamma = 1.0f;
    int spectral_stages = 0;  // 0 = floor(log2(L)) - 3
    int spectral_channels = 16;
    int ca_reduction = 4;
    int window = 3;
    float alpha = 0.5f;
    int epochs = 600;
    float lr_endmember = 1e-5f;
    float lr_rest = 1e-2f;
    float weight_decay = 1e-3f;
    std::uint64_t seed = 0;
    float clip_norm = 0.0f;
    std::string init = "vca";
    std::string ablate = "none";
    float smoothness = 2.0f;

    static RunConfig from_file(const std::filesystem::path& path);
    void set(const std::string& key, const std::string& value);
    std::string serialize() const;
    std::string hash() const;

    EncoderConfig encoder_config() const;
    TrainConfig train_config() const;

    bool operator==(const RunConfig&) const = default;
};

}  // namespace unmix
