#pragma once

// Run configuration: strict JSON in, fully materialised JSON out (for manifests).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "wnta/brownian.hpp"
#include "wnta/core.hpp"
#include "wnta/optics.hpp"
#include "wnta/similarity.hpp"
#include "wnta/simulation.hpp"

namespace wnta {

namespace fs = std::filesystem;

struct ImagingConfig {
    std::size_t width = 64;
    std::size_t height = 64;
    double pixel_size = 100e-9;
    double psf_sigma = 1.4e-6;
    std::optional<double> photon_noise_sigma;  // per frame, per part; overrides target_snr
    double target_snr = 55.0;
    std::vector<SnrReference> snr_reference;  // geometric mean of their amplitudes hits target_snr
    std::optional<double> amplitude_scale;    // explicit kappa; default is the physical scale
    std::size_t roi_tile_pixels = 8;
    bool write_frames = false;
};

struct AnalysisConfig {
    std::size_t n_fit_lags = 4;
    WeightExponent n_w{1.125};
    double histogram_bin_width = 5e-9;
};

struct CalibrationConfig {
    double grid_start = 0.0;
    double grid_stop = 5.0;
    double grid_step = 0.125;
    bool include_infinity = true;
    std::size_t repetitions = 50;
    std::vector<double> snr_values;  // optional SNR-law sweep
};

struct InputsConfig {
    std::optional<fs::path> tracks;  // tracks.csv
    std::optional<fs::path> images;  // directory of particle_<id>.rytv
    std::optional<fs::path> sizes;   // sizes.csv
    std::optional<fs::path> frames;  // directory of per-particle frame directories
};

enum class SizeColumn { classic, weighted };

struct RunConfig {
    std::uint64_t seed = 1;
    unsigned threads = 0;
    fs::path output_dir = "out";
    PhysicalContext physical;
    TrackingSpec trajectory;
    ImagingConfig imaging;
    std::vector<Population> populations;
    AnalysisConfig analysis;
    CalibrationConfig calibration;
    InputsConfig inputs;
    SizeColumn refindex_sizes = SizeColumn::weighted;

    // Directory that relative input paths were resolved against.
    fs::path base_dir;

    void validate() const;
};

// Built-in materials: "PS" (polystyrene) and "Au" (gold), both at 532 nm.
MaterialSpec material_preset(const std::string& name);

// Defaults: one PS population of 200 particles, 100 +- 15 nm, and a PS-100 SNR reference.
RunConfig default_config();

// Strict parse: unknown keys, wrong types and out-of-range values raise ConfigError
// with the JSON path (and line/column for syntax errors). Relative input paths are
// resolved against `base_dir`.
RunConfig parse_config(const std::string& text, const fs::path& base_dir = {});
RunConfig load_config(const fs::path& path);

// Every field, defaults included, as pretty-printed JSON.
std::string config_to_json(const RunConfig& config);

SimulationSpec simulation_spec(const RunConfig& config, std::optional<double> target_snr = {});
EnsembleSpec ensemble_spec(const RunConfig& config);

double resolve_amplitude_scale(const RunConfig& config);

// Per-frame noise sigma: the explicit value, or the one reaching the target SNR.
// A `target_snr` argument always derives it.
double resolve_noise_sigma(const RunConfig& config, std::optional<double> target_snr = {});

}  // namespace wnta
