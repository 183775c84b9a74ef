#pragma once

// Exponent sweeps against known true sizes, optimal exponent selection, the
// optimal-exponent versus 1/SNR line, and population statistics.

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "wnta/estimator.hpp"
#include "wnta/simulation.hpp"

namespace wnta {

// {start, start + step, ..., stop} plus infinity when include_infinity is set.
std::vector<WeightExponent> exponent_grid(double start, double stop, double step, bool include_infinity);

// {0, 0.125, ..., 5} and infinity.
std::vector<WeightExponent> default_exponent_grid();

struct SweepPoint {
    WeightExponent n_w;
    double mean_rel_diff = 0.0;  // mean over repetitions of the per-particle mean |d_est - d| / d
    double sd_rel_diff = 0.0;    // SD of that quantity across repetitions
    double gain = 1.0;           // classic mean_rel_diff / mean_rel_diff
    std::size_t invalid = 0;     // estimates excluded for a non-positive slope, all repetitions
};

struct SweepResult {
    std::vector<SweepPoint> points;            // in grid order
    SweepPoint classic;                        // n_w = infinity reference
    std::size_t repetitions = 0;
    std::vector<std::vector<double>> per_repetition;  // [repetition][grid index]
};

// Per-particle mean |d_est - d| / d over valid estimates.
double mean_relative_difference(std::span<const SizeEstimate> estimates, std::span<const SizedParticle> truth,
                                std::size_t* invalid = nullptr);

// One repetition: relative differences for every grid point, classic last.
std::vector<double> evaluate_grid(std::span<const ParticleRecord> records, std::span<const SizedParticle> truth,
                                  std::span<const WeightExponent> grid, const PhysicalContext& ctx,
                                  std::size_t n_fit_lags, unsigned threads,
                                  std::vector<std::size_t>* invalid = nullptr);

// Each repetition re-simulates trajectories, localisation error and image noise
// for the same true sizes, with a sub-seed derived from `seed`.
SweepResult sweep_exponent(const SimulationSpec& spec, std::span<const SizedParticle> truth,
                           std::span<const WeightExponent> grid, std::size_t repetitions, RngSeed seed,
                           std::size_t n_fit_lags, unsigned threads = 1);

// Finite grid point with the smallest mean relative difference; ties go to the
// larger exponent. Infinity when the grid has no finite point.
WeightExponent optimal_exponent(const SweepResult& result);

struct SnrModel {
    double slope = 0.0;       // n_w_opt = slope / SNR + intercept
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t n_points = 0;

    double predict(double snr) const { return slope / snr + intercept; }
};

// OLS of n_w_opt against 1/SNR. Points are (snr, n_w_opt).
SnrModel fit_snr_model(std::span<const std::pair<double, double>> points);

struct Histogram {
    double origin = 0.0;
    double bin_width = 0.0;
    std::vector<std::size_t> counts;

    double lower(std::size_t i) const { return origin + static_cast<double>(i) * bin_width; }
    double upper(std::size_t i) const { return origin + static_cast<double>(i + 1) * bin_width; }
};

struct BinSpec {
    std::optional<double> bin_width;   // bins aligned to integer multiples of the width
    std::optional<std::size_t> n_bins; // equal bins spanning [min, max]
};

struct PopulationStats {
    Histogram histogram;
    double mean = 0.0;
    double sd = 0.0;     // sample SD (n - 1); 0 for a single estimate
    std::size_t count = 0;
    std::size_t invalid = 0;
};

// Histogram over the diameters of valid estimates.
Histogram make_histogram(std::span<const double> values, const BinSpec& bins);

PopulationStats population_stats(std::span<const SizeEstimate> estimates, const BinSpec& bins);

// |mean_a - mean_b| / sqrt((sd_a^2 + sd_b^2) / 2).
double separation_index(const PopulationStats& a, const PopulationStats& b);

}  // namespace wnta
