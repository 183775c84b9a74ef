#include "wnta/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "wnta/analysis.hpp"

namespace wnta {

std::vector<WeightExponent> exponent_grid(double start, double stop, double step, bool include_infinity) {
    if (!(start >= 0.0) || !(stop >= start) || !(step > 0.0)) {
        throw InvalidArgument("exponent grid needs 0 <= start <= stop and step > 0");
    }
    std::vector<WeightExponent> grid;
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) grid.emplace_back(start + static_cast<double>(i) * step);
    if (include_infinity) grid.push_back(WeightExponent::infinite());
    return grid;
}

std::vector<WeightExponent> default_exponent_grid() { return exponent_grid(0.0, 5.0, 0.125, true); }

double mean_relative_difference(std::span<const SizeEstimate> estimates, std::span<const SizedParticle> truth,
                                std::size_t* invalid) {
    if (estimates.size() != truth.size()) throw InvalidArgument("estimates and truth differ in length");
    double sum = 0.0;
    std::size_t n = 0, bad = 0;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        if (!estimates[i].valid) {
            ++bad;
            continue;
        }
        sum += std::abs(estimates[i].diameter - truth[i].diameter) / truth[i].diameter;
        ++n;
    }
    if (invalid) *invalid = bad;
    if (n == 0) throw Error("no valid size estimates to compare against truth");
    return sum / static_cast<double>(n);
}

std::vector<double> evaluate_grid(std::span<const ParticleRecord> records, std::span<const SizedParticle> truth,
                                  std::span<const WeightExponent> grid, const PhysicalContext& ctx,
                                  std::size_t n_fit_lags, unsigned threads, std::vector<std::size_t>* invalid) {
    const auto curves = msd_curves(records, n_fit_lags);
    const SimilarityMatrix c = similarity_matrix(records, threads);
    std::vector<double> out;
    out.reserve(grid.size() + 1);
    if (invalid) invalid->assign(grid.size() + 1, 0);
    auto eval = [&](WeightExponent n_w, std::size_t slot) {
        const WeightMatrix w = weights(c, n_w);
        const auto est = fit_weighted_all(curves, w, ctx, n_fit_lags, threads);
        std::size_t bad = 0;
        out.push_back(mean_relative_difference(est, truth, &bad));
        if (invalid) (*invalid)[slot] = bad;
    };
    for (std::size_t g = 0; g < grid.size(); ++g) eval(grid[g], g);
    eval(WeightExponent::infinite(), grid.size());
    return out;
}

namespace {

void mean_sd(std::span<const double> xs, double& mean, double& sd) {
    mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    sd = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
}

}  // namespace

SweepResult sweep_exponent(const SimulationSpec& spec, std::span<const SizedParticle> truth,
                           std::span<const WeightExponent> grid, std::size_t repetitions, RngSeed seed,
                           std::size_t n_fit_lags, unsigned threads) {
    if (grid.empty()) throw InvalidArgument("exponent grid is empty");
    if (repetitions < 1) throw InvalidArgument("repetitions must be >= 1");
    if (truth.size() < 2) throw InvalidArgument("a sweep needs at least 2 particles");
    for (std::size_t g = 1; g < grid.size(); ++g) {
        if (!(grid[g - 1] < grid[g])) throw InvalidArgument("exponent grid must be strictly increasing");
    }

    SweepResult result;
    result.repetitions = repetitions;
    std::vector<std::size_t> invalid_total(grid.size() + 1, 0);
    for (std::size_t r = 0; r < repetitions; ++r) {
        const RngSeed rep_seed = derive_seed(seed, r, Stream::repetition);
        const SimulatedEnsemble ens = simulate_ensemble(spec, truth, rep_seed, threads);
        std::vector<std::size_t> invalid;
        result.per_repetition.push_back(
            evaluate_grid(ens.records, truth, grid, spec.ctx, n_fit_lags, threads, &invalid));
        for (std::size_t g = 0; g < invalid.size(); ++g) invalid_total[g] += invalid[g];
    }

    auto column = [&](std::size_t g) {
        std::vector<double> xs;
        for (const auto& row : result.per_repetition) xs.push_back(row[g]);
        return xs;
    };
    const auto classic_col = column(grid.size());
    result.classic.n_w = WeightExponent::infinite();
    mean_sd(classic_col, result.classic.mean_rel_diff, result.classic.sd_rel_diff);
    result.classic.gain = 1.0;
    result.classic.invalid = invalid_total[grid.size()];

    for (std::size_t g = 0; g < grid.size(); ++g) {
        SweepPoint p;
        p.n_w = grid[g];
        if (grid[g].is_infinite()) {
            p = result.classic;
        } else {
            const auto col = column(g);
            mean_sd(col, p.mean_rel_diff, p.sd_rel_diff);
            p.gain = p.mean_rel_diff > 0.0 ? result.classic.mean_rel_diff / p.mean_rel_diff
                                           : std::numeric_limits<double>::infinity();
            p.invalid = invalid_total[g];
        }
        result.points.push_back(p);
    }
    return result;
}

WeightExponent optimal_exponent(const SweepResult& result) {
    if (result.points.empty()) throw InvalidArgument("sweep result is empty");
    const SweepPoint* best = nullptr;
    for (const auto& p : result.points) {
        if (p.n_w.is_infinite()) continue;
        // <= so that later (larger) exponents win ties.
        if (!best || p.mean_rel_diff <= best->mean_rel_diff) best = &p;
    }
    return best ? best->n_w : WeightExponent::infinite();
}

SnrModel fit_snr_model(std::span<const std::pair<double, double>> points) {
    if (points.size() < 4) {
        throw InvalidArgument("SNR model needs at least 4 points, got " + std::to_string(points.size()));
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!(points[i].first > 0.0) || !std::isfinite(points[i].first)) {
            throw InvalidArgument("SNR values must be finite and > 0");
        }
        if (!std::isfinite(points[i].second)) throw InvalidArgument("optimal exponents must be finite");
        for (std::size_t j = 0; j < i; ++j) {
            if (points[i].first == points[j].first) throw InvalidArgument("SNR values must be distinct");
        }
    }
    const double n = static_cast<double>(points.size());
    double mx = 0.0, my = 0.0;
    for (const auto& [snr, nw] : points) {
        mx += 1.0 / snr;
        my += nw;
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [snr, nw] : points) {
        const double dx = 1.0 / snr - mx, dy = nw - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    SnrModel m;
    m.n_points = points.size();
    m.slope = sxy / sxx;
    m.intercept = my - m.slope * mx;
    // A constant response is fitted exactly by a flat line.
    m.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return m;
}

Histogram make_histogram(std::span<const double> values, const BinSpec& bins) {
    if (values.empty()) throw InvalidArgument("histogram needs at least one value");
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it, hi = *hi_it;
    Histogram h;
    if (bins.bin_width) {
        if (!(*bins.bin_width > 0.0)) throw InvalidArgument("bin width must be > 0");
        h.bin_width = *bins.bin_width;
        h.origin = std::floor(lo / h.bin_width) * h.bin_width;
        const auto n = static_cast<std::size_t>(std::floor((hi - h.origin) / h.bin_width)) + 1;
        h.counts.assign(n, 0);
        for (double v : values) {
            auto i = static_cast<std::size_t>(std::floor((v - h.origin) / h.bin_width));
            h.counts[std::min(i, n - 1)]++;
        }
        return h;
    }
    const std::size_t n = bins.n_bins.value_or(20);
    if (n < 1) throw InvalidArgument("number of bins must be >= 1");
    if (hi == lo) {
        h.origin = lo;
        h.bin_width = 0.0;
        h.counts.assign(1, values.size());
        return h;
    }
    h.origin = lo;
    h.bin_width = (hi - lo) / static_cast<double>(n);
    h.counts.assign(n, 0);
    for (double v : values) {
        auto i = static_cast<std::size_t>((v - lo) / h.bin_width);
        h.counts[std::min(i, n - 1)]++;
    }
    return h;
}

PopulationStats population_stats(std::span<const SizeEstimate> estimates, const BinSpec& bins) {
    std::vector<double> d;
    PopulationStats s;
    for (const auto& e : estimates) {
        if (e.valid) {
            d.push_back(e.diameter);
        } else {
            ++s.invalid;
        }
    }
    if (d.empty()) throw InvalidArgument("no valid size estimates in the population");
    s.count = d.size();
    mean_sd(d, s.mean, s.sd);
    s.histogram = make_histogram(d, bins);
    return s;
}

double separation_index(const PopulationStats& a, const PopulationStats& b) {
    const double pooled = std::sqrt(0.5 * (a.sd * a.sd + b.sd * b.sd));
    return std::abs(a.mean - b.mean) / pooled;
}

}  // namespace wnta
