#pragma once

#include <span>
#include <vector>

#include "wnta/core.hpp"
#include "wnta/similarity.hpp"

namespace wnta {

struct MsdPoint {
    double lag = 0.0;          // s
    double msd = 0.0;          // m^2
    std::size_t n_pairs = 0;
};

struct MsdCurve {
    std::int64_t particle_id = 0;
    int dimensionality = 3;
    std::vector<MsdPoint> points;
};

enum class FitMethod { classic, weighted, arithmetic };

const char* to_string(FitMethod m) noexcept;

struct SizeEstimate {
    std::int64_t particle_id = 0;
    double diameter = 0.0;    // m; NaN when !valid
    double slope = 0.0;       // m^2/s
    double intercept = 0.0;   // m^2
    FitMethod method = FitMethod::classic;
    WeightExponent n_w_used = WeightExponent::infinite();
    bool valid = false;       // slope > 0
    bool fell_back = false;   // weighted fit degenerated and used the classic fit
};

struct RefractiveIndexEstimate {
    std::int64_t particle_id = 0;
    double n = 0.0;
    double k = 0.0;
    double n_literal = 0.0;    // n_m - (Ire/2 + Iim) / (n_m V), the real bracket as written
    double integral_re = 0.0;  // sum Re(E) * pixel area, m^3
    double integral_im = 0.0;  // sum Im(E) * pixel area, m^3
    double volume = 0.0;       // m^3
};

// Overlapping-pair MSD for lags 1..max_lag frames.
MsdCurve msd_curve(const Trajectory& traj, std::size_t max_lag);

// Ordinary least squares msd = slope * lag + intercept over the first n_fit_lags points.
SizeEstimate fit_classic(const MsdCurve& curve, const PhysicalContext& ctx, std::size_t n_fit_lags);

// Pooled weighted least squares over every curve's first n_fit_lags points; all
// points of curve j carry weight W(target, j). With the identity row this reduces
// bit-for-bit to fit_classic(curves[target]).
SizeEstimate fit_weighted(std::span<const MsdCurve> curves, const WeightMatrix& w, std::size_t target,
                          const PhysicalContext& ctx, std::size_t n_fit_lags);

// fit_weighted for every target.
std::vector<SizeEstimate> fit_weighted_all(std::span<const MsdCurve> curves, const WeightMatrix& w,
                                           const PhysicalContext& ctx, std::size_t n_fit_lags,
                                           unsigned threads = 1);

RefractiveIndexEstimate refractive_index(const ParticleRecord& record, double diameter,
                                         const PhysicalContext& ctx);

}  // namespace wnta
