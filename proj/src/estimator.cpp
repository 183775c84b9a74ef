#include "wnta/estimator.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "wnta/parallel.hpp"

namespace wnta {

const char* to_string(FitMethod m) noexcept {
    switch (m) {
        case FitMethod::classic: return "classic";
        case FitMethod::weighted: return "weighted";
        case FitMethod::arithmetic: return "arithmetic";
    }
    return "unknown";
}

MsdCurve msd_curve(const Trajectory& traj, std::size_t max_lag) {
    traj.validate();
    const std::size_t n = traj.size();
    if (max_lag < 1) throw InvalidArgument("max_lag must be >= 1");
    if (max_lag >= n) {
        throw InvalidArgument("max_lag " + std::to_string(max_lag) + " needs more than " +
                              std::to_string(n) + " positions");
    }
    MsdCurve curve;
    curve.particle_id = traj.particle_id;
    curve.dimensionality = traj.dimensionality;
    curve.points.reserve(max_lag);
    const int axes = traj.dimensionality;
    for (std::size_t k = 1; k <= max_lag; ++k) {
        double sum = 0.0;
        for (std::size_t i = 0; i + k < n; ++i) {
            const auto& a = traj.positions[i];
            const auto& b = traj.positions[i + k];
            double d2 = 0.0;
            for (int ax = 0; ax < axes; ++ax) {
                const double d = b[ax] - a[ax];
                d2 += d * d;
            }
            sum += d2;
        }
        const std::size_t pairs = n - k;
        curve.points.push_back({static_cast<double>(k) * traj.dt, sum / static_cast<double>(pairs), pairs});
    }
    return curve;
}

namespace {

struct Line {
    double slope = 0.0;
    double intercept = 0.0;
    bool ok = false;
};

// Weighted least squares over (curve j, lag k) points with weight weights[j].
// Zero-weight curves contribute exact zeros, so a unit row reproduces the
// single-curve fit bit-for-bit.
Line pooled_line(std::span<const MsdCurve> curves, std::span<const double> weights,
                 std::size_t n_fit_lags) {
    double sw = 0.0, swx = 0.0, swy = 0.0;
    for (std::size_t j = 0; j < curves.size(); ++j) {
        const double w = weights[j];
        if (w == 0.0) continue;
        for (std::size_t k = 0; k < n_fit_lags; ++k) {
            const auto& p = curves[j].points[k];
            sw += w;
            swx += w * p.lag;
            swy += w * p.msd;
        }
    }
    Line line;
    if (!(sw > 0.0)) return line;
    const double xm = swx / sw;
    const double ym = swy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t j = 0; j < curves.size(); ++j) {
        const double w = weights[j];
        if (w == 0.0) continue;
        for (std::size_t k = 0; k < n_fit_lags; ++k) {
            const auto& p = curves[j].points[k];
            const double dx = p.lag - xm;
            sxx += w * dx * dx;
            sxy += w * dx * (p.msd - ym);
        }
    }
    if (!(sxx > 0.0) || !std::isfinite(sxy)) return line;
    line.slope = sxy / sxx;
    line.intercept = ym - line.slope * xm;
    line.ok = true;
    return line;
}

SizeEstimate to_estimate(std::int64_t id, const Line& line, const PhysicalContext& ctx, int dim) {
    SizeEstimate e;
    e.particle_id = id;
    e.slope = line.slope;
    e.intercept = line.intercept;
    e.valid = line.ok && line.slope > 0.0;
    e.diameter = e.valid ? diameter_from_msd_slope(ctx, line.slope, dim)
                         : std::numeric_limits<double>::quiet_NaN();
    return e;
}

void check_fit_lags(const MsdCurve& c, std::size_t n_fit_lags) {
    if (n_fit_lags < 2) throw InvalidArgument("n_fit_lags must be >= 2");
    if (n_fit_lags > c.points.size()) {
        throw InvalidArgument("particle " + std::to_string(c.particle_id) + " has " +
                              std::to_string(c.points.size()) + " MSD lags, fewer than n_fit_lags = " +
                              std::to_string(n_fit_lags));
    }
}

}  // namespace

SizeEstimate fit_classic(const MsdCurve& curve, const PhysicalContext& ctx, std::size_t n_fit_lags) {
    check_fit_lags(curve, n_fit_lags);
    const double one = 1.0;
    const Line line = pooled_line(std::span<const MsdCurve>(&curve, 1), std::span<const double>(&one, 1),
                                  n_fit_lags);
    SizeEstimate e = to_estimate(curve.particle_id, line, ctx, curve.dimensionality);
    e.method = FitMethod::classic;
    e.n_w_used = WeightExponent::infinite();
    return e;
}

SizeEstimate fit_weighted(std::span<const MsdCurve> curves, const WeightMatrix& w, std::size_t target,
                          const PhysicalContext& ctx, std::size_t n_fit_lags) {
    if (w.values.size() != curves.size()) {
        throw InvalidArgument("weight matrix is " + std::to_string(w.values.size()) + "x" +
                              std::to_string(w.values.size()) + " but there are " +
                              std::to_string(curves.size()) + " curves");
    }
    if (target >= curves.size()) throw InvalidArgument("target index out of range");
    const auto& ref = curves[target];
    for (const auto& c : curves) {
        check_fit_lags(c, n_fit_lags);
        if (c.dimensionality != ref.dimensionality) {
            throw InvalidArgument("curves mix 2D and 3D trajectories");
        }
        for (std::size_t k = 0; k < n_fit_lags; ++k) {
            if (c.points[k].lag != ref.points[k].lag) {
                throw InvalidArgument("particle " + std::to_string(c.particle_id) +
                                      " is on a different lag grid than particle " +
                                      std::to_string(ref.particle_id));
            }
        }
    }

    const Line line = pooled_line(curves, w.values.row(target), n_fit_lags);
    SizeEstimate e;
    if (!line.ok) {
        e = fit_classic(ref, ctx, n_fit_lags);
        e.fell_back = true;
    } else {
        e = to_estimate(ref.particle_id, line, ctx, ref.dimensionality);
    }
    if (w.exponent.is_infinite()) {
        e.method = FitMethod::classic;
    } else if (w.exponent.value() == 0.0) {
        e.method = FitMethod::arithmetic;
    } else {
        e.method = FitMethod::weighted;
    }
    e.n_w_used = w.exponent;
    return e;
}

std::vector<SizeEstimate> fit_weighted_all(std::span<const MsdCurve> curves, const WeightMatrix& w,
                                           const PhysicalContext& ctx, std::size_t n_fit_lags,
                                           unsigned threads) {
    std::vector<SizeEstimate> out(curves.size());
    parallel_for(curves.size(), threads, [&](std::size_t i) {
        out[i] = fit_weighted(curves, w, i, ctx, n_fit_lags);
    });
    return out;
}

RefractiveIndexEstimate refractive_index(const ParticleRecord& record, double diameter,
                                         const PhysicalContext& ctx) {
    if (!(diameter > 0.0)) throw DomainError("refractive index inversion needs a diameter > 0");
    const auto& img = record.rytov;
    double sum_re = 0.0, sum_im = 0.0;
    for (const auto& v : img.values) {
        sum_re += v.real();
        sum_im += v.imag();
    }
    const double area = img.pixel_size * img.pixel_size;
    RefractiveIndexEstimate r;
    r.particle_id = record.id;
    r.integral_re = sum_re * area;
    r.integral_im = sum_im * area;
    r.volume = kPi / 6.0 * diameter * diameter * diameter;
    const double norm = ctx.n_medium * r.volume;
    r.n = ctx.n_medium - 0.5 * r.integral_re / norm;
    r.k = -r.integral_im / norm + 0.0;  // no negative zero for a zero image
    r.n_literal = ctx.n_medium - (0.5 * r.integral_re + r.integral_im) / norm;
    return r;
}

}  // namespace wnta
