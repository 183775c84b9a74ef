#include "wnta/brownian.hpp"

#include <cmath>

namespace wnta {

void MaterialSpec::validate() const {
    if (!std::isfinite(n) || !std::isfinite(k)) throw InvalidArgument("material index must be finite");
    if (k < 0.0) throw InvalidArgument("material absorption coefficient k must be >= 0");
}

std::size_t EnsembleSpec::total_count() const {
    std::size_t total = 0;
    for (const auto& p : populations) total += p.count;
    return total;
}

void EnsembleSpec::validate() const {
    if (populations.empty()) throw InvalidArgument("ensemble needs at least one population");
    for (const auto& p : populations) {
        if (p.count < 1) throw InvalidArgument("population count must be >= 1");
        if (!(p.mean_diameter > 0.0)) throw InvalidArgument("population mean diameter must be > 0");
        if (!(p.sd_diameter >= 0.0)) throw InvalidArgument("population diameter SD must be >= 0");
        p.material.validate();
    }
    if (n_steps < 2) throw InvalidArgument("n_steps must be >= 2");
    if (!(dt > 0.0)) throw InvalidArgument("dt must be > 0");
}

std::vector<SizedParticle> sample_true_sizes(const EnsembleSpec& spec, RngSeed seed) {
    spec.validate();
    std::vector<SizedParticle> out;
    out.reserve(spec.total_count());
    for (std::size_t pi = 0; pi < spec.populations.size(); ++pi) {
        const auto& pop = spec.populations[pi];
        Rng rng(derive_seed(seed, pi, Stream::sizes));
        for (std::size_t i = 0; i < pop.count; ++i) {
            double d = pop.mean_diameter;
            if (pop.sd_diameter > 0.0) {
                do {
                    d = rng.normal(pop.mean_diameter, pop.sd_diameter);
                } while (d <= 0.0);
            }
            out.push_back(SizedParticle{d, pop.material, pi});
        }
    }
    return out;
}

Trajectory simulate_trajectory(const PhysicalContext& ctx, double diameter, std::size_t n_steps,
                               double dt, int dim, RngSeed seed) {
    if (dim != 2 && dim != 3) throw InvalidArgument("dimensionality must be 2 or 3");
    if (n_steps < 2) throw InvalidArgument("a trajectory needs at least 2 steps");
    const double sigma = std::sqrt(2.0 * diffusion_coefficient(ctx, diameter) * dt);

    Trajectory t;
    t.dt = dt;
    t.dimensionality = dim;
    t.positions.resize(n_steps);
    Rng rng(seed);
    Vec3 r{0.0, 0.0, 0.0};
    t.positions[0] = r;
    for (std::size_t i = 1; i < n_steps; ++i) {
        r[0] += sigma * rng.normal();
        r[1] += sigma * rng.normal();
        if (dim == 3) r[2] += sigma * rng.normal();
        t.positions[i] = r;
    }
    return t;
}

Trajectory apply_localization_error(const Trajectory& traj, double sigma_lateral,
                                    double sigma_axial, RngSeed seed) {
    if (traj.positions.size() < 2) {
        throw InvalidArgument("localization error needs a trajectory with >= 2 frames");
    }
    if (!(sigma_lateral >= 0.0) || !(sigma_axial >= 0.0)) {
        throw InvalidArgument("localization sigmas must be >= 0");
    }
    Trajectory out = traj;
    Rng rng(seed);
    for (auto& p : out.positions) {
        p[0] += sigma_lateral * rng.normal();
        p[1] += sigma_lateral * rng.normal();
        if (traj.dimensionality == 3) p[2] += sigma_axial * rng.normal();
    }
    return out;
}

}  // namespace wnta
