#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wnta/core.hpp"

namespace wnta {

// Complex refractive index n + i k of a particle material. Metals may have n < 1.
struct MaterialSpec {
    std::string name;
    double n = 1.59;
    double k = 0.0;

    Complex index() const { return {n, k}; }
    void validate() const;
};

struct Population {
    std::size_t count = 0;
    double mean_diameter = 0.0;  // m
    double sd_diameter = 0.0;    // m
    MaterialSpec material;
};

struct EnsembleSpec {
    std::vector<Population> populations;
    std::size_t n_steps = 200;
    double dt = 0.01;

    std::size_t total_count() const;
    void validate() const;
};

struct SizedParticle {
    double diameter = 0.0;
    MaterialSpec material;
    std::size_t population = 0;
};

// One normal draw N(mean, sd^2) per particle, population by population. Draws <= 0
// are rejected and redrawn.
std::vector<SizedParticle> sample_true_sizes(const EnsembleSpec& spec, RngSeed seed);

// Free 3D (or lateral 2D) Brownian walk starting at the origin with per-axis
// increments N(0, 2 D dt). The trajectory holds n_steps positions.
Trajectory simulate_trajectory(const PhysicalContext& ctx, double diameter, std::size_t n_steps,
                               double dt, int dim, RngSeed seed);

// Independent Gaussian position noise per frame: lateral sigma on x and y, axial on z.
Trajectory apply_localization_error(const Trajectory& traj, double sigma_lateral,
                                    double sigma_axial, RngSeed seed);

}  // namespace wnta
