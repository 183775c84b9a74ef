#pragma once

// End-to-end synthetic acquisition: Brownian trajectories, localisation error,
// per-frame Rytov images with shot noise, recentred averaging and noise estimation.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "wnta/brownian.hpp"
#include "wnta/core.hpp"
#include "wnta/optics.hpp"

namespace wnta {

struct TrackingSpec {
    double dt = 0.01;                 // s
    std::size_t n_steps = 200;
    int dimensionality = 3;
    double sigma_lateral = 30e-9;     // m
    double sigma_axial = 100e-9;      // m

    void validate() const;
};

struct SimulationSpec {
    PhysicalContext ctx;
    TrackingSpec tracking;
    ImagingSpec imaging;
    // Regions of interest follow the particle on a coarse camera grid of this many
    // pixels, so each frame has a residual offset of up to half a tile to undo.
    std::size_t roi_tile_pixels = 8;

    void validate() const;
};

struct SimulatedEnsemble {
    std::vector<ParticleRecord> records;     // observed (noisy) trajectories + averaged images
    std::vector<SizedParticle> truth;        // index-aligned with records
    std::vector<std::string> warnings;
};

// Receives the raw frames and recentring offsets of one particle. Called from
// worker threads, once per particle.
using FrameSink = std::function<void(std::int64_t id, std::span<const RytovImage> frames,
                                     std::span<const Offset2> offsets)>;

ParticleRecord simulate_particle(const SimulationSpec& spec, const SizedParticle& particle,
                                 std::int64_t id, RngSeed seed, const FrameSink* sink = nullptr);

// Particle ids are 0..P-1 in truth order. Output is independent of `threads`.
SimulatedEnsemble simulate_ensemble(const SimulationSpec& spec, std::span<const SizedParticle> truth,
                                    RngSeed seed, unsigned threads = 1, const FrameSink* sink = nullptr);

}  // namespace wnta
