#include "wnta/simulation.hpp"

#include <cmath>
#include <sstream>

#include "wnta/parallel.hpp"

namespace wnta {

void TrackingSpec::validate() const {
    if (!(dt > 0.0)) throw InvalidArgument("dt must be > 0");
    if (n_steps < 4) throw InvalidArgument("n_steps must be >= 4 to estimate image noise");
    if (dimensionality != 2 && dimensionality != 3) throw InvalidArgument("dimensionality must be 2 or 3");
    if (!(sigma_lateral >= 0.0) || !(sigma_axial >= 0.0)) {
        throw InvalidArgument("localization sigmas must be >= 0");
    }
}

void SimulationSpec::validate() const {
    ctx.validate();
    tracking.validate();
    imaging.validate();
    if (roi_tile_pixels < 1) throw InvalidArgument("ROI tile must be >= 1 pixel");
}

ParticleRecord simulate_particle(const SimulationSpec& spec, const SizedParticle& particle,
                                 std::int64_t id, RngSeed seed, const FrameSink* sink) {
    const auto uid = static_cast<std::uint64_t>(id);
    const auto& tr = spec.tracking;
    Trajectory truth = simulate_trajectory(spec.ctx, particle.diameter, tr.n_steps, tr.dt,
                                           tr.dimensionality, derive_seed(seed, uid, Stream::trajectory));
    truth.particle_id = id;
    Trajectory observed = apply_localization_error(truth, tr.sigma_lateral, tr.sigma_axial,
                                                   derive_seed(seed, uid, Stream::localization));

    const Complex amplitude =
        spec.imaging.amplitude_scale * raw_particle_amplitude(particle.diameter, particle.material, spec.ctx);
    const double tile = static_cast<double>(spec.roi_tile_pixels) * spec.imaging.pixel_size;

    std::vector<RytovImage> frames;
    std::vector<Offset2> offsets;
    frames.reserve(tr.n_steps);
    offsets.reserve(tr.n_steps);
    for (std::size_t k = 0; k < tr.n_steps; ++k) {
        const auto& p = truth.positions[k];
        const auto& q = observed.positions[k];
        const double roi_x = std::round(p[0] / tile) * tile;
        const double roi_y = std::round(p[1] / tile) * tile;
        RytovImage frame = render_point(amplitude, spec.imaging, Offset2{p[0] - roi_x, p[1] - roi_y});
        frames.push_back(add_shot_noise(frame, spec.imaging.photon_noise_sigma,
                                        derive_seed(seed, uid, Stream::frame_noise, k)));
        offsets.push_back(Offset2{q[0] - roi_x, q[1] - roi_y});
    }
    if (sink && *sink) (*sink)(id, frames, offsets);

    NoiseEstimate est = estimate_noise(frames, offsets);
    ParticleRecord rec;
    rec.id = id;
    rec.trajectory = std::move(observed);
    rec.rytov = std::move(est.average);
    if (est.epsilon > 0.0) rec.snr = compute_snr(rec.rytov);
    return rec;
}

SimulatedEnsemble simulate_ensemble(const SimulationSpec& spec, std::span<const SizedParticle> truth,
                                    RngSeed seed, unsigned threads, const FrameSink* sink) {
    spec.validate();
    SimulatedEnsemble ens;
    ens.truth.assign(truth.begin(), truth.end());
    ens.records.resize(truth.size());
    parallel_for(truth.size(), threads, [&](std::size_t i) {
        ens.records[i] = simulate_particle(spec, truth[i], static_cast<std::int64_t>(i), seed, sink);
    });
    std::size_t beyond = 0;
    for (const auto& p : truth) beyond += beyond_point_scatterer_limit(p.diameter, spec.ctx) ? 1 : 0;
    if (beyond > 0) {
        std::ostringstream os;
        os << beyond << " particle(s) exceed half the wavelength; the point-scatterer image model is "
           << "a coarse approximation there";
        ens.warnings.push_back(os.str());
    }
    return ens;
}

}  // namespace wnta
