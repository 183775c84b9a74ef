#include "wnta/core.hpp"

#include <cmath>
#include <string>

namespace wnta {

void PhysicalContext::validate() const {
    if (!(temperature > 0.0)) throw DomainError("temperature must be > 0 K");
    if (!(viscosity > 0.0)) throw DomainError("viscosity must be > 0 Pa s");
    if (!(wavelength > 0.0)) throw DomainError("wavelength must be > 0 m");
    if (!(n_medium >= 1.0)) throw DomainError("medium refractive index must be >= 1");
}

void Trajectory::validate() const {
    if (positions.size() < 2) {
        throw InvalidArgument("trajectory " + std::to_string(particle_id) +
                              " needs at least 2 positions, has " +
                              std::to_string(positions.size()));
    }
    if (!(dt > 0.0)) throw InvalidArgument("trajectory frame interval must be > 0");
    if (dimensionality != 2 && dimensionality != 3) {
        throw InvalidArgument("trajectory dimensionality must be 2 or 3");
    }
    for (const auto& p : positions) {
        if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2])) {
            throw InvalidArgument("trajectory " + std::to_string(particle_id) +
                                  " has a non-finite position");
        }
    }
}

void RytovImage::validate() const {
    if (width * height != values.size()) {
        throw InvalidArgument("image holds " + std::to_string(values.size()) +
                              " values but is " + std::to_string(width) + "x" +
                              std::to_string(height));
    }
    for (const auto& v : values) {
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
            throw InvalidArgument("image contains a non-finite value");
        }
    }
    if (noise_variance && !(*noise_variance >= 0.0)) {
        throw InvalidArgument("image noise variance must be >= 0");
    }
}

double diffusion_coefficient(const PhysicalContext& ctx, double diameter) {
    if (!(diameter > 0.0)) throw DomainError("diameter must be > 0");
    return kBoltzmann * ctx.temperature / (3.0 * kPi * ctx.viscosity * diameter);
}

double msd_slope_for_diameter(const PhysicalContext& ctx, double diameter, int dim) {
    return 2.0 * dim * diffusion_coefficient(ctx, diameter);
}

double diameter_from_msd_slope(const PhysicalContext& ctx, double slope, int dim) {
    if (!(slope > 0.0)) throw DomainError("MSD slope must be > 0 to define a diameter");
    // slope = 2 dim D, D = kT / (3 pi eta d)
    return 2.0 * dim * kBoltzmann * ctx.temperature / (3.0 * kPi * ctx.viscosity * slope);
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

RngSeed derive_seed(RngSeed seed, std::uint64_t particle_id, Stream stream,
                    std::uint64_t index) noexcept {
    std::uint64_t h = splitmix64(particle_id);
    h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
    h = splitmix64(h ^ index);
    return RngSeed{seed.value ^ h};
}

Rng::Rng(RngSeed seed) : engine_(seed.value) {}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
}

const char* Rng::identity() noexcept {
    return "mt19937_64 + Marsaglia polar normal; sub-seeds = seed XOR splitmix64(particle, stream, index)";
}

}  // namespace wnta
