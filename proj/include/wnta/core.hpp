#pragma once

// Shared domain types, physical constants and the seeded randomness contract.

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace wnta {

inline constexpr double kBoltzmann = 1.380649e-23;  // J/K, exact (SI 2019)
inline constexpr double kPi = 3.14159265358979323846;

// Error categories. The C API maps each one to a distinct status code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

struct PhysicalContext {
    double temperature = 293.0;    // K
    double viscosity = 1.0e-3;     // Pa s
    double wavelength = 532e-9;    // m
    double n_medium = 1.33;

    void validate() const;
};

using Vec3 = std::array<double, 3>;

struct Trajectory {
    std::int64_t particle_id = 0;
    double dt = 0.0;                 // s
    std::vector<Vec3> positions;     // m; z is 0 and ignored in 2D mode
    int dimensionality = 3;

    std::size_t size() const noexcept { return positions.size(); }
    void validate() const;
};

using Complex = std::complex<double>;

struct RytovImage {
    std::size_t width = 0;
    std::size_t height = 0;
    double pixel_size = 0.0;               // m
    std::vector<Complex> values;           // row-major, field units (m)
    std::optional<double> noise_variance;  // complex variance per pixel

    RytovImage() = default;
    RytovImage(std::size_t w, std::size_t h, double px)
        : width(w), height(h), pixel_size(px), values(w * h) {}

    Complex& at(std::size_t x, std::size_t y) { return values[y * width + x]; }
    const Complex& at(std::size_t x, std::size_t y) const { return values[y * width + x]; }
    bool same_shape(const RytovImage& o) const noexcept {
        return width == o.width && height == o.height;
    }
    void validate() const;
};

struct ParticleRecord {
    std::int64_t id = 0;
    Trajectory trajectory;
    RytovImage rytov;
    std::optional<double> snr;
};

struct RngSeed {
    std::uint64_t value = 0;
};

// Diffusion coefficient from the Stokes-Einstein relation, D = kT / (3 pi eta d).
double diffusion_coefficient(const PhysicalContext& ctx, double diameter);

// Slope of MSD versus lag for free diffusion in `dim` dimensions: 2 * dim * D.
double msd_slope_for_diameter(const PhysicalContext& ctx, double diameter, int dim);
double diameter_from_msd_slope(const PhysicalContext& ctx, double slope, int dim);

// Stream tags used when deriving per-particle sub-seeds.
enum class Stream : std::uint64_t {
    sizes = 1,
    trajectory = 2,
    localization = 3,
    frame_noise = 4,
    repetition = 5,
    anchor = 6,
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Sub-seed for one (particle, stream, index) triple: seed XOR hash(particle, stream, index).
RngSeed derive_seed(RngSeed seed, std::uint64_t particle_id, Stream stream,
                    std::uint64_t index = 0) noexcept;

// mt19937_64 engine with a portable polar-method normal sampler so that outputs
// do not depend on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(RngSeed seed);

    double uniform();  // [0, 1), 53-bit
    double normal();   // N(0, 1)
    double normal(double mean, double sd) { return mean + sd * normal(); }
    std::uint64_t next_u64();

    static const char* identity() noexcept;

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace wnta
