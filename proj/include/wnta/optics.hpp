#pragma once

// Rytov-field images: conversion from intensity/phase, a simplified forward model
// for sub-resolution particles, noise injection, recentred time-lapse averaging
// and split-ensemble noise estimation.
//
// Forward model. Each particle is a point scatterer imaged through a Gaussian
// PSF of unit peak. Its complex amplitude is
//
//     A = -kappa * V * (m^2 - n_m^2) / (m^2 + 2 n_m^2),   V = pi d^3 / 6,
//
// where m = n + i k is the particle index and n_m the medium index. The sign puts
// refracting particles (n > n_m) at Re(E) < 0 and absorbing ones at Im(E) < 0,
// matching E = (i lambda n_m / pi) [ln(I)/2 + i phi] for a phase delay and an
// intensity loss. By default kappa = 3 n_m^2 / (2 pi sigma_psf^2), which makes the
// image integral of Re(E) equal -2 n_m V (n - n_m) to first order in the index
// contrast, the scale the refractive-index inversion assumes. The noise level is
// then set so that a reference particle reaches a target SNR.

#include <span>
#include <utility>
#include <vector>

#include "wnta/brownian.hpp"
#include "wnta/core.hpp"

namespace wnta {

struct RealImage {
    std::size_t width = 0;
    std::size_t height = 0;
    double pixel_size = 0.0;
    std::vector<double> values;
};

struct ImagingSpec {
    std::size_t width = 64;
    std::size_t height = 64;
    double pixel_size = 100e-9;      // m
    double psf_sigma = 1.4e-6;       // m
    double photon_noise_sigma = 0.0; // per frame, per real/imag part, field units
    double amplitude_scale = 1.0;    // kappa, field units per m^3 of polarisable volume

    void validate() const;
};

struct Offset2 {
    double x = 0.0;  // m
    double y = 0.0;  // m
};

RytovImage rytov_from_intensity_phase(const RealImage& intensity, const RealImage& phase,
                                      const PhysicalContext& ctx);

// Inverse of rytov_from_intensity_phase: {intensity, phase}.
std::pair<RealImage, RealImage> intensity_phase_from_rytov(const RytovImage& field,
                                                           const PhysicalContext& ctx);

Complex clausius_mossotti(Complex particle_index, double n_medium);

// Complex amplitude before kappa scaling: -V * CM.
Complex raw_particle_amplitude(double diameter, const MaterialSpec& material,
                               const PhysicalContext& ctx);

// True when the diameter exceeds half the wavelength, where the point-scatterer
// model stops being a reasonable approximation.
bool beyond_point_scatterer_limit(double diameter, const PhysicalContext& ctx);

struct SnrReference {
    double diameter = 100e-9;
    MaterialSpec material;
};

// Complex variance per pixel of the mean of n_frames frames carrying independent
// N(0, sigma^2) noise on both parts.
double averaged_noise_variance(double photon_noise_sigma, std::size_t n_frames);

double physical_amplitude_scale(double psf_sigma, const PhysicalContext& ctx);

// Per-frame noise sigma such that the geometric mean of the reference amplitudes
// (times kappa) over the noise of an n_frames average equals target_snr.
double noise_sigma_for_snr(std::span<const SnrReference> references, double target_snr,
                           double amplitude_scale, std::size_t n_frames, const PhysicalContext& ctx);

// Particle centred on pixel (width/2, height/2).
RytovImage synthesize_particle_image(double diameter, const MaterialSpec& material,
                                     const PhysicalContext& ctx, const ImagingSpec& img);

// Renders a point of the given complex amplitude displaced from the image centre.
RytovImage render_point(Complex amplitude, const ImagingSpec& img, Offset2 offset);

RytovImage add_shot_noise(const RytovImage& image, double sigma, RngSeed seed);

// Shifts every frame by the nearest-pixel rounding of -offset and averages pixel-wise.
// Pixels that no shifted frame covers are left at zero.
RytovImage timelapse_average(std::span<const RytovImage> frames, std::span<const Offset2> offsets);

struct NoiseEstimate {
    RytovImage average;      // full average, noise_variance set
    double epsilon = 0.0;    // complex noise variance per pixel of `average`
    std::size_t n_even = 0;
    std::size_t n_odd = 0;
};

// Splits the frames into even/odd interleaved halves, averages each, and takes
// half the pixel variance of their difference (Var Re + Var Im) as the noise of
// a half-average. The returned epsilon is rescaled to the full average:
// eps = Var(diff) * n_even * n_odd / N^2.
NoiseEstimate estimate_noise(std::span<const RytovImage> frames, std::span<const Offset2> offsets);

// Peak |E| over pixels divided by sqrt(eps). +infinity when eps == 0.
double compute_snr(const RytovImage& image);

// Var(Re) + Var(Im) over all pixels.
double complex_pixel_variance(std::span<const Complex> values);

}  // namespace wnta
