#include "wnta/optics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace wnta {

void ImagingSpec::validate() const {
    if (width < 8 || height < 8) throw InvalidArgument("image dimensions must be >= 8 pixels");
    if (!(pixel_size > 0.0)) throw InvalidArgument("pixel size must be > 0");
    if (!(psf_sigma > 0.0)) throw InvalidArgument("PSF sigma must be > 0");
    if (!(photon_noise_sigma >= 0.0)) throw InvalidArgument("photon noise sigma must be >= 0");
    if (!std::isfinite(amplitude_scale)) throw InvalidArgument("amplitude scale must be finite");
}

namespace {

void require_same_shape(const RealImage& a, const RealImage& b) {
    if (a.width != b.width || a.height != b.height || a.values.size() != b.values.size() ||
        a.values.size() != a.width * a.height) {
        throw InvalidArgument("intensity and phase images must have identical dimensions");
    }
}

}  // namespace

RytovImage rytov_from_intensity_phase(const RealImage& intensity, const RealImage& phase,
                                      const PhysicalContext& ctx) {
    require_same_shape(intensity, phase);
    const double scale = ctx.wavelength * ctx.n_medium / kPi;
    RytovImage out(intensity.width, intensity.height, intensity.pixel_size);
    for (std::size_t i = 0; i < intensity.values.size(); ++i) {
        const double I = intensity.values[i];
        if (!(I > 0.0)) {
            throw DomainError("intensity must be > 0 at every pixel (pixel " + std::to_string(i) +
                              " is " + std::to_string(I) + ")");
        }
        // (i s)(ln I / 2 + i phi) = -s phi + i s ln(I) / 2
        out.values[i] = Complex(-scale * phase.values[i], scale * 0.5 * std::log(I));
    }
    return out;
}

std::pair<RealImage, RealImage> intensity_phase_from_rytov(const RytovImage& field,
                                                           const PhysicalContext& ctx) {
    const double scale = ctx.wavelength * ctx.n_medium / kPi;
    RealImage intensity{field.width, field.height, field.pixel_size, {}};
    RealImage phase{field.width, field.height, field.pixel_size, {}};
    intensity.values.resize(field.values.size());
    phase.values.resize(field.values.size());
    for (std::size_t i = 0; i < field.values.size(); ++i) {
        phase.values[i] = -field.values[i].real() / scale;
        intensity.values[i] = std::exp(2.0 * field.values[i].imag() / scale);
    }
    return {std::move(intensity), std::move(phase)};
}

Complex clausius_mossotti(Complex particle_index, double n_medium) {
    const Complex m2 = particle_index * particle_index;
    const double nm2 = n_medium * n_medium;
    return (m2 - nm2) / (m2 + 2.0 * nm2);
}

Complex raw_particle_amplitude(double diameter, const MaterialSpec& material,
                               const PhysicalContext& ctx) {
    if (!(diameter >= 0.0)) throw InvalidArgument("diameter must be >= 0");
    const double volume = kPi / 6.0 * diameter * diameter * diameter;
    return -volume * clausius_mossotti(material.index(), ctx.n_medium);
}

bool beyond_point_scatterer_limit(double diameter, const PhysicalContext& ctx) {
    return diameter > 0.5 * ctx.wavelength;
}

double averaged_noise_variance(double photon_noise_sigma, std::size_t n_frames) {
    if (n_frames == 0) throw InvalidArgument("frame count must be > 0");
    return 2.0 * photon_noise_sigma * photon_noise_sigma / static_cast<double>(n_frames);
}

double physical_amplitude_scale(double psf_sigma, const PhysicalContext& ctx) {
    if (!(psf_sigma > 0.0)) throw InvalidArgument("PSF sigma must be > 0");
    return 3.0 * ctx.n_medium * ctx.n_medium / (2.0 * kPi * psf_sigma * psf_sigma);
}

double noise_sigma_for_snr(std::span<const SnrReference> references, double target_snr,
                           double amplitude_scale, std::size_t n_frames, const PhysicalContext& ctx) {
    if (references.empty()) throw InvalidArgument("at least one SNR reference particle is required");
    if (!(target_snr > 0.0)) throw InvalidArgument("target SNR must be > 0");
    if (!(amplitude_scale > 0.0)) throw InvalidArgument("a target SNR needs a positive amplitude scale");
    if (n_frames == 0) throw InvalidArgument("frame count must be > 0");
    double log_sum = 0.0;
    for (const auto& ref : references) {
        const double a = std::abs(raw_particle_amplitude(ref.diameter, ref.material, ctx));
        if (!(a > 0.0)) throw InvalidArgument("SNR reference particle has zero optical contrast");
        log_sum += std::log(a);
    }
    const double mean_amp = amplitude_scale * std::exp(log_sum / static_cast<double>(references.size()));
    // averaged variance 2 sigma^2 / n_frames
    return mean_amp / target_snr * std::sqrt(static_cast<double>(n_frames) / 2.0);
}

RytovImage render_point(Complex amplitude, const ImagingSpec& img, Offset2 offset) {
    RytovImage out(img.width, img.height, img.pixel_size);
    if (amplitude == Complex(0.0, 0.0)) return out;
    const double inv2s2 = 1.0 / (2.0 * img.psf_sigma * img.psf_sigma);
    const double cx = static_cast<double>(img.width / 2) * img.pixel_size + offset.x;
    const double cy = static_cast<double>(img.height / 2) * img.pixel_size + offset.y;
    std::vector<double> gx(img.width), gy(img.height);
    for (std::size_t x = 0; x < img.width; ++x) {
        const double u = static_cast<double>(x) * img.pixel_size - cx;
        gx[x] = std::exp(-u * u * inv2s2);
    }
    for (std::size_t y = 0; y < img.height; ++y) {
        const double v = static_cast<double>(y) * img.pixel_size - cy;
        gy[y] = std::exp(-v * v * inv2s2);
    }
    for (std::size_t y = 0; y < img.height; ++y) {
        const Complex row = amplitude * gy[y];
        for (std::size_t x = 0; x < img.width; ++x) out.at(x, y) = row * gx[x];
    }
    return out;
}

RytovImage synthesize_particle_image(double diameter, const MaterialSpec& material,
                                     const PhysicalContext& ctx, const ImagingSpec& img) {
    img.validate();
    const Complex a = img.amplitude_scale * raw_particle_amplitude(diameter, material, ctx);
    return render_point(a, img, Offset2{});
}

RytovImage add_shot_noise(const RytovImage& image, double sigma, RngSeed seed) {
    if (!(sigma >= 0.0)) throw InvalidArgument("noise sigma must be >= 0");
    RytovImage out = image;
    if (sigma == 0.0) return out;
    Rng rng(seed);
    for (auto& v : out.values) {
        const double re = rng.normal();
        const double im = rng.normal();
        v += Complex(sigma * re, sigma * im);
    }
    return out;
}

namespace {

struct Accumulator {
    std::vector<Complex> sum;
    std::vector<std::uint32_t> count;
};

void check_frames(std::span<const RytovImage> frames, std::span<const Offset2> offsets,
                  std::size_t min_frames) {
    if (frames.size() < min_frames) {
        throw InvalidArgument("need at least " + std::to_string(min_frames) + " frames, got " +
                              std::to_string(frames.size()));
    }
    if (offsets.size() != frames.size()) {
        throw InvalidArgument("got " + std::to_string(offsets.size()) + " offsets for " +
                              std::to_string(frames.size()) + " frames");
    }
    for (const auto& f : frames) {
        if (!f.same_shape(frames.front()) || f.values.size() != f.width * f.height) {
            throw InvalidArgument("all frames must have the same dimensions");
        }
    }
}

// Adds frame indices first, first+stride, ... into acc after nearest-pixel recentring.
void accumulate(std::span<const RytovImage> frames, std::span<const Offset2> offsets,
                std::size_t first, std::size_t stride, Accumulator& acc) {
    const auto& ref = frames.front();
    const auto w = static_cast<long>(ref.width);
    const auto h = static_cast<long>(ref.height);
    acc.sum.assign(ref.values.size(), Complex{});
    acc.count.assign(ref.values.size(), 0);
    for (std::size_t f = first; f < frames.size(); f += stride) {
        const auto& frame = frames[f];
        const long sx = std::lround(offsets[f].x / frame.pixel_size);
        const long sy = std::lround(offsets[f].y / frame.pixel_size);
        if (std::labs(sx) >= w || std::labs(sy) >= h) {
            throw InvalidArgument("offset of frame " + std::to_string(f) +
                                  " shifts the image fully out of frame");
        }
        // Output pixel (x, y) reads source pixel (x + sx, y + sy).
        const long x0 = std::max(0L, -sx), x1 = std::min(w, w - sx);
        const long y0 = std::max(0L, -sy), y1 = std::min(h, h - sy);
        for (long y = y0; y < y1; ++y) {
            const Complex* src = &frame.values[static_cast<std::size_t>((y + sy) * w + sx)];
            Complex* dst = &acc.sum[static_cast<std::size_t>(y * w)];
            std::uint32_t* cnt = &acc.count[static_cast<std::size_t>(y * w)];
            for (long x = x0; x < x1; ++x) {
                dst[x] += src[x];
                ++cnt[x];
            }
        }
    }
}

RytovImage finish(const RytovImage& ref, const Accumulator& acc) {
    RytovImage out(ref.width, ref.height, ref.pixel_size);
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        if (acc.count[i] > 0) out.values[i] = acc.sum[i] / static_cast<double>(acc.count[i]);
    }
    return out;
}

}  // namespace

RytovImage timelapse_average(std::span<const RytovImage> frames, std::span<const Offset2> offsets) {
    check_frames(frames, offsets, 2);
    Accumulator acc;
    accumulate(frames, offsets, 0, 1, acc);
    return finish(frames.front(), acc);
}

double complex_pixel_variance(std::span<const Complex> values) {
    if (values.empty()) return 0.0;
    const double n = static_cast<double>(values.size());
    Complex mean{};
    for (const auto& v : values) mean += v;
    mean /= n;
    double var_re = 0.0, var_im = 0.0;
    for (const auto& v : values) {
        const double dr = v.real() - mean.real();
        const double di = v.imag() - mean.imag();
        var_re += dr * dr;
        var_im += di * di;
    }
    return (var_re + var_im) / n;
}

NoiseEstimate estimate_noise(std::span<const RytovImage> frames, std::span<const Offset2> offsets) {
    check_frames(frames, offsets, 4);
    Accumulator even, odd;
    accumulate(frames, offsets, 0, 2, even);
    accumulate(frames, offsets, 1, 2, odd);

    const auto& ref = frames.front();
    const RytovImage avg_even = finish(ref, even);
    const RytovImage avg_odd = finish(ref, odd);
    std::vector<Complex> diff(ref.values.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = avg_even.values[i] - avg_odd.values[i];

    NoiseEstimate est;
    est.n_even = (frames.size() + 1) / 2;
    est.n_odd = frames.size() / 2;
    const double n_total = static_cast<double>(frames.size());
    est.epsilon = complex_pixel_variance(diff) * static_cast<double>(est.n_even) *
                  static_cast<double>(est.n_odd) / (n_total * n_total);

    Accumulator all{even.sum, even.count};
    for (std::size_t i = 0; i < all.sum.size(); ++i) {
        all.sum[i] += odd.sum[i];
        all.count[i] += odd.count[i];
    }
    est.average = finish(ref, all);
    est.average.noise_variance = est.epsilon;
    return est;
}

double compute_snr(const RytovImage& image) {
    if (!image.noise_variance) throw InvalidArgument("SNR needs an image with an estimated noise variance");
    const double eps = *image.noise_variance;
    if (eps < 0.0) throw InvalidArgument("noise variance must be >= 0");
    double peak = 0.0;
    for (const auto& v : image.values) peak = std::max(peak, std::abs(v));
    if (eps == 0.0) return std::numeric_limits<double>::infinity();
    return peak / std::sqrt(eps);
}

}  // namespace wnta
