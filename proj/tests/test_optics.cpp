#include <doctest.h>

#include <cmath>
#include <vector>

#include "wnta/config.hpp"
#include "wnta/optics.hpp"
#include "wnta/simulation.hpp"

using namespace wnta;

namespace {

RealImage flat(std::size_t w, std::size_t h, double v) { return RealImage{w, h, 1e-7, std::vector<double>(w * h, v)}; }

ImagingSpec imaging(double kappa = 1.0) {
    ImagingSpec s;
    s.amplitude_scale = kappa;
    return s;
}

MaterialSpec ps() { return {"PS", 1.59, 0.0}; }

double peak(const RytovImage& img) {
    double m = 0;
    for (const auto& v : img.values) m = std::max(m, std::abs(v));
    return m;
}

RytovImage noise_only(std::uint64_t seed, double sigma) {
    return add_shot_noise(RytovImage(64, 64, 1e-7), sigma, RngSeed{seed});
}

}  // namespace

TEST_SUITE("optics") {

TEST_CASE("background intensity and phase give a zero field") {
    PhysicalContext ctx;
    const auto e = rytov_from_intensity_phase(flat(8, 8, 1.0), flat(8, 8, 0.0), ctx);
    for (const auto& v : e.values) CHECK(v == Complex(0, 0));
}

TEST_CASE("pure phase maps to Re = -lambda n_m phi / pi") {
    PhysicalContext ctx;
    const double phi = 0.3;
    const auto e = rytov_from_intensity_phase(flat(8, 8, 1.0), flat(8, 8, phi), ctx);
    const double expected = -ctx.wavelength * ctx.n_medium * phi / 3.141592653589793;
    for (const auto& v : e.values) {
        CHECK(v.real() == doctest::Approx(expected).epsilon(1e-14));
        CHECK(v.imag() == 0.0);
    }
}

TEST_CASE("pure attenuation maps to Im = lambda n_m ln(I) / (2 pi)") {
    PhysicalContext ctx;
    const auto e = rytov_from_intensity_phase(flat(8, 8, 0.81), flat(8, 8, 0.0), ctx);
    const double expected = ctx.wavelength * ctx.n_medium * std::log(0.81) / (2 * 3.141592653589793);
    CHECK(e.values[5].imag() == doctest::Approx(expected).epsilon(1e-14));
    CHECK(e.values[5].imag() < 0.0);
}

TEST_CASE("rytov and its inverse round-trip") {
    PhysicalContext ctx;
    RealImage I = flat(16, 16, 1.0), phi = flat(16, 16, 0.0);
    Rng rng(RngSeed{3});
    for (std::size_t i = 0; i < I.values.size(); ++i) {
        I.values[i] = 0.5 + rng.uniform();
        phi.values[i] = rng.uniform() - 0.5;
    }
    const auto e = rytov_from_intensity_phase(I, phi, ctx);
    const auto [I2, phi2] = intensity_phase_from_rytov(e, ctx);
    const auto e2 = rytov_from_intensity_phase(I2, phi2, ctx);
    for (std::size_t i = 0; i < e.values.size(); ++i) {
        CHECK(std::abs(I2.values[i] - I.values[i]) <= 1e-12 * I.values[i]);
        CHECK(std::abs(e2.values[i] - e.values[i]) <= 1e-12 * std::abs(e.values[i]));
    }
}

TEST_CASE("non-positive intensity names the pixel") {
    PhysicalContext ctx;
    auto I = flat(8, 8, 1.0);
    I.values[13] = 0.0;
    try {
        rytov_from_intensity_phase(I, flat(8, 8, 0.0), ctx);
        FAIL("expected a domain error");
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()).find("pixel 13") != std::string::npos);
    }
    CHECK_THROWS_AS(rytov_from_intensity_phase(flat(8, 8, 1.0), flat(9, 8, 0.0), ctx), InvalidArgument);
}

TEST_CASE("synthesized images: zero size, purity, d^3 scaling") {
    PhysicalContext ctx;
    const auto img = imaging(1e12);
    CHECK(peak(synthesize_particle_image(0.0, ps(), ctx, img)) == 0.0);
    const auto a = synthesize_particle_image(100e-9, ps(), ctx, img);
    const auto b = synthesize_particle_image(100e-9, ps(), ctx, img);
    CHECK(a.values == b.values);
    const auto c = synthesize_particle_image(200e-9, ps(), ctx, img);
    CHECK(peak(c) == doctest::Approx(8.0 * peak(a)).epsilon(1e-12));
}

TEST_CASE("sign convention: refraction in Re < 0, absorption in Im < 0") {
    PhysicalContext ctx;
    const auto img = imaging(1e12);
    const auto p = synthesize_particle_image(100e-9, ps(), ctx, img);
    const Complex centre = p.at(32, 32);
    CHECK(centre.real() < 0.0);
    CHECK(std::abs(centre.imag()) < 1e-12 * std::abs(centre.real()));
    const auto au = synthesize_particle_image(100e-9, {"Au", 0.54, 2.14}, ctx, img);
    CHECK(au.at(32, 32).imag() < 0.0);
}

TEST_CASE("peak is monotone in d and in index contrast") {
    PhysicalContext ctx;
    const auto img = imaging(1e12);
    double prev = 0;
    for (double d = 20e-9; d <= 260e-9; d += 20e-9) {
        const double p = peak(synthesize_particle_image(d, ps(), ctx, img));
        CHECK(p > prev);
        prev = p;
    }
    prev = 0;
    for (double n = 1.35; n <= 2.5; n += 0.05) {
        const double p = peak(synthesize_particle_image(100e-9, {"x", n, 0.0}, ctx, img));
        CHECK(p > prev);
        prev = p;
    }
}

TEST_CASE("clausius mossotti oracle values") {
    CHECK(std::abs(clausius_mossotti({1.33, 0.0}, 1.33)) == 0.0);
    const double m2 = 1.59 * 1.59, n2 = 1.33 * 1.33;
    CHECK(clausius_mossotti({1.59, 0.0}, 1.33).real() == doctest::Approx((m2 - n2) / (m2 + 2 * n2)).epsilon(1e-14));
    CHECK(beyond_point_scatterer_limit(300e-9, PhysicalContext{}));
    CHECK_FALSE(beyond_point_scatterer_limit(200e-9, PhysicalContext{}));
}

TEST_CASE("shot noise: zero sigma identity, determinism, variance 2 sigma^2") {
    const RytovImage clean(64, 64, 1e-7);
    CHECK(add_shot_noise(clean, 0.0, RngSeed{1}).values == clean.values);
    CHECK(noise_only(5, 1.0).values == noise_only(5, 1.0).values);
    const double sigma = 0.7;
    const double var = complex_pixel_variance(noise_only(6, sigma).values);
    CHECK(var == doctest::Approx(2 * sigma * sigma).epsilon(0.05));
    CHECK_THROWS_AS(add_shot_noise(clean, -1.0, RngSeed{1}), InvalidArgument);
}

TEST_CASE("time-lapse averaging") {
    const auto img = synthesize_particle_image(100e-9, ps(), PhysicalContext{}, imaging(1e12));
    std::vector<RytovImage> same(5, img);
    std::vector<Offset2> zero(5);
    const auto avg_same = timelapse_average(same, zero);
    for (std::size_t i = 0; i < img.values.size(); ++i) {
        CHECK(std::abs(avg_same.values[i] - img.values[i]) <= 1e-15 * std::abs(img.values[i]));
    }

    // Averaging N noisy frames divides the complex noise variance 2 sigma^2 by N.
    const std::size_t n = 50;
    std::vector<RytovImage> frames;
    for (std::size_t k = 0; k < n; ++k) frames.push_back(noise_only(100 + k, 1.0));
    const auto avg = timelapse_average(frames, std::vector<Offset2>(n));
    CHECK(complex_pixel_variance(avg.values) == doctest::Approx(2.0 / n).epsilon(0.10));

    CHECK_THROWS_AS(timelapse_average(std::vector<RytovImage>{img}, std::vector<Offset2>(1)), InvalidArgument);
    CHECK_THROWS_AS(timelapse_average(same, std::vector<Offset2>(5, Offset2{1e-5, 0})), InvalidArgument);
}

TEST_CASE("recentring undoes a whole-pixel displacement") {
    ImagingSpec s = imaging(1e12);
    const Complex a(-1.0, 0.5);
    const auto centred = render_point(a, s, {});
    const auto moved = render_point(a, s, Offset2{3e-7, -2e-7});
    const std::vector<RytovImage> frames{moved, moved};
    const std::vector<Offset2> offsets{Offset2{3e-7, -2e-7}, Offset2{3e-7, -2e-7}};
    const auto avg = timelapse_average(frames, offsets);
    CHECK(std::abs(avg.at(32, 32) - centred.at(32, 32)) < 1e-12);
}

TEST_CASE("noise estimation") {
    SUBCASE("noiseless frames give zero") {
        const auto img = synthesize_particle_image(100e-9, ps(), PhysicalContext{}, imaging(1e12));
        const auto est = estimate_noise(std::vector<RytovImage>(8, img), std::vector<Offset2>(8));
        CHECK(est.epsilon == 0.0);
        CHECK(est.average.noise_variance == 0.0);
        CHECK(std::isinf(compute_snr(est.average)));
    }
    SUBCASE("200 frames split 100/100 and recover 2 sigma^2 / N within 15% over 20 seeds") {
        const double sigma = 0.3;
        const std::size_t n = 200;
        const double expected = 2 * sigma * sigma / n;
        double sum = 0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            std::vector<RytovImage> frames;
            for (std::size_t k = 0; k < n; ++k) frames.push_back(noise_only(seed * 1000 + k, sigma));
            const auto est = estimate_noise(frames, std::vector<Offset2>(n));
            CHECK(est.n_even == 100);
            CHECK(est.n_odd == 100);
            CHECK(est.epsilon == doctest::Approx(expected).epsilon(0.15));
            sum += est.epsilon;
        }
        CHECK(sum / 20 == doctest::Approx(expected).epsilon(0.05));
    }
    SUBCASE("fewer than four frames is an error") {
        CHECK_THROWS_AS(estimate_noise(std::vector<RytovImage>(3, RytovImage(8, 8, 1e-7)), std::vector<Offset2>(3)),
                        InvalidArgument);
    }
}

TEST_CASE("snr: linear in the image, zero image gives zero") {
    auto img = synthesize_particle_image(100e-9, ps(), PhysicalContext{}, imaging(1e12));
    img.noise_variance = 0.25;
    const double s1 = compute_snr(img);
    for (auto& v : img.values) v *= 2.0;
    CHECK(compute_snr(img) == doctest::Approx(2 * s1).epsilon(1e-14));
    RytovImage zero(16, 16, 1e-7);
    zero.noise_variance = 1.0;
    CHECK(compute_snr(zero) == 0.0);
    CHECK_THROWS_AS(compute_snr(RytovImage(16, 16, 1e-7)), InvalidArgument);
}

TEST_CASE("PS-100 reference configuration reaches its target SNR") {
    RunConfig cfg = default_config();
    cfg.populations = {Population{20, 100e-9, 0.0, MaterialSpec{"PS", 1.59, 0.0}}};
    const SimulationSpec spec = simulation_spec(cfg);
    // Clean centred image: exactly the target by construction of kappa.
    const auto clean = synthesize_particle_image(100e-9, cfg.populations[0].material, spec.ctx, spec.imaging);
    const double eps = averaged_noise_variance(spec.imaging.photon_noise_sigma, cfg.trajectory.n_steps);
    CHECK(peak(clean) / std::sqrt(eps) == doctest::Approx(55.0).epsilon(1e-12));

    // Through the full pipeline: moving particle, recentring, estimated noise.
    const auto truth = sample_true_sizes(ensemble_spec(cfg), RngSeed{cfg.seed});
    const auto ens = simulate_ensemble(spec, truth, RngSeed{cfg.seed});
    double mean = 0;
    for (const auto& r : ens.records) mean += *r.snr / ens.records.size();
    CHECK(mean == doctest::Approx(55.0).epsilon(0.10));
}

}
