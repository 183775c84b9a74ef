#include <doctest.h>

#include <cmath>
#include <vector>

#include "wnta/config.hpp"
#include "wnta/similarity.hpp"
#include "wnta/simulation.hpp"

using namespace wnta;

namespace {

MaterialSpec ps() { return {"PS", 1.59, 0.0}; }

// Clean PS image at the default imaging setup, carrying the noise variance the
// default SNR-55 configuration would produce.
RytovImage clean_ps(double d) {
    const RunConfig cfg = default_config();
    const SimulationSpec spec = simulation_spec(cfg);
    RytovImage img = synthesize_particle_image(d, ps(), spec.ctx, spec.imaging);
    img.noise_variance = averaged_noise_variance(spec.imaging.photon_noise_sigma, cfg.trajectory.n_steps);
    return img;
}

ParticleRecord record(std::int64_t id, RytovImage img) {
    ParticleRecord r;
    r.id = id;
    r.rytov = std::move(img);
    return r;
}

SimilarityMatrix matrix_of(std::vector<double> offdiag_3x3) {
    SimilarityMatrix c;
    c.ids = {0, 1, 2};
    c.values = SquareMatrix(3, 1.0);
    c.values(0, 1) = c.values(1, 0) = offdiag_3x3[0];
    c.values(0, 2) = c.values(2, 0) = offdiag_3x3[1];
    c.values(1, 2) = c.values(2, 1) = offdiag_3x3[2];
    return c;
}

}  // namespace

TEST_SUITE("similarity") {

TEST_CASE("identical images clamp to one") {
    auto a = add_shot_noise(clean_ps(100e-9), 1e-9, RngSeed{1});
    CHECK(similarity(a, a, 1e-20) == 1.0);
    CHECK(similarity(a, a, 0.0) == 1.0);
    RytovImage z(8, 8, 1e-7);
    CHECK(similarity(z, z, 0.0) == 1.0);
}

TEST_CASE("different signals give C strictly below one") {
    const auto a = clean_ps(100e-9);
    const auto b = clean_ps(130e-9);
    const double c = similarity(a, b, *a.noise_variance);
    CHECK(c < 1.0);
    CHECK(c >= 0.0);
    // Oracle: 2 eps / Var(a - b) evaluated directly.
    std::vector<Complex> diff;
    for (std::size_t i = 0; i < a.values.size(); ++i) diff.push_back(a.values[i] - b.values[i]);
    CHECK(c == doctest::Approx(2 * *a.noise_variance / complex_pixel_variance(diff)).epsilon(1e-12));
}

TEST_CASE("similarity to a 100 nm PS particle decays with size difference") {
    const auto ref = clean_ps(100e-9);
    double prev_up = 1.0, prev_down = 1.0;
    for (double dd = 5e-9; dd <= 50e-9 + 1e-12; dd += 5e-9) {
        const double up = similarity(ref, clean_ps(100e-9 + dd), *ref.noise_variance);
        const double down = similarity(ref, clean_ps(100e-9 - dd), *ref.noise_variance);
        CHECK(up <= prev_up);
        CHECK(down <= prev_down);
        prev_up = up;
        prev_down = down;
    }
    CHECK(prev_up < 0.5);
    CHECK(prev_down < 1.0);
}

TEST_CASE("C is non-increasing in the signal difference") {
    const auto a = clean_ps(100e-9);
    const auto b = clean_ps(120e-9);
    double prev = 1.0;
    for (double s = 1.0; s <= 4.0; s += 0.25) {
        RytovImage bs = a;
        for (std::size_t i = 0; i < bs.values.size(); ++i) bs.values[i] = a.values[i] + s * (b.values[i] - a.values[i]);
        const double c = similarity(a, bs, *a.noise_variance);
        CHECK(c <= prev);
        prev = c;
    }
}

TEST_CASE("C is invariant under a common pixel permutation") {
    const auto a = add_shot_noise(clean_ps(100e-9), 1e-9, RngSeed{2});
    const auto b = add_shot_noise(clean_ps(110e-9), 1e-9, RngSeed{3});
    RytovImage pa = a, pb = b;
    std::reverse(pa.values.begin(), pa.values.end());
    std::reverse(pb.values.begin(), pb.values.end());
    CHECK(similarity(pa, pb, 3e-20) == doctest::Approx(similarity(a, b, 3e-20)).epsilon(1e-12));
}

TEST_CASE("matrix of identical records is all ones") {
    std::vector<ParticleRecord> recs;
    for (int i = 0; i < 5; ++i) recs.push_back(record(i, clean_ps(100e-9)));
    const auto c = similarity_matrix(recs);
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j < 5; ++j) CHECK(c.values(i, j) == 1.0);
    }
}

TEST_CASE("matrix is exactly symmetric with unit diagonal, pooling eps") {
    std::vector<ParticleRecord> recs;
    for (int i = 0; i < 6; ++i) {
        auto img = add_shot_noise(clean_ps(80e-9 + 10e-9 * i), 2e-10, RngSeed{static_cast<std::uint64_t>(i)});
        img.noise_variance = 1e-21 * (1 + i);
        recs.push_back(record(i, img));
    }
    const auto c = similarity_matrix(recs, 3);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(c.values(i, i) == 1.0);
        for (std::size_t j = 0; j < 6; ++j) {
            CHECK(c.values(i, j) == c.values(j, i));
            CHECK((c.values(i, j) >= 0.0 && c.values(i, j) <= 1.0));
        }
    }
    const double pooled = 0.5 * (*recs[1].rytov.noise_variance + *recs[4].rytov.noise_variance);
    CHECK(c.values(1, 4) == similarity(recs[1].rytov, recs[4].rytov, pooled));
}

TEST_CASE("matrix preconditions") {
    std::vector<ParticleRecord> recs{record(0, clean_ps(100e-9))};
    CHECK_THROWS_AS(similarity_matrix(recs), InvalidArgument);
    recs.push_back(record(1, RytovImage(32, 32, 1e-7)));
    recs[1].rytov.noise_variance = 1.0;
    try {
        similarity_matrix(recs);
        FAIL("expected an error");
    } catch (const InvalidArgument& e) {
        CHECK(std::string(e.what()).find("0 and 1") != std::string::npos);
    }
    recs[1] = record(1, clean_ps(100e-9));
    recs[1].rytov.noise_variance.reset();
    CHECK_THROWS_AS(similarity_matrix(recs), InvalidArgument);
}

TEST_CASE("PS-200 + Au-100 mixture gives a block structure") {
    RunConfig cfg = default_config();
    cfg.trajectory.n_steps = 40;
    cfg.imaging.snr_reference = {SnrReference{200e-9, material_preset("PS")}, SnrReference{100e-9, material_preset("Au")}};
    cfg.populations = {Population{8, 200e-9, 25e-9, material_preset("PS")},
                       Population{8, 100e-9, 20e-9, material_preset("Au")}};
    const auto truth = sample_true_sizes(ensemble_spec(cfg), RngSeed{5});
    const auto ens = simulate_ensemble(simulation_spec(cfg), truth, RngSeed{5});
    const auto c = similarity_matrix(ens.records);
    double within = 0, cross = 0;
    int nw = 0, nc = 0;
    for (std::size_t i = 0; i < 16; ++i) {
        for (std::size_t j = i + 1; j < 16; ++j) {
            if ((i < 8) == (j < 8)) {
                within += c.values(i, j);
                ++nw;
            } else {
                cross += c.values(i, j);
                ++nc;
            }
        }
    }
    CHECK(within / nw > cross / nc);
}

TEST_CASE("weights: limits and oracle values") {
    const auto c = matrix_of({0.5, 0.0, 1.0});
    const auto w0 = weights(c, WeightExponent(0.0));
    const auto winf = weights(c, WeightExponent::infinite());
    const auto w = weights(c, WeightExponent(1.125));
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(w0.values(i, j) == 1.0);
            CHECK(winf.values(i, j) == (i == j ? 1.0 : 0.0));
            CHECK((w.values(i, j) >= 0.0 && w.values(i, j) <= 1.0));
        }
        CHECK(w.values(i, i) == 1.0);
    }
    CHECK(w.values(0, 1) == doctest::Approx(0.4585).epsilon(1e-4));
    CHECK(w.values(0, 1) == doctest::Approx(std::pow(0.5, 1.125)).epsilon(1e-15));
    CHECK(w.values(0, 2) == 0.0);
    CHECK(w.values(1, 2) == 1.0);
    CHECK_THROWS_AS(WeightExponent(-0.5), DomainError);
    CHECK_THROWS_AS(WeightExponent(NAN), DomainError);
}

TEST_CASE("limit weights need no similarities") {
    const auto a = limit_weights(4, WeightExponent(0.0));
    const auto b = limit_weights(4, WeightExponent::infinite());
    const auto c = matrix_of({0.3, 0.6, 0.9});
    CHECK(limit_weights(3, WeightExponent(0.0)).values(0, 2) == weights(c, WeightExponent(0.0)).values(0, 2));
    CHECK(a.values(1, 3) == 1.0);
    CHECK(b.values(1, 3) == 0.0);
    CHECK(b.values(2, 2) == 1.0);
    CHECK_THROWS_AS(limit_weights(3, WeightExponent(1.0)), InvalidArgument);
}

TEST_CASE("weights are non-increasing in n_w where C < 1") {
    const auto c = matrix_of({0.2, 0.75, 0.999});
    std::vector<WeightExponent> grid;
    for (double n = 0; n <= 8; n += 0.125) grid.emplace_back(n);
    grid.push_back(WeightExponent::infinite());
    for (auto [i, j] : {std::pair{0, 1}, std::pair{0, 2}, std::pair{1, 2}}) {
        double prev = 1.0;
        for (const auto& n : grid) {
            const double v = weights(c, n).values(i, j);
            CHECK(v <= prev);
            prev = v;
        }
    }
}

TEST_CASE("exponent parsing and printing") {
    CHECK(WeightExponent::parse("inf").is_infinite());
    CHECK(WeightExponent::parse("1.125").value() == 1.125);
    CHECK(WeightExponent(1.125).to_string() == "1.125");
    CHECK(WeightExponent::infinite().to_string() == "inf");
    CHECK_THROWS(WeightExponent::parse("abc"));
    CHECK_THROWS(WeightExponent::parse("-1"));
}

}
