#include "wnta/similarity.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "wnta/optics.hpp"
#include "wnta/parallel.hpp"

namespace wnta {

WeightExponent::WeightExponent(double value) : value_(value) {
    if (std::isnan(value) || value < 0.0) {
        throw DomainError("weight exponent must be a non-negative real or infinity");
    }
}

std::string WeightExponent::to_string() const {
    if (is_infinite()) return "inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, value_);
    return std::string(buf, res.ptr);
}

WeightExponent WeightExponent::parse(const std::string& text) {
    if (text == "inf" || text == "infinity" || text == "Inf") return infinite();
    double v = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last || !std::isfinite(v)) {
        throw InvalidArgument("cannot parse weight exponent '" + text + "' (expected a number or \"inf\")");
    }
    return WeightExponent(v);
}

double similarity(const RytovImage& a, const RytovImage& b, double epsilon_pooled) {
    if (!a.same_shape(b) || a.values.size() != b.values.size()) {
        throw InvalidArgument("similarity needs images of identical dimensions");
    }
    if (!(epsilon_pooled >= 0.0)) throw InvalidArgument("pooled noise variance must be >= 0");
    std::vector<Complex> diff(a.values.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = a.values[i] - b.values[i];
    const double var = complex_pixel_variance(diff);
    if (var == 0.0) return 1.0;
    return std::min(1.0, 2.0 * epsilon_pooled / var);
}

SimilarityMatrix similarity_matrix(std::span<const ParticleRecord> records, unsigned threads) {
    if (records.size() < 2) throw InvalidArgument("similarity matrix needs at least 2 particles");
    const std::size_t p = records.size();
    for (std::size_t i = 0; i < p; ++i) {
        if (!records[i].rytov.noise_variance) {
            throw InvalidArgument("particle " + std::to_string(records[i].id) +
                                  " has no noise variance; run noise estimation first");
        }
        if (!records[i].rytov.same_shape(records[0].rytov)) {
            throw InvalidArgument("image dimensions differ between particles " +
                                  std::to_string(records[0].id) + " and " +
                                  std::to_string(records[i].id));
        }
    }
    SimilarityMatrix out;
    out.ids.reserve(p);
    for (const auto& r : records) out.ids.push_back(r.id);
    out.values = SquareMatrix(p, 1.0);
    // One work item per row; each unordered pair is evaluated once and mirrored.
    parallel_for(p, threads, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < p; ++j) {
            const double eps = 0.5 * (*records[i].rytov.noise_variance + *records[j].rytov.noise_variance);
            const double c = similarity(records[i].rytov, records[j].rytov, eps);
            out.values(i, j) = c;
            out.values(j, i) = c;
        }
    });
    return out;
}

WeightMatrix weights(const SimilarityMatrix& c, WeightExponent n_w) {
    const std::size_t p = c.values.size();
    WeightMatrix w{n_w, SquareMatrix(p, 0.0)};
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            const double cij = c.values(i, j);
            if (n_w.is_infinite()) {
                w.values(i, j) = i == j ? 1.0 : 0.0;
            } else if (n_w.value() == 0.0) {
                w.values(i, j) = 1.0;
            } else {
                w.values(i, j) = std::pow(cij, n_w.value());
            }
        }
    }
    return w;
}

WeightMatrix limit_weights(std::size_t p, WeightExponent n_w) {
    if (!n_w.is_infinite() && n_w.value() != 0.0) {
        throw InvalidArgument("limit weights exist only for n_w = 0 or infinity");
    }
    WeightMatrix w{n_w, SquareMatrix(p, n_w.is_infinite() ? 0.0 : 1.0)};
    if (n_w.is_infinite()) {
        for (std::size_t i = 0; i < p; ++i) w.values(i, i) = 1.0;
    }
    return w;
}

}  // namespace wnta
