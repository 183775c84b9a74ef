#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "wnta/core.hpp"

namespace wnta {

// Weighting exponent: a non-negative real or infinity (per-particle fit only).
class WeightExponent {
public:
    constexpr WeightExponent() = default;
    explicit WeightExponent(double value);

    static constexpr WeightExponent infinite() {
        WeightExponent e;
        e.value_ = std::numeric_limits<double>::infinity();
        return e;
    }

    double value() const noexcept { return value_; }
    bool is_infinite() const noexcept { return value_ == std::numeric_limits<double>::infinity(); }

    // "inf" or the shortest round-tripping decimal.
    std::string to_string() const;
    static WeightExponent parse(const std::string& text);

    friend bool operator==(WeightExponent a, WeightExponent b) { return a.value_ == b.value_; }
    friend bool operator<(WeightExponent a, WeightExponent b) { return a.value_ < b.value_; }

private:
    double value_ = 0.0;
};

// Dense symmetric P x P matrix of values in [0, 1].
class SquareMatrix {
public:
    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

    std::size_t size() const noexcept { return n_; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * n_, n_}; }

private:
    std::size_t n_ = 0;
    std::vector<double> data_;
};

struct SimilarityMatrix {
    std::vector<std::int64_t> ids;
    SquareMatrix values;
};

struct WeightMatrix {
    WeightExponent exponent;
    SquareMatrix values;
};

// min(1, 2 eps / Var(a - b)), with Var = Var(Re) + Var(Im) over all pixels.
// Two noiseless identical images give 1.
double similarity(const RytovImage& a, const RytovImage& b, double epsilon_pooled);

// Pairwise similarities; eps for a pair is the mean of both images' noise variances.
// threads == 0 picks the hardware concurrency.
SimilarityMatrix similarity_matrix(std::span<const ParticleRecord> records, unsigned threads = 1);

// Element-wise C^n_w. n_w = 0 gives all ones; n_w = infinity gives the identity.
WeightMatrix weights(const SimilarityMatrix& c, WeightExponent n_w);

// The two limits that need no similarities: all ones (n_w = 0) or identity (infinity).
WeightMatrix limit_weights(std::size_t p, WeightExponent n_w);

}  // namespace wnta
