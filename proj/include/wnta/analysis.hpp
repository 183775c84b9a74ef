#pragma once

#include <span>
#include <vector>

#include "wnta/estimator.hpp"
#include "wnta/similarity.hpp"

namespace wnta {

struct AnalysisResult {
    std::vector<MsdCurve> curves;
    SimilarityMatrix similarity;
    std::vector<SizeEstimate> classic;
    std::vector<SizeEstimate> weighted;
};

std::vector<MsdCurve> msd_curves(std::span<const ParticleRecord> records, std::size_t max_lag);

// Classic and weighted sizing of every particle. The similarity matrix (which
// needs every image's noise variance) is only computed for 0 < n_w < infinity,
// unless `always_similarity` is set.
AnalysisResult analyze_records(std::span<const ParticleRecord> records, const PhysicalContext& ctx,
                               WeightExponent n_w, std::size_t n_fit_lags, unsigned threads = 1,
                               bool always_similarity = false);

}  // namespace wnta
