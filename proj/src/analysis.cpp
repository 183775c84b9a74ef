#include "wnta/analysis.hpp"

namespace wnta {

std::vector<MsdCurve> msd_curves(std::span<const ParticleRecord> records, std::size_t max_lag) {
    std::vector<MsdCurve> curves;
    curves.reserve(records.size());
    for (const auto& r : records) {
        Trajectory t = r.trajectory;
        t.particle_id = r.id;
        curves.push_back(msd_curve(t, max_lag));
    }
    return curves;
}

AnalysisResult analyze_records(std::span<const ParticleRecord> records, const PhysicalContext& ctx,
                               WeightExponent n_w, std::size_t n_fit_lags, unsigned threads,
                               bool always_similarity) {
    ctx.validate();
    AnalysisResult out;
    out.curves = msd_curves(records, n_fit_lags);
    out.classic.reserve(records.size());
    for (const auto& c : out.curves) out.classic.push_back(fit_classic(c, ctx, n_fit_lags));

    // n_w = 0 and n_w = infinity do not depend on the similarities.
    const bool needs_similarity = !n_w.is_infinite() && n_w.value() > 0.0;
    if (needs_similarity || always_similarity) {
        out.similarity = similarity_matrix(records, threads);
    }
    const WeightMatrix w = needs_similarity ? weights(out.similarity, n_w)
                                            : limit_weights(records.size(), n_w);
    out.weighted = fit_weighted_all(out.curves, w, ctx, n_fit_lags, threads);
    return out;
}

}  // namespace wnta
