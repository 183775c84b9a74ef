#include "wnta/wnta.h"

#include <cmath>
#include <exception>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "wnta/analysis.hpp"
#include "wnta/commands.hpp"
#include "wnta/io.hpp"

struct wnta_context {
    std::string last_error;
    wnta_log_fn log = nullptr;
    void* log_user = nullptr;
};

struct wnta_dataset {
    std::vector<wnta::ParticleRecord> records;
};

namespace {

template <class F>
wnta_status guarded(wnta_context* ctx, F&& fn) {
    if (!ctx) return WNTA_ERR_INVALID_ARGUMENT;
    ctx->last_error.clear();
    auto fail = [&](wnta_status s, const char* what) {
        ctx->last_error = what;
        return s;
    };
    try {
        fn();
        return WNTA_OK;
    } catch (const wnta::DomainError& e) {
        return fail(WNTA_ERR_DOMAIN, e.what());
    } catch (const wnta::InvalidArgument& e) {
        return fail(WNTA_ERR_INVALID_ARGUMENT, e.what());
    } catch (const wnta::IoError& e) {
        return fail(WNTA_ERR_IO, e.what());
    } catch (const wnta::ConfigError& e) {
        return fail(WNTA_ERR_CONFIG, e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(WNTA_ERR_IO, e.what());
    } catch (const std::bad_alloc&) {
        return fail(WNTA_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(WNTA_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(WNTA_ERR_INTERNAL, "unknown error");
    }
}

void need(const void* p, const char* name) {
    if (!p) throw wnta::InvalidArgument(std::string(name) + " must not be NULL");
}

void need_capacity(std::size_t capacity, std::size_t n) {
    if (capacity < n) {
        throw wnta::InvalidArgument("output buffer holds " + std::to_string(capacity) + " values, " +
                                    std::to_string(n) + " needed");
    }
}

wnta::WeightExponent exponent(double n_w) {
    return std::isinf(n_w) && n_w > 0 ? wnta::WeightExponent::infinite() : wnta::WeightExponent(n_w);
}

}  // namespace

extern "C" {

const char* wnta_version(void) { return WNTA_VERSION_STRING; }

wnta_status wnta_context_new(wnta_context** out) {
    if (!out) return WNTA_ERR_INVALID_ARGUMENT;
    *out = new (std::nothrow) wnta_context();
    return *out ? WNTA_OK : WNTA_ERR_INTERNAL;
}

void wnta_context_free(wnta_context* ctx) { delete ctx; }

const char* wnta_last_error(const wnta_context* ctx) { return ctx ? ctx->last_error.c_str() : "null context"; }

void wnta_set_log(wnta_context* ctx, wnta_log_fn fn, void* user_data) {
    if (!ctx) return;
    ctx->log = fn;
    ctx->log_user = user_data;
}

void wnta_run_options_init(wnta_run_options* opts) {
    if (opts) *opts = wnta_run_options{};
}

wnta_status wnta_run(wnta_context* ctx, const char* command, const wnta_run_options* opts) {
    return guarded(ctx, [&] {
        need(command, "command");
        const wnta::Command cmd = wnta::parse_command(command);
        wnta::CommandOptions o;
        if (opts) {
            if (opts->config_path) o.config = opts->config_path;
            if (opts->out_dir) o.out = opts->out_dir;
            if (opts->n_w) o.n_w = wnta::WeightExponent::parse(opts->n_w);
            if (opts->has_seed) o.seed = opts->seed;
            if (opts->has_threads) o.threads = opts->threads;
            if (opts->tracks_path) o.inputs.tracks = opts->tracks_path;
            if (opts->images_dir) o.inputs.images = opts->images_dir;
            if (opts->sizes_path) o.inputs.sizes = opts->sizes_path;
            if (opts->frames_dir) o.inputs.frames = opts->frames_dir;
        }
        if (ctx->log) {
            wnta_log_fn fn = ctx->log;
            void* user = ctx->log_user;
            o.log = [fn, user](const std::string& m) { fn(m.c_str(), user); };
        }
        wnta::run_command(cmd, o);
    });
}

wnta_status wnta_diffusion_coefficient(wnta_context* ctx, double temperature_k, double viscosity_pa_s,
                                       double diameter_m, double* out) {
    return guarded(ctx, [&] {
        need(out, "out");
        wnta::PhysicalContext pc;
        pc.temperature = temperature_k;
        pc.viscosity = viscosity_pa_s;
        *out = wnta::diffusion_coefficient(pc, diameter_m);
    });
}

wnta_status wnta_weight(wnta_context* ctx, double similarity, double n_w, int is_self, double* out) {
    return guarded(ctx, [&] {
        need(out, "out");
        if (!(similarity >= 0.0 && similarity <= 1.0)) throw wnta::DomainError("similarity must lie in [0, 1]");
        wnta::SimilarityMatrix c;
        c.ids = {0, 1};
        c.values = wnta::SquareMatrix(2, 1.0);
        c.values(0, 1) = c.values(1, 0) = similarity;
        const auto w = wnta::weights(c, exponent(n_w));
        *out = is_self ? w.values(0, 0) : w.values(0, 1);
    });
}

wnta_status wnta_dataset_load(wnta_context* ctx, const char* tracks_path, const char* images_dir,
                              wnta_dataset** out) {
    return guarded(ctx, [&] {
        need(tracks_path, "tracks_path");
        need(images_dir, "images_dir");
        need(out, "out");
        *out = nullptr;
        auto tracks = wnta::io::read_tracks(tracks_path);
        auto images = wnta::io::read_image_dir(images_dir);
        auto ds = std::make_unique<wnta_dataset>();
        for (auto& t : tracks) {
            auto it = images.find(t.particle_id);
            if (it == images.end()) {
                throw wnta::InvalidArgument("no image for particle " + std::to_string(t.particle_id));
            }
            wnta::ParticleRecord r;
            r.id = t.particle_id;
            r.rytov = std::move(it->second);
            r.trajectory = std::move(t);
            images.erase(it);
            ds->records.push_back(std::move(r));
        }
        if (!images.empty()) {
            throw wnta::InvalidArgument("image for particle " + std::to_string(images.begin()->first) +
                                        " has no track");
        }
        *out = ds.release();
    });
}

void wnta_dataset_free(wnta_dataset* ds) { delete ds; }

size_t wnta_dataset_count(const wnta_dataset* ds) { return ds ? ds->records.size() : 0; }

wnta_status wnta_dataset_ids(wnta_context* ctx, const wnta_dataset* ds, int64_t* ids, size_t capacity) {
    return guarded(ctx, [&] {
        need(ds, "dataset");
        need(ids, "ids");
        need_capacity(capacity, ds->records.size());
        for (std::size_t i = 0; i < ds->records.size(); ++i) ids[i] = ds->records[i].id;
    });
}

wnta_status wnta_dataset_sizes(wnta_context* ctx, const wnta_dataset* ds, const char* config_path, double n_w,
                               double* classic, double* weighted, size_t capacity) {
    return guarded(ctx, [&] {
        need(ds, "dataset");
        need_capacity(capacity, ds->records.size());
        const wnta::RunConfig cfg = config_path ? wnta::load_config(config_path) : wnta::default_config();
        const auto res = wnta::analyze_records(ds->records, cfg.physical, exponent(n_w), cfg.analysis.n_fit_lags,
                                               cfg.threads);
        for (std::size_t i = 0; i < ds->records.size(); ++i) {
            if (classic) classic[i] = res.classic[i].valid ? res.classic[i].diameter : NAN;
            if (weighted) weighted[i] = res.weighted[i].valid ? res.weighted[i].diameter : NAN;
        }
    });
}

wnta_status wnta_dataset_similarity(wnta_context* ctx, const wnta_dataset* ds, double* matrix, size_t capacity) {
    return guarded(ctx, [&] {
        need(ds, "dataset");
        need(matrix, "matrix");
        const std::size_t p = ds->records.size();
        need_capacity(capacity, p * p);
        const auto c = wnta::similarity_matrix(ds->records, 1);
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = 0; j < p; ++j) matrix[i * p + j] = c.values(i, j);
        }
    });
}

}  // extern "C"
