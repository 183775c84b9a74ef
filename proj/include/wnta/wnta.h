#ifndef WNTA_WNTA_H
#define WNTA_WNTA_H

/* C interface to the wnta library. Every call returns a wnta_status; on failure
   the message is available from wnta_last_error() until the next call on the
   same context. Handles are opaque and must be released with their _free call. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(WNTA_BUILDING_LIBRARY)
#    define WNTA_API __declspec(dllexport)
#  else
#    define WNTA_API __declspec(dllimport)
#  endif
#else
#  define WNTA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum wnta_status {
    WNTA_OK = 0,
    WNTA_ERR_INVALID_ARGUMENT = 1,
    WNTA_ERR_DOMAIN = 2,
    WNTA_ERR_IO = 3,
    WNTA_ERR_CONFIG = 4,
    WNTA_ERR_INTERNAL = 5
} wnta_status;

typedef struct wnta_context wnta_context;
typedef struct wnta_dataset wnta_dataset;

typedef void (*wnta_log_fn)(const char* message, void* user_data);

/* Optional fields are ignored when their has_ flag (or pointer) is zero. */
typedef struct wnta_run_options {
    const char* config_path;
    const char* out_dir;
    const char* n_w;          /* decimal or "inf" */
    int has_seed;
    uint64_t seed;
    int has_threads;
    unsigned threads;         /* 0 = all hardware threads */
    const char* tracks_path;
    const char* images_dir;
    const char* sizes_path;
    const char* frames_dir;
} wnta_run_options;

WNTA_API const char* wnta_version(void);

WNTA_API wnta_status wnta_context_new(wnta_context** out);
WNTA_API void wnta_context_free(wnta_context* ctx);
WNTA_API const char* wnta_last_error(const wnta_context* ctx);
WNTA_API void wnta_set_log(wnta_context* ctx, wnta_log_fn fn, void* user_data);

WNTA_API void wnta_run_options_init(wnta_run_options* opts);

/* command: "simulate", "analyze", "calibrate", "refindex" or "noise-estimate". */
WNTA_API wnta_status wnta_run(wnta_context* ctx, const char* command, const wnta_run_options* opts);

WNTA_API wnta_status wnta_diffusion_coefficient(wnta_context* ctx, double temperature_k, double viscosity_pa_s,
                                                double diameter_m, double* out);
/* similarity^n_w; pass INFINITY for the classic limit (then only similarity 1 with is_self gives 1). */
WNTA_API wnta_status wnta_weight(wnta_context* ctx, double similarity, double n_w, int is_self, double* out);

/* Tracks CSV plus a directory of particle_<id>.rytv images. */
WNTA_API wnta_status wnta_dataset_load(wnta_context* ctx, const char* tracks_path, const char* images_dir,
                                       wnta_dataset** out);
WNTA_API void wnta_dataset_free(wnta_dataset* ds);
WNTA_API size_t wnta_dataset_count(const wnta_dataset* ds);
WNTA_API wnta_status wnta_dataset_ids(wnta_context* ctx, const wnta_dataset* ds, int64_t* ids, size_t capacity);

/* Diameters in meters (NaN where the fit slope is non-positive), in dataset order.
   n_w may be INFINITY. Physical parameters use the library defaults unless a
   config file is given (may be NULL). */
WNTA_API wnta_status wnta_dataset_sizes(wnta_context* ctx, const wnta_dataset* ds, const char* config_path,
                                        double n_w, double* classic, double* weighted, size_t capacity);

/* Row-major count x count similarity matrix. Needs a noise variance on every image. */
WNTA_API wnta_status wnta_dataset_similarity(wnta_context* ctx, const wnta_dataset* ds, double* matrix,
                                             size_t capacity);

#ifdef __cplusplus
}
#endif

#endif
