// Command-line front end. Talks to the library only through the C API.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "wnta/wnta.h"

namespace {

struct Args {
    std::string config, out, n_w;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string tracks, images, sizes, frames;
};

void log_to_stderr(const char* message, void*) { std::fprintf(stderr, "wnta: %s\n", message); }

std::optional<unsigned> threads_from_env() {
    const char* v = std::getenv("WNTA_THREADS");
    if (!v || !*v) return std::nullopt;
    char* end = nullptr;
    const unsigned long n = std::strtoul(v, &end, 10);
    if (*end != '\0' || n > 4096) {
        std::fprintf(stderr, "wnta: ignoring WNTA_THREADS=%s (expected a thread count)\n", v);
        return std::nullopt;
    }
    return static_cast<unsigned>(n);
}

int run(const std::string& command, const Args& a) {
    wnta_context* ctx = nullptr;
    if (wnta_context_new(&ctx) != WNTA_OK) {
        std::fprintf(stderr, "wnta: cannot allocate a context\n");
        return 1;
    }
    wnta_set_log(ctx, log_to_stderr, nullptr);

    wnta_run_options o;
    wnta_run_options_init(&o);
    auto opt = [](const std::string& s) { return s.empty() ? nullptr : s.c_str(); };
    o.config_path = opt(a.config);
    o.out_dir = opt(a.out);
    o.n_w = opt(a.n_w);
    o.tracks_path = opt(a.tracks);
    o.images_dir = opt(a.images);
    o.sizes_path = opt(a.sizes);
    o.frames_dir = opt(a.frames);
    if (a.seed) {
        o.has_seed = 1;
        o.seed = *a.seed;
    }
    // --threads beats WNTA_THREADS, which beats the config file.
    std::optional<unsigned> threads = a.threads ? a.threads : threads_from_env();
    if (threads) {
        o.has_threads = 1;
        o.threads = *threads;
    }

    const wnta_status s = wnta_run(ctx, command.c_str(), &o);
    if (s != WNTA_OK) std::fprintf(stderr, "wnta %s: error: %s\n", command.c_str(), wnta_last_error(ctx));
    wnta_context_free(ctx);
    return s == WNTA_OK ? 0 : 2 + static_cast<int>(s);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weighted nanoparticle tracking analysis"};
    app.set_version_flag("--version", std::string(wnta_version()));
    app.require_subcommand(1);

    Args args;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", args.config, "JSON run configuration")->check(CLI::ExistingFile);
        sub->add_option("--seed", args.seed, "RNG seed (overrides the config)");
        sub->add_option("--out", args.out, "output directory");
        sub->add_option("--threads", args.threads, "worker threads, 0 = all cores (fallback: WNTA_THREADS)");
    };

    auto* simulate = app.add_subcommand("simulate", "simulate an ensemble: tracks, field images, truth");
    add_common(simulate);

    auto* analyze = app.add_subcommand("analyze", "classic and weighted sizing of tracked particles");
    add_common(analyze);
    analyze->add_option("--n-w", args.n_w, "weight exponent, a number >= 0 or inf");
    analyze->add_option("--tracks", args.tracks, "tracks.csv");
    analyze->add_option("--images", args.images, "directory of particle_<id>.rytv images");

    auto* calibrate = app.add_subcommand("calibrate", "exponent sweep against simulated ground truth");
    add_common(calibrate);

    auto* refindex = app.add_subcommand("refindex", "complex refractive index from sizes and field images");
    add_common(refindex);
    refindex->add_option("--sizes", args.sizes, "sizes.csv from analyze");
    refindex->add_option("--images", args.images, "directory of particle_<id>.rytv images");

    auto* noise = app.add_subcommand("noise-estimate", "average raw frames and estimate image noise");
    add_common(noise);
    noise->add_option("--frames", args.frames, "directory of particle_<id>/frame_<k>.rytv");

    // --n-w is accepted everywhere for uniformity; only analyze uses it.
    for (auto* sub : {simulate, calibrate, refindex, noise}) {
        sub->add_option("--n-w", args.n_w, "weight exponent, a number >= 0 or inf");
    }

    CLI11_PARSE(app, argc, argv);
    return run(app.get_subcommands().front()->get_name(), args);
}
