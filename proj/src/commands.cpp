#include "wnta/commands.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

#include <json.hpp>

#include "wnta/analysis.hpp"
#include "wnta/calibration.hpp"
#include "wnta/io.hpp"
#include "wnta/parallel.hpp"
#include "wnta/simulation.hpp"

#ifndef WNTA_VERSION_STRING
#define WNTA_VERSION_STRING "0.0.0"
#endif

namespace wnta {

using json = nlohmann::ordered_json;
using io::format_double;

namespace {

void say(const CommandOptions& o, const std::string& msg) {
    if (o.log) o.log(msg);
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_manifest(io::ArtifactStage& stage, Command cmd, const RunConfig& cfg,
                    const ImagingSpec* imaging) {
    json m;
    m["tool"] = "wnta";
    m["version"] = WNTA_VERSION_STRING;
    m["command"] = command_name(cmd);
    m["rng"] = Rng::identity();
    m["created_utc"] = utc_now();
    m["amplitude_scale"] = imaging ? json(imaging->amplitude_scale) : json(nullptr);
    m["photon_noise_sigma"] = imaging ? json(imaging->photon_noise_sigma) : json(nullptr);
    m["config"] = json::parse(config_to_json(cfg));
    io::write_file_atomic(stage.path("manifest.json"), m.dump(2) + "\n");
}

const fs::path& require(const std::optional<fs::path>& p, const char* what) {
    if (!p) throw ConfigError(std::string("inputs.") + what + " is required for this command");
    return *p;
}

std::string id_list(const std::vector<std::int64_t>& ids) {
    std::string s;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i == 8) {
            s += ", ... (" + std::to_string(ids.size()) + " total)";
            break;
        }
        if (i) s += ", ";
        s += std::to_string(ids[i]);
    }
    return s;
}

std::string noise_csv_row(const ParticleRecord& r) {
    const double eps = r.rytov.noise_variance.value_or(std::numeric_limits<double>::quiet_NaN());
    const double snr = r.rytov.noise_variance ? compute_snr(r.rytov) : std::numeric_limits<double>::quiet_NaN();
    return std::to_string(r.id) + "," + format_double(eps) + "," + format_double(snr) + "\n";
}

// ---------------------------------------------------------------- simulate

void simulate(const RunConfig& cfg, const CommandOptions& o) {
    if (cfg.populations.empty()) throw ConfigError("ensemble.populations: simulate needs at least one population");
    const SimulationSpec spec = simulation_spec(cfg);
    const auto truth = sample_true_sizes(ensemble_spec(cfg), RngSeed{cfg.seed});

    io::ArtifactStage stage(cfg.output_dir);
    write_manifest(stage, Command::simulate, cfg, &spec.imaging);

    FrameSink sink;
    if (cfg.imaging.write_frames) {
        const fs::path frames_dir = stage.path("frames");
        fs::create_directories(frames_dir);
        sink = [frames_dir](std::int64_t id, std::span<const RytovImage> frames, std::span<const Offset2> offsets) {
            const fs::path dir = frames_dir / ("particle_" + std::to_string(id));
            fs::create_directories(dir);
            for (std::size_t k = 0; k < frames.size(); ++k) {
                io::write_rytov(dir / ("frame_" + std::to_string(k) + ".rytv"), frames[k]);
            }
            io::write_offsets(dir / "offsets.csv", offsets);
        };
    }
    say(o, "simulating " + std::to_string(truth.size()) + " particles x " +
               std::to_string(cfg.trajectory.n_steps) + " frames");
    const SimulatedEnsemble ens =
        simulate_ensemble(spec, truth, RngSeed{cfg.seed}, cfg.threads, sink ? &sink : nullptr);
    for (const auto& w : ens.warnings) say(o, "warning: " + w);

    std::vector<Trajectory> tracks;
    tracks.reserve(ens.records.size());
    for (const auto& r : ens.records) tracks.push_back(r.trajectory);
    io::write_tracks(stage.path("tracks.csv"), tracks);
    io::write_truth(stage.path("truth.csv"), ens.truth);

    const fs::path images = stage.path("images");
    fs::create_directories(images);
    std::string noise = "particle_id,epsilon_m2,snr\n";
    for (const auto& r : ens.records) {
        io::write_rytov(images / io::image_file_name(r.id), r.rytov);
        noise += noise_csv_row(r);
    }
    io::write_file_atomic(stage.path("noise.csv"), noise);
    stage.commit();
}

// ---------------------------------------------------------------- analyze

std::vector<ParticleRecord> load_records(const fs::path& tracks_path, const fs::path& images_dir) {
    auto tracks = io::read_tracks(tracks_path);
    auto images = io::read_image_dir(images_dir);

    std::vector<std::int64_t> no_image, no_track;
    std::set<std::int64_t> track_ids;
    for (const auto& t : tracks) {
        track_ids.insert(t.particle_id);
        if (!images.count(t.particle_id)) no_image.push_back(t.particle_id);
    }
    for (const auto& [id, img] : images) {
        if (!track_ids.count(id)) no_track.push_back(id);
    }
    if (!no_image.empty() || !no_track.empty()) {
        std::string msg = "particle ids do not match between tracks and images";
        if (!no_image.empty()) msg += "; tracks without an image: " + id_list(no_image);
        if (!no_track.empty()) msg += "; images without a track: " + id_list(no_track);
        throw InvalidArgument(msg);
    }

    std::vector<ParticleRecord> records;
    records.reserve(tracks.size());
    for (auto& t : tracks) {
        ParticleRecord r;
        r.id = t.particle_id;
        r.rytov = std::move(images.at(t.particle_id));
        r.rytov.validate();
        r.trajectory = std::move(t);
        if (r.rytov.noise_variance && *r.rytov.noise_variance > 0.0) r.snr = compute_snr(r.rytov);
        records.push_back(std::move(r));
    }
    return records;
}

std::string similarity_csv(const SimilarityMatrix& s) {
    std::string data = "particle_id";
    for (auto id : s.ids) data += "," + std::to_string(id);
    data += '\n';
    for (std::size_t i = 0; i < s.ids.size(); ++i) {
        data += std::to_string(s.ids[i]);
        for (std::size_t j = 0; j < s.ids.size(); ++j) data += "," + format_double(s.values(i, j));
        data += '\n';
    }
    return data;
}

void analyze(const RunConfig& cfg, const CommandOptions& o) {
    const auto records = load_records(require(cfg.inputs.tracks, "tracks"), require(cfg.inputs.images, "images"));
    const WeightExponent n_w = cfg.analysis.n_w;

    const double dt = records.front().trajectory.dt;
    if (std::abs(dt - cfg.trajectory.dt) > 1e-9 * cfg.trajectory.dt) {
        say(o, "warning: tracks frame interval " + format_double(dt) + " s differs from trajectory.dt_s " +
                   format_double(cfg.trajectory.dt) + " s; using the tracks");
    }

    std::vector<std::int64_t> missing_eps;
    for (const auto& r : records) {
        if (!r.rytov.noise_variance) missing_eps.push_back(r.id);
    }
    const bool finite_positive = !n_w.is_infinite() && n_w.value() > 0.0;
    if (finite_positive && !missing_eps.empty()) {
        throw InvalidArgument("images without a noise variance (particles " + id_list(missing_eps) +
                              "); run `wnta noise-estimate` on the raw frames first, or use n_w = 0 or inf");
    }
    const bool with_similarity = missing_eps.empty() && records.size() >= 2;
    if (!with_similarity) say(o, "warning: similarity matrix not computed (needs >= 2 particles with noise variance)");

    const AnalysisResult res =
        analyze_records(records, cfg.physical, n_w, cfg.analysis.n_fit_lags, cfg.threads, with_similarity);

    io::ArtifactStage stage(cfg.output_dir);
    write_manifest(stage, Command::analyze, cfg, nullptr);

    std::vector<io::SizeRow> rows;
    for (std::size_t i = 0; i < records.size(); ++i) rows.push_back({records[i].id, res.classic[i], res.weighted[i]});
    io::write_sizes(stage.path("sizes.csv"), rows);
    if (with_similarity) io::write_file_atomic(stage.path("similarity.csv"), similarity_csv(res.similarity));

    BinSpec bins;
    bins.bin_width = cfg.analysis.histogram_bin_width;
    std::string hist = "method,bin_lower_m,bin_upper_m,count\n";
    std::string stats = "method,n_w,count,invalid,mean_m,sd_m\n";
    auto emit = [&](const char* method, const std::vector<SizeEstimate>& est, WeightExponent used) {
        std::size_t fell_back = 0;
        for (const auto& e : est) fell_back += e.fell_back ? 1 : 0;
        if (fell_back) say(o, std::string("warning: ") + std::to_string(fell_back) + " " + method +
                                  " estimate(s) fell back to the classic fit");
        std::size_t valid = 0;
        for (const auto& e : est) valid += e.valid ? 1 : 0;
        if (valid == 0) {
            say(o, std::string("warning: no valid ") + method + " estimates; histogram skipped");
            stats += std::string(method) + "," + used.to_string() + ",0," + std::to_string(est.size()) + ",nan,nan\n";
            return;
        }
        const PopulationStats ps = population_stats(est, bins);
        for (std::size_t b = 0; b < ps.histogram.counts.size(); ++b) {
            hist += std::string(method) + "," + format_double(ps.histogram.lower(b)) + "," +
                    format_double(ps.histogram.upper(b)) + "," + std::to_string(ps.histogram.counts[b]) + "\n";
        }
        stats += std::string(method) + "," + used.to_string() + "," + std::to_string(ps.count) + "," +
                 std::to_string(ps.invalid) + "," + format_double(ps.mean) + "," + format_double(ps.sd) + "\n";
        if (ps.invalid) say(o, std::string("warning: ") + std::to_string(ps.invalid) + " " + method +
                                   " estimate(s) have a non-positive slope and are excluded from statistics");
    };
    emit("classic", res.classic, WeightExponent::infinite());
    emit("weighted", res.weighted, n_w);
    io::write_file_atomic(stage.path("histogram.csv"), hist);
    io::write_file_atomic(stage.path("stats.csv"), stats);
    stage.commit();
}

// ---------------------------------------------------------------- calibrate

void calibrate(const RunConfig& cfg, const CommandOptions& o) {
    if (cfg.inputs.tracks || cfg.inputs.images || cfg.inputs.sizes || cfg.inputs.frames) {
        throw InvalidArgument("calibration needs known true sizes and only runs on simulated ensembles; "
                              "remove the inputs section (experimental data has no ground truth)");
    }
    if (cfg.populations.empty()) throw ConfigError("ensemble.populations: calibration needs a simulated ensemble");

    const auto truth = sample_true_sizes(ensemble_spec(cfg), RngSeed{cfg.seed});
    const auto& cal = cfg.calibration;
    const auto grid = exponent_grid(cal.grid_start, cal.grid_stop, cal.grid_step, cal.include_infinity);
    const SimulationSpec spec = simulation_spec(cfg);

    io::ArtifactStage stage(cfg.output_dir);
    write_manifest(stage, Command::calibrate, cfg, &spec.imaging);

    say(o, "sweeping " + std::to_string(grid.size()) + " exponents over " + std::to_string(cal.repetitions) +
               " repetitions of " + std::to_string(truth.size()) + " particles");
    const SweepResult sweep =
        sweep_exponent(spec, truth, grid, cal.repetitions, RngSeed{cfg.seed}, cfg.analysis.n_fit_lags, cfg.threads);

    std::string table = "n_w,mean_rel_diff,sd_rel_diff,gain,invalid\n";
    for (const auto& p : sweep.points) {
        table += p.n_w.to_string() + "," + format_double(p.mean_rel_diff) + "," + format_double(p.sd_rel_diff) +
                 "," + format_double(p.gain) + "," + std::to_string(p.invalid) + "\n";
    }
    io::write_file_atomic(stage.path("sweep.csv"), table);

    auto optimum_row = [&](const SweepResult& s) {
        const WeightExponent best = optimal_exponent(s);
        const auto it = std::find_if(s.points.begin(), s.points.end(), [&](const SweepPoint& p) { return p.n_w == best; });
        const SweepPoint& p = it != s.points.end() ? *it : s.classic;
        return best.to_string() + "," + format_double(p.mean_rel_diff) + "," + format_double(p.gain) + "," +
               format_double(s.classic.mean_rel_diff);
    };
    io::write_file_atomic(stage.path("optimum.csv"),
                          "n_w_opt,mean_rel_diff,gain,classic_mean_rel_diff\n" + optimum_row(sweep) + "\n");

    if (!cal.snr_values.empty()) {
        std::string pts = "snr,n_w_opt,mean_rel_diff,gain,classic_mean_rel_diff\n";
        std::vector<std::pair<double, double>> points;
        for (double snr : cal.snr_values) {
            say(o, "sweeping at SNR " + format_double(snr));
            const SimulationSpec s = simulation_spec(cfg, snr);
            const SweepResult r =
                sweep_exponent(s, truth, grid, cal.repetitions, RngSeed{cfg.seed}, cfg.analysis.n_fit_lags, cfg.threads);
            const WeightExponent best = optimal_exponent(r);
            pts += format_double(snr) + "," + optimum_row(r) + "\n";
            if (!best.is_infinite()) points.emplace_back(snr, best.value());
        }
        io::write_file_atomic(stage.path("snr_points.csv"), pts);
        if (points.size() >= 4) {
            const SnrModel m = fit_snr_model(points);
            io::write_file_atomic(stage.path("snr_model.csv"),
                                  "slope,intercept,r_squared,n_points\n" + format_double(m.slope) + "," +
                                      format_double(m.intercept) + "," + format_double(m.r_squared) + "," +
                                      std::to_string(m.n_points) + "\n");
        } else {
            say(o, "warning: the SNR model needs at least 4 SNR values with a finite optimum; snr_model.csv skipped");
        }
    }
    stage.commit();
}

// ---------------------------------------------------------------- refindex

void refindex(const RunConfig& cfg, const CommandOptions& o) {
    const auto sizes = io::read_sizes(require(cfg.inputs.sizes, "sizes"));
    const auto images = io::read_image_dir(require(cfg.inputs.images, "images"));
    std::map<std::int64_t, const io::SizeRow*> by_id;
    for (const auto& s : sizes) by_id[s.particle_id] = &s;

    io::ArtifactStage stage(cfg.output_dir);
    write_manifest(stage, Command::refindex, cfg, nullptr);

    std::string data = "particle_id,diameter_m,n,k,n_literal,integral_re_m3,integral_im_m3,volume_m3,status\n";
    std::size_t skipped = 0;
    for (const auto& [id, img] : images) {
        auto it = by_id.find(id);
        const SizeEstimate* est = nullptr;
        if (it != by_id.end()) {
            est = cfg.refindex_sizes == SizeColumn::classic ? &it->second->classic : &it->second->weighted;
        }
        if (!est || !est->valid) {
            ++skipped;
            data += std::to_string(id) + ",nan,nan,nan,nan,nan,nan,nan," +
                    (est ? "invalid size" : "missing size") + "\n";
            continue;
        }
        ParticleRecord rec;
        rec.id = id;
        rec.rytov = img;
        const RefractiveIndexEstimate r = refractive_index(rec, est->diameter, cfg.physical);
        data += std::to_string(id) + "," + format_double(est->diameter) + "," + format_double(r.n) + "," +
                format_double(r.k) + "," + format_double(r.n_literal) + "," + format_double(r.integral_re) + "," +
                format_double(r.integral_im) + "," + format_double(r.volume) + ",ok\n";
    }
    if (skipped) say(o, "warning: " + std::to_string(skipped) + " particle(s) without a usable size were skipped");
    for (const auto& s : sizes) {
        if (!images.count(s.particle_id)) {
            say(o, "warning: particle " + std::to_string(s.particle_id) + " has a size but no image");
        }
    }
    io::write_file_atomic(stage.path("refindex.csv"), data);
    stage.commit();
}

// ---------------------------------------------------------------- noise-estimate

void noise_estimate(const RunConfig& cfg, const CommandOptions& o) {
    const fs::path& root = require(cfg.inputs.frames, "frames");
    if (!fs::is_directory(root)) throw IoError("frames directory " + root.string() + " does not exist");

    std::map<std::int64_t, fs::path> dirs;
    for (const auto& e : fs::directory_iterator(root)) {
        const std::string name = e.path().filename().string();
        if (e.is_directory() && name.rfind("particle_", 0) == 0) {
            dirs[io::parse_int(name.substr(9), e.path().string())] = e.path();
        }
    }
    if (dirs.empty()) throw IoError(root.string() + ": no particle_<id> frame directories");

    std::vector<std::pair<std::int64_t, fs::path>> work(dirs.begin(), dirs.end());
    std::vector<ParticleRecord> out(work.size());
    parallel_for(work.size(), cfg.threads, [&](std::size_t i) {
        const fs::path& dir = work[i].second;
        std::map<std::int64_t, fs::path> frame_files;
        for (const auto& e : fs::directory_iterator(dir)) {
            const std::string name = e.path().filename().string();
            if (e.is_regular_file() && name.rfind("frame_", 0) == 0 && e.path().extension() == ".rytv") {
                frame_files[io::parse_int(e.path().stem().string().substr(6), e.path().string())] = e.path();
            }
        }
        std::vector<RytovImage> frames;
        std::int64_t expect = 0;
        for (const auto& [k, p] : frame_files) {
            if (k != expect++) throw IoError(dir.string() + ": frame numbering must be consecutive from 0");
            frames.push_back(io::read_rytov(p));
        }
        std::vector<Offset2> offsets(frames.size());
        if (fs::exists(dir / "offsets.csv")) {
            offsets = io::read_offsets(dir / "offsets.csv");
            if (offsets.size() != frames.size()) {
                throw IoError(dir.string() + ": offsets.csv has " + std::to_string(offsets.size()) + " rows for " +
                              std::to_string(frames.size()) + " frames");
            }
        }
        NoiseEstimate est = estimate_noise(frames, offsets);
        out[i].id = work[i].first;
        out[i].rytov = std::move(est.average);
    });

    io::ArtifactStage stage(cfg.output_dir);
    write_manifest(stage, Command::noise_estimate, cfg, nullptr);
    const fs::path images = stage.path("images");
    fs::create_directories(images);
    std::string noise = "particle_id,epsilon_m2,snr\n";
    for (const auto& r : out) {
        io::write_rytov(images / io::image_file_name(r.id), r.rytov);
        noise += noise_csv_row(r);
    }
    io::write_file_atomic(stage.path("noise.csv"), noise);
    say(o, "estimated noise for " + std::to_string(out.size()) + " particle(s)");
    stage.commit();
}

}  // namespace

Command parse_command(const std::string& name) {
    if (name == "simulate") return Command::simulate;
    if (name == "analyze") return Command::analyze;
    if (name == "calibrate") return Command::calibrate;
    if (name == "refindex") return Command::refindex;
    if (name == "noise-estimate") return Command::noise_estimate;
    throw InvalidArgument("unknown command '" + name + "'");
}

const char* command_name(Command c) noexcept {
    switch (c) {
        case Command::simulate: return "simulate";
        case Command::analyze: return "analyze";
        case Command::calibrate: return "calibrate";
        case Command::refindex: return "refindex";
        case Command::noise_estimate: return "noise-estimate";
    }
    return "?";
}

RunConfig resolve_config(const CommandOptions& o) {
    RunConfig cfg = o.config ? load_config(*o.config) : default_config();
    if (o.seed) cfg.seed = *o.seed;
    if (o.out) cfg.output_dir = *o.out;
    if (o.n_w) cfg.analysis.n_w = *o.n_w;
    if (o.threads) cfg.threads = *o.threads;
    if (o.inputs.tracks) cfg.inputs.tracks = o.inputs.tracks;
    if (o.inputs.images) cfg.inputs.images = o.inputs.images;
    if (o.inputs.sizes) cfg.inputs.sizes = o.inputs.sizes;
    if (o.inputs.frames) cfg.inputs.frames = o.inputs.frames;
    cfg.validate();
    return cfg;
}

void run_command(Command command, const CommandOptions& options) {
    const RunConfig cfg = resolve_config(options);
    switch (command) {
        case Command::simulate: return simulate(cfg, options);
        case Command::analyze: return analyze(cfg, options);
        case Command::calibrate: return calibrate(cfg, options);
        case Command::refindex: return refindex(cfg, options);
        case Command::noise_estimate: return noise_estimate(cfg, options);
    }
}

}  // namespace wnta
