#include "wnta/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "wnta/io.hpp"

namespace wnta {

using json = nlohmann::ordered_json;

namespace {

std::string kind(const json& v) {
    return v.type_name();
}

// Reads the members of one JSON object and rejects any it was not asked for.
class ObjectReader {
public:
    ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) throw ConfigError(where() + ": expected an object, found " + kind(obj_));
    }

    std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json* find(const std::string& key) {
        seen_.insert(key);
        auto it = obj_.find(key);
        if (it == obj_.end() || it->is_null()) return nullptr;
        return &*it;
    }

    double number(const std::string& key, double fallback) {
        const json* v = find(key);
        if (!v) return fallback;
        if (!v->is_number()) throw ConfigError(child(key) + ": expected a number, found " + kind(*v));
        const double d = v->get<double>();
        if (!std::isfinite(d)) throw ConfigError(child(key) + ": must be finite");
        return d;
    }

    std::optional<double> optional_number(const std::string& key) {
        const json* v = find(key);
        if (!v) return std::nullopt;
        if (!v->is_number()) throw ConfigError(child(key) + ": expected a number or null, found " + kind(*v));
        return v->get<double>();
    }

    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
        const json* v = find(key);
        if (!v) return fallback;
        if (!v->is_number_unsigned()) {
            throw ConfigError(child(key) + ": expected a non-negative integer, found " + v->dump());
        }
        return v->get<std::uint64_t>();
    }

    bool boolean(const std::string& key, bool fallback) {
        const json* v = find(key);
        if (!v) return fallback;
        if (!v->is_boolean()) throw ConfigError(child(key) + ": expected true or false, found " + kind(*v));
        return v->get<bool>();
    }

    std::optional<std::string> optional_string(const std::string& key) {
        const json* v = find(key);
        if (!v) return std::nullopt;
        if (!v->is_string()) throw ConfigError(child(key) + ": expected a string, found " + kind(*v));
        return v->get<std::string>();
    }

    void finish() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError(child(it.key()) + ": unknown key");
        }
    }

    std::string where() const { return path_.empty() ? "<root>" : path_; }

private:
    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

MaterialSpec parse_material(const json& v, const std::string& path) {
    if (v.is_string()) {
        try {
            return material_preset(v.get<std::string>());
        } catch (const Error& e) {
            throw ConfigError(path + ": " + e.what());
        }
    }
    ObjectReader r(v, path);
    MaterialSpec m;
    auto name = r.optional_string("name");
    m.name = name ? *name : "custom";
    m.n = r.number("n", m.n);
    m.k = r.number("k", 0.0);
    r.finish();
    return m;
}

json material_json(const MaterialSpec& m) {
    return json{{"name", m.name}, {"n", m.n}, {"k", m.k}};
}

std::optional<fs::path> resolve_path(std::optional<std::string> text, const fs::path& base) {
    if (!text) return std::nullopt;
    fs::path p(*text);
    if (p.is_relative() && !base.empty()) p = base / p;
    return p.lexically_normal();
}

json path_json(const std::optional<fs::path>& p) {
    return p ? json(p->string()) : json(nullptr);
}

template <class Fn>
void wrap(const std::string& path, Fn&& fn) {
    try {
        fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

}  // namespace

MaterialSpec material_preset(const std::string& name) {
    if (name == "PS") return MaterialSpec{"PS", 1.59, 0.0};
    if (name == "Au") return MaterialSpec{"Au", 0.54, 2.14};
    throw ConfigError("unknown material preset '" + name + "' (known: PS, Au)");
}

RunConfig default_config() {
    RunConfig c;
    c.imaging.snr_reference.push_back(SnrReference{100e-9, material_preset("PS")});
    c.populations.push_back(Population{200, 100e-9, 15e-9, material_preset("PS")});
    return c;
}

void RunConfig::validate() const {
    wrap("physical", [&] { physical.validate(); });
    wrap("trajectory", [&] { trajectory.validate(); });
    if (imaging.width < 8 || imaging.height < 8) throw ConfigError("imaging: width and height must be >= 8");
    if (!(imaging.pixel_size > 0.0)) throw ConfigError("imaging.pixel_size_m: must be > 0");
    if (!(imaging.psf_sigma > 0.0)) throw ConfigError("imaging.psf_sigma_m: must be > 0");
    if (imaging.photon_noise_sigma && !(*imaging.photon_noise_sigma >= 0.0)) {
        throw ConfigError("imaging.photon_noise_sigma: must be >= 0");
    }
    if (imaging.roi_tile_pixels < 1) throw ConfigError("imaging.roi_tile_px: must be >= 1");
    if (imaging.amplitude_scale && !(*imaging.amplitude_scale >= 0.0)) {
        throw ConfigError("imaging.amplitude_scale: must be >= 0");
    }
    if (!imaging.photon_noise_sigma) {
        if (!(imaging.target_snr > 0.0)) throw ConfigError("imaging.target_snr: must be > 0");
        if (imaging.snr_reference.empty()) throw ConfigError("imaging.snr_reference: needs at least one particle");
        if (imaging.amplitude_scale && !(*imaging.amplitude_scale > 0.0)) {
            throw ConfigError("imaging: a target SNR needs amplitude_scale > 0 (or set photon_noise_sigma)");
        }
    }
    for (std::size_t i = 0; i < imaging.snr_reference.size(); ++i) {
        const auto p = "imaging.snr_reference[" + std::to_string(i) + "]";
        if (!(imaging.snr_reference[i].diameter > 0.0)) throw ConfigError(p + ".diameter_m: must be > 0");
        wrap(p + ".material", [&] { imaging.snr_reference[i].material.validate(); });
    }
    for (std::size_t i = 0; i < populations.size(); ++i) {
        const auto p = "ensemble.populations[" + std::to_string(i) + "]";
        const auto& pop = populations[i];
        if (pop.count < 1) throw ConfigError(p + ".count: must be >= 1");
        if (!(pop.mean_diameter > 0.0)) throw ConfigError(p + ".mean_diameter_m: must be > 0");
        if (!(pop.sd_diameter >= 0.0)) throw ConfigError(p + ".sd_diameter_m: must be >= 0");
        wrap(p + ".material", [&] { pop.material.validate(); });
    }
    if (analysis.n_fit_lags < 2) throw ConfigError("analysis.n_fit_lags: must be >= 2");
    if (analysis.n_fit_lags >= trajectory.n_steps) {
        throw ConfigError("analysis.n_fit_lags: must be smaller than trajectory.n_steps");
    }
    if (!(analysis.histogram_bin_width > 0.0)) throw ConfigError("analysis.histogram_bin_width_m: must be > 0");
    if (!(calibration.grid_step > 0.0)) throw ConfigError("calibration.grid_step: must be > 0");
    if (!(calibration.grid_start >= 0.0) || calibration.grid_stop < calibration.grid_start) {
        throw ConfigError("calibration: need 0 <= grid_start <= grid_stop");
    }
    if (calibration.repetitions < 1) throw ConfigError("calibration.repetitions: must be >= 1");
    for (double s : calibration.snr_values) {
        if (!(s > 0.0)) throw ConfigError("calibration.snr_values: every SNR must be > 0");
    }
}

RunConfig parse_config(const std::string& text, const fs::path& base_dir) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        // e.what() carries "at line L, column C".
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }

    RunConfig c = default_config();
    c.base_dir = base_dir;
    ObjectReader r(root, "");
    c.seed = r.unsigned_integer("seed", c.seed);
    c.threads = static_cast<unsigned>(r.unsigned_integer("threads", c.threads));
    if (auto out = r.optional_string("output_dir")) c.output_dir = *resolve_path(out, base_dir);

    if (const json* v = r.find("physical")) {
        ObjectReader s(*v, "physical");
        c.physical.temperature = s.number("temperature_K", c.physical.temperature);
        c.physical.viscosity = s.number("viscosity_Pa_s", c.physical.viscosity);
        c.physical.wavelength = s.number("wavelength_m", c.physical.wavelength);
        c.physical.n_medium = s.number("n_medium", c.physical.n_medium);
        s.finish();
    }
    if (const json* v = r.find("trajectory")) {
        ObjectReader s(*v, "trajectory");
        c.trajectory.dt = s.number("dt_s", c.trajectory.dt);
        c.trajectory.n_steps = s.unsigned_integer("n_steps", c.trajectory.n_steps);
        c.trajectory.dimensionality = static_cast<int>(s.unsigned_integer("dimensionality", 3));
        c.trajectory.sigma_lateral = s.number("localization_sigma_lateral_m", c.trajectory.sigma_lateral);
        c.trajectory.sigma_axial = s.number("localization_sigma_axial_m", c.trajectory.sigma_axial);
        s.finish();
    }
    if (const json* v = r.find("imaging")) {
        ObjectReader s(*v, "imaging");
        auto& im = c.imaging;
        im.width = s.unsigned_integer("width_px", im.width);
        im.height = s.unsigned_integer("height_px", im.height);
        im.pixel_size = s.number("pixel_size_m", im.pixel_size);
        im.psf_sigma = s.number("psf_sigma_m", im.psf_sigma);
        im.photon_noise_sigma = s.optional_number("photon_noise_sigma");
        im.target_snr = s.number("target_snr", im.target_snr);
        im.amplitude_scale = s.optional_number("amplitude_scale");
        im.roi_tile_pixels = s.unsigned_integer("roi_tile_px", im.roi_tile_pixels);
        im.write_frames = s.boolean("write_frames", im.write_frames);
        if (const json* refs = s.find("snr_reference")) {
            if (!refs->is_array()) throw ConfigError("imaging.snr_reference: expected an array");
            im.snr_reference.clear();
            for (std::size_t i = 0; i < refs->size(); ++i) {
                const auto p = "imaging.snr_reference[" + std::to_string(i) + "]";
                ObjectReader e((*refs)[i], p);
                SnrReference ref;
                ref.diameter = e.number("diameter_m", ref.diameter);
                const json* m = e.find("material");
                ref.material = m ? parse_material(*m, p + ".material") : material_preset("PS");
                e.finish();
                im.snr_reference.push_back(ref);
            }
        }
        s.finish();
    }
    if (const json* v = r.find("ensemble")) {
        ObjectReader s(*v, "ensemble");
        if (const json* pops = s.find("populations")) {
            if (!pops->is_array()) throw ConfigError("ensemble.populations: expected an array");
            c.populations.clear();
            for (std::size_t i = 0; i < pops->size(); ++i) {
                const auto p = "ensemble.populations[" + std::to_string(i) + "]";
                ObjectReader e((*pops)[i], p);
                Population pop;
                pop.count = e.unsigned_integer("count", 0);
                pop.mean_diameter = e.number("mean_diameter_m", 0.0);
                pop.sd_diameter = e.number("sd_diameter_m", 0.0);
                const json* m = e.find("material");
                pop.material = m ? parse_material(*m, p + ".material") : material_preset("PS");
                e.finish();
                c.populations.push_back(pop);
            }
        }
        s.finish();
    }
    if (const json* v = r.find("analysis")) {
        ObjectReader s(*v, "analysis");
        c.analysis.n_fit_lags = s.unsigned_integer("n_fit_lags", c.analysis.n_fit_lags);
        if (const json* nw = s.find("n_w")) {
            try {
                if (nw->is_string()) {
                    if (nw->get<std::string>() != "inf") throw InvalidArgument("only the string \"inf\" is allowed");
                    c.analysis.n_w = WeightExponent::infinite();
                } else if (nw->is_number()) {
                    c.analysis.n_w = WeightExponent(nw->get<double>());
                } else {
                    throw InvalidArgument("expected a number or \"inf\"");
                }
            } catch (const Error& e) {
                throw ConfigError(std::string("analysis.n_w: ") + e.what());
            }
        }
        c.analysis.histogram_bin_width = s.number("histogram_bin_width_m", c.analysis.histogram_bin_width);
        s.finish();
    }
    if (const json* v = r.find("calibration")) {
        ObjectReader s(*v, "calibration");
        auto& cal = c.calibration;
        cal.grid_start = s.number("grid_start", cal.grid_start);
        cal.grid_stop = s.number("grid_stop", cal.grid_stop);
        cal.grid_step = s.number("grid_step", cal.grid_step);
        cal.include_infinity = s.boolean("include_infinity", cal.include_infinity);
        cal.repetitions = s.unsigned_integer("repetitions", cal.repetitions);
        if (const json* snr = s.find("snr_values")) {
            if (!snr->is_array()) throw ConfigError("calibration.snr_values: expected an array of numbers");
            cal.snr_values.clear();
            for (const auto& x : *snr) {
                if (!x.is_number()) throw ConfigError("calibration.snr_values: expected an array of numbers");
                cal.snr_values.push_back(x.get<double>());
            }
        }
        s.finish();
    }
    if (const json* v = r.find("inputs")) {
        ObjectReader s(*v, "inputs");
        c.inputs.tracks = resolve_path(s.optional_string("tracks"), base_dir);
        c.inputs.images = resolve_path(s.optional_string("images"), base_dir);
        c.inputs.sizes = resolve_path(s.optional_string("sizes"), base_dir);
        c.inputs.frames = resolve_path(s.optional_string("frames"), base_dir);
        s.finish();
    }
    if (const json* v = r.find("refindex")) {
        ObjectReader s(*v, "refindex");
        if (auto col = s.optional_string("sizes")) {
            if (*col == "classic") {
                c.refindex_sizes = SizeColumn::classic;
            } else if (*col == "weighted") {
                c.refindex_sizes = SizeColumn::weighted;
            } else {
                throw ConfigError("refindex.sizes: expected \"classic\" or \"weighted\"");
            }
        }
        s.finish();
    }
    r.finish();
    c.validate();
    return c;
}

RunConfig load_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str(), fs::absolute(path).parent_path());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string config_to_json(const RunConfig& c) {
    json refs = json::array();
    for (const auto& r : c.imaging.snr_reference) {
        refs.push_back(json{{"diameter_m", r.diameter}, {"material", material_json(r.material)}});
    }
    json pops = json::array();
    for (const auto& p : c.populations) {
        pops.push_back(json{{"count", p.count},
                            {"mean_diameter_m", p.mean_diameter},
                            {"sd_diameter_m", p.sd_diameter},
                            {"material", material_json(p.material)}});
    }
    json nw = c.analysis.n_w.is_infinite() ? json("inf") : json(c.analysis.n_w.value());
    json root = {
        {"seed", c.seed},
        {"threads", c.threads},
        {"output_dir", c.output_dir.string()},
        {"physical",
         {{"temperature_K", c.physical.temperature},
          {"viscosity_Pa_s", c.physical.viscosity},
          {"wavelength_m", c.physical.wavelength},
          {"n_medium", c.physical.n_medium}}},
        {"trajectory",
         {{"dt_s", c.trajectory.dt},
          {"n_steps", c.trajectory.n_steps},
          {"dimensionality", c.trajectory.dimensionality},
          {"localization_sigma_lateral_m", c.trajectory.sigma_lateral},
          {"localization_sigma_axial_m", c.trajectory.sigma_axial}}},
        {"imaging",
         {{"width_px", c.imaging.width},
          {"height_px", c.imaging.height},
          {"pixel_size_m", c.imaging.pixel_size},
          {"psf_sigma_m", c.imaging.psf_sigma},
          {"photon_noise_sigma", c.imaging.photon_noise_sigma ? json(*c.imaging.photon_noise_sigma) : json(nullptr)},
          {"target_snr", c.imaging.target_snr},
          {"snr_reference", refs},
          {"amplitude_scale", c.imaging.amplitude_scale ? json(*c.imaging.amplitude_scale) : json(nullptr)},
          {"roi_tile_px", c.imaging.roi_tile_pixels},
          {"write_frames", c.imaging.write_frames}}},
        {"ensemble", {{"populations", pops}}},
        {"analysis",
         {{"n_fit_lags", c.analysis.n_fit_lags},
          {"n_w", nw},
          {"histogram_bin_width_m", c.analysis.histogram_bin_width}}},
        {"calibration",
         {{"grid_start", c.calibration.grid_start},
          {"grid_stop", c.calibration.grid_stop},
          {"grid_step", c.calibration.grid_step},
          {"include_infinity", c.calibration.include_infinity},
          {"repetitions", c.calibration.repetitions},
          {"snr_values", c.calibration.snr_values}}},
        {"inputs",
         {{"tracks", path_json(c.inputs.tracks)},
          {"images", path_json(c.inputs.images)},
          {"sizes", path_json(c.inputs.sizes)},
          {"frames", path_json(c.inputs.frames)}}},
        {"refindex", {{"sizes", c.refindex_sizes == SizeColumn::classic ? "classic" : "weighted"}}},
    };
    return root.dump(2);
}

double resolve_amplitude_scale(const RunConfig& c) {
    if (c.imaging.amplitude_scale) return *c.imaging.amplitude_scale;
    return physical_amplitude_scale(c.imaging.psf_sigma, c.physical);
}

double resolve_noise_sigma(const RunConfig& c, std::optional<double> target_snr) {
    if (c.imaging.photon_noise_sigma && !target_snr) return *c.imaging.photon_noise_sigma;
    return noise_sigma_for_snr(c.imaging.snr_reference, target_snr.value_or(c.imaging.target_snr),
                               resolve_amplitude_scale(c), c.trajectory.n_steps, c.physical);
}

SimulationSpec simulation_spec(const RunConfig& c, std::optional<double> target_snr) {
    SimulationSpec s;
    s.ctx = c.physical;
    s.tracking = c.trajectory;
    s.imaging.width = c.imaging.width;
    s.imaging.height = c.imaging.height;
    s.imaging.pixel_size = c.imaging.pixel_size;
    s.imaging.psf_sigma = c.imaging.psf_sigma;
    s.imaging.photon_noise_sigma = resolve_noise_sigma(c, target_snr);
    s.imaging.amplitude_scale = resolve_amplitude_scale(c);
    s.roi_tile_pixels = c.imaging.roi_tile_pixels;
    return s;
}

EnsembleSpec ensemble_spec(const RunConfig& c) {
    EnsembleSpec e;
    e.populations = c.populations;
    e.n_steps = c.trajectory.n_steps;
    e.dt = c.trajectory.dt;
    return e;
}

}  // namespace wnta
