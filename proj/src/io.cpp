#include "wnta/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace wnta::io {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& text, const std::string& where) {
    if (text == "nan" || text == "NaN") return std::numeric_limits<double>::quiet_NaN();
    if (text == "inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    auto res = std::from_chars(first, last, v);
    if (text.empty() || res.ec != std::errc{} || res.ptr != last) {
        throw IoError(where + ": cannot parse number '" + text + "'");
    }
    return v;
}

std::int64_t parse_int(const std::string& text, const std::string& where) {
    std::int64_t v = 0;
    const char* first = text.data();
    const char* last = first + text.size();
    auto res = std::from_chars(first, last, v);
    if (text.empty() || res.ec != std::errc{} || res.ptr != last) {
        throw IoError(where + ": cannot parse integer '" + text + "'");
    }
    return v;
}

std::size_t CsvTable::column(const std::string& name, const std::string& file) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw IoError(file + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            out.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    out.push_back(field);
    return out;
}

std::string read_all(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string join_row(const std::vector<std::string>& fields) {
    std::string s;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) s.push_back(',');
        s += fields[i];
    }
    s.push_back('\n');
    return s;
}

std::string where(const fs::path& p, std::size_t line) {
    return p.string() + ":" + std::to_string(line);
}

}  // namespace

CsvTable read_csv(const fs::path& path) {
    std::istringstream in(read_all(path));
    CsvTable t;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split(line);
        if (!have_header) {
            t.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != t.header.size()) {
            throw IoError(where(path, lineno) + ": expected " + std::to_string(t.header.size()) +
                          " fields, found " + std::to_string(fields.size()));
        }
        t.rows.push_back(std::move(fields));
        t.line_numbers.push_back(lineno);
    }
    if (!have_header) throw IoError(path.string() + ": file is empty (a header row is required)");
    return t;
}

void write_csv(const fs::path& path, const CsvTable& table) {
    std::string data = join_row(table.header);
    for (const auto& r : table.rows) data += join_row(r);
    write_file_atomic(path, data);
}

// ---------------------------------------------------------------- tracks

std::string tracks_csv(std::span<const Trajectory> trajectories) {
    std::string data = "particle_id,frame,t_s,x_m,y_m,z_m\n";
    for (const auto& t : trajectories) {
        const std::string id = std::to_string(t.particle_id);
        for (std::size_t f = 0; f < t.positions.size(); ++f) {
            const auto& p = t.positions[f];
            data += id;
            data += ',';
            data += std::to_string(f);
            data += ',';
            data += format_double(static_cast<double>(f) * t.dt);
            data += ',';
            data += format_double(p[0]);
            data += ',';
            data += format_double(p[1]);
            data += ',';
            if (t.dimensionality == 3) data += format_double(p[2]);
            data += '\n';
        }
    }
    return data;
}

void write_tracks(const fs::path& path, std::span<const Trajectory> trajectories) {
    write_file_atomic(path, tracks_csv(trajectories));
}

std::vector<Trajectory> read_tracks(const fs::path& path) {
    const CsvTable t = read_csv(path);
    const std::string file = path.string();
    const auto c_id = t.column("particle_id", file), c_fr = t.column("frame", file),
               c_t = t.column("t_s", file), c_x = t.column("x_m", file), c_y = t.column("y_m", file),
               c_z = t.column("z_m", file);
    if (t.rows.empty()) throw IoError(file + ": no track rows");

    struct Row {
        std::int64_t frame;
        double t;
        Vec3 r;
        bool has_z;
        std::size_t line;
    };
    std::map<std::int64_t, std::vector<Row>> by_id;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& f = t.rows[i];
        const std::string w = where(path, t.line_numbers[i]);
        Row row;
        row.line = t.line_numbers[i];
        row.frame = parse_int(f[c_fr], w);
        row.t = parse_double(f[c_t], w);
        row.has_z = !f[c_z].empty();
        row.r = {parse_double(f[c_x], w), parse_double(f[c_y], w), row.has_z ? parse_double(f[c_z], w) : 0.0};
        by_id[parse_int(f[c_id], w)].push_back(row);
    }

    std::vector<Trajectory> out;
    std::optional<double> common_dt;
    std::optional<bool> common_3d;
    for (auto& [id, rows] : by_id) {
        std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.frame < b.frame; });
        if (rows.size() < 2) {
            throw IoError(file + ": particle " + std::to_string(id) + " has fewer than 2 frames");
        }
        for (std::size_t k = 1; k < rows.size(); ++k) {
            if (rows[k].frame != rows[k - 1].frame + 1) {
                throw IoError(where(path, rows[k].line) + ": particle " + std::to_string(id) +
                              " skips from frame " + std::to_string(rows[k - 1].frame) + " to " +
                              std::to_string(rows[k].frame));
            }
        }
        const double dt = (rows.back().t - rows.front().t) /
                          static_cast<double>(rows.back().frame - rows.front().frame);
        if (!(dt > 0.0)) throw IoError(file + ": particle " + std::to_string(id) + " has non-increasing t_s");
        if (!common_dt) {
            common_dt = dt;
        } else if (std::abs(dt - *common_dt) > 1e-9 * *common_dt) {
            throw IoError(file + ": particle " + std::to_string(id) + " has frame interval " +
                          format_double(dt) + " s, others " + format_double(*common_dt) + " s");
        }
        Trajectory tr;
        tr.particle_id = id;
        tr.dt = *common_dt;
        const bool is3d = rows.front().has_z;
        if (!common_3d) common_3d = is3d;
        for (const auto& r : rows) {
            if (r.has_z != is3d || is3d != *common_3d) {
                throw IoError(where(path, r.line) + ": z_m must be present for all rows (3D) or none (2D)");
            }
            tr.positions.push_back(r.r);
        }
        tr.dimensionality = is3d ? 3 : 2;
        tr.validate();
        out.push_back(std::move(tr));
    }
    return out;
}

// ---------------------------------------------------------------- truth

void write_truth(const fs::path& path, std::span<const SizedParticle> truth) {
    std::string data = "particle_id,population,diameter_m,material,n,k\n";
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto& p = truth[i];
        data += join_row({std::to_string(i), std::to_string(p.population), format_double(p.diameter),
                          p.material.name, format_double(p.material.n), format_double(p.material.k)});
    }
    write_file_atomic(path, data);
}

std::vector<SizedParticle> read_truth(const fs::path& path) {
    const CsvTable t = read_csv(path);
    const std::string file = path.string();
    const auto c_id = t.column("particle_id", file), c_pop = t.column("population", file),
               c_d = t.column("diameter_m", file), c_m = t.column("material", file), c_n = t.column("n", file),
               c_k = t.column("k", file);
    std::vector<SizedParticle> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& f = t.rows[i];
        const std::string w = where(path, t.line_numbers[i]);
        if (parse_int(f[c_id], w) != static_cast<std::int64_t>(i)) {
            throw IoError(w + ": truth rows must be ordered by particle id starting at 0");
        }
        SizedParticle p;
        p.population = static_cast<std::size_t>(parse_int(f[c_pop], w));
        p.diameter = parse_double(f[c_d], w);
        p.material.name = f[c_m];
        p.material.n = parse_double(f[c_n], w);
        p.material.k = parse_double(f[c_k], w);
        out.push_back(p);
    }
    return out;
}

// ---------------------------------------------------------------- RYTV

namespace {

template <class T>
void put(std::vector<unsigned char>& out, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    out.insert(out.end(), b, b + sizeof(T));
}

template <class T>
T get(std::span<const unsigned char> in, std::size_t& pos) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, in.data() + pos, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    pos += sizeof(T);
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
}

constexpr std::size_t kHeaderBytes = 4 + 4 + 4 + 4 + 8 + 8;

}  // namespace

std::vector<unsigned char> encode_rytov(const RytovImage& image) {
    if (image.values.size() != image.width * image.height) {
        throw InvalidArgument("image value count does not match its dimensions");
    }
    std::vector<unsigned char> out;
    out.reserve(kHeaderBytes + image.values.size() * 16);
    out.insert(out.end(), kRytovMagic, kRytovMagic + 4);
    put<std::uint32_t>(out, kRytovVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(image.width));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(image.height));
    put<double>(out, image.pixel_size);
    put<double>(out, image.noise_variance ? *image.noise_variance : std::numeric_limits<double>::quiet_NaN());
    for (const auto& v : image.values) {
        put<double>(out, v.real());
        put<double>(out, v.imag());
    }
    return out;
}

RytovImage decode_rytov(std::span<const unsigned char> bytes, const std::string& source) {
    if (bytes.size() < kHeaderBytes) throw IoError(source + ": truncated RYTV header");
    if (std::memcmp(bytes.data(), kRytovMagic, 4) != 0) throw IoError(source + ": not a RYTV file (bad magic)");
    std::size_t pos = 4;
    const auto version = get<std::uint32_t>(bytes, pos);
    if (version != kRytovVersion) {
        throw IoError(source + ": unsupported RYTV version " + std::to_string(version));
    }
    const auto w = get<std::uint32_t>(bytes, pos);
    const auto h = get<std::uint32_t>(bytes, pos);
    const double px = get<double>(bytes, pos);
    const double eps = get<double>(bytes, pos);
    const std::size_t n = static_cast<std::size_t>(w) * h;
    if (bytes.size() != kHeaderBytes + n * 16) {
        throw IoError(source + ": payload size " + std::to_string(bytes.size() - kHeaderBytes) +
                      " bytes does not match " + std::to_string(w) + "x" + std::to_string(h));
    }
    RytovImage img(w, h, px);
    if (!std::isnan(eps)) img.noise_variance = eps;
    for (std::size_t i = 0; i < n; ++i) {
        const double re = get<double>(bytes, pos);
        const double im = get<double>(bytes, pos);
        img.values[i] = Complex(re, im);
    }
    return img;
}

void write_rytov(const fs::path& path, const RytovImage& image) {
    const auto bytes = encode_rytov(image);
    write_file_atomic(path, std::string(bytes.begin(), bytes.end()));
}

RytovImage read_rytov(const fs::path& path) {
    const std::string data = read_all(path);
    return decode_rytov(std::span(reinterpret_cast<const unsigned char*>(data.data()), data.size()),
                        path.string());
}

std::string image_file_name(std::int64_t id) { return "particle_" + std::to_string(id) + ".rytv"; }

std::map<std::int64_t, RytovImage> read_image_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("image directory " + dir.string() + " does not exist");
    std::map<std::int64_t, RytovImage> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (!entry.is_regular_file() || name.rfind("particle_", 0) != 0 || entry.path().extension() != ".rytv") {
            continue;
        }
        const std::string stem = entry.path().stem().string().substr(9);
        out.emplace(parse_int(stem, entry.path().string()), read_rytov(entry.path()));
    }
    return out;
}

// ---------------------------------------------------------------- sizes

void write_sizes(const fs::path& path, std::span<const SizeRow> rows) {
    std::string data =
        "particle_id,classic_diameter_m,classic_slope_m2_s,classic_intercept_m2,classic_valid,"
        "weighted_diameter_m,weighted_slope_m2_s,weighted_intercept_m2,weighted_valid,weighted_fallback,"
        "weighted_method,n_w\n";
    for (const auto& r : rows) {
        data += join_row({std::to_string(r.particle_id), format_double(r.classic.diameter),
                          format_double(r.classic.slope), format_double(r.classic.intercept),
                          r.classic.valid ? "1" : "0", format_double(r.weighted.diameter),
                          format_double(r.weighted.slope), format_double(r.weighted.intercept),
                          r.weighted.valid ? "1" : "0", r.weighted.fell_back ? "1" : "0",
                          to_string(r.weighted.method), r.weighted.n_w_used.to_string()});
    }
    write_file_atomic(path, data);
}

std::vector<SizeRow> read_sizes(const fs::path& path) {
    const CsvTable t = read_csv(path);
    const std::string file = path.string();
    const auto c_id = t.column("particle_id", file);
    const auto cd = t.column("classic_diameter_m", file), cs = t.column("classic_slope_m2_s", file),
               ci = t.column("classic_intercept_m2", file), cv = t.column("classic_valid", file);
    const auto wd = t.column("weighted_diameter_m", file), ws = t.column("weighted_slope_m2_s", file),
               wi = t.column("weighted_intercept_m2", file), wv = t.column("weighted_valid", file),
               wf = t.column("weighted_fallback", file), wm = t.column("weighted_method", file),
               wn = t.column("n_w", file);
    std::vector<SizeRow> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& f = t.rows[i];
        const std::string w = where(path, t.line_numbers[i]);
        SizeRow r;
        r.particle_id = parse_int(f[c_id], w);
        r.classic.particle_id = r.weighted.particle_id = r.particle_id;
        r.classic.diameter = parse_double(f[cd], w);
        r.classic.slope = parse_double(f[cs], w);
        r.classic.intercept = parse_double(f[ci], w);
        r.classic.valid = f[cv] == "1";
        r.classic.method = FitMethod::classic;
        r.classic.n_w_used = WeightExponent::infinite();
        r.weighted.diameter = parse_double(f[wd], w);
        r.weighted.slope = parse_double(f[ws], w);
        r.weighted.intercept = parse_double(f[wi], w);
        r.weighted.valid = f[wv] == "1";
        r.weighted.fell_back = f[wf] == "1";
        r.weighted.method = f[wm] == "arithmetic" ? FitMethod::arithmetic
                            : f[wm] == "classic"  ? FitMethod::classic
                                                  : FitMethod::weighted;
        r.weighted.n_w_used = WeightExponent::parse(f[wn]);
        out.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------- offsets

void write_offsets(const fs::path& path, std::span<const Offset2> offsets) {
    std::string data = "frame,dx_m,dy_m\n";
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        data += join_row({std::to_string(i), format_double(offsets[i].x), format_double(offsets[i].y)});
    }
    write_file_atomic(path, data);
}

std::vector<Offset2> read_offsets(const fs::path& path) {
    const CsvTable t = read_csv(path);
    const std::string file = path.string();
    const auto c_f = t.column("frame", file), c_x = t.column("dx_m", file), c_y = t.column("dy_m", file);
    std::vector<Offset2> out(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const std::string w = where(path, t.line_numbers[i]);
        const auto frame = parse_int(t.rows[i][c_f], w);
        if (frame < 0 || static_cast<std::size_t>(frame) >= out.size()) {
            throw IoError(w + ": frame index out of range");
        }
        out[static_cast<std::size_t>(frame)] = {parse_double(t.rows[i][c_x], w), parse_double(t.rows[i][c_y], w)};
    }
    return out;
}

// ---------------------------------------------------------------- atomic writes

void write_file_atomic(const fs::path& path, const std::string& data) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out.write(data.data(), static_cast<std::streamsize>(data.size()));
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
    }
}

ArtifactStage::ArtifactStage(const fs::path& out_dir) : out_dir_(out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir_, ec);
    if (ec || !fs::is_directory(out_dir_)) {
        throw IoError("cannot create output directory " + out_dir_.string() +
                      (ec ? ": " + ec.message() : std::string()));
    }
    std::random_device rd;
    for (int attempt = 0; attempt < 16; ++attempt) {
        fs::path candidate = out_dir_ / (".wnta-staging-" + std::to_string(rd()));
        if (fs::create_directory(candidate, ec)) {
            stage_dir_ = candidate;
            return;
        }
    }
    throw IoError("cannot create a staging directory in " + out_dir_.string() +
                  (ec ? ": " + ec.message() : std::string()));
}

ArtifactStage::~ArtifactStage() {
    std::error_code ec;
    if (!stage_dir_.empty()) fs::remove_all(stage_dir_, ec);
}

fs::path ArtifactStage::path(const std::string& name) {
    if (std::find(names_.begin(), names_.end(), name) == names_.end()) names_.push_back(name);
    return stage_dir_ / name;
}

void ArtifactStage::commit() {
    if (committed_) return;
    // manifest.json goes first so that no artifact is ever visible without it.
    std::stable_partition(names_.begin(), names_.end(), [](const std::string& n) { return n == "manifest.json"; });
    for (const auto& name : names_) {
        const fs::path from = stage_dir_ / name;
        if (!fs::exists(from)) continue;
        const fs::path to = out_dir_ / name;
        std::error_code ec;
        if (fs::is_directory(to)) fs::remove_all(to, ec);
        fs::rename(from, to, ec);
        if (ec) throw IoError("cannot move " + name + " into " + out_dir_.string() + ": " + ec.message());
    }
    committed_ = true;
}

}  // namespace wnta::io
