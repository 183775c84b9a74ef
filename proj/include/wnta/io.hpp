#pragma once

// File formats: tracks/truth/sizes CSVs and the binary RYTV field-image format,
// plus staged output directories so that artifacts appear only on success.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wnta/brownian.hpp"
#include "wnta/core.hpp"
#include "wnta/estimator.hpp"
#include "wnta/optics.hpp"

namespace wnta::io {

namespace fs = std::filesystem;

// Shortest decimal that parses back to the same double ("nan"/"inf" for non-finite).
std::string format_double(double v);
double parse_double(const std::string& text, const std::string& where);
std::int64_t parse_int(const std::string& text, const std::string& where);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;  // 1-based source line per row

    std::size_t column(const std::string& name, const std::string& file) const;
};

CsvTable read_csv(const fs::path& path);
void write_csv(const fs::path& path, const CsvTable& table);

// ---- tracks.csv: particle_id,frame,t_s,x_m,y_m,z_m ----
std::string tracks_csv(std::span<const Trajectory> trajectories);
void write_tracks(const fs::path& path, std::span<const Trajectory> trajectories);
// Trajectories sorted by particle id. Frames must be consecutive per particle and
// every particle must share one frame interval.
std::vector<Trajectory> read_tracks(const fs::path& path);

// ---- truth.csv: particle_id,population,diameter_m,material,n,k ----
void write_truth(const fs::path& path, std::span<const SizedParticle> truth);
std::vector<SizedParticle> read_truth(const fs::path& path);

// ---- RYTV binary field image ----
inline constexpr char kRytovMagic[4] = {'R', 'Y', 'T', 'V'};
inline constexpr std::uint32_t kRytovVersion = 1;

std::vector<unsigned char> encode_rytov(const RytovImage& image);
RytovImage decode_rytov(std::span<const unsigned char> bytes, const std::string& source = "<memory>");
void write_rytov(const fs::path& path, const RytovImage& image);
RytovImage read_rytov(const fs::path& path);

std::string image_file_name(std::int64_t id);
// particle id -> image, from files named particle_<id>.rytv
std::map<std::int64_t, RytovImage> read_image_dir(const fs::path& dir);

// ---- sizes.csv ----
struct SizeRow {
    std::int64_t particle_id = 0;
    SizeEstimate classic;
    SizeEstimate weighted;
};
void write_sizes(const fs::path& path, std::span<const SizeRow> rows);
std::vector<SizeRow> read_sizes(const fs::path& path);

// ---- offsets.csv: frame,dx_m,dy_m ----
void write_offsets(const fs::path& path, std::span<const Offset2> offsets);
std::vector<Offset2> read_offsets(const fs::path& path);

// Writes `data` to a temporary sibling and renames it over `path`.
void write_file_atomic(const fs::path& path, const std::string& data);

// Collects artifacts in a hidden staging directory inside `out_dir` and moves
// them into place on commit(), manifest first. Destruction without commit removes
// everything that was staged.
class ArtifactStage {
public:
    explicit ArtifactStage(const fs::path& out_dir);
    ~ArtifactStage();
    ArtifactStage(const ArtifactStage&) = delete;
    ArtifactStage& operator=(const ArtifactStage&) = delete;

    // Path inside the staging directory for a top-level artifact (file or directory).
    fs::path path(const std::string& name);
    const fs::path& out_dir() const { return out_dir_; }
    void commit();

private:
    fs::path out_dir_;
    fs::path stage_dir_;
    std::vector<std::string> names_;
    bool committed_ = false;
};

}  // namespace wnta::io
