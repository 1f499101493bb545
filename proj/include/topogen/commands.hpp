#pragma once

#include "topogen/diffusion.hpp"
#include "topogen/geometry.hpp"
#include "topogen/model.hpp"
#include "topogen/pimage.hpp"
#include "topogen/vae.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

// Command implementations behind the topogen executable. Each takes a plain
// argument struct so tests can drive them without a command line.
namespace topogen::cli {

namespace fs = std::filesystem;

inline constexpr const char* kManifestHeader = "id,path,n_points,hash";

struct ManifestRow {
    std::string id;
    std::string path; // relative to the manifest directory
    std::size_t n_points = 0;
    std::string hash;
};

std::vector<ManifestRow> read_manifest(const fs::path& manifest);
void write_manifest(const fs::path& manifest, const std::vector<ManifestRow>& rows);
/// Loads every cloud of a manifest and checks its content hash.
std::vector<PointCloud> load_manifest_clouds(const fs::path& manifest);
/// Every .xyz / .tpc file in `dir`, sorted by file name; ids are file stems.
std::vector<PointCloud> load_cloud_dir(const fs::path& dir);

void write_norm_stats(const fs::path& path, const NormStats& stats);
NormStats read_norm_stats(const fs::path& path);

struct SyntheticArgs {
    fs::path out_dir;
    std::size_t count = 40;
    std::size_t points = 2048;
    double noise = 0.01;
    bool two_hole = true;
    std::uint64_t seed = 0;
};
void cmd_gen_synthetic(const SyntheticArgs& a, std::ostream& log);

struct PreprocessArgs {
    fs::path in_dir;
    fs::path out_dir; // receives manifest.csv, norm.txt, clouds/
    std::size_t points = 2048;
    std::uint64_t seed = 0;
};
void cmd_preprocess(const PreprocessArgs& a, std::ostream& log);

struct ExtractArgs {
    fs::path manifest;
    fs::path out_dir;
    std::size_t n_pd = 64;
    int max_dim = 3;
    std::size_t simplex_cap = kDefaultSimplexCap;
    std::size_t threads = 1;
    std::uint64_t seed = 0;
};
/// Writes <id>_pd<k>.csv for k < max_dim and summary.csv with per-dimension b_max.
void cmd_extract(const ExtractArgs& a, std::ostream& log);

struct RasterizeArgs {
    fs::path pd_dir;
    fs::path out_dir;
    int n = kDefaultImageSide;
    double sigma = kDefaultSigma;
};
/// Writes <id>_pi1.tpi, <id>_pi2.tpi and spec.txt holding both dataset grids.
void cmd_rasterize(const RasterizeArgs& a, std::ostream& log);

struct PiEntry {
    std::string id;
    PersistenceImage pi1, pi2;
};
/// Every <id>_pi1.tpi with a matching <id>_pi2.tpi, sorted by id.
std::vector<PiEntry> load_pi_dir(const fs::path& dir);

struct TrainVaeArgs {
    fs::path pi_dir;
    fs::path out; // checkpoint; the config goes to <out>.cfg
    std::size_t epochs = 100;
    std::size_t steps = 0; // overrides epochs when nonzero
    std::size_t batch = 64;
    double lr = 5e-3;
    std::size_t latent = 32;
    double kl_weight = 1.0;
    std::uint64_t seed = 0;
    std::optional<fs::path> log_csv;
};
void cmd_train_vae(const TrainVaeArgs& a, std::ostream& log);

struct TrainArgs {
    fs::path manifest;
    fs::path pi_dir;
    fs::path out;
    std::optional<fs::path> config;
    std::optional<std::string> size;
    std::optional<int> voxel, patch;
    std::optional<std::size_t> queries;
    bool no_topology = false;
    std::size_t epochs = 10;
    std::size_t steps = 0;
    std::size_t batch = 8;
    double lr = 1e-4;
    std::size_t points = 2048;
    std::uint64_t seed = 0;
    std::optional<fs::path> log_csv;
};
/// Model config after applying the config file and flag overrides.
ModelConfig resolve_model_config(const TrainArgs& a);
void cmd_train(const TrainArgs& a, std::ostream& log);

struct SampleArgs {
    fs::path model;
    fs::path out_dir;
    std::optional<fs::path> vae;
    std::optional<fs::path> pi_dir;
    bool zero_pi = false;
    std::size_t count = 8;
    std::size_t points = 2048;
    int steps = 0;
    std::string sigma_mode = "beta";
    double clip = kDefaultClipX0; // <= 0 disables
    std::uint64_t seed = 0;
};
/// Writes sample_000.xyz, sample_001.xyz, ...
void cmd_sample(const SampleArgs& a, std::ostream& log);

struct EvalArgs {
    fs::path gen;
    fs::path ref; // manifest.csv or a directory of clouds
    fs::path out;
    std::size_t points = 1024;
    std::vector<std::string> distances{"CD", "EMD"};
    std::size_t threads = 1;
    std::uint64_t seed = 0;
};
struct MetricRow {
    std::string metric, distance;
    double value = 0.0;
};
std::vector<MetricRow> cmd_eval(const EvalArgs& a, std::ostream& log);

/// SVG scatter of a diagram CSV; essential classes are triangles on the top edge.
std::string render_diagram_svg(const DiagramFile& file);
/// Binary PGM, brightest pixel at 255, highest persistence band on top.
std::string render_image_pgm(const PersistenceImage& image);

struct ShowArgs {
    fs::path in;
    fs::path out;
};
void cmd_show(const ShowArgs& a, std::ostream& log);

/// Runs `body` and maps exceptions to exit codes: InputError 2,
/// ResourceError 3, InvariantError 4, anything else 1.
int run_guarded(const std::function<void()>& body, std::ostream& err);

} // namespace topogen::cli
