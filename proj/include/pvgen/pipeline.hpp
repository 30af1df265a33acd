#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "pvgen/acquisition.hpp"
#include "pvgen/deform.hpp"
#include "pvgen/gmm.hpp"
#include "pvgen/hyperparams.hpp"
#include "pvgen/nifti.hpp"
#include "pvgen/timing.hpp"

namespace pvgen {

// Uniform ranges of the generative model parameters.
struct ParameterRanges {
  AffineRanges affine;
  Interval sigma_v{0.0, 4.0};
  Interval sigma_b{0.0, 0.5};
  Interval alpha{0.75, 1.25};

  void validate() const;
  nlohmann::json to_json() const;
  // Missing keys keep their defaults.
  static ParameterRanges from_json(const nlohmann::json& j);
};

struct ChannelConfig {
  Vec3 thickness_mm{1, 1, 1};
  Vec3 spacing_mm{1, 1, 1};
  std::optional<Interval> alpha;  // falls back to ParameterRanges::alpha
};

struct GenerationConfig {
  std::vector<std::string> label_maps;
  std::optional<double> atlas_res_mm;  // defaults to the label-map spacing
  std::vector<ChannelConfig> channels;
  std::string priors;
  ParameterRanges ranges;
  std::optional<std::uint64_t> seed;
  int n = 1;
  int start_index = 0;
  std::string out_dir = "out";
  VolumeFormat format = VolumeFormat::Nifti;
  std::map<std::int32_t, std::int32_t> label_merge;  // output label remapping
  int svf_steps = kDefaultSvfSteps;
  bool normalize = false;
  int workers = 1;

  // Relative paths in the document resolve against `base_dir`.
  static GenerationConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static GenerationConfig load(const std::filesystem::path& path);
  // Everything that determines the generated data; excludes out_dir and workers.
  nlohmann::json content_json() const;
  void validate() const;
};

// Seed precedence: explicit value, then the config, then PVGEN_SEED, then 0.
std::uint64_t resolve_seed(std::optional<std::uint64_t> override_seed, std::optional<std::uint64_t> config_seed);

// Independent RNG stream per sample and generation stage.
enum class Stage : std::uint32_t {
  Hyper = 1,
  LabelMap = 2,
  Svf = 3,
  Affine = 4,
  Gmm = 5,
  Bias = 6,
  Noise = 7,
  Acquisition = 8,
};

RandomStream stage_stream(std::uint64_t seed, std::uint64_t sample_index, Stage stage);

// Immutable inputs shared by all workers.
struct GenerationContext {
  GenerationConfig config;
  std::uint64_t seed = 0;
  std::vector<LabelVolume> maps;
  GmmPriors priors;
  AcquisitionSpec acquisition;

  const Grid& grid() const { return maps.front().grid(); }
};

// Checks grids, label coverage by the priors and channel counts; throws
// ConfigError before any volume work.
GenerationContext make_context(GenerationConfig config, std::vector<LabelVolume> maps, GmmPriors priors,
                               std::optional<std::uint64_t> seed_override = std::nullopt);
GenerationContext load_context(GenerationConfig config, std::optional<std::uint64_t> seed_override = std::nullopt);

struct SampleRecord {
  std::uint64_t index = 0;
  std::size_t label_map = 0;
  double sigma_v = 0.0;
  double sigma_b = 0.0;
  AffineParams affine;
  std::vector<double> alpha;
  std::string gmm_digest;

  nlohmann::json to_json() const;
};

struct GeneratedPair {
  IntensityVolume image;  // HR grid, LR appearance
  LabelVolume labels;     // HR warped labels after label_merge
  SampleRecord record;
};

struct DeformationSample {
  DeformationField field;
  AffineSample affine;
  double sigma_v = 0.0;
};

// Draws sigma_v and the affine, integrates the SVF and composes A o exp(v).
DeformationSample sample_deformation(const GenerationContext& ctx, std::uint64_t sample_index);

GeneratedPair generate_pair(const GenerationContext& ctx, std::uint64_t sample_index, StageTimes* times = nullptr);

std::string image_filename(std::uint64_t index, VolumeFormat format);
std::string labels_filename(std::uint64_t index, VolumeFormat format);

// Writes pairs [start_index, start_index + n) and manifest.json. Entries of an
// existing manifest from the same config are kept, so an interrupted run can
// resume from any index. Files written by a failing run are removed.
nlohmann::json run_generate(const GenerationContext& ctx, StageTimes* times = nullptr);

struct BenchmarkRun {
  int workers = 1;
  int pairs = 0;
  double wall_seconds = 0.0;
  double pairs_per_second = 0.0;
  StageTimes stages;  // summed over workers
};

struct BenchmarkReport {
  Dims dims{0, 0, 0};
  int channels = 0;
  std::vector<BenchmarkRun> runs;  // single-worker first

  nlohmann::json to_json() const;
};

// Generates n pairs with one worker and again with `workers` (or the hardware
// concurrency), writing into a scratch directory that is removed afterwards.
BenchmarkReport run_benchmark(const GenerationContext& ctx, int n, int workers = 0);

// Concentric-ellipsoid phantom with labels 0..classes-1 (0 outside). `variant`
// shifts and stretches the shells so several distinct maps can be made.
LabelVolume make_phantom(const Grid& grid, int classes = 4, int variant = 0);

// Robust statistics of every (image, segmentation) pair, variances rescaled
// by M = image voxel volume / atlas_res^3, then the prior fit.
GmmPriors estimate_priors(const std::vector<std::pair<IntensityVolume, LabelVolume>>& scans,
                          std::span<const std::int32_t> labels, double atlas_res_mm,
                          const PriorFitOptions& options = {});

}  // namespace pvgen
