#include "pvgen/pipeline.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include <unistd.h>

namespace pvgen {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json interval_json(const Interval& i) { return json::array({i.lo, i.hi}); }

Interval interval_from(const json& j, const char* name) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(std::string(name) + " must be a [low, high] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

Vec3 vec3_from(const json& j, const char* name) {
  if (j.is_number()) {
    const double v = j.get<double>();
    return {v, v, v};
  }
  if (!j.is_array() || j.size() != 3) throw ConfigError(std::string(name) + " must be a number or a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json affine_json(const AffineParams& p) {
  return {{"rotation_deg", p.rotation_deg},
          {"scaling", p.scaling},
          {"shearing", p.shearing},
          {"translation", p.translation}};
}

json read_json_file(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path.string());
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw IoError("cannot write " + tmp.string());
    f << text;
    if (!f) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

struct HyperDraw {
  double sigma_v;
  double sigma_b;
};

HyperDraw draw_hyper(const GenerationContext& ctx, std::uint64_t index) {
  RandomStream rng = stage_stream(ctx.seed, index, Stage::Hyper);
  const double sigma_v = rng.uniform(ctx.config.ranges.sigma_v.lo, ctx.config.ranges.sigma_v.hi);
  const double sigma_b = rng.uniform(ctx.config.ranges.sigma_b.lo, ctx.config.ranges.sigma_b.hi);
  return {sigma_v, sigma_b};
}

LabelVolume merge_labels(LabelVolume labels, const std::map<std::int32_t, std::int32_t>& merge) {
  if (merge.empty()) return labels;
  std::vector<std::int32_t> data(labels.data().begin(), labels.data().end());
  for (auto& l : data)
    if (auto it = merge.find(l); it != merge.end()) l = it->second;
  return LabelVolume(labels.grid(), std::move(data));
}

void write_pair(const fs::path& dir, const GeneratedPair& pair, VolumeFormat format, std::vector<fs::path>& written,
                std::mutex& written_mu) {
  const fs::path image = dir / image_filename(pair.record.index, format);
  const fs::path labels = dir / labels_filename(pair.record.index, format);
  {
    std::lock_guard lock(written_mu);
    written.push_back(image);
    written.push_back(labels);
    if (format == VolumeFormat::Raw) {
      written.push_back(image.string() + ".json");
      written.push_back(labels.string() + ".json");
    }
  }
  if (format == VolumeFormat::Nifti) {
    write_nifti(image, pair.image);
    write_nifti(labels, pair.labels);
  } else {
    write_raw(image, pair.image);
    write_raw(labels, pair.labels);
  }
}

// Generates and writes the given indices with a pool of workers. Records land
// at the position of their index, so the output never depends on scheduling.
std::vector<SampleRecord> produce(const GenerationContext& ctx, const std::vector<std::uint64_t>& indices,
                                  int workers, const fs::path& dir, StageTimes* times,
                                  std::vector<fs::path>& written) {
  std::vector<SampleRecord> records(indices.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<StageTimes> local(static_cast<std::size_t>(std::max(1, workers)));

  auto work = [&](std::size_t w) {
    try {
      for (std::size_t i = next++; i < indices.size() && !failed; i = next++) {
        GeneratedPair pair = generate_pair(ctx, indices[i], &local[w]);
        {
          ScopedStage io(&local[w].io);
          write_pair(dir, pair, ctx.config.format, written, mu);
        }
        records[i] = std::move(pair.record);
      }
    } catch (...) {
      std::lock_guard lock(mu);
      if (!error) error = std::current_exception();
      failed = true;
    }
  };

  const int n_threads = std::clamp<int>(workers, 1, static_cast<int>(std::max<std::size_t>(indices.size(), 1)));
  if (n_threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < n_threads; ++w) pool.emplace_back(work, static_cast<std::size_t>(w));
  }
  if (times)
    for (const auto& t : local) *times += t;
  if (error) std::rethrow_exception(error);
  return records;
}

void remove_files(const std::vector<fs::path>& files) {
  std::error_code ec;
  for (const auto& f : files)
    if (fs::is_regular_file(f, ec)) fs::remove(f, ec);
}

}  // namespace

void ParameterRanges::validate() const {
  try {
    affine.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!sigma_v.valid() || sigma_v.lo < 0.0) throw ConfigError("sigma_v range must be a valid interval within [0, inf)");
  if (!sigma_b.valid() || sigma_b.lo < 0.0) throw ConfigError("sigma_b range must be a valid interval within [0, inf)");
  if (!alpha.valid() || alpha.lo <= 0.0) throw ConfigError("alpha range must be a valid interval within (0, inf)");
}

json ParameterRanges::to_json() const {
  return {{"rotation_deg", interval_json(affine.rotation_deg)},
          {"scaling", interval_json(affine.scaling)},
          {"shearing", interval_json(affine.shearing)},
          {"translation", interval_json(affine.translation)},
          {"sigma_v", interval_json(sigma_v)},
          {"sigma_b", interval_json(sigma_b)},
          {"alpha", interval_json(alpha)}};
}

ParameterRanges ParameterRanges::from_json(const json& j) {
  ParameterRanges r;
  if (!j.is_object()) throw ConfigError("ranges must be an object");
  static const std::set<std::string> known{"rotation_deg", "scaling", "shearing", "translation",
                                           "sigma_v",      "sigma_b", "alpha"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw ConfigError("unknown range '" + key + "'");
  if (j.contains("rotation_deg")) r.affine.rotation_deg = interval_from(j["rotation_deg"], "rotation_deg");
  if (j.contains("scaling")) r.affine.scaling = interval_from(j["scaling"], "scaling");
  if (j.contains("shearing")) r.affine.shearing = interval_from(j["shearing"], "shearing");
  if (j.contains("translation")) r.affine.translation = interval_from(j["translation"], "translation");
  if (j.contains("sigma_v")) r.sigma_v = interval_from(j["sigma_v"], "sigma_v");
  if (j.contains("sigma_b")) r.sigma_b = interval_from(j["sigma_b"], "sigma_b");
  if (j.contains("alpha")) r.alpha = interval_from(j["alpha"], "alpha");
  return r;
}

GenerationConfig GenerationConfig::from_json(const json& j, const fs::path& base_dir) {
  auto resolve = [&](const std::string& p) {
    const fs::path path(p);
    return (path.is_absolute() || base_dir.empty() ? path : base_dir / path).lexically_normal().string();
  };
  GenerationConfig c;
  try {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    static const std::set<std::string> known{"label_maps", "atlas_res_mm", "channels", "priors",   "ranges",
                                             "seed",       "n",            "start_index", "out_dir", "format",
                                             "label_merge", "svf_steps",   "normalize", "workers"};
    for (const auto& [key, value] : j.items())
      if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");

    for (const auto& p : j.at("label_maps")) c.label_maps.push_back(resolve(p.get<std::string>()));
    if (j.contains("atlas_res_mm")) c.atlas_res_mm = j["atlas_res_mm"].get<double>();
    for (const auto& ch : j.at("channels")) {
      ChannelConfig cc;
      cc.thickness_mm = vec3_from(ch.at("thickness_mm"), "thickness_mm");
      cc.spacing_mm = ch.contains("spacing_mm") ? vec3_from(ch["spacing_mm"], "spacing_mm") : cc.thickness_mm;
      if (ch.contains("alpha")) cc.alpha = interval_from(ch["alpha"], "alpha");
      c.channels.push_back(cc);
    }
    c.priors = resolve(j.at("priors").get<std::string>());
    if (j.contains("ranges")) c.ranges = ParameterRanges::from_json(j["ranges"]);
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    c.n = j.value("n", c.n);
    c.start_index = j.value("start_index", c.start_index);
    if (j.contains("out_dir")) c.out_dir = resolve(j["out_dir"].get<std::string>());
    if (j.contains("format")) {
      const std::string f = j["format"].get<std::string>();
      if (f == "nifti") c.format = VolumeFormat::Nifti;
      else if (f == "raw") c.format = VolumeFormat::Raw;
      else throw ConfigError("format must be \"nifti\" or \"raw\"");
    }
    if (j.contains("label_merge"))
      for (const auto& [from, to] : j["label_merge"].items()) c.label_merge[std::stoi(from)] = to.get<std::int32_t>();
    c.svf_steps = j.value("svf_steps", c.svf_steps);
    c.normalize = j.value("normalize", c.normalize);
    c.workers = j.value("workers", c.workers);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  } catch (const std::logic_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return c;
}

GenerationConfig GenerationConfig::load(const fs::path& path) {
  return from_json(read_json_file(path), path.parent_path());
}

json GenerationConfig::content_json() const {
  json ch = json::array();
  for (const auto& c : channels) {
    json e{{"thickness_mm", c.thickness_mm}, {"spacing_mm", c.spacing_mm}};
    if (c.alpha) e["alpha"] = interval_json(*c.alpha);
    ch.push_back(e);
  }
  json merge = json::object();
  for (const auto& [from, to] : label_merge) merge[std::to_string(from)] = to;
  json j{{"label_maps", label_maps},
         {"channels", ch},
         {"priors", priors},
         {"ranges", ranges.to_json()},
         {"format", format == VolumeFormat::Nifti ? "nifti" : "raw"},
         {"label_merge", merge},
         {"svf_steps", svf_steps},
         {"normalize", normalize}};
  if (atlas_res_mm) j["atlas_res_mm"] = *atlas_res_mm;
  if (seed) j["seed"] = *seed;
  return j;
}

void GenerationConfig::validate() const {
  if (label_maps.empty()) throw ConfigError("config needs at least one label map");
  if (channels.empty()) throw ConfigError("config needs at least one channel");
  if (atlas_res_mm && !(*atlas_res_mm > 0.0)) throw ConfigError("atlas_res_mm must be positive");
  if (n < 0) throw ConfigError("n must be >= 0");
  if (start_index < 0) throw ConfigError("start_index must be >= 0");
  if (svf_steps < 1 || svf_steps > 30) throw ConfigError("svf_steps must be in [1, 30]");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  ranges.validate();
  for (const auto& ch : channels) {
    for (int a = 0; a < 3; ++a)
      if (!(ch.thickness_mm[a] > 0.0) || !(ch.spacing_mm[a] > 0.0))
        throw ConfigError("slice thickness and spacing must be positive");
    if (ch.alpha && (!ch.alpha->valid() || ch.alpha->lo <= 0.0))
      throw ConfigError("channel alpha range must be a valid interval within (0, inf)");
  }
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> override_seed, std::optional<std::uint64_t> config_seed) {
  if (override_seed) return *override_seed;
  if (config_seed) return *config_seed;
  if (const char* env = std::getenv("PVGEN_SEED"); env && *env) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0') throw ConfigError(std::string("PVGEN_SEED is not an unsigned integer: ") + env);
    return v;
  }
  return 0;
}

RandomStream stage_stream(std::uint64_t seed, std::uint64_t sample_index, Stage stage) {
  return RandomStream(seed, sample_index, static_cast<std::uint32_t>(stage));
}

GenerationContext make_context(GenerationConfig config, std::vector<LabelVolume> maps, GmmPriors priors,
                               std::optional<std::uint64_t> seed_override) {
  config.validate();
  if (maps.empty()) throw ConfigError("no label maps");
  const Grid& grid = maps.front().grid();
  for (const auto& m : maps)
    if (!(m.grid() == grid)) throw ConfigError("all label maps must share one grid");
  const double s = grid.spacing[0];
  if (std::abs(grid.spacing[1] - s) > 1e-6 * s || std::abs(grid.spacing[2] - s) > 1e-6 * s)
    throw ConfigError("label maps must have isotropic spacing");
  if (config.atlas_res_mm && std::abs(*config.atlas_res_mm - s) > 1e-6 * s)
    throw ConfigError("atlas_res_mm " + std::to_string(*config.atlas_res_mm) +
                      " does not match the label-map spacing " + std::to_string(s));

  try {
    priors.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (priors.channels != static_cast<int>(config.channels.size()))
    throw ConfigError("priors have " + std::to_string(priors.channels) + " channels but the config lists " +
                      std::to_string(config.channels.size()));
  std::set<std::int32_t> missing;
  for (const auto& m : maps)
    for (std::int32_t l : m.label_set())
      if (!priors.find(l)) missing.insert(l);
  if (!missing.empty()) {
    std::string msg = "no GMM priors for label(s):";
    for (std::int32_t l : missing) msg += " " + std::to_string(l);
    throw ConfigError(msg);
  }

  AcquisitionSpec spec;
  spec.atlas_res_mm = config.atlas_res_mm.value_or(s);
  for (const auto& ch : config.channels)
    spec.channels.push_back({ch.thickness_mm, ch.spacing_mm, ch.alpha.value_or(config.ranges.alpha)});

  GenerationContext ctx;
  ctx.seed = resolve_seed(seed_override, config.seed);
  ctx.config = std::move(config);
  ctx.maps = std::move(maps);
  ctx.priors = std::move(priors);
  ctx.acquisition = std::move(spec);
  return ctx;
}

GenerationContext load_context(GenerationConfig config, std::optional<std::uint64_t> seed_override) {
  config.validate();
  GmmPriors priors = GmmPriors::from_json(read_json_file(config.priors));
  std::vector<LabelVolume> maps;
  for (const auto& p : config.label_maps) maps.push_back(read_labels(p));
  return make_context(std::move(config), std::move(maps), std::move(priors), seed_override);
}

json SampleRecord::to_json() const {
  return {{"index", index},         {"label_map", label_map}, {"sigma_v", sigma_v}, {"sigma_b", sigma_b},
          {"affine", affine_json(affine)}, {"alpha", alpha},  {"gmm_digest", gmm_digest}};
}

DeformationSample sample_deformation(const GenerationContext& ctx, std::uint64_t sample_index) {
  const Grid& grid = ctx.grid();
  const HyperDraw hyper = draw_hyper(ctx, sample_index);
  RandomStream svf_rng = stage_stream(ctx.seed, sample_index, Stage::Svf);
  const VelocityField v = sample_svf(svf_rng, hyper.sigma_v, grid);
  const DeformationField phi = hyper.sigma_v > 0.0 ? integrate_svf(v, ctx.config.svf_steps) : v.dense;
  RandomStream affine_rng = stage_stream(ctx.seed, sample_index, Stage::Affine);
  const AffineSample affine = sample_affine(affine_rng, ctx.config.ranges.affine, grid.center());
  return {compose_affine_with_field(affine.matrix, phi), affine, hyper.sigma_v};
}

GeneratedPair generate_pair(const GenerationContext& ctx, std::uint64_t sample_index, StageTimes* times) {
  SampleRecord record;
  record.index = sample_index;
  const HyperDraw hyper = draw_hyper(ctx, sample_index);
  record.sigma_v = hyper.sigma_v;
  record.sigma_b = hyper.sigma_b;

  LabelVolume labels;
  {
    ScopedStage stage(times ? &times->deform : nullptr);
    RandomStream map_rng = stage_stream(ctx.seed, sample_index, Stage::LabelMap);
    record.label_map = sample_label_map_index(map_rng, ctx.maps.size());
    const DeformationSample d = sample_deformation(ctx, sample_index);
    record.affine = d.affine.params;
    labels = warp_labels(ctx.maps[record.label_map], d.field);
  }

  IntensityVolume hr;
  {
    ScopedStage stage(times ? &times->synth : nullptr);
    RandomStream gmm_rng = stage_stream(ctx.seed, sample_index, Stage::Gmm);
    const GmmParams params = sample_gmm_params(gmm_rng, ctx.priors);
    record.gmm_digest = params.digest();
    RandomStream bias_rng = stage_stream(ctx.seed, sample_index, Stage::Bias);
    const BiasField bias = sample_bias_field(bias_rng, hyper.sigma_b, labels.grid(), ctx.priors.channels);
    RandomStream noise_rng = stage_stream(ctx.seed, sample_index, Stage::Noise);
    hr = synthesize_hr_image(labels, params, bias, noise_rng, SynthOptions{ctx.config.normalize});
  }

  RandomStream acq_rng = stage_stream(ctx.seed, sample_index, Stage::Acquisition);
  Acquisition acq = simulate_acquisition(hr, ctx.acquisition, acq_rng, times);
  record.alpha = std::move(acq.alpha);
  return {std::move(acq.image), merge_labels(std::move(labels), ctx.config.label_merge), std::move(record)};
}

std::string image_filename(std::uint64_t index, VolumeFormat format) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "image_%06llu", static_cast<unsigned long long>(index));
  return buf + volume_extension(format);
}

std::string labels_filename(std::uint64_t index, VolumeFormat format) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "labels_%06llu", static_cast<unsigned long long>(index));
  return buf + volume_extension(format);
}

json run_generate(const GenerationContext& ctx, StageTimes* times) {
  const fs::path dir(ctx.config.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
  if (::access(dir.c_str(), W_OK) != 0) throw IoError("output directory is not writable: " + dir.string());

  json config = ctx.config.content_json();
  config["seed"] = ctx.seed;

  const std::uint64_t begin = static_cast<std::uint64_t>(ctx.config.start_index);
  const std::uint64_t end = begin + static_cast<std::uint64_t>(ctx.config.n);
  std::map<std::uint64_t, json> entries;
  const fs::path manifest_path = dir / "manifest.json";
  if (fs::exists(manifest_path)) {
    const json old = read_json_file(manifest_path);
    if (old.value("config", json()) != config)
      throw ConfigError(manifest_path.string() + " was produced by a different config");
    for (const auto& e : old.at("samples")) {
      const auto idx = e.at("index").get<std::uint64_t>();
      if (idx < begin || idx >= end) entries[idx] = e;
    }
  }

  std::vector<std::uint64_t> indices;
  for (std::uint64_t i = begin; i < end; ++i) indices.push_back(i);
  std::vector<fs::path> written;
  try {
    for (const SampleRecord& r : produce(ctx, indices, ctx.config.workers, dir, times, written))
      entries[r.index] = r.to_json();
  } catch (...) {
    remove_files(written);
    throw;
  }

  json manifest{{"config", config}, {"samples", json::array()}};
  for (auto& [idx, e] : entries) manifest["samples"].push_back(std::move(e));
  ScopedStage io(times ? &times->io : nullptr);
  write_text_atomic(manifest_path, manifest.dump(2) + "\n");
  return manifest;
}

json BenchmarkReport::to_json() const {
  json runs_json = json::array();
  for (const auto& r : runs) {
    runs_json.push_back({{"workers", r.workers},
                         {"pairs", r.pairs},
                         {"wall_seconds", r.wall_seconds},
                         {"pairs_per_second", r.pairs_per_second},
                         {"stage_seconds",
                          {{"deform", r.stages.deform},
                           {"synth", r.stages.synth},
                           {"blur", r.stages.blur},
                           {"resample", r.stages.resample},
                           {"io", r.stages.io},
                           {"total", r.stages.total()}}}});
  }
  return {{"dims", dims}, {"channels", channels}, {"runs", runs_json}};
}

BenchmarkReport run_benchmark(const GenerationContext& ctx, int n, int workers) {
  BenchmarkReport report;
  report.dims = ctx.grid().dims;
  report.channels = ctx.priors.channels;
  if (n <= 0) return report;

  static std::atomic<int> counter{0};
  const fs::path scratch = fs::temp_directory_path() /
                           ("pvgen-bench-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::error_code ec;
  fs::create_directories(scratch, ec);
  if (ec) throw IoError("cannot create scratch directory " + scratch.string());

  std::vector<std::uint64_t> indices;
  for (int i = 0; i < n; ++i) indices.push_back(static_cast<std::uint64_t>(ctx.config.start_index + i));
  const int multi = workers > 0 ? workers : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  try {
    for (int w : {1, multi}) {
      if (w == 1 && !report.runs.empty()) break;
      BenchmarkRun run;
      run.workers = w;
      run.pairs = n;
      std::vector<fs::path> written;
      const auto t0 = std::chrono::steady_clock::now();
      produce(ctx, indices, w, scratch, &run.stages, written);
      run.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      run.pairs_per_second = n / run.wall_seconds;
      remove_files(written);
      report.runs.push_back(run);
    }
  } catch (...) {
    fs::remove_all(scratch, ec);
    throw;
  }
  fs::remove_all(scratch, ec);
  return report;
}

LabelVolume make_phantom(const Grid& grid, int classes, int variant) {
  if (classes < 2) throw std::invalid_argument("make_phantom: need at least two classes");
  const Vec3 mid = grid.center();
  Vec3 center{}, radius{};
  for (int a = 0; a < 3; ++a) {
    const double shift = 0.05 * (((variant + a) % 3) - 1);
    const double stretch = 0.9 - 0.05 * ((variant * 7 + a) % 3);
    center[a] = mid[a] * (1.0 + shift);
    radius[a] = mid[a] * stretch;
  }
  constexpr double kOuter = 0.95;
  std::vector<std::int32_t> data(grid.voxel_count());
  for (std::size_t j = 0; j < data.size(); ++j) {
    const Dims c = grid.coords(j);
    double rho2 = 0.0;
    for (int a = 0; a < 3; ++a)
      if (radius[a] > 0.0) rho2 += (c[a] - center[a]) * (c[a] - center[a]) / (radius[a] * radius[a]);
    const double rho = std::sqrt(rho2);
    if (rho > kOuter) continue;
    const int shell = static_cast<int>((kOuter - rho) / kOuter * (classes - 1));
    data[j] = 1 + std::min(shell, classes - 2);
  }
  std::vector<std::int32_t> set(static_cast<std::size_t>(classes));
  for (int k = 0; k < classes; ++k) set[static_cast<std::size_t>(k)] = k;
  return LabelVolume(grid, std::move(data), std::move(set));
}

GmmPriors estimate_priors(const std::vector<std::pair<IntensityVolume, LabelVolume>>& scans,
                          std::span<const std::int32_t> labels, double atlas_res_mm, const PriorFitOptions& options) {
  if (!(atlas_res_mm > 0.0)) throw std::invalid_argument("atlas resolution must be positive");
  const double hr_vol = atlas_res_mm * atlas_res_mm * atlas_res_mm;
  std::vector<ClassStats> stats;
  for (const auto& [image, seg] : scans)
    stats.push_back(rescale_variances(estimate_class_stats(image, seg, labels), hr_vol, image.grid().voxel_volume()));
  return fit_gaussian_priors(stats, options);
}

}  // namespace pvgen
