#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "pvgen/oracle.hpp"
#include "pvgen/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pvgen;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kIo = 3, kOracleCap = 4 };

json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path.string());
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << j.dump(2) << "\n";
  if (!f) throw IoError("failed writing " + path.string());
}

std::vector<std::int32_t> read_label_list(const fs::path& path) {
  const json j = read_json(path);
  try {
    return (j.is_object() ? j.at("labels") : j).get<std::vector<std::int32_t>>();
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": expected a list of label ids: " + e.what());
  }
}

// One "image seg" pair per line; '#' starts a comment. Paths are relative to the list.
std::vector<std::pair<fs::path, fs::path>> read_pair_list(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path.string());
  std::vector<std::pair<fs::path, fs::path>> pairs;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream in(line);
    std::string image, seg, extra;
    if (!(in >> image)) continue;
    if (!(in >> seg) || (in >> extra))
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected \"image seg\"");
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : path.parent_path() / p; };
    pairs.emplace_back(resolve(image), resolve(seg));
  }
  if (pairs.empty()) throw ConfigError(path.string() + ": no pairs listed");
  return pairs;
}

struct GenerateArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> n;
  std::optional<int> start_index;
  std::optional<int> workers;
  std::optional<std::string> out;
};

GenerationConfig load_with_overrides(const GenerateArgs& a) {
  GenerationConfig c = GenerationConfig::load(a.config);
  if (a.n) c.n = *a.n;
  if (a.start_index) c.start_index = *a.start_index;
  if (a.workers) c.workers = *a.workers;
  if (a.out) c.out_dir = *a.out;
  return c;
}

int cmd_generate(const GenerateArgs& a) {
  StageTimes times;
  const GenerationContext ctx = load_context(load_with_overrides(a), a.seed);
  const json manifest = run_generate(ctx, &times);
  std::cerr << "wrote " << ctx.config.n << " pair(s) to " << ctx.config.out_dir << " (manifest lists "
            << manifest["samples"].size() << ")\n";
  return kOk;
}

int cmd_benchmark(const GenerateArgs& a, int n) {
  const GenerationContext ctx = load_context(load_with_overrides(a), a.seed);
  std::cout << run_benchmark(ctx, n, a.workers.value_or(0)).to_json().dump(2) << "\n";
  return kOk;
}

int cmd_estimate(const std::string& pairs_path, const std::string& labels_path, const std::string& out,
                 double atlas_res, const PriorFitOptions& opts) {
  const auto labels = read_label_list(labels_path);
  std::vector<std::pair<IntensityVolume, LabelVolume>> scans;
  for (const auto& [image, seg] : read_pair_list(pairs_path)) scans.emplace_back(read_intensity(image), read_labels(seg));
  const GmmPriors priors = estimate_priors(scans, labels, atlas_res, opts);
  write_json(out, priors.to_json());
  std::cerr << "fitted priors for " << labels.size() << " label(s) from " << scans.size() << " scan(s)\n";
  return kOk;
}

int cmd_oracle(const std::string& model_path, const std::string& obs_path, int workers) {
  const TinyPvModel model = TinyPvModel::from_json(read_json(model_path));
  const json obs_json = read_json(obs_path);
  std::vector<double> obs;
  try {
    obs = (obs_json.is_object() ? obs_json.at("obs") : obs_json).get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ConfigError(obs_path + ": expected a list of LR intensities: " + e.what());
  }
  if (static_cast<int>(obs.size()) != model.lr_count())
    throw ConfigError("model has " + std::to_string(model.lr_count()) + " LR voxels but " +
                      std::to_string(obs.size()) + " observations were given");

  json cost = json::array();
  if (model.classes >= 2)
    for (int m = 1; m <= std::max(model.ratio, 5); ++m) {
      const CostEstimate c = cost_estimate(model.classes, m);
      cost.push_back({{"M", m}, {"prior_evaluations", c.prior_evaluations},
                      {"likelihood_evaluations", c.likelihood_evaluations}});
    }

  PvPosterior post;
  try {
    post = exact_posterior(model, obs, workers);
  } catch (const OracleCapExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    std::cout << json{{"configurations", e.configurations()}, {"cost", cost}}.dump(2) << "\n";
    return kOracleCap;
  }
  json marginals = json::array();
  for (int j = 0; j < model.hr_count(); ++j) {
    json row = json::array();
    for (int k = 0; k < model.classes; ++k) row.push_back(post.marginal(j, k, model.classes));
    marginals.push_back(row);
  }
  std::cout << json{{"configurations", model.configuration_count()},
                    {"log_evidence", post.log_evidence},
                    {"map_labels", post.map_labels},
                    {"marginals", marginals},
                    {"cost", cost}}
                   .dump(2)
            << "\n";
  return kOk;
}

// Writes phantom label maps, matching priors and a ready-to-run config.
int cmd_phantom(const std::string& out, int size, int maps, int classes, double spacing) {
  const fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string());
  const Grid grid({size, size, size}, {spacing, spacing, spacing});
  json config{{"channels", json::array({{{"thickness_mm", {spacing, spacing * 5, spacing}},
                                         {"spacing_mm", {spacing, spacing * 5, spacing}}}})},
              {"priors", "priors.json"},
              {"seed", 1},
              {"n", 4},
              {"out_dir", "pairs"}};
  for (int m = 0; m < maps; ++m) {
    char name[32];
    std::snprintf(name, sizeof name, "map_%02d.nii", m);
    write_nifti(dir / name, make_phantom(grid, classes, m));
    config["label_maps"].push_back(name);
  }
  GmmPriors priors{{}, 1, {}, {}};
  for (int k = 0; k < classes; ++k) {
    priors.labels.push_back(k);
    priors.mean_prior.push_back({k == 0 ? 0.0 : 40.0 + 60.0 * k, 10.0});
    priors.logvar_prior.push_back({std::log(25.0), 0.5});
  }
  write_json(dir / "priors.json", priors.to_json());
  write_json(dir / "config.json", config);
  std::cerr << "wrote " << maps << " phantom map(s), priors.json and config.json to " << dir.string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pvgen: partial-volume MRI synthetic training data"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Generate (image, labels) training pairs");
  generate->add_option("--config", gen.config, "Generation config JSON")->required();
  generate->add_option("--seed", gen.seed, "Global seed (falls back to the config, then PVGEN_SEED)");
  generate->add_option("--n", gen.n, "Number of pairs")->check(CLI::NonNegativeNumber);
  generate->add_option("--start-index", gen.start_index, "First sample index")->check(CLI::NonNegativeNumber);
  generate->add_option("--workers", gen.workers, "Worker threads")->check(CLI::PositiveNumber);
  generate->add_option("--out", gen.out, "Output directory");

  std::string pairs, labels, priors_out;
  double atlas_res = 1.0;
  PriorFitOptions fit;
  auto* estimate = app.add_subcommand("estimate-hyperparams", "Fit GMM priors from segmented scans");
  estimate->add_option("--pairs", pairs, "Text file with one \"image seg\" pair per line")->required();
  estimate->add_option("--labels", labels, "JSON list of label ids")->required();
  estimate->add_option("--out", priors_out, "Output priors JSON")->required();
  estimate->add_option("--atlas-res", atlas_res, "HR voxel size in mm used for variance rescaling")
      ->check(CLI::PositiveNumber);
  estimate->add_option("--inflation", fit.inflation, "Factor applied to the fitted scales")
      ->check(CLI::NonNegativeNumber);
  estimate->add_option("--scale-floor", fit.scale_floor, "Minimum scale before inflation")
      ->check(CLI::NonNegativeNumber);

  std::string model, obs;
  int oracle_workers = 1;
  auto* oracle = app.add_subcommand("oracle", "Exact PV posterior of a tiny model");
  oracle->add_option("--model", model, "TinyPvModel JSON")->required();
  oracle->add_option("--obs", obs, "JSON list of LR intensities")->required();
  oracle->add_option("--workers", oracle_workers, "Enumeration threads")->check(CLI::PositiveNumber);

  GenerateArgs bench;
  int bench_n = 4;
  auto* benchmark = app.add_subcommand("benchmark", "Per-stage timing, single- and multi-worker");
  benchmark->add_option("--config", bench.config, "Generation config JSON")->required();
  benchmark->add_option("--n", bench_n, "Pairs per run")->check(CLI::NonNegativeNumber);
  benchmark->add_option("--workers", bench.workers, "Workers for the multi-worker run")->check(CLI::PositiveNumber);
  benchmark->add_option("--seed", bench.seed, "Global seed");

  std::string phantom_out;
  int size = 64, maps = 2, classes = 4;
  double spacing = 1.0;
  auto* phantom = app.add_subcommand("phantom", "Write phantom label maps, priors and a config");
  phantom->add_option("--out", phantom_out, "Output directory")->required();
  phantom->add_option("--size", size, "Voxels per axis")->check(CLI::Range(2, 512));
  phantom->add_option("--maps", maps, "Number of label maps")->check(CLI::Range(1, 100));
  phantom->add_option("--classes", classes, "Labels per map, background included")->check(CLI::Range(2, 255));
  phantom->add_option("--spacing", spacing, "Isotropic voxel size in mm")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*generate) return cmd_generate(gen);
    if (*estimate) return cmd_estimate(pairs, labels, priors_out, atlas_res, fit);
    if (*oracle) return cmd_oracle(model, obs, oracle_workers);
    if (*benchmark) return cmd_benchmark(bench, bench_n);
    if (*phantom) return cmd_phantom(phantom_out, size, maps, classes, spacing);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const OracleCapExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOracleCap;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
