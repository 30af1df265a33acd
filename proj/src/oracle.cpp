#include "pvgen/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <thread>

#include "pvgen/common.hpp"

namespace pvgen {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_normal_density(double x, double mean, double var) {
  if (var == 0.0) return std::abs(x - mean) <= 1e-9 * (1.0 + std::abs(mean)) ? 0.0 : kNegInf;
  const double d = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + d * d / var);
}

}  // namespace

double TinyPvModel::configuration_count() const {
  return std::pow(static_cast<double>(classes), static_cast<double>(hr_count()));
}

void TinyPvModel::validate() const {
  if (classes < 1) throw std::invalid_argument("oracle model needs at least one class");
  if (ratio < 1) throw std::invalid_argument("oracle model ratio M must be >= 1");
  if (atlas.empty()) throw std::invalid_argument("oracle model needs at least one HR voxel");
  if (static_cast<int>(means.size()) != classes || static_cast<int>(variances.size()) != classes)
    throw std::invalid_argument("oracle model needs one mean and variance per class");
  for (int k = 0; k < classes; ++k)
    if (!std::isfinite(means[k]) || !std::isfinite(variances[k]) || variances[k] < 0.0)
      throw std::invalid_argument("oracle means must be finite and variances non-negative");
  for (const auto& row : atlas) {
    if (static_cast<int>(row.size()) != classes) throw std::invalid_argument("atlas rows need K entries");
    double sum = 0.0;
    for (double p : row) {
      if (!(p >= 0.0)) throw std::invalid_argument("atlas probabilities must be non-negative");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("atlas rows must sum to 1");
  }
  std::vector<char> used(atlas.size(), 0);
  for (const auto& taps : blur_weights) {
    if (taps.empty()) throw std::invalid_argument("every LR voxel needs at least one blur tap");
    double sum = 0.0;
    for (const BlurTap& t : taps) {
      if (t.hr_index < 0 || t.hr_index >= hr_count()) throw std::invalid_argument("blur tap index out of range");
      if (!(t.weight >= 0.0)) throw std::invalid_argument("blur weights must be non-negative");
      if (used[static_cast<std::size_t>(t.hr_index)]++)
        throw std::invalid_argument("blur supports must be disjoint across LR voxels");
      sum += t.weight;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("blur weights of each LR voxel must sum to 1");
  }
}

nlohmann::json TinyPvModel::to_json() const {
  nlohmann::json j;
  j["classes"] = classes;
  j["ratio"] = ratio;
  j["atlas"] = atlas;
  j["means"] = means;
  j["variances"] = variances;
  nlohmann::json w = nlohmann::json::array();
  for (const auto& taps : blur_weights) {
    nlohmann::json lr = nlohmann::json::array();
    for (const BlurTap& t : taps) lr.push_back({t.hr_index, t.weight});
    w.push_back(lr);
  }
  j["blur_weights"] = w;
  return j;
}

TinyPvModel TinyPvModel::from_json(const nlohmann::json& j) {
  TinyPvModel m;
  try {
    m.classes = j.at("classes").get<int>();
    m.ratio = j.value("ratio", 1);
    m.atlas = j.at("atlas").get<std::vector<std::vector<double>>>();
    m.means = j.at("means").get<std::vector<double>>();
    m.variances = j.at("variances").get<std::vector<double>>();
    for (const auto& lr : j.at("blur_weights")) {
      std::vector<BlurTap> taps;
      for (const auto& t : lr) taps.push_back({t.at(0).get<int>(), t.at(1).get<double>()});
      m.blur_weights.push_back(std::move(taps));
    }
    m.validate();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed oracle model: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return m;
}

std::vector<std::vector<BlurTap>> partition_blur_weights(int hr_count, int ratio, double sigma) {
  if (hr_count < 1 || ratio < 1) throw std::invalid_argument("partition_blur_weights: bad sizes");
  if (!(sigma >= 0.0)) throw std::invalid_argument("partition_blur_weights: sigma must be >= 0");
  std::vector<std::vector<BlurTap>> out;
  for (int start = 0; start < hr_count; start += ratio) {
    std::vector<BlurTap> taps;
    double sum = 0.0;
    for (int i = start; i < std::min(start + ratio, hr_count); ++i) {
      const double d = i - start;
      const double w = sigma > 0.0 ? std::exp(-0.5 * d * d / (sigma * sigma)) : (d == 0.0 ? 1.0 : 0.0);
      taps.push_back({i, w});
      sum += w;
    }
    for (BlurTap& t : taps) t.weight /= sum;
    out.push_back(std::move(taps));
  }
  return out;
}

double lr_likelihood(const TinyPvModel& model, std::span<const int> labels, std::span<const double> lr_obs) {
  if (static_cast<int>(labels.size()) != model.hr_count())
    throw std::invalid_argument("lr_likelihood: labels length must equal J");
  if (static_cast<int>(lr_obs.size()) != model.lr_count())
    throw std::invalid_argument("lr_likelihood: observation length must equal J'");
  double total = 0.0;
  for (std::size_t lr = 0; lr < model.blur_weights.size(); ++lr) {
    double mean = 0.0, var = 0.0;
    for (const BlurTap& t : model.blur_weights[lr]) {
      const int k = labels[static_cast<std::size_t>(t.hr_index)];
      mean += t.weight * model.means[static_cast<std::size_t>(k)];
      var += t.weight * t.weight * model.variances[static_cast<std::size_t>(k)];
    }
    total += log_normal_density(lr_obs[lr], mean, var);
  }
  return total;
}

std::uint64_t configuration_index(std::span<const int> labels, int classes) {
  std::uint64_t idx = 0;
  for (int l : labels) idx = idx * static_cast<std::uint64_t>(classes) + static_cast<std::uint64_t>(l);
  return idx;
}

std::vector<int> configuration_labels(std::uint64_t index, int hr_count, int classes) {
  std::vector<int> labels(static_cast<std::size_t>(hr_count));
  for (int j = hr_count - 1; j >= 0; --j) {
    labels[static_cast<std::size_t>(j)] = static_cast<int>(index % static_cast<std::uint64_t>(classes));
    index /= static_cast<std::uint64_t>(classes);
  }
  return labels;
}

CostEstimate cost_estimate(int classes, int ratio) {
  if (classes < 2) throw std::invalid_argument("cost_estimate: K must be >= 2");
  if (ratio < 1 || ratio > 62) throw std::invalid_argument("cost_estimate: M must be in [1, 62]");
  const std::uint64_t pairs = static_cast<std::uint64_t>(classes) * static_cast<std::uint64_t>(classes - 1);
  return {pairs << (ratio - 1), pairs * static_cast<std::uint64_t>(1 + ratio) / 2};
}

OracleCapExceeded::OracleCapExceeded(double configurations, CostEstimate cost)
    : std::runtime_error("exact enumeration needs " + std::to_string(configurations) +
                         " configurations (cap " + std::to_string(static_cast<long long>(kEnumerationCap)) +
                         "); simplified PV marginalisation would still need " +
                         std::to_string(cost.prior_evaluations) + " prior and " +
                         std::to_string(cost.likelihood_evaluations) + " likelihood evaluations"),
      configurations_(configurations),
      cost_(cost) {}

PvPosterior exact_posterior(const TinyPvModel& model, std::span<const double> lr_obs, int workers) {
  model.validate();
  const double count_d = model.configuration_count();
  if (count_d > kEnumerationCap) {
    CostEstimate cost{};
    if (model.classes >= 2) cost = cost_estimate(model.classes, std::min(model.ratio, 62));
    throw OracleCapExceeded(count_d, cost);
  }
  if (static_cast<int>(lr_obs.size()) != model.lr_count())
    throw std::invalid_argument("exact_posterior: observation length must equal J'");

  const int J = model.hr_count();
  const int K = model.classes;
  const std::uint64_t count = static_cast<std::uint64_t>(count_d);

  std::vector<std::vector<double>> log_atlas(static_cast<std::size_t>(J));
  for (int j = 0; j < J; ++j)
    for (double p : model.atlas[static_cast<std::size_t>(j)]) log_atlas[static_cast<std::size_t>(j)].push_back(std::log(p));

  // Log joint per configuration; workers fill disjoint index ranges.
  std::vector<double> log_joint(count);
  auto fill = [&](std::uint64_t begin, std::uint64_t end) {
    if (begin >= end) return;
    std::vector<int> labels = configuration_labels(begin, J, K);
    for (std::uint64_t idx = begin; idx < end; ++idx) {
      double lp = 0.0;
      for (int j = 0; j < J; ++j) lp += log_atlas[static_cast<std::size_t>(j)][static_cast<std::size_t>(labels[static_cast<std::size_t>(j)])];
      if (lp != kNegInf) lp += lr_likelihood(model, labels, lr_obs);
      log_joint[idx] = lp;
      for (int j = J - 1; j >= 0; --j) {  // odometer increment
        if (++labels[static_cast<std::size_t>(j)] < K) break;
        labels[static_cast<std::size_t>(j)] = 0;
      }
    }
  };
  workers = std::max(1, std::min<int>(workers, static_cast<int>(std::min<std::uint64_t>(count, 64))));
  if (workers == 1) {
    fill(0, count);
  } else {
    std::vector<std::jthread> pool;
    const std::uint64_t chunk = (count + static_cast<std::uint64_t>(workers) - 1) / static_cast<std::uint64_t>(workers);
    for (int w = 0; w < workers; ++w) {
      const std::uint64_t b = static_cast<std::uint64_t>(w) * chunk;
      pool.emplace_back(fill, b, std::min(count, b + chunk));
    }
  }

  // Sequential reduction keeps the result independent of the worker count.
  std::uint64_t map_index = 0;
  double max_lp = kNegInf;
  for (std::uint64_t idx = 0; idx < count; ++idx)
    if (log_joint[idx] > max_lp) max_lp = log_joint[idx], map_index = idx;
  if (max_lp == kNegInf) throw std::domain_error("observation has zero probability under every configuration");

  double sum = 0.0;
  for (double lp : log_joint) sum += std::exp(lp - max_lp);

  PvPosterior post;
  post.log_evidence = max_lp + std::log(sum);
  post.probability.resize(count);
  post.marginals.assign(static_cast<std::size_t>(J) * static_cast<std::size_t>(K), 0.0);
  std::vector<int> labels(static_cast<std::size_t>(J), 0);
  for (std::uint64_t idx = 0; idx < count; ++idx) {
    const double p = std::exp(log_joint[idx] - post.log_evidence);
    post.probability[idx] = p;
    for (int j = 0; j < J; ++j)
      post.marginals[static_cast<std::size_t>(j) * static_cast<std::size_t>(K) + static_cast<std::size_t>(labels[static_cast<std::size_t>(j)])] += p;
    for (int j = J - 1; j >= 0; --j) {
      if (++labels[static_cast<std::size_t>(j)] < K) break;
      labels[static_cast<std::size_t>(j)] = 0;
    }
  }
  post.map_labels = configuration_labels(map_index, J, K);
  return post;
}

ConsistencyStats generator_consistency_score(const TinyPvModel& model, int n_samples, RandomStream& rng) {
  model.validate();
  const int J = model.hr_count();
  const int K = model.classes;
  ConsistencyStats stats;
  if (n_samples <= 0) return stats;

  std::size_t correct_marginal = 0, correct_map = 0;
  double true_mass = 0.0;
  std::vector<int> truth(static_cast<std::size_t>(J));
  std::vector<double> hr(static_cast<std::size_t>(J));
  std::vector<double> obs(static_cast<std::size_t>(model.lr_count()));
  for (int s = 0; s < n_samples; ++s) {
    for (int j = 0; j < J; ++j) {
      const auto& row = model.atlas[static_cast<std::size_t>(j)];
      const double u = rng.uniform();
      double acc = 0.0;
      int k = K - 1;
      for (int c = 0; c < K; ++c) {
        acc += row[static_cast<std::size_t>(c)];
        if (u < acc) {
          k = c;
          break;
        }
      }
      truth[static_cast<std::size_t>(j)] = k;
      hr[static_cast<std::size_t>(j)] = model.means[static_cast<std::size_t>(k)] +
                                        std::sqrt(model.variances[static_cast<std::size_t>(k)]) * rng.normal();
    }
    for (std::size_t lr = 0; lr < obs.size(); ++lr) {
      double v = 0.0;
      for (const BlurTap& t : model.blur_weights[lr]) v += t.weight * hr[static_cast<std::size_t>(t.hr_index)];
      obs[lr] = v;
    }
    const PvPosterior post = exact_posterior(model, obs);
    true_mass += post.probability[configuration_index(truth, K)];
    for (int j = 0; j < J; ++j) {
      int best = 0;
      for (int k = 1; k < K; ++k)
        if (post.marginal(j, k, K) > post.marginal(j, best, K)) best = k;
      correct_marginal += best == truth[static_cast<std::size_t>(j)];
      correct_map += post.map_labels[static_cast<std::size_t>(j)] == truth[static_cast<std::size_t>(j)];
    }
  }
  const double voxels = static_cast<double>(n_samples) * J;
  stats.samples = n_samples;
  stats.mean_true_posterior = true_mass / n_samples;
  stats.marginal_accuracy = static_cast<double>(correct_marginal) / voxels;
  stats.map_accuracy = static_cast<double>(correct_map) / voxels;
  return stats;
}

}  // namespace pvgen
