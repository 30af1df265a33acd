#include "pvgen/hyperparams.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <unordered_map>

namespace pvgen {

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty sample");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double median_absolute_deviation(std::span<const double> values, double center) {
  std::vector<double> dev;
  dev.reserve(values.size());
  for (double v : values) dev.push_back(std::abs(v - center));
  return median(std::move(dev));
}

ClassStats estimate_class_stats(const IntensityVolume& image, const LabelVolume& seg,
                                std::span<const std::int32_t> labels) {
  if (!(image.grid() == seg.grid())) throw std::invalid_argument("estimate_class_stats: grid mismatch");
  std::unordered_map<std::int32_t, std::size_t> position;
  for (std::size_t k = 0; k < labels.size(); ++k) position.emplace(labels[k], k);

  ClassStats out{std::vector<std::int32_t>(labels.begin(), labels.end()), image.channels(), {}};
  out.stats.resize(labels.size() * static_cast<std::size_t>(image.channels()));

  // Gather voxel indices per class once, then reuse for every channel.
  std::vector<std::vector<std::size_t>> members(labels.size());
  const auto data = seg.data();
  for (std::size_t j = 0; j < data.size(); ++j) {
    auto it = position.find(data[j]);
    if (it != position.end()) members[it->second].push_back(j);
  }

  std::vector<double> values;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (members[k].empty()) continue;
    for (int c = 0; c < image.channels(); ++c) {
      const auto ch = image.channel(c);
      values.clear();
      for (std::size_t j : members[k]) values.push_back(ch[j]);
      const double med = median(values);
      const double sigma = kMadToSigma * median_absolute_deviation(values, med);
      out.stats[k * static_cast<std::size_t>(image.channels()) + static_cast<std::size_t>(c)] =
          RobustStat{med, sigma * sigma};
    }
  }
  return out;
}

double rescale_variance(double var, double hr_voxel_vol_mm3, double lr_voxel_vol_mm3) {
  if (!(hr_voxel_vol_mm3 > 0.0) || !(lr_voxel_vol_mm3 > 0.0))
    throw std::invalid_argument("rescale_variance: voxel volumes must be positive");
  return var * (lr_voxel_vol_mm3 / hr_voxel_vol_mm3);
}

ClassStats rescale_variances(ClassStats stats, double hr_voxel_vol_mm3, double lr_voxel_vol_mm3) {
  for (auto& s : stats.stats)
    if (s) s->variance = rescale_variance(s->variance, hr_voxel_vol_mm3, lr_voxel_vol_mm3);
  return stats;
}

namespace {

// Sorting first makes the sums independent of scan order.
std::pair<double, double> mean_and_sd(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

}  // namespace

GmmPriors fit_gaussian_priors(std::span<const ClassStats> scans, const PriorFitOptions& options) {
  if (scans.empty()) throw std::invalid_argument("fit_gaussian_priors: no scans");
  if (!(options.inflation >= 0.0) || !(options.scale_floor >= 0.0))
    throw std::invalid_argument("fit_gaussian_priors: inflation and scale floor must be >= 0");
  const ClassStats& first = scans.front();
  for (const ClassStats& s : scans)
    if (s.labels != first.labels || s.channels != first.channels)
      throw std::invalid_argument("fit_gaussian_priors: scans disagree on labels or channels");

  GmmPriors priors{first.labels, first.channels, {}, {}};
  std::vector<std::int32_t> missing;
  for (std::size_t k = 0; k < first.labels.size(); ++k) {
    for (int c = 0; c < first.channels; ++c) {
      std::vector<double> means, logvars;
      for (const ClassStats& s : scans) {
        if (const auto& st = s.at(k, c)) {
          means.push_back(st->mean);
          logvars.push_back(std::log(std::max(st->variance, kVarianceFloor)));
        }
      }
      if (means.empty()) {
        if (c == 0) missing.push_back(first.labels[k]);
        priors.mean_prior.push_back({});
        priors.logvar_prior.push_back({});
        continue;
      }
      const auto [m_loc, m_sd] = mean_and_sd(std::move(means));
      const auto [v_loc, v_sd] = mean_and_sd(std::move(logvars));
      priors.mean_prior.push_back({m_loc, options.inflation * std::max(m_sd, options.scale_floor)});
      priors.logvar_prior.push_back({v_loc, options.inflation * std::max(v_sd, options.scale_floor)});
    }
  }
  if (!missing.empty()) {
    std::string msg = "fit_gaussian_priors: labels absent from every scan:";
    for (std::int32_t l : missing) msg += " " + std::to_string(l);
    throw std::invalid_argument(msg);
  }
  return priors;
}

}  // namespace pvgen
