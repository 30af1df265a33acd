#include "pvgen/gmm.hpp"

#include <cstring>
#include <cstdio>
#include <limits>

namespace pvgen {

namespace {

template <typename Labels>
std::optional<std::size_t> position_of(const Labels& labels, std::int32_t label) {
  for (std::size_t k = 0; k < labels.size(); ++k)
    if (labels[k] == label) return k;
  return std::nullopt;
}

void check_unique(const std::vector<std::int32_t>& labels, const char* what) {
  for (std::size_t a = 0; a < labels.size(); ++a)
    for (std::size_t b = a + 1; b < labels.size(); ++b)
      if (labels[a] == labels[b])
        throw std::invalid_argument(std::string(what) + ": duplicate label " + std::to_string(labels[a]));
}

// Dense label -> parameter position table over [min, max].
class LabelLookup {
 public:
  LabelLookup(const GmmParams& params, std::span<const std::int32_t> needed) {
    if (needed.empty()) return;
    lo_ = needed.front();
    const std::int32_t hi = needed.back();
    table_.assign(static_cast<std::size_t>(static_cast<std::int64_t>(hi) - lo_ + 1), -1);
    for (std::int32_t label : needed) {
      auto pos = params.find(label);
      if (!pos) throw std::invalid_argument("no GMM parameters for label " + std::to_string(label));
      table_[static_cast<std::size_t>(label - lo_)] = static_cast<int>(*pos);
    }
  }
  std::size_t operator()(std::int32_t label) const {
    return static_cast<std::size_t>(table_[static_cast<std::size_t>(label - lo_)]);
  }

 private:
  std::int32_t lo_ = 0;
  std::vector<int> table_;
};

}  // namespace

std::optional<std::size_t> GmmPriors::find(std::int32_t label) const { return position_of(labels, label); }

void GmmPriors::validate() const {
  if (channels < 1) throw std::invalid_argument("GMM priors need at least one channel");
  check_unique(labels, "GMM priors");
  const std::size_t n = labels.size() * static_cast<std::size_t>(channels);
  if (mean_prior.size() != n || logvar_prior.size() != n)
    throw std::invalid_argument("GMM priors need one mean and one log-variance prior per (label, channel)");
  for (const auto* v : {&mean_prior, &logvar_prior})
    for (const NormalPrior& p : *v)
      if (!std::isfinite(p.location) || !std::isfinite(p.scale) || p.scale < 0.0)
        throw std::invalid_argument("GMM prior locations must be finite and scales non-negative");
}

nlohmann::json GmmPriors::to_json() const {
  nlohmann::json j;
  j["labels"] = labels;
  j["channels"] = channels;
  auto pairs = [](const std::vector<NormalPrior>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& p : v) a.push_back({p.location, p.scale});
    return a;
  };
  j["mean_prior"] = pairs(mean_prior);
  j["logvar_prior"] = pairs(logvar_prior);
  return j;
}

GmmPriors GmmPriors::from_json(const nlohmann::json& j) {
  GmmPriors p;
  try {
    p.labels = j.at("labels").get<std::vector<std::int32_t>>();
    p.channels = j.at("channels").get<int>();
    auto pairs = [](const nlohmann::json& a) {
      std::vector<NormalPrior> v;
      for (const auto& e : a) {
        if (!e.is_array() || e.size() != 2) throw ConfigError("GMM prior entries must be [location, scale] pairs");
        v.push_back({e[0].get<double>(), e[1].get<double>()});
      }
      return v;
    };
    p.mean_prior = pairs(j.at("mean_prior"));
    p.logvar_prior = pairs(j.at("logvar_prior"));
    p.validate();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed GMM priors: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return p;
}

std::optional<std::size_t> GmmParams::find(std::int32_t label) const { return position_of(labels, label); }

void GmmParams::validate() const {
  if (channels < 1) throw std::invalid_argument("GMM parameters need at least one channel");
  check_unique(labels, "GMM parameters");
  const std::size_t n = labels.size() * static_cast<std::size_t>(channels);
  if (mean.size() != n || variance.size() != n)
    throw std::invalid_argument("GMM parameters need one mean and variance per (label, channel)");
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(mean[i]) || !std::isfinite(variance[i]) || variance[i] < 0.0)
      throw std::invalid_argument("GMM means must be finite and variances non-negative");
}

std::string GmmParams::digest() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto feed = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ull;
    }
  };
  for (std::int32_t l : labels) feed(&l, sizeof l);
  for (double m : mean) feed(&m, sizeof m);
  for (double v : variance) feed(&v, sizeof v);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

GmmParams sample_gmm_params(RandomStream& rng, const GmmPriors& priors) {
  priors.validate();
  GmmParams out{priors.labels, priors.channels, {}, {}};
  out.mean.reserve(priors.mean_prior.size());
  out.variance.reserve(priors.mean_prior.size());
  for (std::size_t i = 0; i < priors.mean_prior.size(); ++i) {
    const NormalPrior& m = priors.mean_prior[i];
    const NormalPrior& lv = priors.logvar_prior[i];
    out.mean.push_back(rng.normal(m.location, m.scale));
    out.variance.push_back(std::exp(rng.normal(lv.location, lv.scale)));
  }
  return out;
}

BiasField unit_bias(const Grid& grid, int channels) {
  return BiasField{IntensityVolume(grid, channels, 1.0f),
                   std::vector<double>(static_cast<std::size_t>(channels) * 64, 0.0)};
}

BiasField sample_bias_field(RandomStream& rng, double sigma_b, const Grid& hr_grid, int channels) {
  if (!(sigma_b >= 0.0) || !std::isfinite(sigma_b))
    throw std::invalid_argument("sample_bias_field: sigma_b must be >= 0");
  if (channels < 1) throw std::invalid_argument("sample_bias_field: channels must be >= 1");
  constexpr std::size_t nodes = kBiasControlSize * kBiasControlSize * kBiasControlSize;
  std::vector<double> control(nodes * static_cast<std::size_t>(channels));
  for (double& v : control) v = rng.normal(0.0, sigma_b);

  std::vector<float> coarse_values(control.begin(), control.end());
  const IntensityVolume coarse(control_grid_for(hr_grid, kBiasControlSize), channels, std::move(coarse_values));
  IntensityVolume field = resample(coarse, hr_grid);
  for (float& f : field.data()) f = static_cast<float>(std::exp(static_cast<double>(f)));
  return BiasField{std::move(field), std::move(control)};
}

IntensityVolume synthesize_hr_image(const LabelVolume& labels, const GmmParams& params, const BiasField& bias,
                                    RandomStream& rng, const SynthOptions& options) {
  params.validate();
  if (!(bias.factors.grid() == labels.grid()) || bias.factors.channels() != params.channels)
    throw std::invalid_argument("synthesize_hr_image: bias field does not match labels/channels");
  const LabelLookup lookup(params, labels.label_set());

  IntensityVolume out(labels.grid(), params.channels);
  const auto data = labels.data();
  for (int c = 0; c < params.channels; ++c) {
    const auto b = bias.factors.channel(c);
    auto dst = out.channel(c);
    for (std::size_t j = 0; j < data.size(); ++j) {
      const std::size_t s = params.slot(lookup(data[j]), c);
      const double g = params.mean[s] + std::sqrt(params.variance[s]) * rng.normal();
      dst[j] = static_cast<float>(static_cast<double>(b[j]) * g);
    }
    if (options.normalize) {
      float lo = std::numeric_limits<float>::max(), hi = std::numeric_limits<float>::lowest();
      for (float v : dst) lo = std::min(lo, v), hi = std::max(hi, v);
      const double range = static_cast<double>(hi) - lo;
      for (float& v : dst) v = range > 0.0 ? static_cast<float>((v - lo) / range) : 0.0f;
    }
  }
  return out;
}

}  // namespace pvgen
