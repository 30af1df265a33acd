#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "pvgen/rng.hpp"
#include "pvgen/volume.hpp"

namespace pvgen {

struct NormalPrior {
  double location = 0.0;
  double scale = 0.0;

  bool operator==(const NormalPrior&) const = default;
};

// Gaussian hyperpriors over per-class, per-channel means and log-variances.
// Entries are label-major: index = label_position * channels + channel.
struct GmmPriors {
  std::vector<std::int32_t> labels;
  int channels = 1;
  std::vector<NormalPrior> mean_prior;
  std::vector<NormalPrior> logvar_prior;

  std::size_t slot(std::size_t label_pos, int channel) const {
    return label_pos * static_cast<std::size_t>(channels) + static_cast<std::size_t>(channel);
  }
  std::optional<std::size_t> find(std::int32_t label) const;
  void validate() const;

  nlohmann::json to_json() const;
  static GmmPriors from_json(const nlohmann::json& j);

  bool operator==(const GmmPriors&) const = default;
};

// Sampled intensity model: mean and variance per (label, channel), same layout
// as GmmPriors. Cross-channel covariance is diagonal.
struct GmmParams {
  std::vector<std::int32_t> labels;
  int channels = 1;
  std::vector<double> mean;
  std::vector<double> variance;

  std::size_t slot(std::size_t label_pos, int channel) const {
    return label_pos * static_cast<std::size_t>(channels) + static_cast<std::size_t>(channel);
  }
  std::optional<std::size_t> find(std::int32_t label) const;
  void validate() const;
  // FNV-1a over the raw parameter bytes, as 16 hex digits.
  std::string digest() const;
};

GmmParams sample_gmm_params(RandomStream& rng, const GmmPriors& priors);

inline constexpr int kBiasControlSize = 4;

// Multiplicative bias, one positive factor per voxel and channel.
struct BiasField {
  IntensityVolume factors;
  std::vector<double> control;  // log-domain node values, (channel, z, y, x)
};

BiasField unit_bias(const Grid& grid, int channels);
BiasField sample_bias_field(RandomStream& rng, double sigma_b, const Grid& hr_grid, int channels);

struct SynthOptions {
  bool normalize = false;  // per-channel min-max rescale to [0, 1]
};

// I = bias * g, g ~ N(mean[L_j], variance[L_j]) independently per voxel and channel.
IntensityVolume synthesize_hr_image(const LabelVolume& labels, const GmmParams& params, const BiasField& bias,
                                    RandomStream& rng, const SynthOptions& options = {});

}  // namespace pvgen
