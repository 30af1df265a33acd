#pragma once

#include <optional>
#include <span>
#include <vector>

#include "pvgen/gmm.hpp"
#include "pvgen/volume.hpp"

namespace pvgen {

// Gaussian consistency constant: 1 / Phi^-1(3/4).
inline constexpr double kMadToSigma = 1.4826;
// Keeps log-variance finite for constant classes.
inline constexpr double kVarianceFloor = 1e-6;

// Median with the average-of-two-middles convention for even counts.
double median(std::vector<double> values);
// Median absolute deviation about `center` (unscaled).
double median_absolute_deviation(std::span<const double> values, double center);

struct RobustStat {
  double mean = 0.0;      // median
  double variance = 0.0;  // (1.4826 * MAD)^2
};

// Robust per-class, per-channel statistics of one scan. Label-major layout
// matching GmmPriors; classes without voxels are std::nullopt.
struct ClassStats {
  std::vector<std::int32_t> labels;
  int channels = 1;
  std::vector<std::optional<RobustStat>> stats;

  const std::optional<RobustStat>& at(std::size_t label_pos, int channel) const {
    return stats[label_pos * static_cast<std::size_t>(channels) + static_cast<std::size_t>(channel)];
  }
};

ClassStats estimate_class_stats(const IntensityVolume& image, const LabelVolume& seg,
                                std::span<const std::int32_t> labels);

// Inflates a variance measured at LR by the PV averaging factor
// M = lr_voxel_vol / hr_voxel_vol.
double rescale_variance(double var, double hr_voxel_vol_mm3, double lr_voxel_vol_mm3);
ClassStats rescale_variances(ClassStats stats, double hr_voxel_vol_mm3, double lr_voxel_vol_mm3);

struct PriorFitOptions {
  double inflation = 5.0;
  double scale_floor = 0.0;  // minimum scale before inflation
};

// Independent univariate Gaussian fits over scans for each (class, channel):
// means directly, variances in the log domain. Scales are sample standard
// deviations (n - 1), multiplied by the inflation factor.
GmmPriors fit_gaussian_priors(std::span<const ClassStats> scans, const PriorFitOptions& options = {});

}  // namespace pvgen
