#pragma once

#include <numbers>
#include <vector>

#include "pvgen/rng.hpp"
#include "pvgen/timing.hpp"
#include "pvgen/volume.hpp"

namespace pvgen {

// Spatial std of a Gaussian whose power spectrum is down to 1/10 at the
// cut-off frequency of a voxel of unit size: 2 ln(10) / (2 pi) = 0.73294.
inline constexpr double kBlurConstant = std::numbers::ln10 / std::numbers::pi;

// Per-axis kernel std in HR voxels: kBlurConstant * alpha * thickness / r_a.
Vec3 blur_std(const Vec3& thickness_mm, double atlas_res_mm, double alpha);

// Sampled Gaussian at integer offsets -r..r with r = ceil(3 sigma), summing
// to 1. sigma == 0 yields the single tap {1}.
std::vector<double> gaussian_kernel(double sigma);

// Separable blur of one channel with replicate boundaries; returns a
// single-channel volume.
IntensityVolume gaussian_blur(const IntensityVolume& vol, const Vec3& sigma, int channel);
// All channels with the same sigma.
IntensityVolume gaussian_blur(const IntensityVolume& vol, const Vec3& sigma);

// LR geometry: dims = ceil(n * hr_spacing / lr_spacing); axes whose requested
// spacing is finer than HR keep the HR sampling.
Grid lr_grid_for(const Grid& hr, const Vec3& spacing_mm);

IntensityVolume subsample_to_lr(const IntensityVolume& vol, const Vec3& spacing_mm);
IntensityVolume upsample_to_hr(const IntensityVolume& lr, const Grid& hr_grid);

struct ChannelAcquisition {
  Vec3 thickness_mm{1, 1, 1};
  Vec3 spacing_mm{1, 1, 1};
  Interval alpha{0.75, 1.25};
};

struct AcquisitionSpec {
  double atlas_res_mm = 1.0;
  std::vector<ChannelAcquisition> channels;

  void validate() const;
};

struct Acquisition {
  IntensityVolume image;       // HR grid, LR appearance
  std::vector<double> alpha;   // drawn per channel
};

// Per channel: alpha ~ U(range), blur, subsample to the LR grid, upsample back.
Acquisition simulate_acquisition(const IntensityVolume& hr_image, const AcquisitionSpec& spec, RandomStream& rng,
                                 StageTimes* times = nullptr);

}  // namespace pvgen
