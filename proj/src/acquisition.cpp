#include "pvgen/acquisition.hpp"

#include <algorithm>
#include <cstring>

namespace pvgen {

Vec3 blur_std(const Vec3& thickness_mm, double atlas_res_mm, double alpha) {
  if (!(atlas_res_mm > 0.0) || !std::isfinite(atlas_res_mm))
    throw std::invalid_argument("blur_std: atlas resolution must be positive");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("blur_std: alpha must be >= 0");
  Vec3 sigma{};
  for (int a = 0; a < 3; ++a) {
    if (!(thickness_mm[a] > 0.0) || !std::isfinite(thickness_mm[a]))
      throw std::invalid_argument("blur_std: slice thickness must be positive");
    sigma[a] = kBlurConstant * alpha * thickness_mm[a] / atlas_res_mm;
  }
  return sigma;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("gaussian_kernel: sigma must be >= 0");
  if (sigma == 0.0) return {1.0};
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = w;
    sum += w;
  }
  for (double& w : k) w /= sum;
  return k;
}

namespace {

// One separable pass along `axis`, replicate boundary.
void convolve_axis(std::span<const float> src, std::span<float> dst, const Dims& d, int axis,
                   const std::vector<double>& k) {
  const int r = static_cast<int>(k.size() / 2);
  const std::size_t nx = static_cast<std::size_t>(d[0]);
  const std::size_t nxy = nx * static_cast<std::size_t>(d[1]);

  if (axis == 0) {
    std::vector<double> line(nx + 2 * static_cast<std::size_t>(r));
    for (std::size_t row = 0; row < src.size() / nx; ++row) {
      const float* in = src.data() + row * nx;
      float* out = dst.data() + row * nx;
      for (int i = -r; i < static_cast<int>(nx) + r; ++i)
        line[static_cast<std::size_t>(i + r)] = in[std::clamp(i, 0, d[0] - 1)];
      for (std::size_t x = 0; x < nx; ++x) {
        double acc = 0.0;
        for (std::size_t t = 0; t < k.size(); ++t) acc += k[t] * line[x + t];
        out[x] = static_cast<float>(acc);
      }
    }
    return;
  }

  // y and z: accumulate whole rows (y) or planes (z) so the inner loop is contiguous.
  const int n = d[axis];
  const std::size_t stride = axis == 1 ? nx : nxy;
  const std::size_t span_len = stride;  // contiguous elements per (outer, index) block
  const std::size_t outer_count = axis == 1 ? static_cast<std::size_t>(d[2]) : 1;
  const std::size_t outer_stride = axis == 1 ? nxy : 0;
  std::vector<double> acc(span_len);
  for (std::size_t o = 0; o < outer_count; ++o) {
    const float* base_in = src.data() + o * outer_stride;
    float* base_out = dst.data() + o * outer_stride;
    for (int i = 0; i < n; ++i) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int t = -r; t <= r; ++t) {
        const double w = k[static_cast<std::size_t>(t + r)];
        const float* row = base_in + static_cast<std::size_t>(std::clamp(i + t, 0, n - 1)) * stride;
        for (std::size_t e = 0; e < span_len; ++e) acc[e] += w * row[e];
      }
      float* out = base_out + static_cast<std::size_t>(i) * stride;
      for (std::size_t e = 0; e < span_len; ++e) out[e] = static_cast<float>(acc[e]);
    }
  }
}

}  // namespace

IntensityVolume gaussian_blur(const IntensityVolume& vol, const Vec3& sigma, int channel) {
  if (channel < 0 || channel >= vol.channels()) throw std::out_of_range("gaussian_blur: bad channel");
  for (double s : sigma)
    if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("gaussian_blur: sigma must be >= 0");

  const auto src = vol.channel(channel);
  IntensityVolume out(vol.grid(), 1, std::vector<float>(src.begin(), src.end()));
  std::vector<float> scratch(src.size());
  for (int axis = 0; axis < 3; ++axis) {
    if (sigma[axis] == 0.0) continue;
    const auto k = gaussian_kernel(sigma[axis]);
    convolve_axis(out.channel(0), scratch, vol.grid().dims, axis, k);
    std::copy(scratch.begin(), scratch.end(), out.channel(0).begin());
  }
  return out;
}

IntensityVolume gaussian_blur(const IntensityVolume& vol, const Vec3& sigma) {
  IntensityVolume out(vol.grid(), vol.channels());
  for (int c = 0; c < vol.channels(); ++c) {
    const IntensityVolume one = gaussian_blur(vol, sigma, c);
    std::copy(one.channel(0).begin(), one.channel(0).end(), out.channel(c).begin());
  }
  return out;
}

Grid lr_grid_for(const Grid& hr, const Vec3& spacing_mm) {
  Dims dims{};
  Vec3 spacing{};
  for (int a = 0; a < 3; ++a) {
    if (!(spacing_mm[a] > 0.0) || !std::isfinite(spacing_mm[a]))
      throw std::invalid_argument("slice spacing must be positive");
    if (spacing_mm[a] <= hr.spacing[a]) {
      dims[a] = hr.dims[a];
      spacing[a] = hr.spacing[a];
    } else {
      const double extent = hr.dims[a] * hr.spacing[a] / spacing_mm[a];
      dims[a] = std::max(1, static_cast<int>(std::ceil(extent - 1e-9)));
      spacing[a] = spacing_mm[a];
    }
  }
  return Grid(dims, spacing);
}

IntensityVolume subsample_to_lr(const IntensityVolume& vol, const Vec3& spacing_mm) {
  return resample(vol, lr_grid_for(vol.grid(), spacing_mm));
}

IntensityVolume upsample_to_hr(const IntensityVolume& lr, const Grid& hr_grid) { return resample(lr, hr_grid); }

void AcquisitionSpec::validate() const {
  if (!(atlas_res_mm > 0.0)) throw std::invalid_argument("atlas resolution must be positive");
  if (channels.empty()) throw std::invalid_argument("acquisition spec needs at least one channel");
  for (const auto& ch : channels) {
    for (int a = 0; a < 3; ++a) {
      if (!(ch.thickness_mm[a] > 0.0)) throw std::invalid_argument("slice thickness must be positive");
      if (!(ch.spacing_mm[a] > 0.0)) throw std::invalid_argument("slice spacing must be positive");
    }
    if (!ch.alpha.valid() || ch.alpha.lo <= 0.0) throw std::invalid_argument("alpha range must lie in (0, inf)");
  }
}

Acquisition simulate_acquisition(const IntensityVolume& hr_image, const AcquisitionSpec& spec, RandomStream& rng,
                                 StageTimes* times) {
  spec.validate();
  if (static_cast<int>(spec.channels.size()) != hr_image.channels())
    throw std::invalid_argument("acquisition spec has " + std::to_string(spec.channels.size()) +
                                " channels but the image has " + std::to_string(hr_image.channels()));
  Acquisition result{IntensityVolume(hr_image.grid(), hr_image.channels()), {}};
  for (int c = 0; c < hr_image.channels(); ++c) {
    const ChannelAcquisition& ch = spec.channels[static_cast<std::size_t>(c)];
    const double alpha = rng.uniform(ch.alpha.lo, ch.alpha.hi);
    result.alpha.push_back(alpha);

    IntensityVolume blurred;
    {
      ScopedStage stage(times ? &times->blur : nullptr);
      blurred = gaussian_blur(hr_image, blur_std(ch.thickness_mm, spec.atlas_res_mm, alpha), c);
    }
    ScopedStage stage(times ? &times->resample : nullptr);
    const IntensityVolume up = upsample_to_hr(subsample_to_lr(blurred, ch.spacing_mm), hr_image.grid());
    std::copy(up.channel(0).begin(), up.channel(0).end(), result.image.channel(c).begin());
  }
  return result;
}

}  // namespace pvgen
