#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "pvgen/common.hpp"

namespace pvgen {

// Voxel lattice with per-axis spacing in mm. Voxel (0,0,0) has its center at
// the physical origin; grids of different spacing share that corner center.
struct Grid {
  Dims dims{1, 1, 1};
  Vec3 spacing{1.0, 1.0, 1.0};

  Grid() = default;
  Grid(Dims d, Vec3 s);

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
           static_cast<std::size_t>(dims[2]);
  }
  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims[0]) *
               (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(z));
  }
  Dims coords(std::size_t j) const {
    const auto nx = static_cast<std::size_t>(dims[0]);
    const auto ny = static_cast<std::size_t>(dims[1]);
    return {static_cast<int>(j % nx), static_cast<int>((j / nx) % ny), static_cast<int>(j / (nx * ny))};
  }
  double voxel_volume() const { return spacing[0] * spacing[1] * spacing[2]; }
  Vec3 center() const {
    return {0.5 * (dims[0] - 1), 0.5 * (dims[1] - 1), 0.5 * (dims[2] - 1)};
  }

  bool operator==(const Grid&) const = default;
};

// Multi-channel scalar volume, channel-major (each channel contiguous, x fastest).
class IntensityVolume {
 public:
  IntensityVolume() = default;
  IntensityVolume(Grid grid, int channels, float fill = 0.0f);
  IntensityVolume(Grid grid, int channels, std::vector<float> data);

  const Grid& grid() const { return grid_; }
  int channels() const { return channels_; }
  std::size_t voxel_count() const { return grid_.voxel_count(); }

  std::span<const float> channel(int c) const {
    return {data_.data() + static_cast<std::size_t>(c) * voxel_count(), voxel_count()};
  }
  std::span<float> channel(int c) {
    return {data_.data() + static_cast<std::size_t>(c) * voxel_count(), voxel_count()};
  }
  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

  float at(int x, int y, int z, int c = 0) const { return channel(c)[grid_.index(x, y, z)]; }

  bool operator==(const IntensityVolume&) const = default;

 private:
  Grid grid_;
  int channels_ = 0;
  std::vector<float> data_;
};

class LabelVolume {
 public:
  LabelVolume() = default;
  // label_set is computed from the data.
  LabelVolume(Grid grid, std::vector<std::int32_t> data);
  // declared label_set must cover every stored label.
  LabelVolume(Grid grid, std::vector<std::int32_t> data, std::vector<std::int32_t> label_set);

  const Grid& grid() const { return grid_; }
  std::span<const std::int32_t> data() const { return data_; }
  // Sorted, unique.
  std::span<const std::int32_t> label_set() const { return label_set_; }
  std::int32_t at(int x, int y, int z) const { return data_[grid_.index(x, y, z)]; }

  bool operator==(const LabelVolume&) const = default;

 private:
  Grid grid_;
  std::vector<std::int32_t> data_;
  std::vector<std::int32_t> label_set_;
};

namespace detail {

inline double clamp_coord(double v, int n) { return std::clamp(v, 0.0, static_cast<double>(n - 1)); }

struct AxisWeight {
  int i0;
  int i1;
  double t;
};

inline AxisWeight axis_weight(double v, int n) {
  v = clamp_coord(v, n);
  int i0 = static_cast<int>(v);
  if (i0 >= n - 1) return {n - 1, n - 1, 0.0};
  return {i0, i0 + 1, v - i0};
}

// Unchecked trilinear interpolation on one channel; coordinates clamped.
inline double trilinear(std::span<const float> data, const Dims& d, double x, double y, double z) {
  const AxisWeight ax = axis_weight(x, d[0]);
  const AxisWeight ay = axis_weight(y, d[1]);
  const AxisWeight az = axis_weight(z, d[2]);
  const std::size_t nx = static_cast<std::size_t>(d[0]);
  const std::size_t nxy = nx * static_cast<std::size_t>(d[1]);
  const std::size_t z0 = static_cast<std::size_t>(az.i0) * nxy;
  const std::size_t z1 = static_cast<std::size_t>(az.i1) * nxy;
  const std::size_t y0 = static_cast<std::size_t>(ay.i0) * nx;
  const std::size_t y1 = static_cast<std::size_t>(ay.i1) * nx;
  const auto lerp = [](double a, double b, double t) { return a * (1.0 - t) + b * t; };
  const double c00 = lerp(data[z0 + y0 + ax.i0], data[z0 + y0 + ax.i1], ax.t);
  const double c10 = lerp(data[z0 + y1 + ax.i0], data[z0 + y1 + ax.i1], ax.t);
  const double c01 = lerp(data[z1 + y0 + ax.i0], data[z1 + y0 + ax.i1], ax.t);
  const double c11 = lerp(data[z1 + y1 + ax.i0], data[z1 + y1 + ax.i1], ax.t);
  return lerp(lerp(c00, c10, ay.t), lerp(c01, c11, ay.t), az.t);
}

// Nearest voxel index on one axis, ties toward the lower index.
inline int nearest_index(double v, int n) {
  v = clamp_coord(v, n);
  return std::clamp(static_cast<int>(std::ceil(v - 0.5)), 0, n - 1);
}

}  // namespace detail

// Coarse grid of node_count^3 nodes whose corner nodes coincide with the
// corner voxel centers of `hr`. Used for smooth random fields.
Grid control_grid_for(const Grid& hr, int node_count);

// Point is in continuous voxel coordinates; out-of-range points clamp to the edge.
double trilinear_sample(const IntensityVolume& vol, const Vec3& point, int channel = 0);
std::int32_t nearest_sample(const LabelVolume& vol, const Vec3& point);

// Linear resampling onto another corner-aligned grid.
IntensityVolume resample(const IntensityVolume& vol, const Grid& target);

IntensityVolume one_hot(const LabelVolume& labels, std::span<const std::int32_t> ordered_labels);
// Inverse of one_hot: per-voxel argmax, ties to the first channel.
LabelVolume argmax_labels(const IntensityVolume& probs, std::span<const std::int32_t> ordered_labels);

inline constexpr double kDiceSmoothing = 1e-6;

// Mean over channels of (2 sum p t + eps) / (sum p + sum t + eps).
double soft_dice(const IntensityVolume& pred, const IntensityVolume& target);

}  // namespace pvgen
