#pragma once

#include <span>
#include <vector>

#include "pvgen/rng.hpp"
#include "pvgen/volume.hpp"

namespace pvgen {

using Mat4 = std::array<std::array<double, 4>, 4>;

Mat4 identity4();
Mat4 operator*(const Mat4& a, const Mat4& b);
Vec3 apply(const Mat4& m, const Vec3& p);
// Upper-left 3x3 applied to a direction.
Vec3 apply_linear(const Mat4& m, const Vec3& v);
double det3(const Mat4& m);

// Dense displacement over a grid, in voxel units of that grid. Maps output
// coordinates to source coordinates: x -> x + u(x).
class DeformationField {
 public:
  DeformationField() = default;
  explicit DeformationField(const Grid& grid) : components_(grid, 3) {}
  explicit DeformationField(IntensityVolume components);

  const Grid& grid() const { return components_.grid(); }
  std::size_t voxel_count() const { return components_.voxel_count(); }
  const IntensityVolume& components() const { return components_; }
  std::span<float> component(int axis) { return components_.channel(axis); }
  std::span<const float> component(int axis) const { return components_.channel(axis); }

  Vec3 at(std::size_t j) const {
    return {components_.channel(0)[j], components_.channel(1)[j], components_.channel(2)[j]};
  }
  // Trilinear, clamped at the edges.
  Vec3 sample(const Vec3& p) const;

  bool operator==(const DeformationField&) const = default;

 private:
  IntensityVolume components_;
};

inline constexpr int kSvfControlSize = 10;
inline constexpr int kDefaultSvfSteps = 8;

// Stationary velocity field: a 10x10x10 grid of 3-vectors plus its trilinear
// upsampling onto the HR grid (HR voxel units).
struct VelocityField {
  std::vector<double> control;  // (axis, z, y, x), x fastest; 3 * 10^3 values
  DeformationField dense;

  VelocityField negated() const;
};

VelocityField sample_svf(RandomStream& rng, double sigma_v, const Grid& hr_grid);
// Velocity built from explicit control values (length 3 * 10^3).
VelocityField velocity_from_control(std::vector<double> control, const Grid& hr_grid);

// (outer o inner)(x) = inner(x) + outer(x + inner(x)).
DeformationField compose_fields(const DeformationField& outer, const DeformationField& inner);

// Scaling and squaring: exp(v).
DeformationField integrate_svf(const DeformationField& velocity, int n_steps = kDefaultSvfSteps);
inline DeformationField integrate_svf(const VelocityField& v, int n_steps = kDefaultSvfSteps) {
  return integrate_svf(v.dense, n_steps);
}

struct AffineRanges {
  Interval rotation_deg{-15.0, 15.0};
  Interval scaling{0.8, 1.2};
  Interval shearing{-0.01, 0.01};
  Interval translation{-20.0, 20.0};

  void validate() const;
};

struct AffineParams {
  Vec3 rotation_deg{0, 0, 0};
  Vec3 scaling{1, 1, 1};
  Vec3 shearing{0, 0, 0};  // xy, xz, yz
  Vec3 translation{0, 0, 0};
};

// T * Rz * Ry * Rx * Sh * Sc, applied about `center` (voxel coordinates).
Mat4 affine_matrix(const AffineParams& p, const Vec3& center);

struct AffineSample {
  AffineParams params;
  Mat4 matrix;
};

AffineSample sample_affine(RandomStream& rng, const AffineRanges& ranges, const Vec3& center);

// x -> A(x + u(x)), re-expressed as a displacement.
DeformationField compose_affine_with_field(const Mat4& affine, const DeformationField& field);

const LabelVolume& sample_label_map(RandomStream& rng, std::span<const LabelVolume> maps);
std::size_t sample_label_map_index(RandomStream& rng, std::size_t count);

// Nearest-neighbour pull: out(j) = map(j + u(j)).
LabelVolume warp_labels(const LabelVolume& map, const DeformationField& field);

}  // namespace pvgen
