#include "pvgen/deform.hpp"

#include <numbers>

namespace pvgen {

Mat4 identity4() {
  Mat4 m{};
  for (int i = 0; i < 4; ++i) m[i][i] = 1.0;
  return m;
}

Mat4 operator*(const Mat4& a, const Mat4& b) {
  Mat4 m{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) m[i][j] += a[i][k] * b[k][j];
  return m;
}

Vec3 apply(const Mat4& m, const Vec3& p) {
  Vec3 r{};
  for (int i = 0; i < 3; ++i) r[i] = m[i][0] * p[0] + m[i][1] * p[1] + m[i][2] * p[2] + m[i][3];
  return r;
}

Vec3 apply_linear(const Mat4& m, const Vec3& v) {
  Vec3 r{};
  for (int i = 0; i < 3; ++i) r[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2];
  return r;
}

double det3(const Mat4& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

DeformationField::DeformationField(IntensityVolume components) : components_(std::move(components)) {
  if (components_.channels() != 3) throw std::invalid_argument("deformation field needs 3 components");
}

namespace {

// Trilinear sample of all three components sharing one set of weights.
Vec3 sample3(const IntensityVolume& comps, double x, double y, double z) {
  const Dims& d = comps.grid().dims;
  const auto ax = detail::axis_weight(x, d[0]);
  const auto ay = detail::axis_weight(y, d[1]);
  const auto az = detail::axis_weight(z, d[2]);
  const std::size_t nx = static_cast<std::size_t>(d[0]);
  const std::size_t nxy = nx * static_cast<std::size_t>(d[1]);
  const std::size_t i000 = az.i0 * nxy + ay.i0 * nx + ax.i0;
  const std::size_t dx = static_cast<std::size_t>(ax.i1 - ax.i0);
  const std::size_t dy = static_cast<std::size_t>(ay.i1 - ay.i0) * nx;
  const std::size_t dz = static_cast<std::size_t>(az.i1 - az.i0) * nxy;
  const double wx1 = ax.t, wx0 = 1.0 - ax.t;
  const double wy1 = ay.t, wy0 = 1.0 - ay.t;
  const double wz1 = az.t, wz0 = 1.0 - az.t;
  Vec3 r{};
  for (int c = 0; c < 3; ++c) {
    const float* p = comps.channel(c).data() + i000;
    const double c00 = p[0] * wx0 + p[dx] * wx1;
    const double c10 = p[dy] * wx0 + p[dy + dx] * wx1;
    const double c01 = p[dz] * wx0 + p[dz + dx] * wx1;
    const double c11 = p[dz + dy] * wx0 + p[dz + dy + dx] * wx1;
    r[c] = (c00 * wy0 + c10 * wy1) * wz0 + (c01 * wy0 + c11 * wy1) * wz1;
  }
  return r;
}

void check_finite(const IntensityVolume& v, const char* what) {
  for (float f : v.data())
    if (!std::isfinite(f)) throw std::invalid_argument(std::string(what) + ": non-finite displacement");
}

}  // namespace

Vec3 DeformationField::sample(const Vec3& p) const { return sample3(components_, p[0], p[1], p[2]); }

VelocityField VelocityField::negated() const {
  VelocityField out = *this;
  for (double& v : out.control) v = -v;
  IntensityVolume comps = dense.components();
  for (float& f : comps.data()) f = -f;
  out.dense = DeformationField(std::move(comps));
  return out;
}

VelocityField velocity_from_control(std::vector<double> control, const Grid& hr_grid) {
  constexpr std::size_t n = kSvfControlSize * kSvfControlSize * kSvfControlSize;
  if (control.size() != 3 * n) throw std::invalid_argument("velocity control grid must hold 10x10x10x3 values");
  std::vector<float> values(control.size());
  for (std::size_t i = 0; i < control.size(); ++i) {
    if (!std::isfinite(control[i])) throw std::invalid_argument("velocity control values must be finite");
    values[i] = static_cast<float>(control[i]);
  }
  IntensityVolume coarse(control_grid_for(hr_grid, kSvfControlSize), 3, std::move(values));
  IntensityVolume dense = resample(coarse, hr_grid);
  return VelocityField{std::move(control), DeformationField(std::move(dense))};
}

VelocityField sample_svf(RandomStream& rng, double sigma_v, const Grid& hr_grid) {
  if (!(sigma_v >= 0.0) || !std::isfinite(sigma_v)) throw std::invalid_argument("sample_svf: sigma_v must be >= 0");
  std::vector<double> control(3 * kSvfControlSize * kSvfControlSize * kSvfControlSize);
  for (double& v : control) v = rng.normal(0.0, sigma_v);
  return velocity_from_control(std::move(control), hr_grid);
}

DeformationField compose_fields(const DeformationField& outer, const DeformationField& inner) {
  if (!(outer.grid() == inner.grid())) throw std::invalid_argument("compose_fields: grid mismatch");
  const Grid& g = inner.grid();
  DeformationField out(g);
  auto ox = out.component(0), oy = out.component(1), oz = out.component(2);
  const auto ix = inner.component(0), iy = inner.component(1), iz = inner.component(2);
  std::size_t j = 0;
  for (int z = 0; z < g.dims[2]; ++z)
    for (int y = 0; y < g.dims[1]; ++y)
      for (int x = 0; x < g.dims[0]; ++x, ++j) {
        const double ux = ix[j], uy = iy[j], uz = iz[j];
        const Vec3 w = sample3(outer.components(), x + ux, y + uy, z + uz);
        ox[j] = static_cast<float>(ux + w[0]);
        oy[j] = static_cast<float>(uy + w[1]);
        oz[j] = static_cast<float>(uz + w[2]);
      }
  return out;
}

DeformationField integrate_svf(const DeformationField& velocity, int n_steps) {
  if (n_steps < 1) throw std::invalid_argument("integrate_svf: n_steps must be >= 1");
  check_finite(velocity.components(), "integrate_svf");
  IntensityVolume scaled = velocity.components();
  const float factor = std::ldexp(1.0f, -n_steps);
  for (float& f : scaled.data()) f *= factor;
  DeformationField phi(std::move(scaled));
  for (int i = 0; i < n_steps; ++i) phi = compose_fields(phi, phi);
  return phi;
}

void AffineRanges::validate() const {
  for (const Interval* r : {&rotation_deg, &scaling, &shearing, &translation})
    if (!r->valid()) throw std::invalid_argument("affine range must satisfy low <= high");
  if (scaling.lo <= 0.0) throw std::invalid_argument("affine scaling range must be strictly positive");
}

Mat4 affine_matrix(const AffineParams& p, const Vec3& center) {
  const auto rad = [](double deg) { return deg * std::numbers::pi / 180.0; };
  Mat4 rx = identity4(), ry = identity4(), rz = identity4();
  {
    const double c = std::cos(rad(p.rotation_deg[0])), s = std::sin(rad(p.rotation_deg[0]));
    rx[1][1] = c, rx[1][2] = -s, rx[2][1] = s, rx[2][2] = c;
  }
  {
    const double c = std::cos(rad(p.rotation_deg[1])), s = std::sin(rad(p.rotation_deg[1]));
    ry[0][0] = c, ry[0][2] = s, ry[2][0] = -s, ry[2][2] = c;
  }
  {
    const double c = std::cos(rad(p.rotation_deg[2])), s = std::sin(rad(p.rotation_deg[2]));
    rz[0][0] = c, rz[0][1] = -s, rz[1][0] = s, rz[1][1] = c;
  }
  Mat4 sh = identity4();
  sh[0][1] = p.shearing[0];
  sh[0][2] = p.shearing[1];
  sh[1][2] = p.shearing[2];
  Mat4 sc = identity4();
  for (int i = 0; i < 3; ++i) sc[i][i] = p.scaling[i];

  Mat4 to_origin = identity4(), back = identity4();
  for (int i = 0; i < 3; ++i) {
    to_origin[i][3] = -center[i];
    back[i][3] = center[i] + p.translation[i];
  }
  return back * rz * ry * rx * sh * sc * to_origin;
}

AffineSample sample_affine(RandomStream& rng, const AffineRanges& ranges, const Vec3& center) {
  ranges.validate();
  AffineParams p;
  for (int i = 0; i < 3; ++i) p.rotation_deg[i] = rng.uniform(ranges.rotation_deg.lo, ranges.rotation_deg.hi);
  for (int i = 0; i < 3; ++i) p.scaling[i] = rng.uniform(ranges.scaling.lo, ranges.scaling.hi);
  for (int i = 0; i < 3; ++i) p.shearing[i] = rng.uniform(ranges.shearing.lo, ranges.shearing.hi);
  for (int i = 0; i < 3; ++i) p.translation[i] = rng.uniform(ranges.translation.lo, ranges.translation.hi);
  return {p, affine_matrix(p, center)};
}

DeformationField compose_affine_with_field(const Mat4& affine, const DeformationField& field) {
  const Grid& g = field.grid();
  DeformationField out(g);
  auto ox = out.component(0), oy = out.component(1), oz = out.component(2);
  std::size_t j = 0;
  for (int z = 0; z < g.dims[2]; ++z)
    for (int y = 0; y < g.dims[1]; ++y)
      for (int x = 0; x < g.dims[0]; ++x, ++j) {
        const Vec3 u = field.at(j);
        const Vec3 p{x + u[0], y + u[1], z + u[2]};
        const Vec3 q = apply(affine, p);
        ox[j] = static_cast<float>(q[0] - x);
        oy[j] = static_cast<float>(q[1] - y);
        oz[j] = static_cast<float>(q[2] - z);
      }
  return out;
}

std::size_t sample_label_map_index(RandomStream& rng, std::size_t count) {
  if (count == 0) throw std::invalid_argument("sample_label_map: no training label maps");
  return static_cast<std::size_t>(rng.below(count));
}

const LabelVolume& sample_label_map(RandomStream& rng, std::span<const LabelVolume> maps) {
  return maps[sample_label_map_index(rng, maps.size())];
}

LabelVolume warp_labels(const LabelVolume& map, const DeformationField& field) {
  if (!(map.grid() == field.grid())) throw std::invalid_argument("warp_labels: grid mismatch");
  const Grid& g = map.grid();
  const auto src = map.data();
  std::vector<std::int32_t> out(g.voxel_count());
  std::size_t j = 0;
  for (int z = 0; z < g.dims[2]; ++z)
    for (int y = 0; y < g.dims[1]; ++y)
      for (int x = 0; x < g.dims[0]; ++x, ++j) {
        const Vec3 u = field.at(j);
        const int sx = detail::nearest_index(x + u[0], g.dims[0]);
        const int sy = detail::nearest_index(y + u[1], g.dims[1]);
        const int sz = detail::nearest_index(z + u[2], g.dims[2]);
        out[j] = src[g.index(sx, sy, sz)];
      }
  return LabelVolume(g, std::move(out));
}

}  // namespace pvgen
