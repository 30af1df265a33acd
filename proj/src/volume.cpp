#include "pvgen/volume.hpp"

#include <string>
#include <unordered_map>

namespace pvgen {

Grid::Grid(Dims d, Vec3 s) : dims(d), spacing(s) {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 1) throw std::invalid_argument("grid dims must be >= 1");
    if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a]))
      throw std::invalid_argument("grid spacing must be positive and finite");
  }
}

IntensityVolume::IntensityVolume(Grid grid, int channels, float fill) : grid_(grid), channels_(channels) {
  if (channels < 1) throw std::invalid_argument("intensity volume needs at least one channel");
  data_.assign(grid_.voxel_count() * static_cast<std::size_t>(channels), fill);
}

IntensityVolume::IntensityVolume(Grid grid, int channels, std::vector<float> data)
    : grid_(grid), channels_(channels), data_(std::move(data)) {
  if (channels < 1) throw std::invalid_argument("intensity volume needs at least one channel");
  if (data_.size() != grid_.voxel_count() * static_cast<std::size_t>(channels))
    throw std::invalid_argument("intensity data length does not match grid and channel count");
  for (float v : data_)
    if (!std::isfinite(v)) throw std::invalid_argument("intensity data contains non-finite values");
}

namespace {

std::vector<std::int32_t> unique_sorted(std::vector<std::int32_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::vector<std::int32_t> distinct_labels(std::span<const std::int32_t> data) {
  std::vector<std::int32_t> seen;
  std::int32_t last = 0;
  bool have_last = false;
  for (std::int32_t v : data) {
    if (have_last && v == last) continue;
    if (std::find(seen.begin(), seen.end(), v) == seen.end()) seen.push_back(v);
    last = v;
    have_last = true;
  }
  return unique_sorted(std::move(seen));
}

}  // namespace

LabelVolume::LabelVolume(Grid grid, std::vector<std::int32_t> data) : grid_(grid), data_(std::move(data)) {
  if (data_.size() != grid_.voxel_count())
    throw std::invalid_argument("label data length does not match grid");
  label_set_ = distinct_labels(data_);
}

LabelVolume::LabelVolume(Grid grid, std::vector<std::int32_t> data, std::vector<std::int32_t> label_set)
    : grid_(grid), data_(std::move(data)), label_set_(unique_sorted(std::move(label_set))) {
  if (data_.size() != grid_.voxel_count())
    throw std::invalid_argument("label data length does not match grid");
  for (std::int32_t v : distinct_labels(data_)) {
    if (!std::binary_search(label_set_.begin(), label_set_.end(), v))
      throw std::invalid_argument("label " + std::to_string(v) + " is not in the declared label set");
  }
}

Grid control_grid_for(const Grid& hr, int node_count) {
  if (node_count < 2) throw std::invalid_argument("control grid needs at least 2 nodes per axis");
  Vec3 spacing{};
  for (int a = 0; a < 3; ++a) {
    const int n = hr.dims[a];
    spacing[a] = n > 1 ? hr.spacing[a] * (n - 1) / (node_count - 1) : hr.spacing[a];
  }
  return Grid({node_count, node_count, node_count}, spacing);
}

double trilinear_sample(const IntensityVolume& vol, const Vec3& point, int channel) {
  if (!all_finite(point)) throw std::invalid_argument("trilinear_sample: non-finite coordinates");
  if (channel < 0 || channel >= vol.channels()) throw std::out_of_range("trilinear_sample: bad channel");
  return detail::trilinear(vol.channel(channel), vol.grid().dims, point[0], point[1], point[2]);
}

std::int32_t nearest_sample(const LabelVolume& vol, const Vec3& point) {
  if (!all_finite(point)) throw std::invalid_argument("nearest_sample: non-finite coordinates");
  const Dims& d = vol.grid().dims;
  return vol.at(detail::nearest_index(point[0], d[0]), detail::nearest_index(point[1], d[1]),
                detail::nearest_index(point[2], d[2]));
}

IntensityVolume resample(const IntensityVolume& vol, const Grid& target) {
  if (target.voxel_count() == 0) throw std::invalid_argument("resample: empty target grid");
  if (target == vol.grid()) return vol;

  const Dims& sd = vol.grid().dims;
  std::array<std::vector<detail::AxisWeight>, 3> tables;
  for (int a = 0; a < 3; ++a) {
    const double ratio = target.spacing[a] / vol.grid().spacing[a];
    tables[a].reserve(static_cast<std::size_t>(target.dims[a]));
    for (int i = 0; i < target.dims[a]; ++i) tables[a].push_back(detail::axis_weight(i * ratio, sd[a]));
  }

  IntensityVolume out(target, vol.channels());
  const std::size_t nx = static_cast<std::size_t>(sd[0]);
  const std::size_t nxy = nx * static_cast<std::size_t>(sd[1]);
  for (int c = 0; c < vol.channels(); ++c) {
    const auto src = vol.channel(c);
    auto dst = out.channel(c);
    std::size_t j = 0;
    for (int z = 0; z < target.dims[2]; ++z) {
      const auto& az = tables[2][static_cast<std::size_t>(z)];
      for (int y = 0; y < target.dims[1]; ++y) {
        const auto& ay = tables[1][static_cast<std::size_t>(y)];
        const float* r00 = src.data() + az.i0 * nxy + ay.i0 * nx;
        const float* r10 = src.data() + az.i0 * nxy + ay.i1 * nx;
        const float* r01 = src.data() + az.i1 * nxy + ay.i0 * nx;
        const float* r11 = src.data() + az.i1 * nxy + ay.i1 * nx;
        for (int x = 0; x < target.dims[0]; ++x, ++j) {
          const auto& ax = tables[0][static_cast<std::size_t>(x)];
          const auto lerp = [](double a, double b, double t) { return a * (1.0 - t) + b * t; };
          const double c00 = lerp(r00[ax.i0], r00[ax.i1], ax.t);
          const double c10 = lerp(r10[ax.i0], r10[ax.i1], ax.t);
          const double c01 = lerp(r01[ax.i0], r01[ax.i1], ax.t);
          const double c11 = lerp(r11[ax.i0], r11[ax.i1], ax.t);
          dst[j] = static_cast<float>(lerp(lerp(c00, c10, ay.t), lerp(c01, c11, ay.t), az.t));
        }
      }
    }
  }
  return out;
}

IntensityVolume one_hot(const LabelVolume& labels, std::span<const std::int32_t> ordered_labels) {
  std::unordered_map<std::int32_t, int> position;
  for (std::size_t k = 0; k < ordered_labels.size(); ++k)
    position.emplace(ordered_labels[k], static_cast<int>(k));
  if (position.size() != ordered_labels.size()) throw std::invalid_argument("one_hot: duplicate labels in list");

  IntensityVolume out(labels.grid(), static_cast<int>(ordered_labels.size()));
  const auto data = labels.data();
  for (std::size_t j = 0; j < data.size(); ++j) {
    auto it = position.find(data[j]);
    if (it == position.end())
      throw std::invalid_argument("one_hot: label " + std::to_string(data[j]) + " is not in the label list");
    out.channel(it->second)[j] = 1.0f;
  }
  return out;
}

LabelVolume argmax_labels(const IntensityVolume& probs, std::span<const std::int32_t> ordered_labels) {
  if (static_cast<std::size_t>(probs.channels()) != ordered_labels.size())
    throw std::invalid_argument("argmax_labels: channel count does not match label list");
  std::vector<std::int32_t> out(probs.voxel_count());
  for (std::size_t j = 0; j < out.size(); ++j) {
    int best = 0;
    for (int c = 1; c < probs.channels(); ++c)
      if (probs.channel(c)[j] > probs.channel(best)[j]) best = c;
    out[j] = ordered_labels[static_cast<std::size_t>(best)];
  }
  return LabelVolume(probs.grid(), std::move(out),
                     std::vector<std::int32_t>(ordered_labels.begin(), ordered_labels.end()));
}

double soft_dice(const IntensityVolume& pred, const IntensityVolume& target) {
  if (!(pred.grid() == target.grid()) || pred.channels() != target.channels())
    throw std::invalid_argument("soft_dice: prediction and target shapes differ");
  double total = 0.0;
  for (int c = 0; c < pred.channels(); ++c) {
    const auto p = pred.channel(c);
    const auto t = target.channel(c);
    double inter = 0.0, sum_p = 0.0, sum_t = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
      inter += static_cast<double>(p[j]) * t[j];
      sum_p += p[j];
      sum_t += t[j];
    }
    total += (2.0 * inter + kDiceSmoothing) / (sum_p + sum_t + kDiceSmoothing);
  }
  return total / pred.channels();
}

}  // namespace pvgen
