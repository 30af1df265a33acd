#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace pvgen {

using Vec3 = std::array<double, 3>;
using Dims = std::array<int, 3>;

// Closed interval used for the uniform parameter ranges.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool valid() const { return std::isfinite(lo) && std::isfinite(hi) && lo <= hi; }
  bool contains(double v) const { return v >= lo && v <= hi; }
  bool operator==(const Interval&) const = default;
};

// Error taxonomy. The CLI maps these onto process exit codes.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline bool all_finite(const Vec3& v) {
  return std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]);
}

}  // namespace pvgen
