#include "doctest.h"
#include "helpers.hpp"

#include "pvgen/acquisition.hpp"

using namespace pvgen;

namespace {

const double kReferenceConstant = 2.0 * std::log(10.0) / (2.0 * std::acos(-1.0));

std::vector<double> reference_kernel(double sigma) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k;
  double s = 0.0;
  for (int i = -r; i <= r; ++i) {
    k.push_back(std::exp(-(i * i) / (2.0 * sigma * sigma)));
    s += k.back();
  }
  for (double& w : k) w /= s;
  return k;
}

}  // namespace

TEST_SUITE("acquisition") {

TEST_CASE("blur_std examples") {
  CHECK(std::abs(blur_std({9, 9, 9}, 1.0, 1.0)[0] - 6.5968) < 1e-3);
  CHECK(std::abs(blur_std({9, 9, 9}, 1.0, 1.0)[0] - 9.0 * kReferenceConstant) < 1e-12);
  CHECK(std::abs(blur_std({1, 1, 1}, 1.0, 1.0)[1] - 0.7330) < 1e-3);
  CHECK(blur_std({3, 4, 5}, 1.0, 0.0) == Vec3{0, 0, 0});
  const Vec3 s = blur_std({1, 9, 1}, 1.0, 1.0);
  CHECK(s[0] == doctest::Approx(0.733).epsilon(1e-3));
  CHECK(s[1] == doctest::Approx(6.597).epsilon(1e-3));
  CHECK_THROWS_AS(blur_std({0, 1, 1}, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(blur_std({1, 1, 1}, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(blur_std({1, 1, 1}, 1.0, -1.0), std::invalid_argument);
}

TEST_CASE("blur_std is linear in alpha and monotone in thickness") {
  for (double t = 0.5; t < 12; t += 0.5) {
    const double base = blur_std({t, t, t}, 1.3, 1.0)[2];
    for (double a : {0.25, 0.75, 1.25, 2.0}) CHECK(blur_std({t, t, t}, 1.3, a)[2] == doctest::Approx(a * base));
    CHECK(blur_std({t + 0.5, t, t}, 1.3, 0.8)[0] > blur_std({t, t, t}, 1.3, 0.8)[0]);
  }
}

TEST_CASE("kernels sum to one and match the closed form") {
  for (double sigma = 0.05; sigma < 12.0; sigma *= 1.3) {
    const auto k = gaussian_kernel(sigma);
    const auto ref = reference_kernel(sigma);
    REQUIRE(k.size() == ref.size());
    CHECK(std::abs(std::accumulate(k.begin(), k.end(), 0.0) - 1.0) < 1e-9);
    for (std::size_t i = 0; i < k.size(); ++i) CHECK(std::abs(k[i] - ref[i]) < 1e-15);
  }
  CHECK(gaussian_kernel(0.0) == std::vector<double>{1.0});
  CHECK_THROWS_AS(gaussian_kernel(-1.0), std::invalid_argument);
}

TEST_CASE("gaussian_blur trivial cases") {
  const Grid g({9, 8, 7}, {1, 1, 1});
  RandomStream rng(1, 0, 0);
  const IntensityVolume v = testing::volume_from(g, [&](int, int, int) { return rng.normal(); }, 2);
  CHECK(gaussian_blur(v, {0, 0, 0}) == v);
  const IntensityVolume c(g, 1, 3.5f);
  const IntensityVolume blurred = gaussian_blur(c, {1.3, 0.2, 4.0}, 0);
  for (float x : blurred.data()) CHECK(x == doctest::Approx(3.5).epsilon(1e-6));
  CHECK_THROWS_AS(gaussian_blur(v, {-1, 0, 0}, 0), std::invalid_argument);
}

TEST_CASE("impulse response equals the truncated Gaussian") {
  const double sigma = 2.0;
  const auto ref = reference_kernel(sigma);
  for (int axis = 0; axis < 3; ++axis) {
    const Grid g({25, 25, 25}, {1, 1, 1});
    IntensityVolume v(g, 1);
    v.channel(0)[g.index(12, 12, 12)] = 1.0f;
    Vec3 s{0, 0, 0};
    s[axis] = sigma;
    const IntensityVolume out = gaussian_blur(v, s, 0);
    for (int i = 0; i < 25; ++i) {
      Dims p{12, 12, 12};
      p[axis] = i;
      const int off = i - 12;
      const double expected = std::abs(off) <= 6 ? ref[static_cast<std::size_t>(off + 6)] : 0.0;
      CHECK(std::abs(out.at(p[0], p[1], p[2]) - expected) < 1e-7);
    }
  }
}

TEST_CASE("blur preserves the mean of an edge-padded volume") {
  // Nonzero content sits more than 3 sigma from the border, so replicate padding is exact.
  const Grid g({40, 40, 40}, {1, 1, 1});
  RandomStream rng(2, 0, 0);
  const IntensityVolume v = testing::volume_from(g, [&](int x, int y, int z) {
    const bool inside = x >= 10 && x < 30 && y >= 10 && y < 30 && z >= 10 && z < 30;
    return inside ? rng.uniform(0, 10) : 0.0;
  });
  const IntensityVolume b = gaussian_blur(v, {2.5, 1.5, 3.0}, 0);
  const double m0 = std::accumulate(v.data().begin(), v.data().end(), 0.0) / v.voxel_count();
  const double m1 = std::accumulate(b.data().begin(), b.data().end(), 0.0) / b.voxel_count();
  CHECK(std::abs(m1 - m0) < 1e-5);
}

TEST_CASE("blurring reduces within-class variance") {
  const Grid g({32, 32, 32}, {1, 1, 1});
  RandomStream rng(3, 0, 0);
  const IntensityVolume v = testing::volume_from(g, [&](int x, int, int) { return (x < 16 ? 10.0 : 30.0) + rng.normal(0, 2); });
  for (double sigma : {0.31, 0.5, 1.0, 3.0}) {
    const IntensityVolume b = gaussian_blur(v, {sigma, sigma, sigma}, 0);
    std::vector<double> before, after;
    for (int z = 0; z < 32; ++z)
      for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 10; ++x) {
          before.push_back(v.at(x, y, z));
          after.push_back(b.at(x, y, z));
        }
    CHECK(testing::variance_of(after) < testing::variance_of(before));
  }
}

TEST_CASE("LR grid geometry") {
  const Grid hr({90, 64, 33}, {1, 1, 1});
  const Grid lr = lr_grid_for(hr, {9, 1, 0.5});
  CHECK(lr.dims == Dims{10, 64, 33});
  CHECK(lr.spacing == Vec3{9, 1, 1});
  CHECK(lr_grid_for(hr, {1, 1, 1}) == hr);
  CHECK(lr_grid_for(hr, {4, 4, 4}).dims == Dims{23, 16, 9});
  CHECK_THROWS_AS(lr_grid_for(hr, {0, 1, 1}), std::invalid_argument);
}

TEST_CASE("subsample and upsample trivial cases") {
  const Grid g({18, 10, 9}, {1, 1, 1});
  RandomStream rng(4, 0, 0);
  const IntensityVolume v = testing::volume_from(g, [&](int, int, int) { return rng.normal(); });
  CHECK(subsample_to_lr(v, {1, 1, 1}) == v);
  CHECK(upsample_to_hr(v, g) == v);
  const IntensityVolume c(g, 1, 2.0f);
  const IntensityVolume down = subsample_to_lr(c, {3, 2.5, 1});
  const IntensityVolume up = upsample_to_hr(IntensityVolume(Grid({6, 4, 9}, {3, 2.5, 1}), 1, 2.0f), g);
  for (float x : down.data()) CHECK(x == 2.0f);
  for (float x : up.data()) CHECK(x == 2.0f);
}

TEST_CASE("linear ramp survives the LR round trip") {
  const Grid g({37, 5, 5}, {1, 1, 1});
  const IntensityVolume ramp = testing::volume_from(g, [](int x, int y, int) { return 1.0 + 0.25 * x - 0.5 * y; });
  const IntensityVolume back = upsample_to_hr(subsample_to_lr(ramp, {4, 1, 1}), g);
  for (int x = 0; x <= 36; ++x)
    for (int y = 0; y < 5; ++y) CHECK(std::abs(back.at(x, y, 2) - ramp.at(x, y, 2)) < 1e-5);
}

TEST_CASE("simulate_acquisition pass-through blurs with the base constant") {
  const Grid g({16, 16, 16}, {1, 1, 1});
  RandomStream src(5, 0, 0);
  const IntensityVolume v = testing::volume_from(g, [&](int, int, int) { return src.normal(); });
  AcquisitionSpec spec{1.0, {{{1, 1, 1}, {1, 1, 1}, {1, 1}}}};
  RandomStream rng(5, 0, 8);
  const Acquisition a = simulate_acquisition(v, spec, rng);
  CHECK(a.alpha == std::vector<double>{1.0});
  CHECK(a.image.grid() == g);
  const double s = kReferenceConstant;
  CHECK(a.image == gaussian_blur(v, {s, s, s}));
}

TEST_CASE("simulate_acquisition with two anisotropic channels") {
  const Grid g({20, 20, 20}, {1, 1, 1});
  RandomStream src(6, 0, 0);
  const IntensityVolume v = testing::volume_from(g, [&](int, int, int) { return src.normal(); }, 2);
  AcquisitionSpec spec{1.0, {{{1, 9, 1}, {1, 9, 1}, {1, 1}}, {{1, 1, 9}, {1, 1, 9}, {1, 1}}}};
  RandomStream rng(6, 0, 8);
  const Acquisition a = simulate_acquisition(v, spec, rng);
  CHECK(a.image.grid() == g);
  CHECK(a.image.channels() == 2);
  const Vec3 s0 = blur_std({1, 9, 1}, 1.0, 1.0), s1 = blur_std({1, 1, 9}, 1.0, 1.0);
  CHECK(s0[1] == doctest::Approx(6.597).epsilon(1e-3));
  CHECK(s1[2] == doctest::Approx(6.597).epsilon(1e-3));
  for (int c = 0; c < 2; ++c) {
    const IntensityVolume expected = upsample_to_hr(
        subsample_to_lr(gaussian_blur(v, c == 0 ? s0 : s1, c), spec.channels[static_cast<std::size_t>(c)].spacing_mm), g);
    CHECK(std::equal(expected.data().begin(), expected.data().end(), a.image.channel(c).begin()));
  }
  AcquisitionSpec wrong{1.0, {spec.channels[0]}};
  CHECK_THROWS(simulate_acquisition(v, wrong, rng));
}

TEST_CASE("simulate_acquisition is deterministic and draws alpha in range") {
  const Grid g({12, 12, 12}, {1, 1, 1});
  const IntensityVolume v(g, 1, 1.0f);
  AcquisitionSpec spec{1.0, {{{1, 3, 1}, {1, 3, 1}, {0.75, 1.25}}}};
  for (std::uint64_t i = 0; i < 50; ++i) {
    RandomStream a(7, i, 8), b(7, i, 8);
    const Acquisition x = simulate_acquisition(v, spec, a);
    const Acquisition y = simulate_acquisition(v, spec, b);
    CHECK(x.image == y.image);
    CHECK(x.alpha == y.alpha);
    CHECK(spec.channels[0].alpha.contains(x.alpha[0]));
  }
}

}
