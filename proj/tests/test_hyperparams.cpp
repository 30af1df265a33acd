#include "doctest.h"
#include "helpers.hpp"

#include "pvgen/hyperparams.hpp"

using namespace pvgen;

TEST_SUITE("hyperparams") {

TEST_CASE("median conventions") {
  CHECK(median({3.0}) == 3.0);
  CHECK(median({1.0, 3.0}) == 2.0);
  CHECK(median({5.0, 1.0, 4.0, 2.0}) == 3.0);
  CHECK(median({9.0, 1.0, 5.0}) == 5.0);
  CHECK_THROWS_AS(median({}), std::invalid_argument);
  const std::vector<double> v{1, 2, 3, 4, 100};
  CHECK(median_absolute_deviation(v, 3.0) == 1.0);
}

TEST_CASE("constant class and midpoint class") {
  const Grid g({4, 1, 1}, {1, 1, 1});
  const IntensityVolume img(g, 1, std::vector<float>{7, 7, 1, 3});
  const LabelVolume seg(g, {0, 0, 1, 1});
  const std::vector<std::int32_t> labels{0, 1, 2};
  const ClassStats s = estimate_class_stats(img, seg, labels);
  CHECK(s.at(0, 0)->mean == 7.0);
  CHECK(s.at(0, 0)->variance == 0.0);
  CHECK(s.at(1, 0)->mean == 2.0);
  CHECK(s.at(1, 0)->variance == doctest::Approx(1.4826 * 1.4826));
  CHECK_FALSE(s.at(2, 0).has_value());
}

TEST_CASE("robust estimates of a Gaussian class") {
  const Grid g({100, 100, 10}, {1, 1, 1});
  RandomStream rng(1, 0, 0);
  const IntensityVolume img = testing::volume_from(g, [&](int, int, int) { return rng.normal(100, 10); });
  const LabelVolume seg(g, std::vector<std::int32_t>(g.voxel_count(), 3));
  const std::vector<std::int32_t> labels{3};
  const RobustStat s = *estimate_class_stats(img, seg, labels).at(0, 0);
  CHECK(s.mean >= 99.8);
  CHECK(s.mean <= 100.2);
  CHECK(std::sqrt(s.variance) >= 9.8);
  CHECK(std::sqrt(s.variance) <= 10.2);
}

TEST_CASE("estimates are invariant to voxel order") {
  const Grid g({30, 20, 10}, {1, 1, 1});
  RandomStream rng(2, 0, 0);
  std::vector<float> values(g.voxel_count());
  std::vector<std::int32_t> labels(g.voxel_count());
  for (std::size_t j = 0; j < values.size(); ++j) {
    labels[j] = static_cast<std::int32_t>(rng.below(3));
    values[j] = static_cast<float>(rng.normal(10.0 * labels[j], 1.0 + labels[j]));
  }
  std::vector<std::size_t> perm(values.size());
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
  std::vector<float> pv(values.size());
  std::vector<std::int32_t> pl(values.size());
  for (std::size_t i = 0; i < perm.size(); ++i) pv[i] = values[perm[i]], pl[i] = labels[perm[i]];

  const std::vector<std::int32_t> order{0, 1, 2};
  const ClassStats a = estimate_class_stats(IntensityVolume(g, 1, values), LabelVolume(g, labels), order);
  const ClassStats b = estimate_class_stats(IntensityVolume(g, 1, pv), LabelVolume(g, pl), order);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(a.at(k, 0)->mean == b.at(k, 0)->mean);
    CHECK(a.at(k, 0)->variance == b.at(k, 0)->variance);
  }
}

TEST_CASE("variance rescaling") {
  CHECK(rescale_variance(25.0, 1.0, 1.0) == 25.0);
  CHECK(rescale_variance(25.0, 1.0, 1.0 * 1.0 * 5.0) == 125.0);
  CHECK(rescale_variance(2 * 3.7, 1.0, 3.0) == 2 * rescale_variance(3.7, 1.0, 3.0));
  CHECK_THROWS_AS(rescale_variance(1.0, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(rescale_variance(1.0, 1.0, -2.0), std::invalid_argument);
}

TEST_CASE("rescaling undoes box averaging of white noise") {
  // Averaging M independent HR voxels divides their variance by M.
  const int M = 5;
  const Grid lr({40, 40, 20}, {1, 1, static_cast<double>(M)});
  RandomStream rng(3, 0, 0);
  const double sigma = 6.0;
  const IntensityVolume img = testing::volume_from(lr, [&](int, int, int) {
    double s = 0.0;
    for (int m = 0; m < M; ++m) s += rng.normal(50.0, sigma);
    return s / M;
  });
  const LabelVolume seg(lr, std::vector<std::int32_t>(lr.voxel_count(), 1));
  const std::vector<std::int32_t> labels{1};
  const ClassStats s = rescale_variances(estimate_class_stats(img, seg, labels), 1.0, lr.voxel_volume());
  CHECK(s.at(0, 0)->variance == doctest::Approx(sigma * sigma).epsilon(0.05));
}

TEST_CASE("prior fitting examples") {
  auto scan = [](double mean, double var) {
    return ClassStats{{1}, 1, {RobustStat{mean, var}}};
  };
  const std::vector<ClassStats> one{scan(42.0, 9.0)};
  const GmmPriors p1 = fit_gaussian_priors(one);
  CHECK(p1.mean_prior[0] == NormalPrior{42.0, 0.0});
  CHECK(p1.logvar_prior[0] == NormalPrior{std::log(9.0), 0.0});

  const std::vector<ClassStats> two{scan(90.0, 4.0), scan(110.0, 16.0)};
  const GmmPriors p2 = fit_gaussian_priors(two);
  CHECK(p2.mean_prior[0].location == 100.0);
  CHECK(p2.mean_prior[0].scale == doctest::Approx(5.0 * std::sqrt(200.0)));
  CHECK(p2.mean_prior[0].scale == doctest::Approx(70.71).epsilon(1e-4));
  CHECK(p2.logvar_prior[0].location == doctest::Approx(std::log(8.0)));

  const GmmPriors raw = fit_gaussian_priors(two, {1.0, 0.0});
  CHECK(raw.mean_prior[0].scale * 5.0 == p2.mean_prior[0].scale);
  CHECK(raw.logvar_prior[0].scale * 5.0 == p2.logvar_prior[0].scale);

  const GmmPriors floored = fit_gaussian_priors(one, {5.0, 0.1});
  CHECK(floored.mean_prior[0].scale == doctest::Approx(0.5));
}

TEST_CASE("zero variance is floored and missing classes are skipped or reported") {
  const std::vector<ClassStats> scans{ClassStats{{1, 2}, 1, {RobustStat{3.0, 0.0}, std::nullopt}},
                                      ClassStats{{1, 2}, 1, {RobustStat{5.0, 0.0}, RobustStat{7.0, 1.0}}}};
  const GmmPriors p = fit_gaussian_priors(scans);
  CHECK(p.logvar_prior[0].location == doctest::Approx(std::log(kVarianceFloor)));
  CHECK(p.mean_prior[1] == NormalPrior{7.0, 0.0});

  const std::vector<ClassStats> missing{ClassStats{{1, 9}, 1, {RobustStat{3.0, 1.0}, std::nullopt}}};
  try {
    fit_gaussian_priors(missing);
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("9") != std::string::npos);
  }
}

TEST_CASE("prior fit does not depend on scan order") {
  std::vector<ClassStats> scans;
  RandomStream rng(4, 0, 0);
  for (int i = 0; i < 7; ++i) scans.push_back(ClassStats{{0}, 1, {RobustStat{rng.normal(50, 5), rng.uniform(1, 9)}}});
  const GmmPriors a = fit_gaussian_priors(scans);
  std::reverse(scans.begin(), scans.end());
  CHECK(fit_gaussian_priors(scans) == a);
}

}
