#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "voxelval/error.hpp"
#include "voxelval/fusion.hpp"

using namespace voxelval;

TEST_CASE("default fusion constants") {
  const FusionConfig c;
  CHECK(c.sigma_mm == 1.5);
  CHECK(c.threshold == 0.5);
  CHECK_NOTHROW(c.validate());
  FusionConfig bad = c;
  bad.threshold = 0.9;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = c;
  bad.sigma_mm = -1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("kernels are normalised and symmetric") {
  for (double sigma : {0.3, 0.8, 1.5, 1.25, 2.7, 5.0}) {
    const auto k = gaussian_kernel(sigma, 4.0);
    const auto radius = static_cast<std::size_t>(std::ceil(4.0 * sigma));
    REQUIRE(k.size() == 2 * radius + 1);
    double sum = 0.0;
    for (double w : k) sum += w;
    CHECK(std::fabs(sum - 1.0) <= 1e-9);
    for (std::size_t i = 0; i < k.size(); ++i) CHECK(k[i] == k[k.size() - 1 - i]);
    CHECK(k[radius] == *std::max_element(k.begin(), k.end()));
  }
  CHECK_THROWS_AS(gaussian_kernel(0.0, 4.0), InvalidArgument);
}

TEST_CASE("separable smoothing equals the dense oracle") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (auto spacing : {Spacing{1, 1, 1}, Spacing{1, 1.2, 2.5}}) {
    const VolumeGeometry g({15, 15, 15}, spacing);
    std::vector<double> v(g.voxel_count());
    for (auto& x : v) x = u(rng);
    const auto fast = gaussian_smooth(ScalarVolume(g, v), 1.5, 4.0);
    const auto slow = oracle::dense_gaussian(g, v, 1.5, 4.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) worst = std::max(worst, std::fabs(fast[i] - slow[i]));
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("constant fields are preserved exactly") {
  const VolumeGeometry g({13, 9, 7}, {0.7, 1.3, 2.1});
  for (double c : {0.0, 0.1, 0.3, 0.5, 1.0, 123.456, -7.25}) {
    const auto s = gaussian_smooth(ScalarVolume::filled(g, c), 1.5);
    for (std::size_t i = 0; i < s.size(); ++i) REQUIRE(s[i] == c);
  }
  const auto p = gaussian_smooth_3d(ProbabilityVolume::filled(g, 0.3), 1.5);
  for (std::size_t i = 0; i < p.size(); ++i) REQUIRE(p[i] == 0.3);
}

TEST_CASE("sigma zero is the identity") {
  const VolumeGeometry g({4, 4, 4}, {1, 1, 1});
  std::vector<double> v(g.voxel_count());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  const auto s = gaussian_smooth(ScalarVolume(g, v), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(s[i] == v[i]);
}

TEST_CASE("probability smoothing stays in [0, 1] and preserves mass away from borders") {
  // Radius-6 kernel: no voxel with a truncated window can see the impulse.
  const VolumeGeometry g({41, 41, 41}, {1, 1, 1});
  std::vector<double> v(g.voxel_count(), 0.0);
  v[g.index(20, 20, 20)] = 1.0;
  const auto s = gaussian_smooth_3d(ProbabilityVolume(g, v), 1.5);
  double mass = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s[i] >= 0.0);
    CHECK(s[i] <= 1.0);
    mass += s[i];
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("averaging and thresholding") {
  const VolumeGeometry g({2, 1, 1}, {1, 1, 1});
  const std::vector<ProbabilityVolume> maps{ProbabilityVolume(g, {0.2, 0.6}), ProbabilityVolume(g, {0.8, 0.4}),
                                            ProbabilityVolume(g, {0.5, 0.5})};
  const auto mean = average_probability_maps(maps);
  CHECK(mean[0] == doctest::Approx(0.5));
  CHECK(mean[1] == doctest::Approx(0.5));
  CHECK_THROWS_AS(average_probability_maps(std::vector<ProbabilityVolume>{}), InvalidArgument);

  const ProbabilityVolume p(g, {0.5, 0.4999999});
  const auto m = threshold_map(p, 0.5);
  CHECK(m[0]);
  CHECK_FALSE(m[1]);
  CHECK_THROWS_AS(threshold_map(p, 0.0), InvalidArgument);
  CHECK_THROWS_AS(threshold_map(p, 1.0), InvalidArgument);

  const std::vector<ProbabilityVolume> other{ProbabilityVolume(VolumeGeometry({2, 1, 1}, {1, 1, 2}), {0, 0})};
  std::vector<ProbabilityVolume> mixed{maps[0], other[0]};
  CHECK_THROWS_AS(average_probability_maps(mixed), GeometryMismatch);
}

TEST_CASE("fusion classifies by smoothed probability") {
  const VolumeGeometry g({16, 16, 16}, {1, 1, 1});
  std::vector<double> a(g.voxel_count(), 0.0), b(g.voxel_count(), 0.0);
  for (std::size_t k = 4; k < 12; ++k)
    for (std::size_t j = 4; j < 12; ++j)
      for (std::size_t i = 4; i < 12; ++i) {
        a[g.index(i, j, k)] = 1.0;
        b[g.index(i, j, k)] = i < 10 ? 1.0 : 0.0;
      }
  const std::vector<ProbabilityVolume> maps{ProbabilityVolume(g, a), ProbabilityVolume(g, b)};
  const FusionConfig config;
  const auto r = fuse(maps, config);
  for (std::size_t i = 0; i < g.voxel_count(); ++i) {
    CHECK(r.mask[i] == (r.smoothed[i] >= 0.5));
    const int expected = r.smoothed[i] >= 0.75 ? 2 : (r.smoothed[i] >= 0.5 ? 1 : 0);
    CHECK(r.confidence[i] == expected);
  }
  CHECK(r.mask.at(7, 7, 7));
  CHECK_FALSE(r.mask.at(0, 0, 0));
  CHECK(r.confidence.at(7, 7, 7) == kHighConfidence);
  const auto labels = fuse_to_confidence_labels(maps, config);
  CHECK(labels.alphabet() == std::vector<int>{0, 1, 2});
}
