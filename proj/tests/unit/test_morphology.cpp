#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "voxelval/error.hpp"
#include "voxelval/morphology.hpp"

using namespace voxelval;

namespace {

BinaryMask sphere_mask(const VolumeGeometry& g, std::array<double, 3> c, double r) {
  std::vector<std::uint8_t> bits(g.voxel_count());
  const auto s = g.spacing();
  for (std::size_t idx = 0; idx < bits.size(); ++idx) {
    const auto p = g.coords(idx);
    const double dx = p[0] * s[0] - c[0], dy = p[1] * s[1] - c[1], dz = p[2] * s[2] - c[2];
    bits[idx] = dx * dx + dy * dy + dz * dz <= r * r;
  }
  return BinaryMask(g, bits);
}

}  // namespace

TEST_CASE("edt matches the exhaustive oracle") {
  std::mt19937_64 rng(5);
  for (auto spacing : {Spacing{1, 1, 1}, Spacing{1, 1.2, 2.5}, Spacing{0.5, 3, 1}}) {
    const VolumeGeometry g({9, 11, 7}, spacing);
    for (int rep = 0; rep < 5; ++rep) {
      const auto m = oracle::random_mask(g, rng, 0.01);
      const auto fast = edt(m);
      const auto slow = oracle::edt(m);
      for (std::size_t i = 0; i < m.size(); ++i) REQUIRE(std::fabs(fast[i] - slow[i]) <= 1e-9);
      CHECK_FALSE(fast.reference_empty());
    }
  }
}

TEST_CASE("edt of a single voxel and of an empty mask") {
  const VolumeGeometry g({5, 5, 5}, {1, 2, 3});
  std::vector<std::uint8_t> bits(g.voxel_count(), 0);
  bits[g.index(0, 0, 0)] = 1;
  const auto d = edt(BinaryMask(g, bits));
  CHECK(d.at(4, 4, 4) == doctest::Approx(std::sqrt(16.0 + 64.0 + 144.0)));
  CHECK(d.at(0, 0, 0) == 0.0);
  const auto e = edt(BinaryMask::empty(g));
  CHECK(e.reference_empty());
  CHECK(std::isinf(e[0]));
}

TEST_CASE("boundary matches the oracle") {
  std::mt19937_64 rng(9);
  const VolumeGeometry g({8, 8, 8}, {1, 1, 1});
  for (int rep = 0; rep < 10; ++rep) {
    const auto m = oracle::random_mask(g, rng);
    CHECK(same_voxels(boundary(m), oracle::boundary(m)));
  }
  // A full grid is all boundary only on its faces.
  const auto full = boundary(BinaryMask::full(g));
  CHECK(full.count() == 512 - 216);
}

TEST_CASE("dilation by distance") {
  const VolumeGeometry g({11, 11, 11}, {1, 1, 1});
  std::vector<std::uint8_t> bits(g.voxel_count(), 0);
  bits[g.index(5, 5, 5)] = 1;
  const BinaryMask seed(g, bits);
  // Voxel offsets with |v| <= 2: 1 + 6 + 12 + 8 + 6 = 33.
  CHECK(dilate_mm(seed, 2.0).count() == 33);
  CHECK(dilate_mm(seed, 1.0).count() == 7);
  CHECK(dilate_mm(BinaryMask::empty(g), 2.0).is_empty());
  CHECK_THROWS_AS(dilate_mm(seed, 0.0), InvalidArgument);
  CHECK(is_subset(seed, dilate_mm(seed, 0.5)));
}

TEST_CASE("rim shells on a sphere phantom") {
  const VolumeGeometry g({64, 64, 64}, {1, 1, 1});
  const auto et = sphere_mask(g, {32, 32, 32}, 20.0);
  const std::vector<double> radii{2, 4, 6};
  const auto shells = rim_shells(et, radii, {});
  REQUIRE(shells.shells.size() == 3);
  // Exhaustive count: voxels outside ET whose centre lies within 2 mm of an
  // ET voxel centre.
  const auto reach = oracle::edt(et);
  std::size_t expected = 0;
  for (std::size_t i = 0; i < et.size(); ++i) expected += !et[i] && reach[i] <= 2.0 + 1e-9;
  CHECK(shells.shells[0].count() == expected);
  // Voxel quantisation keeps the discrete shell below the continuous
  // (4/3)pi(22^3 - 20^3); it still lands within 20% of it.
  const double analytic = 4.0 / 3.0 * std::numbers::pi * (22.0 * 22.0 * 22.0 - 20.0 * 20.0 * 20.0);
  CHECK(shells.shells[0].volume_mm3() < analytic);
  CHECK(shells.shells[0].volume_mm3() > 0.8 * analytic);
  CHECK(shells.shell_name(0) == "rim_0-2mm");
  CHECK(shells.band_name(1) == "band_2-4mm");
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(intersection_count(shells.shells[i], et) == 0);
    if (i > 0) CHECK(is_subset(shells.shells[i - 1], shells.shells[i]));
    CHECK(is_subset(shells.bands[i], shells.shells[i]));
    for (std::size_t j = 0; j < i; ++j) CHECK(intersection_count(shells.bands[i], shells.bands[j]) == 0);
  }
}

TEST_CASE("rim exclusions, brain mask and bad radii") {
  const VolumeGeometry g({24, 24, 24}, {1, 1, 1.5});
  const auto et = sphere_mask(g, {12, 12, 18}, 5.0);
  const auto vessel = sphere_mask(g, {18, 12, 18}, 3.0);
  std::vector<std::uint8_t> half(g.voxel_count(), 0);
  for (std::size_t idx = 0; idx < half.size(); ++idx) half[idx] = g.coords(idx)[1] < 12;
  RimOptions options;
  options.brain_mask = BinaryMask(g, half);
  const std::vector<BinaryMask> exclusions{vessel};
  const std::vector<double> radii{2, 4};
  const auto shells = rim_shells(et, radii, exclusions, options);
  for (const auto& s : shells.shells) {
    CHECK(intersection_count(s, vessel) == 0);
    CHECK(intersection_count(s, et) == 0);
    CHECK(is_subset(s, *options.brain_mask));
    CHECK_FALSE(s.is_empty());
  }
  const std::vector<double> descending{4, 2};
  CHECK_THROWS_AS(rim_shells(et, descending, {}), InvalidArgument);
  const std::vector<double> zero{0, 2};
  CHECK_THROWS_AS(rim_shells(et, zero, {}), InvalidArgument);
  const auto none = rim_shells(BinaryMask::empty(g), radii, {});
  CHECK(none.source_empty);
  CHECK(none.shells[0].is_empty());
}

TEST_CASE("rim profile follows a monotone scalar") {
  const VolumeGeometry g({48, 48, 48}, {1, 1, 1});
  const auto et = sphere_mask(g, {24, 24, 24}, 8.0);
  std::vector<double> v(g.voxel_count());
  for (std::size_t idx = 0; idx < v.size(); ++idx) {
    const auto p = g.coords(idx);
    const double r = std::hypot(p[0] - 24.0, p[1] - 24.0, p[2] - 24.0);
    v[idx] = 10.0 * std::exp(-r / 10.0);
  }
  const std::vector<double> radii{2, 4, 6};
  const auto shells = rim_shells(et, radii, {});
  const auto profile = rim_intensity_profile(ScalarVolume(g, v), shells, BinaryMask::empty(g), true);
  REQUIRE(profile.size() == 7);
  CHECK(profile[0].region == "NEH");
  CHECK_FALSE(profile[0].stats.mean.has_value());
  CHECK(*profile[1].stats.mean > *profile[2].stats.mean);
  CHECK(*profile[2].stats.mean > *profile[3].stats.mean);
  CHECK(*profile[4].stats.mean > *profile[5].stats.mean);
  CHECK(*profile[5].stats.mean > *profile[6].stats.mean);
}
