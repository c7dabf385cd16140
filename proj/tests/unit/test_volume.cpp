#include <doctest.h>

#include <cmath>
#include <random>

#include "voxelval/error.hpp"
#include "voxelval/volume.hpp"

using namespace voxelval;

namespace {

VolumeGeometry grid(std::size_t n = 4, Spacing s = {1.0, 1.0, 1.0}) { return VolumeGeometry({n, n, n}, s); }

}  // namespace

TEST_CASE("geometry validation") {
  CHECK_THROWS_AS(VolumeGeometry({0, 4, 4}, {1, 1, 1}), InvalidArgument);
  CHECK_THROWS_AS(VolumeGeometry({4, 4, 4}, {1, -1, 1}), InvalidArgument);
  CHECK_THROWS_AS(VolumeGeometry({4, 4, 4}, {1, 1, 0}), InvalidArgument);

  Affine bad = diagonal_affine({1, 1, 1});
  bad[3][0] = 0.5;
  CHECK_THROWS_AS(VolumeGeometry({4, 4, 4}, {1, 1, 1}, bad), InvalidArgument);

  Affine scaled = diagonal_affine({2, 1, 1});
  CHECK_THROWS_AS(VolumeGeometry({4, 4, 4}, {1, 1, 1}, scaled), InvalidArgument);

  // Rotations and flips are fine as long as column norms match the spacing.
  Affine flipped = diagonal_affine({1, 2, 3});
  flipped[0][0] = -1.0;
  CHECK_NOTHROW(VolumeGeometry({4, 4, 4}, {1, 2, 3}, flipped));
}

TEST_CASE("voxel index is x-fastest") {
  const VolumeGeometry g({3, 4, 5}, {1, 1, 1});
  CHECK(g.index(1, 0, 0) == 1);
  CHECK(g.index(0, 1, 0) == 3);
  CHECK(g.index(0, 0, 1) == 12);
  for (std::size_t idx = 0; idx < g.voxel_count(); ++idx) {
    const auto c = g.coords(idx);
    CHECK(g.index(c[0], c[1], c[2]) == idx);
  }
}

TEST_CASE("geometry mismatch is detected beyond tolerance") {
  const VolumeGeometry a({4, 4, 4}, {1.0, 1.0, 1.0});
  CHECK_FALSE(geometry_difference(a, VolumeGeometry({4, 4, 4}, {1.0, 1.0, 1.0 + 1e-5})).has_value());
  CHECK(geometry_difference(a, VolumeGeometry({4, 4, 4}, {1.0, 1.0, 1.01})).has_value());
  CHECK(geometry_difference(a, VolumeGeometry({4, 4, 5}, {1.0, 1.0, 1.0})).has_value());
  Affine shifted = diagonal_affine({1, 1, 1});
  shifted[0][3] = 0.5;
  CHECK(geometry_difference(a, VolumeGeometry({4, 4, 4}, {1, 1, 1}, shifted)).has_value());
  CHECK_THROWS_AS(assert_geometry_match(a, VolumeGeometry({4, 4, 4}, {1, 1, 2})), GeometryMismatch);
  const auto m1 = BinaryMask::full(a);
  const auto m2 = BinaryMask::full(VolumeGeometry({4, 4, 4}, {1, 1, 2}));
  CHECK_THROWS_AS(mask_and(m1, m2), GeometryMismatch);
}

TEST_CASE("value domains are enforced") {
  const auto g = grid(2);
  std::vector<double> v(8, 0.5);
  v[3] = std::nan("");
  CHECK_THROWS_AS(ScalarVolume(g, v), InvalidArgument);
  v[3] = 1.5;
  CHECK_NOTHROW(ScalarVolume(g, v));
  CHECK_THROWS_AS(ProbabilityVolume(g, v), InvalidArgument);
  v[3] = -0.1;
  CHECK_THROWS_AS(ProbabilityVolume(g, v), InvalidArgument);
  CHECK_THROWS_AS(ScalarVolume(g, std::vector<double>(7, 0.0)), InvalidArgument);

  std::vector<std::int32_t> labels(8, 0);
  labels[0] = -1;
  CHECK_THROWS_AS(LabelVolume(g, labels), InvalidArgument);
}

TEST_CASE("label alphabets") {
  const auto g = grid(2);
  LabelVolume brats(g, {0, 1, 2, 3, 4, 0, 0, 0});
  CHECK(brats.alphabet() == brats_alphabet());
  LabelVolume other(g, {0, 7, 7, 9, 0, 0, 0, 0});
  CHECK(other.alphabet() == std::vector<int>{0, 7, 9});
  CHECK_THROWS_AS(label_mask(other, region_preset("ET")), InvalidArgument);
  CHECK_THROWS_AS(LabelVolume(g, {0, 5, 0, 0, 0, 0, 0, 0}, std::vector<int>{0, 1}), InvalidArgument);
}

TEST_CASE("composite regions") {
  CHECK(region_preset("ET").labels == std::vector<int>{4});
  CHECK(region_preset("TC").labels == std::vector<int>{1, 3, 4});
  CHECK(region_preset("WT").labels == std::vector<int>{1, 2, 3, 4});
  CHECK(region_preset("NEH").labels == std::vector<int>{3});
  CHECK(region_preset("L7").labels == std::vector<int>{7});
  CHECK_THROWS_AS(region_preset("XX"), InvalidArgument);
  CHECK_THROWS_AS(region_preset("L"), InvalidArgument);

  const auto g = grid(2);
  LabelVolume seg(g, {0, 1, 2, 3, 4, 4, 3, 0});
  CHECK(label_mask(seg, region_preset("ET")).count() == 2);
  CHECK(label_mask(seg, region_preset("TC")).count() == 5);
  CHECK(label_mask(seg, region_preset("WT")).count() == 6);
  CHECK(nonzero_mask(seg).count() == 6);
}

TEST_CASE("mask algebra against per-voxel logic") {
  std::mt19937_64 rng(3);
  std::bernoulli_distribution coin(0.4);
  const auto g = grid(5);
  std::vector<std::uint8_t> a(g.voxel_count()), b(g.voxel_count());
  for (auto& x : a) x = coin(rng);
  for (auto& x : b) x = coin(rng) ? 3 : 0;
  const BinaryMask ma(g, a), mb(g, b);
  const auto o = mask_or(ma, mb), n = mask_and(ma, mb), m = mask_minus(ma, mb), c = mask_not(ma);
  std::size_t inter = 0;
  for (std::size_t i = 0; i < g.voxel_count(); ++i) {
    CHECK(o[i] == (a[i] || b[i]));
    CHECK(n[i] == (a[i] && b[i]));
    CHECK(m[i] == (a[i] && !b[i]));
    CHECK(c[i] == !a[i]);
    inter += a[i] && b[i];
  }
  CHECK(intersection_count(ma, mb) == inter);
  CHECK(is_subset(n, ma));
  CHECK(is_subset(m, ma));
  const bool outside = is_subset(o, ma) && mb.count() > n.count();
  CHECK_FALSE(outside);
  CHECK(mb.bits()[0] <= 1);
  CHECK(same_voxels(mask_or(ma, BinaryMask::empty(g)), ma));
}

TEST_CASE("masked statistics") {
  const VolumeGeometry g({2, 2, 1}, {1.0, 2.0, 3.0});
  const ScalarVolume v(g, {1.0, 2.0, 3.0, 10.0});
  const BinaryMask m(g, {1, 1, 1, 0});
  const auto s = masked_stats(v, m);
  REQUIRE(s.mean);
  CHECK(*s.mean == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(*s.sd == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
  CHECK(s.voxel_count == 3);
  CHECK(s.volume_mm3 == doctest::Approx(18.0));

  const auto e = masked_stats(v, BinaryMask::empty(g));
  CHECK(e.empty());
  CHECK_FALSE(e.mean.has_value());
  CHECK_FALSE(e.sd.has_value());

  // Constant fields give the constant exactly and zero spread.
  const auto big = VolumeGeometry({17, 13, 11}, {1, 1, 1});
  const auto cst = masked_stats(ScalarVolume::filled(big, 0.1), BinaryMask::full(big));
  CHECK(*cst.mean == 0.1);
  CHECK(*cst.sd == 0.0);
}
