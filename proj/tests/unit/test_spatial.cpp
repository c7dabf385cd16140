#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "voxelval/error.hpp"
#include "voxelval/morphology.hpp"
#include "voxelval/spatial.hpp"

using namespace voxelval;

TEST_CASE("mean edge distance matches the oracle") {
  std::mt19937_64 rng(31);
  for (auto spacing : {Spacing{1, 1, 1}, Spacing{1, 1.2, 2.5}}) {
    const VolumeGeometry g({10, 10, 8}, spacing);
    for (int rep = 0; rep < 8; ++rep) {
      const auto p = oracle::random_mask(g, rng);
      const auto e = oracle::random_mask(g, rng);
      CHECK(std::fabs(mean_edge_distance(p, e) - oracle::mean_edge_distance(p, e)) <= 1e-9);
    }
  }
}

TEST_CASE("near-edge fraction counts the threshold inclusively") {
  const VolumeGeometry g({12, 1, 1}, {1, 1, 1});
  std::vector<std::uint8_t> p(12, 0), e(12, 0);
  e[0] = 1;
  for (std::size_t i = 1; i < 12; ++i) p[i] = 1;
  const BinaryMask mp(g, p), me(g, e);
  // Distances 1..11 to the single ETRL voxel.
  CHECK(fraction_near_edge(mp, me, 5.0) == doctest::Approx(5.0 / 11.0));
  CHECK(mean_edge_distance(mp, me) == doctest::Approx(6.0));
  CHECK(fraction_inside(mp, me) == 0.0);
  CHECK_FALSE(volume_containment(mp, me).log10.has_value());
}

TEST_CASE("boundary versus region reference") {
  const VolumeGeometry g({9, 9, 9}, {1, 1, 1});
  std::vector<std::uint8_t> e(g.voxel_count(), 0);
  for (std::size_t k = 1; k < 8; ++k)
    for (std::size_t j = 1; j < 8; ++j)
      for (std::size_t i = 1; i < 8; ++i) e[g.index(i, j, k)] = 1;
  std::vector<std::uint8_t> p(g.voxel_count(), 0);
  p[g.index(4, 4, 4)] = 1;
  const BinaryMask mp(g, p), me(g, e);
  CHECK(mean_edge_distance(mp, me, EdgeReference::kBoundary) == 3.0);
  CHECK(mean_edge_distance(mp, me, EdgeReference::kRegion) == 0.0);
  CHECK(fraction_inside(mp, me) == 1.0);
  CHECK(volume_containment(mp, me).mm3 == 1.0);
  CHECK(*volume_containment(mp, me).log10 == 0.0);
}

TEST_CASE("identical masks read as favourable") {
  const VolumeGeometry g({16, 16, 16}, {1, 1, 1});
  std::vector<std::uint8_t> bits(g.voxel_count(), 0);
  for (std::size_t k = 4; k < 12; ++k)
    for (std::size_t j = 4; j < 12; ++j)
      for (std::size_t i = 4; i < 12; ++i) bits[g.index(i, j, k)] = 1;
  const BinaryMask m(g, bits);
  const auto r = spatial_report(m, m);
  CHECK(r.metrics.fraction_inside == 1.0);
  CHECK(r.metrics.volume_containment_mm3 == m.volume_mm3());
  CHECK(r.metrics.fraction_near_edge == 1.0);
  CHECK(r.benchmarks.proximity);
  CHECK(r.benchmarks.near_edge);
  CHECK(r.benchmarks.containment);
  CHECK(r.benchmarks.inside);

  SpatialOptions region;
  region.reference = EdgeReference::kRegion;
  CHECK(spatial_report(m, m, region).metrics.mean_edge_distance_mm == 0.0);
}

TEST_CASE("benchmark thresholds") {
  SpatialMetrics m;
  m.mean_edge_distance_mm = 5.0;
  m.fraction_near_edge = 0.30;
  m.volume_containment_mm3 = 10.0;
  m.fraction_inside = 0.20;
  auto b = evaluate_benchmarks(m, 100.0, 200.0);
  CHECK(b.proximity);
  CHECK_FALSE(b.near_edge);
  CHECK_FALSE(b.containment);
  CHECK_FALSE(b.inside);
  m.mean_edge_distance_mm = 5.01;
  m.fraction_near_edge = 0.31;
  m.volume_containment_mm3 = 10.01;
  m.fraction_inside = 0.21;
  b = evaluate_benchmarks(m, 100.0, 200.0);
  CHECK_FALSE(b.proximity);
  CHECK(b.near_edge);
  CHECK(b.containment);
  CHECK(b.inside);
}

TEST_CASE("empty inputs are errors") {
  const VolumeGeometry g({4, 4, 4}, {1, 1, 1});
  const auto full = BinaryMask::full(g);
  CHECK_THROWS_AS(spatial_report(BinaryMask::empty(g), full), EmptyMaskError);
  CHECK_THROWS_AS(spatial_report(full, BinaryMask::empty(g)), EmptyMaskError);
  CHECK_THROWS_AS(fraction_inside(BinaryMask::empty(g), full), EmptyMaskError);
}

TEST_CASE("chance ratios are seeded and deterministic") {
  std::mt19937_64 rng(2);
  const VolumeGeometry g({16, 16, 16}, {1, 1, 1});
  const auto p = oracle::random_mask(g, rng, 0.0);
  const auto e = oracle::random_mask(g, rng, 0.0);
  const auto a = ratio_vs_null(p, e, {}, 20, 7);
  const auto b = ratio_vs_null(p, e, {}, 20, 7);
  const auto c = ratio_vs_null(p, e, {}, 20, 8);
  CHECK(a.null_mean.mean_edge_distance_mm == b.null_mean.mean_edge_distance_mm);
  CHECK(a.null_mean.fraction_inside == b.null_mean.fraction_inside);
  CHECK(a.draws == 20);
  CHECK(a.seed == 7);
  CHECK((a.null_mean.mean_edge_distance_mm != c.null_mean.mean_edge_distance_mm ||
         a.null_mean.fraction_inside != c.null_mean.fraction_inside));
  const auto observed = spatial_report(p, e).metrics;
  if (a.fraction_inside) {
    CHECK(*a.fraction_inside == doctest::Approx(observed.fraction_inside / a.null_mean.fraction_inside));
  }
  // Circular shifts preserve the pNEH volume, so every null fraction is a
  // valid fraction.
  CHECK(a.null_mean.fraction_inside >= 0.0);
  CHECK(a.null_mean.fraction_inside <= 1.0);
}
