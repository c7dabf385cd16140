#include "voxelval/spatial.hpp"

#include <cmath>

#include "voxelval/error.hpp"
#include "voxelval/morphology.hpp"
#include "voxelval/random.hpp"
#include "voxelval/summation.hpp"

namespace voxelval {

namespace {

void require_pair(const BinaryMask& pneh, const BinaryMask& etrl) {
  assert_geometry_match(pneh.geometry(), etrl.geometry());
  if (pneh.is_empty()) throw EmptyMaskError("pNEH mask is empty");
  if (etrl.is_empty()) throw EmptyMaskError("ETRL mask is empty");
}

DistanceField edge_field(const BinaryMask& etrl, EdgeReference reference) {
  return reference == EdgeReference::kBoundary ? edt(boundary(etrl)) : edt(etrl);
}

// All four metrics from a precomputed edge distance field.
SpatialMetrics metrics_from(const BinaryMask& pneh, const BinaryMask& etrl, const DistanceField& edge,
                            double near_mm) {
  CompensatedSum distance;
  std::size_t near = 0;
  std::size_t overlap = 0;
  for (std::size_t i = 0; i < pneh.size(); ++i) {
    if (!pneh[i]) continue;
    distance.add(edge[i]);
    near += edge[i] <= near_mm + kDistanceSlack;
    overlap += etrl[i];
  }
  const auto n = static_cast<double>(pneh.count());
  SpatialMetrics m;
  m.near_threshold_mm = near_mm;
  m.mean_edge_distance_mm = distance.value() / n;
  m.fraction_near_edge = static_cast<double>(near) / n;
  m.fraction_inside = static_cast<double>(overlap) / n;
  m.volume_containment_mm3 = static_cast<double>(overlap) * pneh.geometry().voxel_volume_mm3();
  if (overlap > 0) m.volume_containment_log10 = std::log10(m.volume_containment_mm3);
  return m;
}

BinaryMask circular_shift(const BinaryMask& mask, std::size_t dx, std::size_t dy, std::size_t dz) {
  const auto& g = mask.geometry();
  const auto [nx, ny, nz] = g.dims();
  std::vector<std::uint8_t> out(mask.size(), 0);
  for (std::size_t k = 0; k < nz; ++k) {
    for (std::size_t j = 0; j < ny; ++j) {
      for (std::size_t i = 0; i < nx; ++i) {
        if (mask.at(i, j, k)) out[g.index((i + dx) % nx, (j + dy) % ny, (k + dz) % nz)] = 1;
      }
    }
  }
  return BinaryMask(g, std::move(out));
}

std::optional<double> ratio(double observed, double chance) {
  if (chance == 0.0) return std::nullopt;
  return observed / chance;
}

}  // namespace

double mean_edge_distance(const BinaryMask& pneh, const BinaryMask& etrl, EdgeReference reference) {
  require_pair(pneh, etrl);
  return metrics_from(pneh, etrl, edge_field(etrl, reference), 0.0).mean_edge_distance_mm;
}

double fraction_near_edge(const BinaryMask& pneh, const BinaryMask& etrl, double d_mm, EdgeReference reference) {
  require_pair(pneh, etrl);
  if (!(d_mm >= 0.0)) throw InvalidArgument("near-edge distance must be non-negative");
  return metrics_from(pneh, etrl, edge_field(etrl, reference), d_mm).fraction_near_edge;
}

Containment volume_containment(const BinaryMask& pneh, const BinaryMask& etrl) {
  const std::size_t overlap = intersection_count(pneh, etrl);
  Containment c;
  c.mm3 = static_cast<double>(overlap) * pneh.geometry().voxel_volume_mm3();
  if (overlap > 0) c.log10 = std::log10(c.mm3);
  return c;
}

double fraction_inside(const BinaryMask& pneh, const BinaryMask& etrl) {
  assert_geometry_match(pneh.geometry(), etrl.geometry());
  if (pneh.is_empty()) throw EmptyMaskError("pNEH mask is empty");
  return static_cast<double>(intersection_count(pneh, etrl)) / static_cast<double>(pneh.count());
}

SpatialBenchmarks evaluate_benchmarks(const SpatialMetrics& m, double pneh_mm3, double etrl_mm3) {
  SpatialBenchmarks b;
  b.proximity = m.mean_edge_distance_mm <= 5.0;
  b.near_edge = m.fraction_near_edge > 0.30;
  b.containment = m.volume_containment_mm3 > 0.10 * std::min(pneh_mm3, etrl_mm3);
  b.inside = m.fraction_inside > 0.20;
  return b;
}

SpatialReport spatial_report(const BinaryMask& pneh, const BinaryMask& etrl, const SpatialOptions& options) {
  require_pair(pneh, etrl);
  if (!(options.near_threshold_mm >= 0.0)) throw InvalidArgument("near-edge distance must be non-negative");
  SpatialReport report;
  report.metrics = metrics_from(pneh, etrl, edge_field(etrl, options.reference), options.near_threshold_mm);
  report.pneh_mm3 = pneh.volume_mm3();
  report.etrl_mm3 = etrl.volume_mm3();
  report.benchmarks = evaluate_benchmarks(report.metrics, report.pneh_mm3, report.etrl_mm3);
  return report;
}

ChanceRatios ratio_vs_null(const BinaryMask& pneh, const BinaryMask& etrl, const SpatialOptions& options,
                           std::size_t draws, std::uint64_t seed) {
  require_pair(pneh, etrl);
  if (draws == 0) throw InvalidArgument("ratio-vs-null needs at least one draw");
  const DistanceField edge = edge_field(etrl, options.reference);
  const SpatialMetrics observed = metrics_from(pneh, etrl, edge, options.near_threshold_mm);
  const auto dims = pneh.geometry().dims();

  CompensatedSum med, near, vol, inside;
  for (std::size_t k = 0; k < draws; ++k) {
    const auto bits = KeyedStream(seed, k).block(0);
    const BinaryMask shifted = circular_shift(pneh, bits[0] % dims[0], bits[1] % dims[1], bits[2] % dims[2]);
    const SpatialMetrics m = metrics_from(shifted, etrl, edge, options.near_threshold_mm);
    med.add(m.mean_edge_distance_mm);
    near.add(m.fraction_near_edge);
    vol.add(m.volume_containment_mm3);
    inside.add(m.fraction_inside);
  }
  const auto n = static_cast<double>(draws);
  ChanceRatios r;
  r.draws = draws;
  r.seed = seed;
  r.null_mean.near_threshold_mm = options.near_threshold_mm;
  r.null_mean.mean_edge_distance_mm = med.value() / n;
  r.null_mean.fraction_near_edge = near.value() / n;
  r.null_mean.volume_containment_mm3 = vol.value() / n;
  if (r.null_mean.volume_containment_mm3 > 0.0) {
    r.null_mean.volume_containment_log10 = std::log10(r.null_mean.volume_containment_mm3);
  }
  r.null_mean.fraction_inside = inside.value() / n;
  r.mean_edge_distance = ratio(observed.mean_edge_distance_mm, r.null_mean.mean_edge_distance_mm);
  r.fraction_near_edge = ratio(observed.fraction_near_edge, r.null_mean.fraction_near_edge);
  r.volume_containment = ratio(observed.volume_containment_mm3, r.null_mean.volume_containment_mm3);
  r.fraction_inside = ratio(observed.fraction_inside, r.null_mean.fraction_inside);
  return r;
}

}  // namespace voxelval
