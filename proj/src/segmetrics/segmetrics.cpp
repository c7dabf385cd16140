#include "voxelval/segmetrics.hpp"

#include <algorithm>
#include <cmath>

#include "voxelval/error.hpp"
#include "voxelval/morphology.hpp"

namespace voxelval {

double dice(const BinaryMask& a, const BinaryMask& b) {
  const std::size_t overlap = intersection_count(a, b);
  const std::size_t total = a.count() + b.count();
  if (total == 0) return 1.0;
  return 2.0 * static_cast<double>(overlap) / static_cast<double>(total);
}

double jaccard(const BinaryMask& a, const BinaryMask& b) {
  const std::size_t overlap = intersection_count(a, b);
  const std::size_t uni = a.count() + b.count() - overlap;
  if (uni == 0) return 1.0;
  return static_cast<double>(overlap) / static_cast<double>(uni);
}

double percentile_linear(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidArgument("percentile of an empty sample");
  if (!(q >= 0.0 && q <= 100.0)) throw InvalidArgument("percentile must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  const double rank = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  if (lo + 1 >= values.size()) return values.back();
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

namespace {

// Distances from each boundary voxel of `from` to the boundary of `to`.
std::vector<double> directed_boundary_distances(const BinaryMask& from_boundary, const DistanceField& to_field) {
  std::vector<double> out;
  out.reserve(from_boundary.count());
  for (std::size_t i = 0; i < from_boundary.size(); ++i) {
    if (from_boundary[i]) out.push_back(to_field[i]);
  }
  return out;
}

struct BoundaryPair {
  BinaryMask a_boundary;
  BinaryMask b_boundary;
  DistanceField a_field;
  DistanceField b_field;
};

BoundaryPair boundaries(const BinaryMask& a, const BinaryMask& b) {
  assert_geometry_match(a.geometry(), b.geometry());
  if (a.is_empty() || b.is_empty()) throw EmptyMaskError("boundary metrics need two non-empty masks");
  BinaryMask ab = boundary(a);
  BinaryMask bb = boundary(b);
  DistanceField af = edt(ab);
  DistanceField bf = edt(bb);
  return BoundaryPair{std::move(ab), std::move(bb), std::move(af), std::move(bf)};
}

double hd95_from(const BoundaryPair& p) {
  const double ab = percentile_linear(directed_boundary_distances(p.a_boundary, p.b_field), 95.0);
  const double ba = percentile_linear(directed_boundary_distances(p.b_boundary, p.a_field), 95.0);
  return std::max(ab, ba);
}

double surface_dice_from(const BoundaryPair& p, double tau_mm) {
  std::size_t within = 0;
  for (std::size_t i = 0; i < p.a_boundary.size(); ++i) {
    if (p.a_boundary[i] && p.b_field[i] <= tau_mm + kDistanceSlack) ++within;
    if (p.b_boundary[i] && p.a_field[i] <= tau_mm + kDistanceSlack) ++within;
  }
  return static_cast<double>(within) / static_cast<double>(p.a_boundary.count() + p.b_boundary.count());
}

}  // namespace

double hausdorff95(const BinaryMask& a, const BinaryMask& b) { return hd95_from(boundaries(a, b)); }

double surface_dice(const BinaryMask& a, const BinaryMask& b, double tau_mm) {
  if (!(tau_mm >= 0.0)) throw InvalidArgument("surface dice tolerance must be non-negative");
  return surface_dice_from(boundaries(a, b), tau_mm);
}

RegionMetrics region_metrics(const BinaryMask& a, const BinaryMask& b, double tau_mm, std::string region) {
  RegionMetrics m;
  m.region = std::move(region);
  m.dice = dice(a, b);
  m.jaccard = jaccard(a, b);
  m.a_voxels = a.count();
  m.b_voxels = b.count();
  if (!a.is_empty() && !b.is_empty()) {
    const BoundaryPair p = boundaries(a, b);
    m.hausdorff95_mm = hd95_from(p);
    m.surface_dice = surface_dice_from(p, tau_mm);
  }
  return m;
}

CaseReport evaluate_case(const LabelVolume& a, const LabelVolume& b, std::span<const RegionPreset> regions,
                         double tau_mm, std::string case_id) {
  assert_geometry_match(a.geometry(), b.geometry());
  CaseReport report;
  report.case_id = std::move(case_id);
  for (const auto& region : regions) {
    report.regions.push_back(region_metrics(label_mask(a, region), label_mask(b, region), tau_mm, region.name));
  }
  return report;
}

}  // namespace voxelval
