#pragma once

#include <cstdint>
#include <optional>

#include "voxelval/volume.hpp"

namespace voxelval {

/// What "distance to ETRL" is measured against.
enum class EdgeReference {
  /// Boundary voxels of ETRL; voxels deep inside ETRL have positive distance.
  kBoundary,
  /// Any ETRL voxel; distance is 0 inside ETRL.
  kRegion,
};

struct SpatialOptions {
  double near_threshold_mm = 5.0;
  EdgeReference reference = EdgeReference::kBoundary;
};

/// Mean distance (mm) from pNEH voxels to the ETRL edge.
double mean_edge_distance(const BinaryMask& pneh, const BinaryMask& etrl,
                          EdgeReference reference = EdgeReference::kBoundary);

/// Fraction of pNEH voxels within d_mm of the ETRL edge.
double fraction_near_edge(const BinaryMask& pneh, const BinaryMask& etrl, double d_mm = 5.0,
                          EdgeReference reference = EdgeReference::kBoundary);

struct Containment {
  double mm3 = 0.0;
  /// Absent when there is no overlap.
  std::optional<double> log10;
};

/// Overlap volume |pNEH ∩ ETRL| in mm³.
Containment volume_containment(const BinaryMask& pneh, const BinaryMask& etrl);

/// |pNEH ∩ ETRL| / |pNEH|.
double fraction_inside(const BinaryMask& pneh, const BinaryMask& etrl);

struct SpatialMetrics {
  double mean_edge_distance_mm = 0.0;
  double fraction_near_edge = 0.0;
  double volume_containment_mm3 = 0.0;
  std::optional<double> volume_containment_log10;
  double fraction_inside = 0.0;
  double near_threshold_mm = 5.0;
};

/// Interpretation thresholds for the four metrics.
struct SpatialBenchmarks {
  /// Mean edge distance at or below 5 mm (1-5 mm reads as close proximity,
  /// lower is stronger).
  bool proximity = false;
  /// More than 30% of pNEH near the edge.
  bool near_edge = false;
  /// Overlap above 10% of the smaller region's volume.
  bool containment = false;
  /// More than 20% of pNEH inside ETRL.
  bool inside = false;
};

SpatialBenchmarks evaluate_benchmarks(const SpatialMetrics& metrics, double pneh_mm3, double etrl_mm3);

/// Per-case metric divided by its mean under random circular shifts of pNEH.
struct ChanceRatios {
  std::size_t draws = 0;
  std::uint64_t seed = 0;
  SpatialMetrics null_mean;
  /// Absent when the chance baseline is zero.
  std::optional<double> mean_edge_distance;
  std::optional<double> fraction_near_edge;
  std::optional<double> volume_containment;
  std::optional<double> fraction_inside;
};

struct SpatialReport {
  SpatialMetrics metrics;
  SpatialBenchmarks benchmarks;
  double pneh_mm3 = 0.0;
  double etrl_mm3 = 0.0;
  std::optional<ChanceRatios> ratio_vs_null;
};

/// Requires both masks non-empty (EmptyMaskError otherwise).
SpatialReport spatial_report(const BinaryMask& pneh, const BinaryMask& etrl, const SpatialOptions& options = {});

/// Chance baseline from `draws` circular shifts of pNEH drawn from
/// Philox4x32-10 keyed by (seed, draw).
ChanceRatios ratio_vs_null(const BinaryMask& pneh, const BinaryMask& etrl, const SpatialOptions& options,
                           std::size_t draws, std::uint64_t seed);

}  // namespace voxelval
