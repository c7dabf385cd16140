#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "voxelval/volume.hpp"

namespace voxelval {

/// 2|a∩b| / (|a|+|b|); 1 when both are empty.
double dice(const BinaryMask& a, const BinaryMask& b);
/// |a∩b| / |a∪b|; 1 when both are empty.
double jaccard(const BinaryMask& a, const BinaryMask& b);

/// Percentile with linear interpolation between order statistics
/// (rank = q/100 * (n-1)), matching numpy's default rule.
double percentile_linear(std::vector<double> values, double q);

/// Symmetric 95th-percentile distance (mm) between the boundary voxels of a
/// and b. Throws EmptyMaskError if either mask is empty.
double hausdorff95(const BinaryMask& a, const BinaryMask& b);

/// Fraction of both boundaries lying within tau_mm of the other boundary.
/// Throws EmptyMaskError if either mask is empty.
double surface_dice(const BinaryMask& a, const BinaryMask& b, double tau_mm = 2.0);

struct RegionMetrics {
  std::string region;
  double dice = 0.0;
  double jaccard = 0.0;
  /// Absent when either region is empty.
  std::optional<double> hausdorff95_mm;
  std::optional<double> surface_dice;
  std::size_t a_voxels = 0;
  std::size_t b_voxels = 0;
};

/// All four metrics for one pair, sharing the boundary distance transforms.
RegionMetrics region_metrics(const BinaryMask& a, const BinaryMask& b, double tau_mm = 2.0, std::string region = {});

struct CaseReport {
  std::string case_id;
  std::vector<RegionMetrics> regions;
};

/// Metrics for each composite region of two label maps of the same case.
/// Either input may play either role; results are symmetric.
CaseReport evaluate_case(const LabelVolume& a, const LabelVolume& b, std::span<const RegionPreset> regions,
                         double tau_mm = 2.0, std::string case_id = {});

}  // namespace voxelval
