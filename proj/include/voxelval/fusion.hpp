#pragma once

#include <span>
#include <vector>

#include "voxelval/volume.hpp"

namespace voxelval {

struct FusionConfig {
  double sigma_mm = 1.5;
  double threshold = 0.5;
  /// Smoothed probability at or above which a voxel is labelled "high".
  double high_confidence_threshold = 0.75;
  /// Kernel half-width in units of sigma.
  double kernel_truncation = 4.0;

  /// Throws InvalidArgument unless 0 < threshold < high <= 1, sigma >= 0 and
  /// truncation > 0.
  void validate() const;
};

/// Labels written by fuse_to_confidence_labels.
enum ConfidenceLabel : int { kBackground = 0, kLowConfidence = 1, kHighConfidence = 2 };

/// Voxel-wise arithmetic mean of co-registered probability maps.
ProbabilityVolume average_probability_maps(std::span<const ProbabilityVolume> maps);

/// Normalised 1D Gaussian taps for offsets -radius..radius, with
/// radius = ceil(truncation * sigma_voxels). sigma_voxels must be positive.
std::vector<double> gaussian_kernel(double sigma_voxels, double truncation);

/// Separable Gaussian filter with sigma given in millimetres (converted per
/// axis through the spacing). Taps that fall outside the grid are dropped and
/// the remaining taps renormalised, which preserves constant fields. No
/// clamping; sigma 0 returns the input unchanged.
ScalarVolume gaussian_smooth(const ScalarVolume& volume, double sigma_mm, double truncation = 4.0);

/// As gaussian_smooth, with the result clamped to [0, 1].
ProbabilityVolume gaussian_smooth_3d(const ProbabilityVolume& map, double sigma_mm, double truncation = 4.0);

/// True where the probability is >= t. t must lie in (0, 1).
BinaryMask threshold_map(const ProbabilityVolume& map, double t);

struct FusionResult {
  ProbabilityVolume mean;
  ProbabilityVolume smoothed;
  BinaryMask mask;
  LabelVolume confidence;
};

/// average -> smooth -> classify. The mask is threshold_map(smoothed,
/// threshold); confidence labels are 0 below threshold, 1 in
/// [threshold, high), 2 at or above high.
FusionResult fuse(std::span<const ProbabilityVolume> maps, const FusionConfig& config);

LabelVolume fuse_to_confidence_labels(std::span<const ProbabilityVolume> maps, const FusionConfig& config);

}  // namespace voxelval
