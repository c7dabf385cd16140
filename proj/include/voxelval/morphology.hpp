#pragma once

#include <span>
#include <string>
#include <vector>

#include "voxelval/volume.hpp"

namespace voxelval {

/// Slack applied when comparing a voxel-centre distance against a mm
/// threshold, so that e.g. a 2 mm offset on a 1 mm grid counts as "within
/// 2 mm" despite rounding in the squared-distance sums.
inline constexpr double kDistanceSlack = 1e-9;

/// Euclidean distance (mm) from every voxel centre to the nearest voxel
/// centre of a reference set.
class DistanceField {
 public:
  DistanceField(VolumeGeometry geometry, std::vector<double> distances, bool reference_empty);

  const VolumeGeometry& geometry() const { return geometry_; }
  std::span<const double> distances() const { return distances_; }
  double operator[](std::size_t index) const { return distances_[index]; }
  double at(std::size_t i, std::size_t j, std::size_t k) const { return distances_[geometry_.index(i, j, k)]; }
  /// The reference set was empty; every distance is +infinity.
  bool reference_empty() const { return reference_empty_; }

 private:
  VolumeGeometry geometry_;
  std::vector<double> distances_;
  bool reference_empty_;
};

/// Exact Euclidean distance transform honouring anisotropic spacing
/// (separable lower envelope of parabolas over squared distances).
DistanceField edt(const BinaryMask& mask);

/// Mask voxels with at least one face neighbour that is false or outside
/// the grid.
BinaryMask boundary(const BinaryMask& mask);

/// Voxels whose centre lies within r_mm of a mask voxel centre. An empty
/// input yields an empty mask and a logged warning.
BinaryMask dilate_mm(const BinaryMask& mask, double r_mm);

/// Concentric bands outside a source region (the enhancing tumor).
struct RimShellSet {
  std::vector<double> radii_mm;
  /// shells[i] = dilate(source, radii[i]) minus source and exclusions.
  std::vector<BinaryMask> shells;
  /// bands[i] = shells[i] minus shells[i-1]; disjoint.
  std::vector<BinaryMask> bands;
  std::vector<std::string> exclusions_applied;
  bool source_empty = false;

  /// "rim_0-2mm" style names for shells, "band_2-4mm" for bands.
  std::string shell_name(std::size_t i) const;
  std::string band_name(std::size_t i) const;
};

struct RimOptions {
  /// When set, shells are additionally restricted to this mask.
  std::optional<BinaryMask> brain_mask;
};

RimShellSet rim_shells(const BinaryMask& et, std::span<const double> radii_mm, std::span<const BinaryMask> exclusions,
                       const RimOptions& options = {});

struct RegionStats {
  std::string region;
  MaskedStats stats;
};

/// Masked statistics in the order NEH, shells by increasing radius, then
/// (if requested) the annular bands.
std::vector<RegionStats> rim_intensity_profile(const ScalarVolume& scalar, const RimShellSet& shells,
                                               const BinaryMask& neh, bool include_bands = false);

}  // namespace voxelval
