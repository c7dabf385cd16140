#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>

namespace voxelval {

using Dims = std::array<std::size_t, 3>;
using Spacing = std::array<double, 3>;
/// Voxel index (i, j, k, 1) to world millimetres, row-major 4x4.
using Affine = std::array<std::array<double, 4>, 4>;

/// Tolerance used when deciding that two geometries describe the same grid.
inline constexpr double kGeometryTolerance = 1e-3;

Affine diagonal_affine(const Spacing& spacing);

/// Grid shape, voxel size and voxel-to-world transform shared by every volume.
///
/// Voxels are stored x-fastest (index = i + nx * (j + ny * k)), the same order
/// as the NIfTI payload.
class VolumeGeometry {
 public:
  VolumeGeometry(const Dims& dims, const Spacing& spacing);
  VolumeGeometry(const Dims& dims, const Spacing& spacing, const Affine& affine);

  const Dims& dims() const { return dims_; }
  const Spacing& spacing() const { return spacing_; }
  const Affine& affine() const { return affine_; }

  std::size_t voxel_count() const { return dims_[0] * dims_[1] * dims_[2]; }
  double voxel_volume_mm3() const { return spacing_[0] * spacing_[1] * spacing_[2]; }

  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
    return i + dims_[0] * (j + dims_[1] * k);
  }
  std::array<std::size_t, 3> coords(std::size_t index) const {
    return {index % dims_[0], (index / dims_[0]) % dims_[1], index / (dims_[0] * dims_[1])};
  }

  friend bool operator==(const VolumeGeometry&, const VolumeGeometry&) = default;

 private:
  Dims dims_;
  Spacing spacing_;
  Affine affine_;
};

/// Human-readable description of every field that differs beyond
/// `tolerance`, or nothing when the geometries match.
std::optional<std::string> geometry_difference(const VolumeGeometry& a, const VolumeGeometry& b,
                                               double tolerance = kGeometryTolerance);

/// Throws GeometryMismatch unless dims are equal and spacing/affine agree
/// within `tolerance` mm.
void assert_geometry_match(const VolumeGeometry& a, const VolumeGeometry& b,
                           double tolerance = kGeometryTolerance);

}  // namespace voxelval
