#include "voxelval/geometry.hpp"

#include <cmath>
#include <sstream>

#include "voxelval/error.hpp"

namespace voxelval {

namespace {

double determinant3(const Affine& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

void validate(const Dims& dims, const Spacing& spacing, const Affine& affine) {
  for (int axis = 0; axis < 3; ++axis) {
    if (dims[axis] == 0) throw InvalidArgument("volume dimension " + std::to_string(axis) + " is zero");
    if (!(spacing[axis] > 0.0) || !std::isfinite(spacing[axis])) {
      throw InvalidArgument("spacing along axis " + std::to_string(axis) + " must be positive, got " +
                            std::to_string(spacing[axis]));
    }
  }
  for (const auto& row : affine) {
    for (double v : row) {
      if (!std::isfinite(v)) throw InvalidArgument("affine contains a non-finite entry");
    }
  }
  if (affine[3][0] != 0.0 || affine[3][1] != 0.0 || affine[3][2] != 0.0 || affine[3][3] != 1.0) {
    throw InvalidArgument("affine bottom row must be (0, 0, 0, 1)");
  }
  if (determinant3(affine) == 0.0) throw InvalidArgument("affine is singular");
  for (int col = 0; col < 3; ++col) {
    const double norm = std::sqrt(affine[0][col] * affine[0][col] + affine[1][col] * affine[1][col] +
                                  affine[2][col] * affine[2][col]);
    if (std::fabs(norm - spacing[col]) > 1e-4) {
      std::ostringstream msg;
      msg << "affine column " << col << " has norm " << norm << " but spacing is " << spacing[col];
      throw InvalidArgument(msg.str());
    }
  }
}

}  // namespace

Affine diagonal_affine(const Spacing& spacing) {
  Affine a{};
  a[0][0] = spacing[0];
  a[1][1] = spacing[1];
  a[2][2] = spacing[2];
  a[3][3] = 1.0;
  return a;
}

VolumeGeometry::VolumeGeometry(const Dims& dims, const Spacing& spacing)
    : VolumeGeometry(dims, spacing, diagonal_affine(spacing)) {}

VolumeGeometry::VolumeGeometry(const Dims& dims, const Spacing& spacing, const Affine& affine)
    : dims_(dims), spacing_(spacing), affine_(affine) {
  validate(dims_, spacing_, affine_);
}

std::optional<std::string> geometry_difference(const VolumeGeometry& a, const VolumeGeometry& b,
                                               double tolerance) {
  std::ostringstream diff;
  if (a.dims() != b.dims()) {
    diff << "dims (" << a.dims()[0] << "," << a.dims()[1] << "," << a.dims()[2] << ") vs (" << b.dims()[0]
         << "," << b.dims()[1] << "," << b.dims()[2] << "); ";
  }
  for (int axis = 0; axis < 3; ++axis) {
    const double d = std::fabs(a.spacing()[axis] - b.spacing()[axis]);
    if (d > tolerance) diff << "spacing[" << axis << "] differs by " << d << " mm; ";
  }
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      const double d = std::fabs(a.affine()[r][c] - b.affine()[r][c]);
      if (d > tolerance) diff << "affine[" << r << "][" << c << "] differs by " << d << "; ";
    }
  }
  std::string text = diff.str();
  if (text.empty()) return std::nullopt;
  text.resize(text.size() - 2);
  return text;
}

void assert_geometry_match(const VolumeGeometry& a, const VolumeGeometry& b, double tolerance) {
  if (auto diff = geometry_difference(a, b, tolerance)) {
    throw GeometryMismatch("geometry mismatch: " + *diff);
  }
}

}  // namespace voxelval
