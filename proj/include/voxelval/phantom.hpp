#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "voxelval/volume.hpp"

namespace voxelval {

enum class PrimitiveShape { kSphere, kShell, kBox };

PrimitiveShape parse_shape(std::string_view name);
std::string_view shape_name(PrimitiveShape shape);

/// One solid drawn into a phantom. Coordinates are millimetres in grid
/// space: voxel (i, j, k) has its centre at (i*sx, j*sy, k*sz).
struct Primitive {
  PrimitiveShape shape = PrimitiveShape::kSphere;
  std::array<double, 3> center_mm{};
  /// Sphere radius, or shell outer radius.
  double radius_mm = 0.0;
  /// Shell inner radius (exclusive).
  double inner_radius_mm = 0.0;
  /// Box half-extents.
  std::array<double, 3> half_extent_mm{};
  /// Label (must be a non-negative integer for label phantoms) or scalar.
  double value = 1.0;
};

struct PhantomSpec {
  Dims dims{64, 64, 64};
  Spacing spacing{1.0, 1.0, 1.0};
  std::vector<Primitive> primitives;
  double background = 0.0;
  /// Gaussian noise added to scalar phantoms only.
  double noise_sd = 0.0;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument for primitives extending past the grid.
  void validate() const;
};

/// Centre-in-shape rasterisation; later primitives overwrite earlier ones.
LabelVolume generate_label_phantom(const PhantomSpec& spec);

/// Primitive values over the background, plus seeded Gaussian noise.
ScalarVolume generate_scalar_phantom(const PhantomSpec& spec);

/// Binary target (non-zero label) optionally blurred with the fusion
/// Gaussian; blur 0 yields values exactly 0 or 1.
ProbabilityVolume generate_probability_phantom(const PhantomSpec& spec, double blur_sigma_mm);

}  // namespace voxelval
