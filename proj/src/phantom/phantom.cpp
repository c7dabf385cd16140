#include "voxelval/phantom.hpp"

#include <cmath>
#include <string>

#include "voxelval/error.hpp"
#include "voxelval/fusion.hpp"
#include "voxelval/random.hpp"

namespace voxelval {

PrimitiveShape parse_shape(std::string_view name) {
  if (name == "sphere") return PrimitiveShape::kSphere;
  if (name == "shell") return PrimitiveShape::kShell;
  if (name == "box") return PrimitiveShape::kBox;
  throw InvalidArgument("unknown primitive shape '" + std::string(name) + "'");
}

std::string_view shape_name(PrimitiveShape shape) {
  switch (shape) {
    case PrimitiveShape::kSphere: return "sphere";
    case PrimitiveShape::kShell: return "shell";
    case PrimitiveShape::kBox: return "box";
  }
  return "sphere";
}

namespace {

std::array<double, 3> half_extent(const Primitive& p) {
  if (p.shape == PrimitiveShape::kBox) return p.half_extent_mm;
  return {p.radius_mm, p.radius_mm, p.radius_mm};
}

bool contains(const Primitive& p, double x, double y, double z) {
  const double dx = x - p.center_mm[0];
  const double dy = y - p.center_mm[1];
  const double dz = z - p.center_mm[2];
  switch (p.shape) {
    case PrimitiveShape::kSphere: return dx * dx + dy * dy + dz * dz <= p.radius_mm * p.radius_mm;
    case PrimitiveShape::kShell: {
      const double r2 = dx * dx + dy * dy + dz * dz;
      return r2 <= p.radius_mm * p.radius_mm && r2 > p.inner_radius_mm * p.inner_radius_mm;
    }
    case PrimitiveShape::kBox:
      return std::fabs(dx) <= p.half_extent_mm[0] && std::fabs(dy) <= p.half_extent_mm[1] &&
             std::fabs(dz) <= p.half_extent_mm[2];
  }
  return false;
}

// Index of the primitive covering each voxel (last wins), -1 for background.
std::vector<int> rasterize(const PhantomSpec& spec) {
  spec.validate();
  const VolumeGeometry geometry(spec.dims, spec.spacing);
  std::vector<int> owner(geometry.voxel_count(), -1);
  for (std::size_t p = 0; p < spec.primitives.size(); ++p) {
    const Primitive& prim = spec.primitives[p];
    const auto h = half_extent(prim);
    std::array<std::size_t, 3> lo{}, hi{};
    for (int a = 0; a < 3; ++a) {
      const double s = spec.spacing[a];
      lo[a] = static_cast<std::size_t>(std::max(0.0, std::floor((prim.center_mm[a] - h[a]) / s)));
      hi[a] = std::min(spec.dims[a] - 1,
                       static_cast<std::size_t>(std::max(0.0, std::ceil((prim.center_mm[a] + h[a]) / s))));
    }
    for (std::size_t k = lo[2]; k <= hi[2]; ++k) {
      for (std::size_t j = lo[1]; j <= hi[1]; ++j) {
        for (std::size_t i = lo[0]; i <= hi[0]; ++i) {
          if (contains(prim, static_cast<double>(i) * spec.spacing[0], static_cast<double>(j) * spec.spacing[1],
                       static_cast<double>(k) * spec.spacing[2])) {
            owner[geometry.index(i, j, k)] = static_cast<int>(p);
          }
        }
      }
    }
  }
  return owner;
}

}  // namespace

void PhantomSpec::validate() const {
  const VolumeGeometry geometry(dims, spacing);  // validates dims and spacing
  if (!(noise_sd >= 0.0)) throw InvalidArgument("noise_sd must be non-negative");
  for (std::size_t p = 0; p < primitives.size(); ++p) {
    const Primitive& prim = primitives[p];
    const std::string which = "primitive " + std::to_string(p);
    if (prim.shape != PrimitiveShape::kBox && !(prim.radius_mm > 0.0)) {
      throw InvalidArgument(which + " needs a positive radius");
    }
    if (prim.shape == PrimitiveShape::kShell && !(prim.inner_radius_mm >= 0.0 && prim.inner_radius_mm < prim.radius_mm)) {
      throw InvalidArgument(which + " needs 0 <= inner radius < radius");
    }
    const auto h = half_extent(prim);
    for (int a = 0; a < 3; ++a) {
      if (!(h[a] >= 0.0)) throw InvalidArgument(which + " has a negative extent");
      // The grid covers [-s/2, (n - 1/2) s] along each axis.
      const double lo = -0.5 * spacing[a];
      const double hi = (static_cast<double>(dims[a]) - 0.5) * spacing[a];
      if (prim.center_mm[a] - h[a] < lo || prim.center_mm[a] + h[a] > hi) {
        throw InvalidArgument(which + " extends outside the grid along axis " + std::to_string(a));
      }
    }
  }
}

LabelVolume generate_label_phantom(const PhantomSpec& spec) {
  for (const auto& prim : spec.primitives) {
    if (prim.value < 0.0 || prim.value != std::floor(prim.value)) {
      throw InvalidArgument("label phantom primitives need non-negative integer values");
    }
  }
  if (spec.background < 0.0 || spec.background != std::floor(spec.background)) {
    throw InvalidArgument("label phantom background must be a non-negative integer");
  }
  const auto owner = rasterize(spec);
  std::vector<std::int32_t> labels(owner.size());
  for (std::size_t i = 0; i < owner.size(); ++i) {
    labels[i] = static_cast<std::int32_t>(owner[i] < 0 ? spec.background : spec.primitives[owner[i]].value);
  }
  return LabelVolume(VolumeGeometry(spec.dims, spec.spacing), std::move(labels));
}

ScalarVolume generate_scalar_phantom(const PhantomSpec& spec) {
  const auto owner = rasterize(spec);
  std::vector<double> values(owner.size());
  const KeyedStream noise(spec.seed, 0);
  for (std::size_t i = 0; i < owner.size(); ++i) {
    values[i] = owner[i] < 0 ? spec.background : spec.primitives[owner[i]].value;
    if (spec.noise_sd > 0.0) values[i] += spec.noise_sd * noise.normal(i);
  }
  return ScalarVolume(VolumeGeometry(spec.dims, spec.spacing), std::move(values));
}

ProbabilityVolume generate_probability_phantom(const PhantomSpec& spec, double blur_sigma_mm) {
  const auto owner = rasterize(spec);
  std::vector<double> values(owner.size());
  for (std::size_t i = 0; i < owner.size(); ++i) {
    values[i] = owner[i] >= 0 && spec.primitives[owner[i]].value != 0.0 ? 1.0 : 0.0;
  }
  ProbabilityVolume target(VolumeGeometry(spec.dims, spec.spacing), std::move(values));
  return gaussian_smooth_3d(target, blur_sigma_mm);
}

}  // namespace voxelval
