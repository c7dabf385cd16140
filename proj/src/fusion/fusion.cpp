#include "voxelval/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "voxelval/error.hpp"
#include "voxelval/summation.hpp"

namespace voxelval {

void FusionConfig::validate() const {
  if (!(sigma_mm >= 0.0) || !std::isfinite(sigma_mm)) throw InvalidArgument("sigma_mm must be >= 0");
  if (!(threshold > 0.0 && threshold < 1.0)) throw InvalidArgument("threshold must lie in (0, 1)");
  if (!(high_confidence_threshold > threshold && high_confidence_threshold <= 1.0)) {
    throw InvalidArgument("high_confidence_threshold must lie in (threshold, 1]");
  }
  if (!(kernel_truncation > 0.0) || !std::isfinite(kernel_truncation)) {
    throw InvalidArgument("kernel_truncation must be positive");
  }
}

ProbabilityVolume average_probability_maps(std::span<const ProbabilityVolume> maps) {
  if (maps.empty()) throw InvalidArgument("at least one probability map is required");
  const auto& geometry = maps.front().geometry();
  for (const auto& map : maps.subspan(1)) assert_geometry_match(geometry, map.geometry());
  if (maps.size() == 1) return maps.front();

  const double n = static_cast<double>(maps.size());
  std::vector<double> mean(geometry.voxel_count());
  for (std::size_t v = 0; v < mean.size(); ++v) {
    CompensatedSum sum;
    for (const auto& map : maps) sum.add(map[v]);
    mean[v] = std::clamp(sum.value() / n, 0.0, 1.0);
  }
  return ProbabilityVolume(geometry, std::move(mean));
}

std::vector<double> gaussian_kernel(double sigma_voxels, double truncation) {
  if (!(sigma_voxels > 0.0)) throw InvalidArgument("kernel sigma must be positive");
  const auto radius = static_cast<std::size_t>(std::ceil(truncation * sigma_voxels));
  std::vector<double> taps(2 * radius + 1);
  const double denom = 2.0 * sigma_voxels * sigma_voxels;
  for (std::size_t i = 0; i < taps.size(); ++i) {
    const double x = static_cast<double>(i) - static_cast<double>(radius);
    taps[i] = std::exp(-x * x / denom);
  }
  CompensatedSum total;
  for (double t : taps) total.add(t);
  for (double& t : taps) t /= total.value();
  return taps;
}

namespace {

// One renormalised 1D pass along `axis`. Written relative to the centre
// sample so a constant line is reproduced exactly.
void smooth_axis(std::vector<double>& data, const Dims& dims, int axis, const std::vector<double>& taps) {
  const std::size_t n = dims[axis];
  const std::size_t stride = axis == 0 ? 1 : axis == 1 ? dims[0] : dims[0] * dims[1];
  const auto radius = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const std::size_t lines = data.size() / n;
  std::vector<double> line(n);

  for (std::size_t l = 0; l < lines; ++l) {
    std::size_t base;
    if (axis == 0) {
      base = l * n;
    } else if (axis == 1) {
      base = (l % dims[0]) + (l / dims[0]) * dims[0] * dims[1];
    } else {
      base = l;
    }
    for (std::size_t q = 0; q < n; ++q) line[q] = data[base + q * stride];
    for (std::size_t q = 0; q < n; ++q) {
      const auto lo = std::max<std::ptrdiff_t>(-radius, -static_cast<std::ptrdiff_t>(q));
      const auto hi = std::min<std::ptrdiff_t>(radius, static_cast<std::ptrdiff_t>(n - 1 - q));
      const double centre = line[q];
      double weight = 0.0;
      double acc = 0.0;
      for (std::ptrdiff_t o = lo; o <= hi; ++o) {
        const double w = taps[static_cast<std::size_t>(o + radius)];
        weight += w;
        acc += w * (line[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(q) + o)] - centre);
      }
      data[base + q * stride] = centre + acc / weight;
    }
  }
}

}  // namespace

ScalarVolume gaussian_smooth(const ScalarVolume& volume, double sigma_mm, double truncation) {
  if (!(sigma_mm >= 0.0) || !std::isfinite(sigma_mm)) throw InvalidArgument("sigma_mm must be >= 0");
  if (!(truncation > 0.0)) throw InvalidArgument("kernel truncation must be positive");
  if (sigma_mm == 0.0) return volume;
  const auto& geometry = volume.geometry();
  std::vector<double> data(volume.values().begin(), volume.values().end());
  for (int axis = 0; axis < 3; ++axis) {
    if (geometry.dims()[axis] == 1) continue;
    smooth_axis(data, geometry.dims(), axis, gaussian_kernel(sigma_mm / geometry.spacing()[axis], truncation));
  }
  return ScalarVolume(geometry, std::move(data));
}

ProbabilityVolume gaussian_smooth_3d(const ProbabilityVolume& map, double sigma_mm, double truncation) {
  if (sigma_mm == 0.0) return map;
  const ScalarVolume smoothed = gaussian_smooth(map.to_scalar(), sigma_mm, truncation);
  std::vector<double> values(smoothed.values().begin(), smoothed.values().end());
  for (double& v : values) v = std::clamp(v, 0.0, 1.0);
  return ProbabilityVolume(map.geometry(), std::move(values));
}

BinaryMask threshold_map(const ProbabilityVolume& map, double t) {
  if (!(t > 0.0 && t < 1.0)) throw InvalidArgument("threshold must lie in (0, 1)");
  std::vector<std::uint8_t> bits(map.size());
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = map[i] >= t;
  return BinaryMask(map.geometry(), std::move(bits));
}

FusionResult fuse(std::span<const ProbabilityVolume> maps, const FusionConfig& config) {
  config.validate();
  ProbabilityVolume mean = average_probability_maps(maps);
  ProbabilityVolume smoothed = gaussian_smooth_3d(mean, config.sigma_mm, config.kernel_truncation);
  BinaryMask mask = threshold_map(smoothed, config.threshold);
  std::vector<std::int32_t> labels(smoothed.size(), kBackground);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (smoothed[i] >= config.high_confidence_threshold) {
      labels[i] = kHighConfidence;
    } else if (mask[i]) {
      labels[i] = kLowConfidence;
    }
  }
  LabelVolume confidence(smoothed.geometry(), std::move(labels),
                         std::vector<int>{kBackground, kLowConfidence, kHighConfidence});
  return FusionResult{std::move(mean), std::move(smoothed), std::move(mask), std::move(confidence)};
}

LabelVolume fuse_to_confidence_labels(std::span<const ProbabilityVolume> maps, const FusionConfig& config) {
  return fuse(maps, config).confidence;
}

}  // namespace voxelval
