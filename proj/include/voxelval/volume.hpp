#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "voxelval/geometry.hpp"

namespace voxelval {

/// Real-valued voxel grid (rCBV maps, MRI intensities, smoothed maps).
/// Values must be finite.
class ScalarVolume {
 public:
  ScalarVolume(VolumeGeometry geometry, std::vector<double> values);
  static ScalarVolume filled(const VolumeGeometry& geometry, double value);

  const VolumeGeometry& geometry() const { return geometry_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t index) const { return values_[index]; }
  double at(std::size_t i, std::size_t j, std::size_t k) const { return values_[geometry_.index(i, j, k)]; }

 private:
  VolumeGeometry geometry_;
  std::vector<double> values_;
};

/// Per-voxel probabilities, every value in [0, 1].
class ProbabilityVolume {
 public:
  ProbabilityVolume(VolumeGeometry geometry, std::vector<double> values);
  static ProbabilityVolume filled(const VolumeGeometry& geometry, double value);
  /// Rejects values outside [0, 1].
  static ProbabilityVolume from_scalar(const ScalarVolume& scalar);

  const VolumeGeometry& geometry() const { return geometry_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t index) const { return values_[index]; }
  double at(std::size_t i, std::size_t j, std::size_t k) const { return values_[geometry_.index(i, j, k)]; }

  ScalarVolume to_scalar() const { return ScalarVolume(geometry_, values_); }

 private:
  VolumeGeometry geometry_;
  std::vector<double> values_;
};

/// BraTS labelling: 0 background, 1 necrosis, 2 edema, 3 NEH, 4 enhancing tumor.
inline const std::vector<int>& brats_alphabet() {
  static const std::vector<int> alphabet{0, 1, 2, 3, 4};
  return alphabet;
}

/// Small non-negative integer labels drawn from a declared alphabet.
class LabelVolume {
 public:
  /// Without an explicit alphabet, the BraTS alphabet is declared when every
  /// label fits it; otherwise the set of labels present is declared.
  LabelVolume(VolumeGeometry geometry, std::vector<std::int32_t> labels,
              std::optional<std::vector<int>> alphabet = std::nullopt);

  const VolumeGeometry& geometry() const { return geometry_; }
  std::span<const std::int32_t> labels() const { return labels_; }
  /// Sorted, unique.
  const std::vector<int>& alphabet() const { return alphabet_; }
  bool declares(int label) const;
  std::size_t size() const { return labels_.size(); }
  std::int32_t operator[](std::size_t index) const { return labels_[index]; }
  std::int32_t at(std::size_t i, std::size_t j, std::size_t k) const { return labels_[geometry_.index(i, j, k)]; }

 private:
  VolumeGeometry geometry_;
  std::vector<std::int32_t> labels_;
  std::vector<int> alphabet_;
};

/// Boolean voxel set with a cached population count.
class BinaryMask {
 public:
  /// Any non-zero byte is true; stored normalised to 0/1.
  BinaryMask(VolumeGeometry geometry, std::vector<std::uint8_t> bits);
  static BinaryMask empty(const VolumeGeometry& geometry);
  static BinaryMask full(const VolumeGeometry& geometry);

  const VolumeGeometry& geometry() const { return geometry_; }
  std::span<const std::uint8_t> bits() const { return bits_; }
  std::size_t size() const { return bits_.size(); }
  bool operator[](std::size_t index) const { return bits_[index] != 0; }
  bool at(std::size_t i, std::size_t j, std::size_t k) const { return bits_[geometry_.index(i, j, k)] != 0; }

  std::size_t count() const { return count_; }
  bool is_empty() const { return count_ == 0; }
  double volume_mm3() const { return static_cast<double>(count_) * geometry_.voxel_volume_mm3(); }

 private:
  VolumeGeometry geometry_;
  std::vector<std::uint8_t> bits_;
  std::size_t count_ = 0;
};

BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_or(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_not(const BinaryMask& a);
/// a AND NOT b
BinaryMask mask_minus(const BinaryMask& a, const BinaryMask& b);
bool is_subset(const BinaryMask& a, const BinaryMask& b);
bool same_voxels(const BinaryMask& a, const BinaryMask& b);
std::size_t intersection_count(const BinaryMask& a, const BinaryMask& b);

/// Non-zero voxels of a label volume.
BinaryMask nonzero_mask(const LabelVolume& labels);

/// Named label subset used for composite-region evaluation.
struct RegionPreset {
  std::string name;
  std::vector<int> labels;
};

/// ET={4}, TC={1,3,4}, WT={1,2,3,4}, NEH={3}, ED={2}, NC={1}; "L<k>" selects
/// the single label k. Throws InvalidArgument for anything else.
RegionPreset region_preset(std::string_view name);
/// ET, TC, WT, NEH.
std::vector<RegionPreset> default_regions();

/// True exactly where the label is in `labels`. Every requested label must be
/// declared by the volume's alphabet.
BinaryMask label_mask(const LabelVolume& seg, std::span<const int> labels);
BinaryMask label_mask(const LabelVolume& seg, const RegionPreset& region);

/// Mean and population sd of a scalar over a mask. For an empty mask mean
/// and sd are absent, never zero.
struct MaskedStats {
  std::optional<double> mean;
  std::optional<double> sd;
  std::size_t voxel_count = 0;
  double volume_mm3 = 0.0;

  bool empty() const { return voxel_count == 0; }
};

MaskedStats masked_stats(const ScalarVolume& scalar, const BinaryMask& mask);

}  // namespace voxelval
