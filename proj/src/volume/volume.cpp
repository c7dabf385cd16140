#include "voxelval/volume.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "voxelval/error.hpp"
#include "voxelval/summation.hpp"

namespace voxelval {

namespace {

void check_size(const VolumeGeometry& geometry, std::size_t n, const char* what) {
  if (n != geometry.voxel_count()) {
    throw InvalidArgument(std::string(what) + " has " + std::to_string(n) + " values, geometry needs " +
                          std::to_string(geometry.voxel_count()));
  }
}

void check_same_grid(const BinaryMask& a, const BinaryMask& b) { assert_geometry_match(a.geometry(), b.geometry()); }

}  // namespace

ScalarVolume::ScalarVolume(VolumeGeometry geometry, std::vector<double> values)
    : geometry_(std::move(geometry)), values_(std::move(values)) {
  check_size(geometry_, values_.size(), "scalar volume");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw InvalidArgument("scalar volume has a non-finite value at voxel " + std::to_string(i));
    }
  }
}

ScalarVolume ScalarVolume::filled(const VolumeGeometry& geometry, double value) {
  return ScalarVolume(geometry, std::vector<double>(geometry.voxel_count(), value));
}

ProbabilityVolume::ProbabilityVolume(VolumeGeometry geometry, std::vector<double> values)
    : geometry_(std::move(geometry)), values_(std::move(values)) {
  check_size(geometry_, values_.size(), "probability volume");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    // NaN fails both comparisons.
    if (!(values_[i] >= 0.0 && values_[i] <= 1.0)) {
      throw InvalidArgument("probability " + std::to_string(values_[i]) + " at voxel " + std::to_string(i) +
                            " is outside [0, 1]");
    }
  }
}

ProbabilityVolume ProbabilityVolume::filled(const VolumeGeometry& geometry, double value) {
  return ProbabilityVolume(geometry, std::vector<double>(geometry.voxel_count(), value));
}

ProbabilityVolume ProbabilityVolume::from_scalar(const ScalarVolume& scalar) {
  return ProbabilityVolume(scalar.geometry(), std::vector<double>(scalar.values().begin(), scalar.values().end()));
}

LabelVolume::LabelVolume(VolumeGeometry geometry, std::vector<std::int32_t> labels,
                         std::optional<std::vector<int>> alphabet)
    : geometry_(std::move(geometry)), labels_(std::move(labels)) {
  check_size(geometry_, labels_.size(), "label volume");
  std::set<int> present;
  for (std::int32_t v : labels_) {
    if (v < 0) throw InvalidArgument("label volume contains negative label " + std::to_string(v));
    present.insert(v);
  }
  if (alphabet) {
    alphabet_ = *alphabet;
    std::sort(alphabet_.begin(), alphabet_.end());
    alphabet_.erase(std::unique(alphabet_.begin(), alphabet_.end()), alphabet_.end());
    for (int v : present) {
      if (!std::binary_search(alphabet_.begin(), alphabet_.end(), v)) {
        throw InvalidArgument("label " + std::to_string(v) + " is not in the declared alphabet");
      }
    }
  } else {
    const auto& brats = brats_alphabet();
    const bool fits = std::all_of(present.begin(), present.end(),
                                  [&](int v) { return std::binary_search(brats.begin(), brats.end(), v); });
    alphabet_ = fits ? brats : std::vector<int>(present.begin(), present.end());
  }
}

bool LabelVolume::declares(int label) const {
  return std::binary_search(alphabet_.begin(), alphabet_.end(), label);
}

BinaryMask::BinaryMask(VolumeGeometry geometry, std::vector<std::uint8_t> bits)
    : geometry_(std::move(geometry)), bits_(std::move(bits)) {
  check_size(geometry_, bits_.size(), "mask");
  for (auto& b : bits_) {
    b = b != 0 ? 1 : 0;
    count_ += b;
  }
}

BinaryMask BinaryMask::empty(const VolumeGeometry& geometry) {
  return BinaryMask(geometry, std::vector<std::uint8_t>(geometry.voxel_count(), 0));
}

BinaryMask BinaryMask::full(const VolumeGeometry& geometry) {
  return BinaryMask(geometry, std::vector<std::uint8_t>(geometry.voxel_count(), 1));
}

BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b) {
  check_same_grid(a, b);
  std::vector<std::uint8_t> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.bits()[i] & b.bits()[i];
  return BinaryMask(a.geometry(), std::move(out));
}

BinaryMask mask_or(const BinaryMask& a, const BinaryMask& b) {
  check_same_grid(a, b);
  std::vector<std::uint8_t> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.bits()[i] | b.bits()[i];
  return BinaryMask(a.geometry(), std::move(out));
}

BinaryMask mask_not(const BinaryMask& a) {
  std::vector<std::uint8_t> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.bits()[i] ^ 1;
  return BinaryMask(a.geometry(), std::move(out));
}

BinaryMask mask_minus(const BinaryMask& a, const BinaryMask& b) {
  check_same_grid(a, b);
  std::vector<std::uint8_t> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.bits()[i] & (b.bits()[i] ^ 1);
  return BinaryMask(a.geometry(), std::move(out));
}

bool is_subset(const BinaryMask& a, const BinaryMask& b) {
  check_same_grid(a, b);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.bits()[i] && !b.bits()[i]) return false;
  }
  return true;
}

bool same_voxels(const BinaryMask& a, const BinaryMask& b) {
  check_same_grid(a, b);
  return std::equal(a.bits().begin(), a.bits().end(), b.bits().begin());
}

std::size_t intersection_count(const BinaryMask& a, const BinaryMask& b) {
  check_same_grid(a, b);
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += a.bits()[i] & b.bits()[i];
  return n;
}

BinaryMask nonzero_mask(const LabelVolume& labels) {
  std::vector<std::uint8_t> bits(labels.size());
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = labels[i] != 0;
  return BinaryMask(labels.geometry(), std::move(bits));
}

RegionPreset region_preset(std::string_view name) {
  if (name == "ET") return {"ET", {4}};
  if (name == "TC") return {"TC", {1, 3, 4}};
  if (name == "WT") return {"WT", {1, 2, 3, 4}};
  if (name == "NEH") return {"NEH", {3}};
  if (name == "ED") return {"ED", {2}};
  if (name == "NC") return {"NC", {1}};
  if (name.size() > 1 && name[0] == 'L') {
    const std::string digits(name.substr(1));
    if (std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; }) &&
        digits.size() < 9) {
      return {std::string(name), {std::stoi(digits)}};
    }
  }
  throw InvalidArgument("unknown region '" + std::string(name) + "' (expected ET, TC, WT, NEH, ED, NC or L<k>)");
}

std::vector<RegionPreset> default_regions() {
  return {region_preset("ET"), region_preset("TC"), region_preset("WT"), region_preset("NEH")};
}

BinaryMask label_mask(const LabelVolume& seg, std::span<const int> labels) {
  for (int label : labels) {
    if (!seg.declares(label)) {
      throw InvalidArgument("label " + std::to_string(label) + " is not in the volume's alphabet");
    }
  }
  // Lookup table over the declared alphabet; labels are small.
  const int max_label = seg.alphabet().empty() ? 0 : seg.alphabet().back();
  std::vector<std::uint8_t> selected(static_cast<std::size_t>(max_label) + 1, 0);
  for (int label : labels) selected[static_cast<std::size_t>(label)] = 1;
  std::vector<std::uint8_t> bits(seg.size());
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = selected[static_cast<std::size_t>(seg[i])];
  return BinaryMask(seg.geometry(), std::move(bits));
}

BinaryMask label_mask(const LabelVolume& seg, const RegionPreset& region) { return label_mask(seg, region.labels); }

MaskedStats masked_stats(const ScalarVolume& scalar, const BinaryMask& mask) {
  assert_geometry_match(scalar.geometry(), mask.geometry());
  MaskedStats stats;
  stats.voxel_count = mask.count();
  stats.volume_mm3 = mask.volume_mm3();
  if (stats.empty()) return stats;

  // Offsets from the first masked value keep a constant field exact.
  std::size_t first = 0;
  while (!mask[first]) ++first;
  const double reference = scalar[first];
  CompensatedSum sum;
  for (std::size_t i = first; i < scalar.size(); ++i) {
    if (mask[i]) sum.add(scalar[i] - reference);
  }
  const double n = static_cast<double>(stats.voxel_count);
  const double mean = reference + sum.value() / n;
  CompensatedSum squares;
  for (std::size_t i = 0; i < scalar.size(); ++i) {
    if (mask[i]) {
      const double d = scalar[i] - mean;
      squares.add(d * d);
    }
  }
  stats.mean = mean;
  stats.sd = std::sqrt(squares.value() / n);
  return stats;
}

}  // namespace voxelval
