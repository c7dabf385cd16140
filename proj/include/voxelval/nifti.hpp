#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <variant>

#include "voxelval/volume.hpp"

namespace voxelval {

/// NIfTI-1 datatype codes supported for reading and writing.
enum class NiftiDatatype : std::int16_t {
  kUInt8 = 2,
  kInt16 = 4,
  kInt32 = 8,
  kFloat32 = 16,
  kFloat64 = 64,
};

using LoadedVolume = std::variant<ScalarVolume, LabelVolume>;

/// Reads a single-file NIfTI-1 volume (.nii or .nii.gz).
///
/// Spacing comes from pixdim; the affine from sform when sform_code > 0,
/// otherwise qform, otherwise a diagonal of pixdim. Volumes are never
/// reoriented. Integer payloads with identity scaling and non-negative values
/// load as LabelVolume; everything else loads as ScalarVolume with
/// scl_slope/scl_inter applied.
LoadedVolume load_volume(const std::filesystem::path& path);

/// Labels load unchanged; scalars are converted to labels when rescale-free
/// values are all non-negative integers.
ScalarVolume load_scalar(const std::filesystem::path& path);
LabelVolume load_labels(const std::filesystem::path& path);
ProbabilityVolume load_probability(const std::filesystem::path& path);
/// Any non-zero voxel is true.
BinaryMask load_mask(const std::filesystem::path& path);

/// Files ending in .gz are gzip-compressed. The file is written to a
/// temporary sibling and renamed into place, so a failed write leaves
/// nothing behind.
void save_volume(const ScalarVolume& volume, const std::filesystem::path& path,
                 NiftiDatatype datatype = NiftiDatatype::kFloat64);
void save_volume(const ProbabilityVolume& volume, const std::filesystem::path& path,
                 NiftiDatatype datatype = NiftiDatatype::kFloat64);
/// Default datatype is the narrowest integer type holding every label.
void save_volume(const LabelVolume& volume, const std::filesystem::path& path,
                 std::optional<NiftiDatatype> datatype = std::nullopt);
void save_volume(const BinaryMask& mask, const std::filesystem::path& path);

}  // namespace voxelval
