#include "voxelval/nifti.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <type_traits>

#include "voxelval/error.hpp"

static_assert(std::endian::native == std::endian::little, "NIfTI payloads are read as little-endian");

namespace voxelval {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kDataOffset = 352;

// Byte offsets of the NIfTI-1 header fields used here.
namespace off {
constexpr std::size_t sizeof_hdr = 0;
constexpr std::size_t dim = 40;
constexpr std::size_t datatype = 70;
constexpr std::size_t bitpix = 72;
constexpr std::size_t pixdim = 76;
constexpr std::size_t vox_offset = 108;
constexpr std::size_t scl_slope = 112;
constexpr std::size_t scl_inter = 116;
constexpr std::size_t xyzt_units = 123;
constexpr std::size_t descrip = 148;
constexpr std::size_t qform_code = 252;
constexpr std::size_t sform_code = 254;
constexpr std::size_t quatern_b = 256;
constexpr std::size_t qoffset_x = 268;
constexpr std::size_t srow_x = 280;
constexpr std::size_t magic = 344;
}  // namespace off

template <typename T>
T read_field(const std::vector<unsigned char>& bytes, std::size_t offset) {
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

template <typename T>
void write_field(std::vector<unsigned char>& bytes, std::size_t offset, T value) {
  std::memcpy(bytes.data() + offset, &value, sizeof(T));
}

std::vector<unsigned char> read_all(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("cannot read '" + path.string() + "': no such file");
  // gzread passes uncompressed files through unchanged.
  gzFile file = gzopen(path.c_str(), "rb");
  if (file == nullptr) throw IoError("cannot open '" + path.string() + "'");
  std::vector<unsigned char> bytes;
  std::vector<unsigned char> chunk(1 << 20);
  for (;;) {
    const int n = gzread(file, chunk.data(), static_cast<unsigned>(chunk.size()));
    if (n < 0) {
      int errnum = 0;
      const std::string message = gzerror(file, &errnum);
      gzclose(file);
      throw IoError("error reading '" + path.string() + "': " + message);
    }
    if (n == 0) break;
    bytes.insert(bytes.end(), chunk.begin(), chunk.begin() + n);
  }
  gzclose(file);
  return bytes;
}

std::size_t bytes_per_voxel(std::int16_t datatype) {
  switch (static_cast<NiftiDatatype>(datatype)) {
    case NiftiDatatype::kUInt8: return 1;
    case NiftiDatatype::kInt16: return 2;
    case NiftiDatatype::kInt32: return 4;
    case NiftiDatatype::kFloat32: return 4;
    case NiftiDatatype::kFloat64: return 8;
  }
  return 0;
}

bool is_integer_type(NiftiDatatype t) {
  return t == NiftiDatatype::kUInt8 || t == NiftiDatatype::kInt16 || t == NiftiDatatype::kInt32;
}

template <typename T>
void decode(const unsigned char* src, std::size_t n, std::vector<double>& out) {
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    T v;
    std::memcpy(&v, src + i * sizeof(T), sizeof(T));
    out[i] = static_cast<double>(v);
  }
}

Affine quaternion_affine(const std::vector<unsigned char>& h, const Spacing& spacing) {
  const double b = read_field<float>(h, off::quatern_b);
  const double c = read_field<float>(h, off::quatern_b + 4);
  const double d = read_field<float>(h, off::quatern_b + 8);
  double a = 1.0 - (b * b + c * c + d * d);
  double bb = b, cc = c, dd = d;
  if (a < 1e-7) {
    // Numerically a 180 degree rotation: renormalise (b, c, d).
    const double s = 1.0 / std::sqrt(b * b + c * c + d * d);
    bb *= s;
    cc *= s;
    dd *= s;
    a = 0.0;
  } else {
    a = std::sqrt(a);
  }
  const double qfac = read_field<float>(h, off::pixdim) < 0.0f ? -1.0 : 1.0;
  const double r[3][3] = {
      {a * a + bb * bb - cc * cc - dd * dd, 2 * (bb * cc - a * dd), 2 * (bb * dd + a * cc)},
      {2 * (bb * cc + a * dd), a * a + cc * cc - bb * bb - dd * dd, 2 * (cc * dd - a * bb)},
      {2 * (bb * dd - a * cc), 2 * (cc * dd + a * bb), a * a + dd * dd - cc * cc - bb * bb},
  };
  const double scale[3] = {spacing[0], spacing[1], qfac * spacing[2]};
  Affine m{};
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) m[row][col] = r[row][col] * scale[col];
    m[row][3] = read_field<float>(h, off::qoffset_x + 4 * row);
  }
  m[3][3] = 1.0;
  return m;
}

struct RawVolume {
  VolumeGeometry geometry;
  NiftiDatatype datatype;
  std::vector<double> values;  // scaled
  bool identity_scaling;
};

RawVolume read_raw(const fs::path& path) {
  const auto bytes = read_all(path);
  const std::string where = "'" + path.string() + "'";
  if (bytes.size() < kHeaderSize) throw FormatError(where + " is too short for a NIfTI-1 header");
  const auto sizeof_hdr = read_field<std::int32_t>(bytes, off::sizeof_hdr);
  if (sizeof_hdr != static_cast<std::int32_t>(kHeaderSize)) {
    if (sizeof_hdr == 0x5C010000) throw FormatError(where + " is big-endian; only little-endian NIfTI-1 is supported");
    throw FormatError(where + " is not a NIfTI-1 file (sizeof_hdr " + std::to_string(sizeof_hdr) + ")");
  }
  if (std::memcmp(bytes.data() + off::magic, "n+1\0", 4) != 0) {
    throw FormatError(where + " lacks the single-file NIfTI-1 magic \"n+1\"");
  }

  std::array<std::int16_t, 8> dim{};
  for (int i = 0; i < 8; ++i) dim[i] = read_field<std::int16_t>(bytes, off::dim + 2 * i);
  if (dim[0] < 3 || dim[0] > 7) throw FormatError(where + " has dim[0] = " + std::to_string(dim[0]));
  for (int i = 1; i <= 3; ++i) {
    if (dim[i] < 1) throw FormatError(where + " has non-positive dim[" + std::to_string(i) + "]");
  }
  for (int i = 4; i <= dim[0]; ++i) {
    if (dim[i] > 1) throw FormatError(where + " is not a 3D volume (dim[" + std::to_string(i) + "] = " +
                                      std::to_string(dim[i]) + ")");
  }

  const auto datatype_code = read_field<std::int16_t>(bytes, off::datatype);
  const std::size_t width = bytes_per_voxel(datatype_code);
  if (width == 0) throw FormatError(where + " has unsupported datatype " + std::to_string(datatype_code));
  const auto datatype = static_cast<NiftiDatatype>(datatype_code);

  Spacing spacing{};
  for (int i = 0; i < 3; ++i) {
    spacing[i] = read_field<float>(bytes, off::pixdim + 4 * (i + 1));
    if (!(spacing[i] > 0.0) || !std::isfinite(spacing[i])) {
      throw FormatError(where + " has non-positive spacing pixdim[" + std::to_string(i + 1) + "]");
    }
  }

  const double vox_offset = read_field<float>(bytes, off::vox_offset);
  if (!(vox_offset >= static_cast<double>(kDataOffset)) || vox_offset != std::floor(vox_offset)) {
    throw FormatError(where + " has invalid vox_offset");
  }
  const Dims dims{static_cast<std::size_t>(dim[1]), static_cast<std::size_t>(dim[2]),
                  static_cast<std::size_t>(dim[3])};
  const std::size_t n = dims[0] * dims[1] * dims[2];
  const auto offset = static_cast<std::size_t>(vox_offset);
  if (bytes.size() < offset + n * width) throw FormatError(where + " is truncated");

  Affine affine{};
  if (read_field<std::int16_t>(bytes, off::sform_code) > 0) {
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 4; ++col) affine[row][col] = read_field<float>(bytes, off::srow_x + 16 * row + 4 * col);
    }
    affine[3][3] = 1.0;
  } else if (read_field<std::int16_t>(bytes, off::qform_code) > 0) {
    affine = quaternion_affine(bytes, spacing);
  } else {
    affine = diagonal_affine(spacing);
  }

  std::optional<VolumeGeometry> geometry;
  try {
    geometry.emplace(dims, spacing, affine);
  } catch (const InvalidArgument& e) {
    throw FormatError(where + ": " + e.what());
  }

  std::vector<double> values;
  const unsigned char* src = bytes.data() + offset;
  switch (datatype) {
    case NiftiDatatype::kUInt8: decode<std::uint8_t>(src, n, values); break;
    case NiftiDatatype::kInt16: decode<std::int16_t>(src, n, values); break;
    case NiftiDatatype::kInt32: decode<std::int32_t>(src, n, values); break;
    case NiftiDatatype::kFloat32: decode<float>(src, n, values); break;
    case NiftiDatatype::kFloat64: decode<double>(src, n, values); break;
  }

  double slope = read_field<float>(bytes, off::scl_slope);
  double inter = read_field<float>(bytes, off::scl_inter);
  if (slope == 0.0 || !std::isfinite(slope)) {
    slope = 1.0;
    inter = 0.0;
  }
  if (!std::isfinite(inter)) inter = 0.0;
  const bool identity = slope == 1.0 && inter == 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!identity) values[i] = values[i] * slope + inter;
    if (!std::isfinite(values[i])) {
      throw FormatError(where + " contains a non-finite value at voxel " + std::to_string(i));
    }
  }
  return RawVolume{*geometry, datatype, std::move(values), identity};
}

bool all_label_values(const std::vector<double>& values) {
  return std::all_of(values.begin(), values.end(), [](double v) {
    return v >= 0.0 && v <= static_cast<double>(std::numeric_limits<std::int32_t>::max()) && v == std::floor(v);
  });
}

LabelVolume to_labels(const VolumeGeometry& geometry, const std::vector<double>& values) {
  std::vector<std::int32_t> labels(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) labels[i] = static_cast<std::int32_t>(values[i]);
  return LabelVolume(geometry, std::move(labels));
}

template <typename T>
void encode(const std::vector<double>& values, std::vector<unsigned char>& out) {
  const std::size_t start = out.size();
  out.resize(start + values.size() * sizeof(T));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const T v = static_cast<T>(values[i]);
    std::memcpy(out.data() + start + i * sizeof(T), &v, sizeof(T));
  }
}

template <typename T>
void check_representable(const std::vector<double>& values) {
  for (double v : values) {
    if (v != std::floor(v) || v < static_cast<double>(std::numeric_limits<T>::lowest()) ||
        v > static_cast<double>(std::numeric_limits<T>::max())) {
      throw InvalidArgument("value " + std::to_string(v) + " is not representable in the requested integer datatype");
    }
  }
}

bool ends_with_gz(const fs::path& path) {
  const std::string s = path.string();
  return s.size() >= 3 && s.compare(s.size() - 3, 3, ".gz") == 0;
}

void write_bytes_atomically(const fs::path& path, const std::vector<unsigned char>& bytes) {
  const fs::path partial = path.string() + ".partial";
  bool ok = false;
  if (ends_with_gz(path)) {
    gzFile file = gzopen(partial.c_str(), "wb6");
    if (file != nullptr) {
      std::size_t written = 0;
      ok = true;
      while (written < bytes.size()) {
        const auto chunk = static_cast<unsigned>(std::min<std::size_t>(bytes.size() - written, 1u << 30));
        if (gzwrite(file, bytes.data() + written, chunk) != static_cast<int>(chunk)) {
          ok = false;
          break;
        }
        written += chunk;
      }
      ok = (gzclose(file) == Z_OK) && ok;
    }
  } else {
    std::ofstream out(partial, std::ios::binary | std::ios::trunc);
    if (out) {
      out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
      out.close();
      ok = static_cast<bool>(out);
    }
  }
  std::error_code ec;
  if (ok) {
    fs::rename(partial, path, ec);
    if (!ec) return;
  }
  fs::remove(partial, ec);
  throw IoError("cannot write '" + path.string() + "'");
}

void write_volume(const VolumeGeometry& geometry, const std::vector<double>& values, NiftiDatatype datatype,
                  const fs::path& path) {
  for (int i = 0; i < 3; ++i) {
    if (geometry.dims()[i] > static_cast<std::size_t>(std::numeric_limits<std::int16_t>::max())) {
      throw InvalidArgument("dimension too large for NIfTI-1");
    }
  }
  switch (datatype) {
    case NiftiDatatype::kUInt8: check_representable<std::uint8_t>(values); break;
    case NiftiDatatype::kInt16: check_representable<std::int16_t>(values); break;
    case NiftiDatatype::kInt32: check_representable<std::int32_t>(values); break;
    default: break;
  }

  std::vector<unsigned char> bytes(kDataOffset, 0);
  write_field<std::int32_t>(bytes, off::sizeof_hdr, static_cast<std::int32_t>(kHeaderSize));
  const std::int16_t dim[8] = {3,
                               static_cast<std::int16_t>(geometry.dims()[0]),
                               static_cast<std::int16_t>(geometry.dims()[1]),
                               static_cast<std::int16_t>(geometry.dims()[2]),
                               1, 1, 1, 1};
  for (int i = 0; i < 8; ++i) write_field<std::int16_t>(bytes, off::dim + 2 * i, dim[i]);
  write_field<std::int16_t>(bytes, off::datatype, static_cast<std::int16_t>(datatype));
  write_field<std::int16_t>(bytes, off::bitpix, static_cast<std::int16_t>(8 * bytes_per_voxel(static_cast<std::int16_t>(datatype))));
  const float pixdim[8] = {1.0f,
                           static_cast<float>(geometry.spacing()[0]),
                           static_cast<float>(geometry.spacing()[1]),
                           static_cast<float>(geometry.spacing()[2]),
                           0.0f, 0.0f, 0.0f, 0.0f};
  for (int i = 0; i < 8; ++i) write_field<float>(bytes, off::pixdim + 4 * i, pixdim[i]);
  write_field<float>(bytes, off::vox_offset, static_cast<float>(kDataOffset));
  write_field<float>(bytes, off::scl_slope, 1.0f);
  write_field<float>(bytes, off::scl_inter, 0.0f);
  bytes[off::xyzt_units] = 2;  // millimetres
  std::memcpy(bytes.data() + off::descrip, "voxelval", 8);
  write_field<std::int16_t>(bytes, off::qform_code, 0);
  write_field<std::int16_t>(bytes, off::sform_code, 1);
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 4; ++col) {
      write_field<float>(bytes, off::srow_x + 16 * row + 4 * col, static_cast<float>(geometry.affine()[row][col]));
    }
  }
  std::memcpy(bytes.data() + off::magic, "n+1\0", 4);

  bytes.reserve(kDataOffset + values.size() * bytes_per_voxel(static_cast<std::int16_t>(datatype)));
  switch (datatype) {
    case NiftiDatatype::kUInt8: encode<std::uint8_t>(values, bytes); break;
    case NiftiDatatype::kInt16: encode<std::int16_t>(values, bytes); break;
    case NiftiDatatype::kInt32: encode<std::int32_t>(values, bytes); break;
    case NiftiDatatype::kFloat32: encode<float>(values, bytes); break;
    case NiftiDatatype::kFloat64: encode<double>(values, bytes); break;
  }
  write_bytes_atomically(path, bytes);
}

}  // namespace

LoadedVolume load_volume(const fs::path& path) {
  RawVolume raw = read_raw(path);
  if (is_integer_type(raw.datatype) && raw.identity_scaling && all_label_values(raw.values)) {
    return to_labels(raw.geometry, raw.values);
  }
  return ScalarVolume(raw.geometry, std::move(raw.values));
}

ScalarVolume load_scalar(const fs::path& path) {
  RawVolume raw = read_raw(path);
  return ScalarVolume(raw.geometry, std::move(raw.values));
}

LabelVolume load_labels(const fs::path& path) {
  RawVolume raw = read_raw(path);
  if (!all_label_values(raw.values)) {
    throw FormatError("'" + path.string() + "' does not hold non-negative integer labels");
  }
  return to_labels(raw.geometry, raw.values);
}

ProbabilityVolume load_probability(const fs::path& path) {
  RawVolume raw = read_raw(path);
  try {
    return ProbabilityVolume(raw.geometry, std::move(raw.values));
  } catch (const InvalidArgument& e) {
    throw FormatError("'" + path.string() + "': " + e.what());
  }
}

BinaryMask load_mask(const fs::path& path) {
  RawVolume raw = read_raw(path);
  std::vector<std::uint8_t> bits(raw.values.size());
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = raw.values[i] != 0.0;
  return BinaryMask(raw.geometry, std::move(bits));
}

void save_volume(const ScalarVolume& volume, const fs::path& path, NiftiDatatype datatype) {
  write_volume(volume.geometry(), std::vector<double>(volume.values().begin(), volume.values().end()), datatype, path);
}

void save_volume(const ProbabilityVolume& volume, const fs::path& path, NiftiDatatype datatype) {
  write_volume(volume.geometry(), std::vector<double>(volume.values().begin(), volume.values().end()), datatype, path);
}

void save_volume(const LabelVolume& volume, const fs::path& path, std::optional<NiftiDatatype> datatype) {
  std::vector<double> values(volume.labels().begin(), volume.labels().end());
  if (!datatype) {
    const int max_label = volume.alphabet().empty() ? 0 : volume.alphabet().back();
    datatype = max_label <= 255 ? NiftiDatatype::kUInt8
               : max_label <= 32767 ? NiftiDatatype::kInt16
                                    : NiftiDatatype::kInt32;
  }
  write_volume(volume.geometry(), values, *datatype, path);
}

void save_volume(const BinaryMask& mask, const fs::path& path) {
  write_volume(mask.geometry(), std::vector<double>(mask.bits().begin(), mask.bits().end()), NiftiDatatype::kUInt8, path);
}

}  // namespace voxelval
