#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "voxelval/error.hpp"
#include "voxelval/morphology.hpp"

namespace voxelval {

BinaryMask boundary(const BinaryMask& mask) {
  const auto& geometry = mask.geometry();
  const auto [nx, ny, nz] = geometry.dims();
  std::vector<std::uint8_t> out(mask.size(), 0);
  for (std::size_t k = 0; k < nz; ++k) {
    for (std::size_t j = 0; j < ny; ++j) {
      for (std::size_t i = 0; i < nx; ++i) {
        const std::size_t v = geometry.index(i, j, k);
        if (!mask[v]) continue;
        const bool edge = i == 0 || j == 0 || k == 0 || i + 1 == nx || j + 1 == ny || k + 1 == nz;
        out[v] = edge || !mask[v - 1] || !mask[v + 1] || !mask[v - nx] || !mask[v + nx] || !mask[v - nx * ny] ||
                 !mask[v + nx * ny];
      }
    }
  }
  return BinaryMask(geometry, std::move(out));
}

BinaryMask dilate_mm(const BinaryMask& mask, double r_mm) {
  if (!(r_mm > 0.0) || !std::isfinite(r_mm)) throw InvalidArgument("dilation radius must be positive");
  if (mask.is_empty()) {
    spdlog::warn("dilate_mm: empty input mask, returning an empty mask");
    return mask;
  }
  const DistanceField d = edt(mask);
  std::vector<std::uint8_t> bits(mask.size());
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = d[i] <= r_mm + kDistanceSlack;
  return BinaryMask(mask.geometry(), std::move(bits));
}

namespace {

std::string format_mm(double r) {
  std::ostringstream s;
  s << r;
  return s.str();
}

}  // namespace

std::string RimShellSet::shell_name(std::size_t i) const { return "rim_0-" + format_mm(radii_mm.at(i)) + "mm"; }

std::string RimShellSet::band_name(std::size_t i) const {
  const double inner = i == 0 ? 0.0 : radii_mm.at(i - 1);
  return "band_" + format_mm(inner) + "-" + format_mm(radii_mm.at(i)) + "mm";
}

RimShellSet rim_shells(const BinaryMask& et, std::span<const double> radii_mm, std::span<const BinaryMask> exclusions,
                       const RimOptions& options) {
  if (radii_mm.empty()) throw InvalidArgument("at least one rim radius is required");
  for (std::size_t i = 0; i < radii_mm.size(); ++i) {
    if (!(radii_mm[i] > 0.0)) throw InvalidArgument("rim radii must be positive");
    if (i > 0 && !(radii_mm[i] > radii_mm[i - 1])) throw InvalidArgument("rim radii must be strictly ascending");
  }
  const auto& geometry = et.geometry();
  RimShellSet set;
  set.radii_mm.assign(radii_mm.begin(), radii_mm.end());
  set.source_empty = et.is_empty();

  // Everything a shell may never contain: the source itself plus exclusions.
  std::vector<std::uint8_t> forbidden(et.bits().begin(), et.bits().end());
  for (std::size_t e = 0; e < exclusions.size(); ++e) {
    assert_geometry_match(geometry, exclusions[e].geometry());
    for (std::size_t i = 0; i < forbidden.size(); ++i) forbidden[i] |= exclusions[e][i];
    set.exclusions_applied.push_back("exclusion[" + std::to_string(e) + "] (" +
                                     std::to_string(exclusions[e].count()) + " voxels)");
  }
  if (options.brain_mask) {
    assert_geometry_match(geometry, options.brain_mask->geometry());
    for (std::size_t i = 0; i < forbidden.size(); ++i) forbidden[i] |= !(*options.brain_mask)[i];
    set.exclusions_applied.push_back("outside brain mask (" +
                                     std::to_string(options.brain_mask->size() - options.brain_mask->count()) +
                                     " voxels)");
  }

  if (set.source_empty) spdlog::warn("rim_shells: enhancing-tumor mask is empty, all shells are empty");
  const DistanceField d = edt(et);
  std::vector<std::uint8_t> previous(et.size(), 0);
  for (double r : set.radii_mm) {
    std::vector<std::uint8_t> shell(et.size(), 0);
    std::vector<std::uint8_t> band(et.size(), 0);
    for (std::size_t i = 0; i < shell.size(); ++i) {
      shell[i] = !forbidden[i] && d[i] <= r + kDistanceSlack;
      band[i] = shell[i] && !previous[i];
    }
    previous = shell;
    set.shells.emplace_back(geometry, std::move(shell));
    set.bands.emplace_back(geometry, std::move(band));
  }
  return set;
}

std::vector<RegionStats> rim_intensity_profile(const ScalarVolume& scalar, const RimShellSet& shells,
                                               const BinaryMask& neh, bool include_bands) {
  std::vector<RegionStats> out;
  out.push_back({"NEH", masked_stats(scalar, neh)});
  for (std::size_t i = 0; i < shells.shells.size(); ++i) {
    out.push_back({shells.shell_name(i), masked_stats(scalar, shells.shells[i])});
  }
  if (include_bands) {
    for (std::size_t i = 0; i < shells.bands.size(); ++i) {
      out.push_back({shells.band_name(i), masked_stats(scalar, shells.bands[i])});
    }
  }
  return out;
}

}  // namespace voxelval
