#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "voxelval/error.hpp"
#include "voxelval/fusion.hpp"
#include "voxelval/morphology.hpp"
#include "voxelval/nifti.hpp"
#include "voxelval/segmetrics.hpp"
#include "voxelval/spatial.hpp"
#include "voxelval/stats.hpp"

namespace py = pybind11;
using namespace voxelval;

namespace {

// Arrays cross the boundary as (nx, ny, nz) with x varying fastest, which is
// numpy's Fortran order.
template <typename T>
using FArray = py::array_t<T, py::array::f_style | py::array::forcecast>;

VolumeGeometry geometry_of(const py::array& array, const Spacing& spacing) {
  if (array.ndim() != 3) throw InvalidArgument("expected a 3-D array");
  return VolumeGeometry({static_cast<std::size_t>(array.shape(0)), static_cast<std::size_t>(array.shape(1)),
                         static_cast<std::size_t>(array.shape(2))},
                        spacing);
}

template <typename T>
std::vector<T> flat(const FArray<T>& array) {
  return std::vector<T>(array.data(), array.data() + array.size());
}

template <typename T, typename U>
FArray<T> to_array(const VolumeGeometry& geometry, std::span<const U> values) {
  const auto& d = geometry.dims();
  FArray<T> out({d[0], d[1], d[2]});
  T* dst = out.mutable_data();
  for (std::size_t i = 0; i < values.size(); ++i) dst[i] = static_cast<T>(values[i]);
  return out;
}

BinaryMask to_mask(const FArray<std::uint8_t>& array, const Spacing& spacing) {
  return BinaryMask(geometry_of(array, spacing), flat(array));
}

ScalarVolume to_scalar(const FArray<double>& array, const Spacing& spacing) {
  return ScalarVolume(geometry_of(array, spacing), flat(array));
}

FArray<std::uint8_t> mask_array(const BinaryMask& mask) { return to_array<std::uint8_t>(mask.geometry(), mask.bits()); }

py::array_t<double> affine_array(const Affine& affine) {
  py::array_t<double> out({4, 4});
  auto view = out.mutable_unchecked<2>();
  for (py::ssize_t r = 0; r < 4; ++r) {
    for (py::ssize_t c = 0; c < 4; ++c) view(r, c) = affine[r][c];
  }
  return out;
}

py::object optional_value(const std::optional<double>& v) { return v ? py::cast(*v) : py::none(); }

py::dict stats_dict(const std::string& region, const MaskedStats& s) {
  py::dict d;
  d["region"] = region;
  d["mean"] = optional_value(s.mean);
  d["sd"] = optional_value(s.sd);
  d["count"] = s.voxel_count;
  d["volume_mm3"] = s.volume_mm3;
  return d;
}

PermutationMode parse_mode(const std::string& name) {
  if (name == "auto") return PermutationMode::kAuto;
  if (name == "exact") return PermutationMode::kExact;
  if (name == "sampled") return PermutationMode::kSampled;
  throw InvalidArgument("unknown permutation mode '" + name + "' (expected auto, exact or sampled)");
}

EdgeReference parse_reference(const std::string& name) {
  if (name == "boundary") return EdgeReference::kBoundary;
  if (name == "region") return EdgeReference::kRegion;
  throw InvalidArgument("unknown edge reference '" + name + "' (expected boundary or region)");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of voxelval";

  auto error = py::register_exception<Error>(m, "VoxelvalError", PyExc_RuntimeError);
  py::register_exception<GeometryMismatch>(m, "GeometryMismatch", error.ptr());
  py::register_exception<EmptyMaskError>(m, "EmptyMaskError", error.ptr());
  py::register_exception<IoError>(m, "IoError", error.ptr());
  py::register_exception<FormatError>(m, "FormatError", error.ptr());
  py::register_exception<InvalidArgument>(m, "InvalidArgument", error.ptr());

  const Spacing unit{1.0, 1.0, 1.0};

  m.def(
      "load",
      [](const std::filesystem::path& path) {
        const auto loaded = load_volume(path);
        return std::visit(
            [](const auto& v) {
              using V = std::decay_t<decltype(v)>;
              py::object data;
              if constexpr (std::is_same_v<V, LabelVolume>) {
                data = to_array<std::int32_t>(v.geometry(), v.labels());
              } else {
                data = to_array<double>(v.geometry(), v.values());
              }
              const auto& s = v.geometry().spacing();
              return py::make_tuple(data, py::make_tuple(s[0], s[1], s[2]), affine_array(v.geometry().affine()));
            },
            loaded);
      },
      py::arg("path"),
      "Read a NIfTI-1 file. Returns (data, spacing, affine); integer files give int32 labels.");

  m.def(
      "save_scalar",
      [](const std::filesystem::path& path, const FArray<double>& data, const Spacing& spacing) {
        save_volume(to_scalar(data, spacing), path, NiftiDatatype::kFloat32);
      },
      py::arg("path"), py::arg("data"), py::arg("spacing") = unit);
  m.def(
      "save_labels",
      [](const std::filesystem::path& path, const FArray<std::int32_t>& data, const Spacing& spacing) {
        save_volume(LabelVolume(geometry_of(data, spacing), flat(data)), path);
      },
      py::arg("path"), py::arg("data"), py::arg("spacing") = unit);

  m.def(
      "dice", [](const FArray<std::uint8_t>& a, const FArray<std::uint8_t>& b) {
        return dice(to_mask(a, {1, 1, 1}), to_mask(b, {1, 1, 1}));
      },
      py::arg("a"), py::arg("b"));
  m.def(
      "jaccard", [](const FArray<std::uint8_t>& a, const FArray<std::uint8_t>& b) {
        return jaccard(to_mask(a, {1, 1, 1}), to_mask(b, {1, 1, 1}));
      },
      py::arg("a"), py::arg("b"));
  m.def(
      "hausdorff95",
      [](const FArray<std::uint8_t>& a, const FArray<std::uint8_t>& b, const Spacing& spacing) {
        return hausdorff95(to_mask(a, spacing), to_mask(b, spacing));
      },
      py::arg("a"), py::arg("b"), py::arg("spacing") = unit);
  m.def(
      "surface_dice",
      [](const FArray<std::uint8_t>& a, const FArray<std::uint8_t>& b, const Spacing& spacing, double tau_mm) {
        return surface_dice(to_mask(a, spacing), to_mask(b, spacing), tau_mm);
      },
      py::arg("a"), py::arg("b"), py::arg("spacing") = unit, py::arg("tau_mm") = 2.0);

  m.def(
      "edt",
      [](const FArray<std::uint8_t>& mask, const Spacing& spacing) {
        const auto field = edt(to_mask(mask, spacing));
        return to_array<double>(field.geometry(), field.distances());
      },
      py::arg("mask"), py::arg("spacing") = unit,
      "Distance in mm from each voxel centre to the nearest true voxel centre; inf for an empty mask.");
  m.def(
      "boundary", [](const FArray<std::uint8_t>& mask) { return mask_array(boundary(to_mask(mask, {1, 1, 1}))); },
      py::arg("mask"));
  m.def(
      "dilate_mm",
      [](const FArray<std::uint8_t>& mask, double r_mm, const Spacing& spacing) {
        return mask_array(dilate_mm(to_mask(mask, spacing), r_mm));
      },
      py::arg("mask"), py::arg("r_mm"), py::arg("spacing") = unit);

  m.def(
      "gaussian_smooth",
      [](const FArray<double>& data, double sigma_mm, const Spacing& spacing, double truncation) {
        const auto out = gaussian_smooth(to_scalar(data, spacing), sigma_mm, truncation);
        return to_array<double>(out.geometry(), out.values());
      },
      py::arg("data"), py::arg("sigma_mm") = 1.5, py::arg("spacing") = unit, py::arg("truncation") = 4.0);

  m.def(
      "fuse",
      [](const std::vector<FArray<double>>& maps, const Spacing& spacing, double sigma_mm, double threshold,
         double high_confidence_threshold) {
        std::vector<ProbabilityVolume> volumes;
        for (const auto& map : maps) volumes.emplace_back(geometry_of(map, spacing), flat(map));
        FusionConfig config;
        config.sigma_mm = sigma_mm;
        config.threshold = threshold;
        config.high_confidence_threshold = high_confidence_threshold;
        const auto result = fuse(volumes, config);
        py::dict d;
        d["mean"] = to_array<double>(result.mean.geometry(), result.mean.values());
        d["smoothed"] = to_array<double>(result.smoothed.geometry(), result.smoothed.values());
        d["mask"] = mask_array(result.mask);
        d["confidence"] = to_array<std::uint8_t>(result.confidence.geometry(), result.confidence.labels());
        return d;
      },
      py::arg("maps"), py::arg("spacing") = unit, py::arg("sigma_mm") = 1.5, py::arg("threshold") = 0.5,
      py::arg("high_confidence_threshold") = 0.75);

  m.def(
      "rim_profile",
      [](const FArray<double>& scalar, const FArray<std::uint8_t>& et, const FArray<std::uint8_t>& neh,
         const std::vector<double>& radii_mm, const std::vector<FArray<std::uint8_t>>& exclusions,
         const Spacing& spacing, bool annular) {
        std::vector<BinaryMask> excluded;
        for (const auto& e : exclusions) excluded.push_back(to_mask(e, spacing));
        const auto shells = rim_shells(to_mask(et, spacing), radii_mm, excluded);
        py::list rows;
        for (const auto& r : rim_intensity_profile(to_scalar(scalar, spacing), shells, to_mask(neh, spacing), annular)) {
          rows.append(stats_dict(r.region, r.stats));
        }
        return rows;
      },
      py::arg("scalar"), py::arg("et"), py::arg("neh"), py::arg("radii_mm") = std::vector<double>{2, 4, 6},
      py::arg("exclusions") = std::vector<FArray<std::uint8_t>>{}, py::arg("spacing") = unit,
      py::arg("annular") = false,
      "Mean scalar over the NEH mask and over cumulative rim shells outside ET.");

  m.def(
      "spatial_report",
      [](const FArray<std::uint8_t>& pneh, const FArray<std::uint8_t>& etrl, const Spacing& spacing,
         double near_mm, const std::string& reference) {
        SpatialOptions options;
        options.near_threshold_mm = near_mm;
        options.reference = parse_reference(reference);
        const auto r = spatial_report(to_mask(pneh, spacing), to_mask(etrl, spacing), options);
        py::dict d;
        d["MeanEdgeDistance"] = r.metrics.mean_edge_distance_mm;
        d["FractionNearEdge"] = r.metrics.fraction_near_edge;
        d["VolumeContainment_mm3"] = r.metrics.volume_containment_mm3;
        d["VolumeContainment"] = optional_value(r.metrics.volume_containment_log10);
        d["FractionInside"] = r.metrics.fraction_inside;
        d["pneh_mm3"] = r.pneh_mm3;
        d["etrl_mm3"] = r.etrl_mm3;
        py::dict b;
        b["proximity"] = r.benchmarks.proximity;
        b["near_edge"] = r.benchmarks.near_edge;
        b["containment"] = r.benchmarks.containment;
        b["inside"] = r.benchmarks.inside;
        d["benchmarks"] = b;
        return d;
      },
      py::arg("pneh"), py::arg("etrl"), py::arg("spacing") = unit, py::arg("near_mm") = 5.0,
      py::arg("reference") = "boundary");

  m.def(
      "sign_flip_permutation",
      [](const std::vector<double>& values, double baseline, std::size_t n_draws, std::uint64_t seed,
         const std::string& tail, const std::string& mode, unsigned jobs) {
        PermutationOptions options;
        options.baseline = baseline;
        options.n_draws = n_draws;
        options.seed = seed;
        options.tail = parse_tail(tail);
        options.mode = parse_mode(mode);
        options.jobs = jobs;
        const auto r = sign_flip_permutation(values, options);
        py::dict d;
        d["observed_mean"] = r.observed_mean;
        d["null_mean"] = r.null_mean;
        d["p_one_sided"] = r.p_one_sided;
        d["p_two_sided"] = r.p_two_sided;
        d["n_draws"] = r.n_draws;
        d["exact"] = r.exact;
        return d;
      },
      py::arg("values"), py::arg("baseline") = 0.0, py::arg("n_draws") = 10000, py::arg("seed") = 0,
      py::arg("tail") = "upper", py::arg("mode") = "auto", py::arg("jobs") = 1);

  m.def(
      "one_way_anova",
      [](const std::vector<std::vector<double>>& groups) {
        const auto r = one_way_anova(groups);
        py::dict d;
        d["f_value"] = r.f_value;
        d["df_between"] = r.df_between;
        d["df_within"] = r.df_within;
        d["p_value"] = r.p_value;
        return d;
      },
      py::arg("groups"));
}
