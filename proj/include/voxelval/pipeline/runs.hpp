#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "voxelval/phantom.hpp"
#include "voxelval/pipeline/config.hpp"

namespace voxelval::pipeline {

namespace fs = std::filesystem;

/// Outcome of a batch command. Per-case failures are collected rather than
/// aborting the run; fatal problems (bad arguments, unreadable directories)
/// throw instead.
struct RunStatus {
  std::size_t succeeded = 0;
  std::vector<std::string> failures;

  int exit_code() const { return failures.empty() ? 0 : 1; }
};

/// "case_001.nii.gz" -> "case_001".
std::string case_id_from_path(const fs::path& path);
bool is_nifti_path(const fs::path& path);
/// Sorted sub-directories of a cohort directory.
std::vector<fs::path> case_directories(const fs::path& cases_dir);

struct FuseRequest {
  /// Single case: explicit probability maps written straight into out.
  std::vector<fs::path> maps;
  /// Batch: every case directory's prob*.nii[.gz] files.
  std::optional<fs::path> cases_dir;
  fs::path out;
  bool save_probability = false;
};
RunStatus run_fuse(const PipelineConfig& config, const FuseRequest& request);

struct MetricsRequest {
  /// Files or directories (matched by file name).
  fs::path pred;
  fs::path ref;
  fs::path out;
};
RunStatus run_metrics(const PipelineConfig& config, const MetricsRequest& request);

struct RimRequest {
  std::optional<fs::path> seg;
  std::optional<fs::path> et;
  std::optional<fs::path> scalar;
  std::optional<fs::path> neh;
  std::optional<fs::path> brain_mask;
  std::vector<fs::path> exclude;
  std::optional<fs::path> cases_dir;
  std::optional<fs::path> fused_dir;
  fs::path out;
};
RunStatus run_rim(const PipelineConfig& config, const RimRequest& request);

struct SpatialRequest {
  std::optional<fs::path> pneh;
  std::optional<fs::path> etrl;
  std::optional<fs::path> cases_dir;
  std::optional<fs::path> fused_dir;
  fs::path out;
};
RunStatus run_spatial(const PipelineConfig& config, const SpatialRequest& request);

struct PermtestRequest {
  fs::path input;
  std::optional<std::string> column;
  std::optional<double> baseline;
  bool batch = false;
  fs::path out;
};
RunStatus run_permtest(const PipelineConfig& config, const PermtestRequest& request);

struct ReportRequest {
  std::vector<fs::path> inputs;
  fs::path out_dir;
};
RunStatus run_report(const PipelineConfig& config, const ReportRequest& request);

enum class PhantomKind { kLabel, kScalar, kProbability };
PhantomKind parse_phantom_kind(std::string_view name);

PhantomSpec phantom_spec_from_json(const nlohmann::json& document);

struct PhantomRequest {
  std::optional<fs::path> spec;
  PhantomKind kind = PhantomKind::kLabel;
  double blur_mm = 0.0;
  fs::path out;
  /// Cohort mode: number of synthetic cases written under out.
  std::size_t cohort = 0;
  std::uint64_t seed = 0;
};
RunStatus run_phantom(const PipelineConfig& config, const PhantomRequest& request);

}  // namespace voxelval::pipeline
