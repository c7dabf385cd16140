#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "voxelval/fusion.hpp"
#include "voxelval/stats.hpp"

namespace voxelval::pipeline {

struct RimConfig {
  std::vector<double> radii_mm{2.0, 4.0, 6.0};
  bool annular = false;
  /// Segmentation labels excluded from every shell (necrosis by default).
  std::vector<int> exclude_labels{1};
};

struct MetricsConfig {
  std::vector<std::string> regions{"ET", "TC", "WT", "NEH"};
  double surface_tau_mm = 2.0;
};

struct SpatialConfig {
  double near_threshold_mm = 5.0;
  bool to_region = false;
  bool ratio_vs_null = false;
  std::size_t null_draws = 100;
};

struct PermutationConfig {
  std::size_t draws = 10000;
  std::uint64_t seed = 42;
  Tail tail = Tail::kUpper;
  /// Null baselines per spatial metric: 0 for distances, 1 for ratios.
  std::map<std::string, double> baselines{
      {"FractionInside", 1.0},
      {"FractionNearEdge", 1.0},
      {"MeanEdgeDistance", 0.0},
      {"VolumeContainment", 1.0},
  };
};

struct ReportConfig {
  bool permtest = true;
  /// Use the *_vs_null columns for FractionInside and FractionNearEdge.
  bool use_ratios = false;
};

struct PathsConfig {
  std::optional<std::filesystem::path> input;
  std::optional<std::filesystem::path> output;
};

struct PipelineConfig {
  FusionConfig fusion;
  RimConfig rim;
  MetricsConfig metrics;
  SpatialConfig spatial;
  PermutationConfig permutation;
  ReportConfig report;
  PathsConfig paths;
  unsigned jobs = 1;

  void validate() const;
};

nlohmann::json to_json(const PipelineConfig& config);
/// Missing keys keep their defaults; unknown keys throw InvalidArgument.
PipelineConfig config_from_json(const nlohmann::json& document);
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace voxelval::pipeline
