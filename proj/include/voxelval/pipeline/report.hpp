#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "voxelval/pipeline/config.hpp"
#include "voxelval/pipeline/csv.hpp"
#include "voxelval/stats.hpp"

namespace voxelval::pipeline {

/// Spatial metric rows in report order.
const std::vector<std::string>& spatial_metric_names();

/// "0.83 ± 0.15"; the sd reads "NA" for a single value. An empty sample
/// formats as "NA".
std::string format_mean_sd(const std::vector<double>& values, int decimals);
/// Four decimals, or "<0.0001" below 1e-4.
std::string format_p_value(double p);
std::string format_fixed(double value, int decimals);

/// Non-empty numeric cells of `column`, optionally restricted to rows whose
/// `filter_column` equals `filter_value`.
std::vector<double> column_values(const CsvTable& table, std::string_view column,
                                  std::string_view filter_column = {}, std::string_view filter_value = {});

/// "Metric,ET,TC,WT" with Dice, Hausdorff95, Jaccard and Surface Dice rows
/// from a metrics_cases.csv table.
CsvTable build_segmentation_table(const CsvTable& metrics_cases, const std::vector<std::string>& regions);
/// "Metric,mean ± SD" over the four spatial metrics of spatial_cases.csv.
CsvTable build_spatial_table(const CsvTable& spatial_cases, bool use_ratios);

struct PermutationRow {
  std::string metric;
  std::string column;
  PermutationResult result;
};

std::vector<PermutationRow> run_spatial_permutations(const CsvTable& spatial_cases, const PermutationConfig& config,
                                                     bool use_ratios, unsigned jobs);
/// "metric,observed_mean,null_mean,p_one_sided,p_two_sided".
CsvTable build_permutation_table(std::span<const PermutationRow> rows);
nlohmann::json permutation_json(std::span<const PermutationRow> rows);

/// "region,mean ± SD,n" over per-case region means of rim_cases.csv, in
/// first-appearance order.
CsvTable build_rim_table(const CsvTable& rim_cases);
/// One-way ANOVA across rim regions (per-case means as observations).
/// Absent when fewer than two regions have two or more values.
std::optional<AnovaResult> rim_anova(const CsvTable& rim_cases);

/// Re-reads a written summary table and checks every "mean ± sd" cell
/// against the values it was computed from. Throws Error on disagreement.
void verify_summary_cell(std::string_view cell, const std::vector<double>& values, int decimals,
                         std::string_view where);

}  // namespace voxelval::pipeline
