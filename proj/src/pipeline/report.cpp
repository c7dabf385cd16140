#include "voxelval/pipeline/report.hpp"

#include <cmath>
#include <cstdio>
#include <map>

#include "voxelval/error.hpp"

namespace voxelval::pipeline {

namespace {

constexpr std::string_view kPlusMinus = " \xC2\xB1 ";
constexpr int kSummaryDecimals = 2;

struct RowSpec {
  const char* label;
  const char* column;
};

constexpr RowSpec kSegmentationRows[] = {
    {"Dice", "dice"},
    {"Hausdorff95", "hausdorff95_mm"},
    {"Jaccard", "jaccard"},
    {"Surface Dice", "surface_dice"},
};

std::string spatial_column(const std::string& metric, bool use_ratios) {
  if (use_ratios && (metric == "FractionInside" || metric == "FractionNearEdge")) return metric + "_vs_null";
  return metric;
}

}  // namespace

const std::vector<std::string>& spatial_metric_names() {
  static const std::vector<std::string> names{"FractionInside", "FractionNearEdge", "MeanEdgeDistance",
                                              "VolumeContainment"};
  return names;
}

std::string format_fixed(double value, int decimals) {
  if (!std::isfinite(value)) return value > 0 ? "inf" : (value < 0 ? "-inf" : "nan");
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", decimals, value);
  std::string text(buffer);
  // "-0.00" reads as a sign error in a table.
  if (text.find_first_not_of("-0.") == std::string::npos && text.front() == '-') text.erase(0, 1);
  return text;
}

std::string format_mean_sd(const std::vector<double>& values, int decimals) {
  if (values.empty()) return "NA";
  const auto d = descriptive(values);
  return format_fixed(d.mean, decimals) + std::string(kPlusMinus) + (d.sd ? format_fixed(*d.sd, decimals) : "NA");
}

std::string format_p_value(double p) {
  if (p < 1e-4) return "<0.0001";
  return format_fixed(p, 4);
}

std::vector<double> column_values(const CsvTable& table, std::string_view column, std::string_view filter_column,
                                  std::string_view filter_value) {
  const std::size_t c = table.column(column);
  std::optional<std::size_t> f;
  if (!filter_column.empty()) f = table.column(filter_column);
  std::vector<double> values;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (f && table.rows[r][*f] != filter_value) continue;
    // Header is line 1.
    if (auto v = parse_optional_number(table.rows[r][c], r + 2, column)) {
      if (!std::isfinite(*v)) {
        throw FormatError("line " + std::to_string(r + 2) + ", column '" + std::string(column) + "' is not finite");
      }
      values.push_back(*v);
    }
  }
  return values;
}

CsvTable build_segmentation_table(const CsvTable& metrics_cases, const std::vector<std::string>& regions) {
  CsvTable table;
  table.header.push_back("Metric");
  for (const auto& region : regions) table.header.push_back(region);
  for (const auto& row : kSegmentationRows) {
    std::vector<std::string> cells{row.label};
    for (const auto& region : regions) {
      cells.push_back(format_mean_sd(column_values(metrics_cases, row.column, "region", region), kSummaryDecimals));
    }
    table.rows.push_back(std::move(cells));
  }
  return table;
}

CsvTable build_spatial_table(const CsvTable& spatial_cases, bool use_ratios) {
  CsvTable table;
  table.header = {"Metric", "mean" + std::string(kPlusMinus) + "SD"};
  for (const auto& metric : spatial_metric_names()) {
    table.rows.push_back(
        {metric, format_mean_sd(column_values(spatial_cases, spatial_column(metric, use_ratios)), kSummaryDecimals)});
  }
  return table;
}

std::vector<PermutationRow> run_spatial_permutations(const CsvTable& spatial_cases, const PermutationConfig& config,
                                                     bool use_ratios, unsigned jobs) {
  std::vector<PermutationRow> rows;
  for (const auto& metric : spatial_metric_names()) {
    PermutationRow row;
    row.metric = metric;
    row.column = spatial_column(metric, use_ratios);
    const auto values = column_values(spatial_cases, row.column);
    if (values.empty()) throw InvalidArgument("no values for " + row.column + " in the spatial case table");
    PermutationOptions options;
    const auto baseline = config.baselines.find(metric);
    options.baseline = baseline == config.baselines.end() ? 0.0 : baseline->second;
    options.n_draws = config.draws;
    options.seed = config.seed;
    options.tail = config.tail;
    options.jobs = jobs;
    row.result = sign_flip_permutation(values, options);
    rows.push_back(std::move(row));
  }
  return rows;
}

CsvTable build_permutation_table(std::span<const PermutationRow> rows) {
  CsvTable table;
  table.header = {"metric", "observed_mean", "null_mean", "p_one_sided", "p_two_sided"};
  for (const auto& row : rows) {
    table.rows.push_back({row.metric, format_fixed(row.result.observed_mean, 3), format_fixed(row.result.null_mean, 3),
                          format_p_value(row.result.p_one_sided), format_p_value(row.result.p_two_sided)});
  }
  return table;
}

nlohmann::json permutation_json(std::span<const PermutationRow> rows) {
  auto list = nlohmann::json::array();
  for (const auto& row : rows) {
    const auto& r = row.result;
    list.push_back({
        {"metric", row.metric},
        {"column", row.column},
        {"observed_mean", r.observed_mean},
        {"null_mean", r.null_mean},
        {"p_one_sided", r.p_one_sided},
        {"p_two_sided", r.p_two_sided},
        {"n_values", r.n_values},
        {"n_draws", r.n_draws},
        {"exact", r.exact},
        {"seed", r.seed},
        {"baseline", r.baseline},
        {"tail", std::string(tail_name(r.tail))},
    });
  }
  return list;
}

namespace {

std::vector<std::pair<std::string, std::vector<double>>> rim_groups(const CsvTable& rim_cases) {
  std::vector<std::pair<std::string, std::vector<double>>> groups;
  std::map<std::string, std::size_t> index;
  const std::size_t region_col = rim_cases.column("region");
  const std::size_t mean_col = rim_cases.column("mean");
  for (std::size_t r = 0; r < rim_cases.rows.size(); ++r) {
    const auto& region = rim_cases.rows[r][region_col];
    auto [it, inserted] = index.emplace(region, groups.size());
    if (inserted) groups.emplace_back(region, std::vector<double>{});
    if (auto v = parse_optional_number(rim_cases.rows[r][mean_col], r + 2, "mean")) groups[it->second].second.push_back(*v);
  }
  return groups;
}

}  // namespace

CsvTable build_rim_table(const CsvTable& rim_cases) {
  CsvTable table;
  table.header = {"region", "mean" + std::string(kPlusMinus) + "SD", "n"};
  for (const auto& [region, values] : rim_groups(rim_cases)) {
    table.rows.push_back({region, format_mean_sd(values, kSummaryDecimals), std::to_string(values.size())});
  }
  return table;
}

std::optional<AnovaResult> rim_anova(const CsvTable& rim_cases) {
  std::vector<std::vector<double>> groups;
  for (auto& [region, values] : rim_groups(rim_cases)) {
    if (values.size() >= 2) groups.push_back(std::move(values));
  }
  if (groups.size() < 2) return std::nullopt;
  return one_way_anova(groups);
}

void verify_summary_cell(std::string_view cell, const std::vector<double>& values, int decimals,
                         std::string_view where) {
  const std::string expected = format_mean_sd(values, decimals);
  if (cell == expected) {
    if (values.empty()) return;
    // Re-parse the printed mean and check it rounds from the raw mean.
    const auto d = descriptive(values);
    const auto pos = cell.find(kPlusMinus);
    const auto printed = parse_optional_number(cell.substr(0, pos), 0, where);
    const double half_step = 0.5 * std::pow(10.0, -decimals);
    if (printed && std::isfinite(d.mean) && std::fabs(*printed - d.mean) <= half_step * (1.0 + 1e-9)) return;
  }
  throw Error("report self-check failed at " + std::string(where) + ": table has '" + std::string(cell) +
              "', per-case data give '" + expected + "'");
}

}  // namespace voxelval::pipeline
