// voxelval command-line interface.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "voxelval/error.hpp"
#include "voxelval/pipeline/config.hpp"
#include "voxelval/pipeline/provenance.hpp"
#include "voxelval/pipeline/runs.hpp"

namespace fs = std::filesystem;
namespace vp = voxelval::pipeline;

namespace {

constexpr int kExitFatal = 2;

void setup_logging(int verbosity) {
  auto logger = spdlog::stderr_color_mt("voxelval");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("VOXELVAL_LOG")) spdlog::set_level(spdlog::level::from_str(env));
  if (verbosity == 1) spdlog::set_level(spdlog::level::info);
  if (verbosity >= 2) spdlog::set_level(spdlog::level::debug);
}

// Options shared by several subcommands; unset values leave the config alone.
struct Overrides {
  std::optional<double> sigma_mm, threshold, high;
  std::optional<double> tau_mm;
  std::string regions;
  std::string radii;
  std::vector<int> exclude_labels;
  bool annular = false;
  std::optional<double> near_mm;
  bool to_region = false;
  bool ratio_vs_null = false;
  std::optional<std::size_t> null_draws;
  std::optional<std::size_t> draws;
  std::string tail;
  bool no_permtest = false;
  bool use_ratios = false;
};

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> parts;
  std::string current;
  for (char ch : text) {
    if (ch == ',') {
      if (!current.empty()) parts.push_back(current);
      current.clear();
    } else if (ch != ' ') {
      current.push_back(ch);
    }
  }
  if (!current.empty()) parts.push_back(current);
  return parts;
}

std::vector<double> parse_radii(const std::string& text) {
  std::vector<double> radii;
  for (const auto& part : split(text)) {
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != part.size()) throw voxelval::InvalidArgument("--radii: '" + part + "' is not a number");
    radii.push_back(value);
  }
  return radii;
}

void apply(vp::PipelineConfig& c, const Overrides& o) {
  if (o.sigma_mm) c.fusion.sigma_mm = *o.sigma_mm;
  if (o.threshold) c.fusion.threshold = *o.threshold;
  if (o.high) c.fusion.high_confidence_threshold = *o.high;
  if (o.tau_mm) c.metrics.surface_tau_mm = *o.tau_mm;
  if (!o.regions.empty()) c.metrics.regions = split(o.regions);
  if (!o.radii.empty()) c.rim.radii_mm = parse_radii(o.radii);
  if (!o.exclude_labels.empty()) c.rim.exclude_labels = o.exclude_labels;
  if (o.annular) c.rim.annular = true;
  if (o.near_mm) c.spatial.near_threshold_mm = *o.near_mm;
  if (o.to_region) c.spatial.to_region = true;
  if (o.ratio_vs_null) c.spatial.ratio_vs_null = true;
  if (o.null_draws) c.spatial.null_draws = *o.null_draws;
  if (o.draws) c.permutation.draws = *o.draws;
  if (!o.tail.empty()) c.permutation.tail = voxelval::parse_tail(o.tail);
  if (o.no_permtest) c.report.permtest = false;
  if (o.use_ratios) c.report.use_ratios = true;
}

int finish(const vp::RunStatus& status, const char* command) {
  if (!status.failures.empty()) {
    std::cerr << command << ": " << status.failures.size() << " case(s) failed, " << status.succeeded
              << " succeeded\n";
    for (const auto& f : status.failures) std::cerr << "  " << f << "\n";
  }
  return status.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Voxel-wise validation of imaging biomarkers against tumour segmentations"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", vp::tool_version());

  std::string config_path;
  std::optional<unsigned> jobs;
  std::optional<std::uint64_t> seed;
  int verbosity = 0;
  app.add_option("--config", config_path, "JSON pipeline configuration")->check(CLI::ExistingFile);
  app.add_option("--jobs,-j", jobs, "Worker threads (cases processed concurrently)")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Seed for permutation draws, chance baselines and phantoms");
  app.add_flag("--verbose,-v", verbosity, "More logging (-vv for debug)");

  Overrides o;

  vp::FuseRequest fuse;
  std::string fuse_out;
  auto* fuse_cmd = app.add_subcommand("fuse", "Fuse NEH probability maps into a mask and confidence labels");
  fuse_cmd->add_option("--maps", fuse.maps, "Probability maps of one case")->check(CLI::ExistingFile);
  fuse_cmd->add_option("--cases-dir", fuse.cases_dir, "Directory of case folders holding prob*.nii.gz")
      ->check(CLI::ExistingDirectory);
  fuse_cmd->add_option("--out", fuse_out, "Output directory");
  fuse_cmd->add_option("--sigma-mm", o.sigma_mm, "Gaussian sigma in mm");
  fuse_cmd->add_option("--threshold", o.threshold, "Mask threshold on the smoothed probability");
  fuse_cmd->add_option("--high", o.high, "High-confidence threshold");
  fuse_cmd->add_flag("--save-probability", fuse.save_probability, "Also write the smoothed probability map");

  vp::MetricsRequest metrics;
  std::string metrics_out;
  auto* metrics_cmd = app.add_subcommand("metrics", "Overlap and boundary metrics between two segmentations");
  metrics_cmd->add_option("--pred", metrics.pred, "Prediction file or directory")->required()->check(CLI::ExistingPath);
  metrics_cmd->add_option("--ref", metrics.ref, "Reference file or directory")->required()->check(CLI::ExistingPath);
  metrics_cmd->add_option("--out", metrics_out, "Output directory");
  metrics_cmd->add_option("--regions", o.regions, "Comma-separated regions (ET,TC,WT,NEH,ED,NC,L<k>)");
  metrics_cmd->add_option("--tau-mm", o.tau_mm, "Surface Dice tolerance in mm");

  vp::RimRequest rim;
  std::string rim_out;
  auto* rim_cmd = app.add_subcommand("rim", "Perfusion statistics in NEH and in rims around the enhancing tumor");
  rim_cmd->add_option("--seg", rim.seg, "Label map (ET=4, NEH=3)")->check(CLI::ExistingFile);
  rim_cmd->add_option("--et", rim.et, "Enhancing-tumor mask (overrides --seg)")->check(CLI::ExistingFile);
  rim_cmd->add_option("--scalar", rim.scalar, "Scalar map, e.g. rCBV")->check(CLI::ExistingFile);
  rim_cmd->add_option("--neh", rim.neh, "NEH mask (overrides --seg)")->check(CLI::ExistingFile);
  rim_cmd->add_option("--brain-mask", rim.brain_mask, "Restrict rims to this mask")->check(CLI::ExistingFile);
  rim_cmd->add_option("--exclude", rim.exclude, "Extra exclusion mask (repeatable)")->check(CLI::ExistingFile);
  rim_cmd->add_option("--exclude-labels", o.exclude_labels, "Labels removed from every rim")->delimiter(',');
  rim_cmd->add_option("--radii", o.radii, "Comma-separated rim radii in mm");
  rim_cmd->add_flag("--annular", o.annular, "Also report disjoint annular bands");
  rim_cmd->add_option("--cases-dir", rim.cases_dir, "Directory of case folders")->check(CLI::ExistingDirectory);
  rim_cmd->add_option("--fused-dir", rim.fused_dir, "Take NEH from fused masks")->check(CLI::ExistingDirectory);
  rim_cmd->add_option("--out", rim_out, "Output CSV (single case, default stdout) or directory");

  vp::SpatialRequest spatial;
  std::string spatial_out;
  auto* spatial_cmd = app.add_subcommand("spatial", "Spatial agreement between predicted NEH and recurrence");
  spatial_cmd->add_option("--pneh", spatial.pneh, "Predicted NEH mask")->check(CLI::ExistingFile);
  spatial_cmd->add_option("--etrl", spatial.etrl, "Recurrence (ETRL) mask")->check(CLI::ExistingFile);
  spatial_cmd->add_option("--cases-dir", spatial.cases_dir, "Directory of case folders")
      ->check(CLI::ExistingDirectory);
  spatial_cmd->add_option("--fused-dir", spatial.fused_dir, "Take pNEH from fused masks")
      ->check(CLI::ExistingDirectory);
  spatial_cmd->add_option("--out", spatial_out, "Output JSON (single case, default stdout) or directory");
  spatial_cmd->add_option("--near-mm", o.near_mm, "Near-edge distance threshold in mm");
  spatial_cmd->add_flag("--to-region", o.to_region, "Measure distance to the ETRL region instead of its boundary");
  spatial_cmd->add_flag("--ratio-vs-null", o.ratio_vs_null, "Divide metrics by a circular-shift chance baseline");
  spatial_cmd->add_option("--null-draws", o.null_draws, "Circular shifts for the chance baseline");
  spatial_cmd->add_flag("--use-ratios", o.use_ratios, "Summarise fraction metrics as chance ratios");

  vp::PermtestRequest perm;
  std::string perm_out;
  auto* perm_cmd = app.add_subcommand("permtest", "Sign-flip permutation test of a per-case column");
  perm_cmd->add_option("--input", perm.input, "Per-case CSV")->required()->check(CLI::ExistingFile);
  perm_cmd->add_option("--column", perm.column, "Column to test");
  perm_cmd->add_option("--baseline", perm.baseline, "Null baseline");
  perm_cmd->add_option("--draws", o.draws, "Sign-flip draws when not enumerating exactly");
  perm_cmd->add_option("--tail", o.tail, "upper, lower or two")->check(CLI::IsMember({"upper", "lower", "two"}));
  perm_cmd->add_flag("--batch", perm.batch, "Test every spatial metric of a spatial_cases.csv");
  perm_cmd->add_flag("--use-ratios", o.use_ratios, "Test fraction metrics as chance ratios");
  perm_cmd->add_option("--out", perm_out, "Output JSON (default stdout) or directory with --batch");

  vp::ReportRequest report;
  std::string report_out;
  auto* report_cmd = app.add_subcommand("report", "Cohort summary tables from per-case CSVs");
  report_cmd->add_option("--input", report.inputs, "metrics_cases.csv, spatial_cases.csv or rim_cases.csv")
      ->required()
      ->check(CLI::ExistingFile);
  report_cmd->add_option("--out-dir", report_out, "Output directory")->required();
  report_cmd->add_option("--draws", o.draws, "Sign-flip draws when not enumerating exactly");
  report_cmd->add_option("--tail", o.tail, "upper, lower or two")->check(CLI::IsMember({"upper", "lower", "two"}));
  report_cmd->add_flag("--no-permtest", o.no_permtest, "Skip the permutation table");
  report_cmd->add_flag("--use-ratios", o.use_ratios, "Summarise fraction metrics as chance ratios");

  vp::PhantomRequest phantom;
  std::string phantom_out;
  std::string phantom_kind = "label";
  auto* phantom_cmd = app.add_subcommand("phantom", "Synthetic volumes and cohorts");
  phantom_cmd->add_option("--spec", phantom.spec, "JSON phantom specification")->check(CLI::ExistingFile);
  phantom_cmd->add_option("--kind", phantom_kind, "label, scalar or probability")
      ->check(CLI::IsMember({"label", "scalar", "probability"}));
  phantom_cmd->add_option("--blur-mm", phantom.blur_mm, "Gaussian blur for probability phantoms");
  phantom_cmd->add_option("--cohort", phantom.cohort, "Write a synthetic cohort of this many cases");
  phantom_cmd->add_option("--out,--out-dir", phantom_out, "Output file, or cohort directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitFatal;
  }

  setup_logging(verbosity);
  try {
    vp::PipelineConfig config = config_path.empty() ? vp::PipelineConfig{} : vp::load_config(config_path);
    apply(config, o);
    if (jobs) config.jobs = *jobs;
    if (seed) config.permutation.seed = *seed;
    config.validate();
    auto out_or_default = [&](const std::string& out) -> fs::path {
      if (!out.empty()) return out;
      return config.paths.output ? *config.paths.output : fs::path{};
    };

    if (*fuse_cmd) {
      if (fuse.maps.empty() && !fuse.cases_dir) fuse.cases_dir = config.paths.input;
      fuse.out = out_or_default(fuse_out);
      return finish(vp::run_fuse(config, fuse), "fuse");
    }
    if (*metrics_cmd) {
      metrics.out = out_or_default(metrics_out);
      return finish(vp::run_metrics(config, metrics), "metrics");
    }
    if (*rim_cmd) {
      if (!rim.seg && !rim.et && !rim.cases_dir) rim.cases_dir = config.paths.input;
      rim.out = rim.cases_dir ? out_or_default(rim_out) : fs::path(rim_out);
      return finish(vp::run_rim(config, rim), "rim");
    }
    if (*spatial_cmd) {
      if (!spatial.pneh && !spatial.cases_dir) spatial.cases_dir = config.paths.input;
      spatial.out = spatial.cases_dir ? out_or_default(spatial_out) : fs::path(spatial_out);
      return finish(vp::run_spatial(config, spatial), "spatial");
    }
    if (*perm_cmd) {
      perm.out = perm.batch ? out_or_default(perm_out) : fs::path(perm_out);
      return finish(vp::run_permtest(config, perm), "permtest");
    }
    if (*report_cmd) {
      report.out_dir = report_out;
      return finish(vp::run_report(config, report), "report");
    }
    if (*phantom_cmd) {
      phantom.kind = vp::parse_phantom_kind(phantom_kind);
      phantom.out = phantom_out;
      phantom.seed = seed.value_or(0);
      return finish(vp::run_phantom(config, phantom), "phantom");
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFatal;
  }
  return kExitFatal;
}
