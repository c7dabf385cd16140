#include "voxelval/pipeline/runs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <numbers>
#include <set>

#include <spdlog/spdlog.h>

#include "voxelval/error.hpp"
#include "voxelval/fusion.hpp"
#include "voxelval/morphology.hpp"
#include "voxelval/nifti.hpp"
#include "voxelval/parallel.hpp"
#include "voxelval/pipeline/csv.hpp"
#include "voxelval/pipeline/provenance.hpp"
#include "voxelval/pipeline/report.hpp"
#include "voxelval/random.hpp"
#include "voxelval/segmetrics.hpp"
#include "voxelval/spatial.hpp"

namespace voxelval::pipeline {

using nlohmann::json;

std::string case_id_from_path(const fs::path& path) {
  std::string name = path.filename().string();
  for (std::string_view suffix : {".nii.gz", ".nii"}) {
    if (name.size() > suffix.size() && name.ends_with(suffix)) return name.substr(0, name.size() - suffix.size());
  }
  return path.stem().string();
}

bool is_nifti_path(const fs::path& path) {
  const std::string name = path.filename().string();
  return name.ends_with(".nii") || name.ends_with(".nii.gz");
}

std::vector<fs::path> case_directories(const fs::path& cases_dir) {
  if (!fs::is_directory(cases_dir)) throw IoError("not a directory: " + cases_dir.string());
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(cases_dir)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

namespace {

std::vector<fs::path> nifti_files(const fs::path& dir, std::string_view prefix = {}) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || !is_nifti_path(entry.path())) continue;
    if (!prefix.empty() && !entry.path().filename().string().starts_with(prefix)) continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::optional<fs::path> find_volume(const fs::path& dir, std::string_view stem) {
  for (std::string_view suffix : {".nii.gz", ".nii"}) {
    auto candidate = dir / (std::string(stem) + std::string(suffix));
    if (fs::is_regular_file(candidate)) return candidate;
  }
  return std::nullopt;
}

fs::path require_volume(const fs::path& dir, std::string_view stem) {
  if (auto p = find_volume(dir, stem)) return *p;
  throw IoError("missing " + std::string(stem) + ".nii[.gz] in " + dir.string());
}

void write_json(const fs::path& path, const json& document) { write_text_atomically(path, document.dump(2) + "\n"); }

void emit_text(const fs::path& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_text_atomically(out, text);
  }
}

/// Runs `body` for every case, recording per-case failures instead of
/// stopping the batch. Returns which cases succeeded.
template <typename Body>
std::vector<bool> for_each_case(const std::vector<std::string>& ids, unsigned jobs, RunStatus& status, Body body) {
  std::vector<std::optional<std::string>> errors(ids.size());
  parallel_for(ids.size(), jobs, [&](std::size_t i) {
    try {
      body(i);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  std::vector<bool> ok(ids.size(), true);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (errors[i]) {
      ok[i] = false;
      spdlog::error("case {}: {}", ids[i], *errors[i]);
      status.failures.push_back(ids[i] + ": " + *errors[i]);
    } else {
      ++status.succeeded;
    }
  }
  return ok;
}

json fusion_json(const FusionConfig& f) {
  return {{"sigma_mm", f.sigma_mm},
          {"threshold", f.threshold},
          {"high_confidence_threshold", f.high_confidence_threshold},
          {"kernel_truncation", f.kernel_truncation}};
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// ---------------------------------------------------------------- fuse

void fuse_case(const PipelineConfig& config, const std::vector<fs::path>& maps, const fs::path& out_dir,
               const std::string& case_id, bool save_probability) {
  if (maps.empty()) throw InvalidArgument("no probability maps");
  std::vector<ProbabilityVolume> volumes;
  volumes.reserve(maps.size());
  Provenance provenance;
  provenance.command = "fuse";
  provenance.case_id = case_id;
  provenance.parameters = {{"fusion", fusion_json(config.fusion)}, {"n_maps", maps.size()}};
  for (const auto& path : maps) {
    volumes.push_back(load_probability(path));
    provenance.add_input(path);
  }
  const FusionResult result = fuse(volumes, config.fusion);
  fs::create_directories(out_dir);
  const auto mask_path = out_dir / "neh_mask.nii.gz";
  const auto confidence_path = out_dir / "neh_confidence.nii.gz";
  save_volume(result.mask, mask_path);
  save_volume(result.confidence, confidence_path, NiftiDatatype::kUInt8);
  provenance.add_output(mask_path);
  provenance.add_output(confidence_path);
  if (save_probability) {
    const auto probability_path = out_dir / "neh_probability.nii.gz";
    save_volume(result.smoothed, probability_path, NiftiDatatype::kFloat32);
    provenance.add_output(probability_path);
  }
  write_json(out_dir / "provenance.json", provenance.to_json());
  spdlog::info("case {}: fused {} maps, {} NEH voxels", case_id, maps.size(), result.mask.count());
}

}  // namespace

RunStatus run_fuse(const PipelineConfig& config, const FuseRequest& request) {
  config.validate();
  if (request.out.empty()) throw InvalidArgument("fuse needs an output directory");
  RunStatus status;
  if (!request.maps.empty()) {
    if (request.cases_dir) throw InvalidArgument("use either --maps or --cases-dir, not both");
    std::vector<std::string> ids{case_id_from_path(request.out)};
    for_each_case(ids, 1, status,
                  [&](std::size_t) { fuse_case(config, request.maps, request.out, ids[0], request.save_probability); });
    return status;
  }
  if (!request.cases_dir) throw InvalidArgument("fuse needs --maps or --cases-dir");
  const auto dirs = case_directories(*request.cases_dir);
  std::vector<std::string> ids;
  for (const auto& d : dirs) ids.push_back(d.filename().string());
  for_each_case(ids, config.jobs, status, [&](std::size_t i) {
    fuse_case(config, nifti_files(dirs[i], "prob"), request.out / ids[i], ids[i], request.save_probability);
  });
  return status;
}

// ---------------------------------------------------------------- metrics

RunStatus run_metrics(const PipelineConfig& config, const MetricsRequest& request) {
  config.validate();
  if (request.out.empty()) throw InvalidArgument("metrics needs an output directory");
  std::vector<RegionPreset> regions;
  for (const auto& name : config.metrics.regions) regions.push_back(region_preset(name));

  RunStatus status;
  std::vector<std::string> ids;
  std::vector<std::pair<fs::path, fs::path>> pairs;
  if (fs::is_directory(request.pred) != fs::is_directory(request.ref)) {
    throw InvalidArgument("--pred and --ref must both be files or both be directories");
  }
  if (fs::is_directory(request.pred)) {
    std::map<std::string, fs::path> refs;
    for (const auto& p : nifti_files(request.ref)) refs.emplace(p.filename().string(), p);
    std::set<std::string> matched;
    for (const auto& p : nifti_files(request.pred)) {
      auto it = refs.find(p.filename().string());
      if (it == refs.end()) {
        spdlog::error("no reference for {}", p.filename().string());
        status.failures.push_back(case_id_from_path(p) + ": no matching reference file");
        continue;
      }
      matched.insert(it->first);
      ids.push_back(case_id_from_path(p));
      pairs.emplace_back(p, it->second);
    }
    for (const auto& [name, path] : refs) {
      if (!matched.contains(name)) status.failures.push_back(case_id_from_path(path) + ": no matching prediction file");
    }
  } else {
    ids.push_back(case_id_from_path(request.pred));
    pairs.emplace_back(request.pred, request.ref);
  }

  std::vector<CaseReport> reports(ids.size());
  const auto ok = for_each_case(ids, config.jobs, status, [&](std::size_t i) {
    const LabelVolume a = load_labels(pairs[i].first);
    const LabelVolume b = load_labels(pairs[i].second);
    reports[i] = evaluate_case(a, b, regions, config.metrics.surface_tau_mm, ids[i]);
  });

  CsvTable table;
  table.header = {"case_id", "region", "dice", "jaccard", "hausdorff95_mm", "surface_dice", "a_voxels", "b_voxels"};
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!ok[i]) continue;
    for (const auto& m : reports[i].regions) {
      table.rows.push_back({ids[i], m.region, format_number(m.dice), format_number(m.jaccard),
                            format_optional(m.hausdorff95_mm), format_optional(m.surface_dice),
                            std::to_string(m.a_voxels), std::to_string(m.b_voxels)});
    }
  }
  fs::create_directories(request.out);
  const auto cases_path = request.out / "metrics_cases.csv";
  write_csv(cases_path, table);

  json summary = json::object();
  for (const auto& region : config.metrics.regions) {
    json per_metric = json::object();
    for (const char* column : {"dice", "jaccard", "hausdorff95_mm", "surface_dice"}) {
      const auto values = column_values(table, column, "region", region);
      json entry = {{"n", values.size()}, {"mean", nullptr}, {"sd", nullptr}};
      if (!values.empty()) {
        const auto d = descriptive(values);
        entry["mean"] = d.mean;
        entry["sd"] = optional_json(d.sd);
      }
      per_metric[column] = entry;
    }
    summary[region] = per_metric;
  }
  const auto summary_path = request.out / "metrics_summary.json";
  write_json(summary_path, {{"regions", summary},
                            {"cases", status.succeeded},
                            {"failures", status.failures},
                            {"surface_tau_mm", config.metrics.surface_tau_mm}});

  Provenance provenance;
  provenance.command = "metrics";
  provenance.parameters = {{"regions", config.metrics.regions}, {"surface_tau_mm", config.metrics.surface_tau_mm}};
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!ok[i]) continue;
    provenance.add_input(pairs[i].first);
    provenance.add_input(pairs[i].second);
  }
  provenance.add_output(cases_path);
  provenance.add_output(summary_path);
  write_json(request.out / "provenance.json", provenance.to_json());
  return status;
}

// ---------------------------------------------------------------- rim

namespace {

struct RimInputs {
  BinaryMask et;
  BinaryMask neh;
  ScalarVolume scalar;
  std::vector<BinaryMask> exclusions;
  RimOptions options;
  std::vector<fs::path> files;
};

std::vector<RegionStats> rim_profile(const PipelineConfig& config, const RimInputs& in) {
  const auto shells = rim_shells(in.et, config.rim.radii_mm, in.exclusions, in.options);
  if (shells.source_empty) spdlog::warn("enhancing tumor mask is empty; rim shells are empty");
  return rim_intensity_profile(in.scalar, shells, in.neh, config.rim.annular);
}

std::vector<std::string> rim_row(const RegionStats& r) {
  return {r.region, format_optional(r.stats.mean), format_optional(r.stats.sd), std::to_string(r.stats.voxel_count),
          format_number(r.stats.volume_mm3)};
}

RimInputs rim_inputs_from_seg(const PipelineConfig& config, const fs::path& seg_path, const fs::path& scalar_path,
                              const std::optional<fs::path>& neh_path) {
  const LabelVolume seg = load_labels(seg_path);
  RimInputs in{label_mask(seg, region_preset("ET")),
               neh_path ? load_mask(*neh_path) : label_mask(seg, region_preset("NEH")),
               load_scalar(scalar_path),
               {},
               {},
               {seg_path, scalar_path}};
  if (neh_path) in.files.push_back(*neh_path);
  if (!config.rim.exclude_labels.empty()) in.exclusions.push_back(label_mask(seg, config.rim.exclude_labels));
  return in;
}

json rim_parameters(const PipelineConfig& config) {
  return {{"radii_mm", config.rim.radii_mm},
          {"annular", config.rim.annular},
          {"exclude_labels", config.rim.exclude_labels}};
}

}  // namespace

RunStatus run_rim(const PipelineConfig& config, const RimRequest& request) {
  config.validate();
  RunStatus status;
  const std::vector<std::string> header{"region", "mean", "sd", "count", "volume_mm3"};

  if (!request.cases_dir) {
    if (!request.scalar) throw InvalidArgument("rim needs --scalar");
    if (!request.seg && !request.et) throw InvalidArgument("rim needs --seg or --et");
    if (!request.seg && !request.neh) throw InvalidArgument("rim needs --neh when no --seg is given");
    std::vector<std::string> ids{request.seg ? case_id_from_path(*request.seg) : case_id_from_path(*request.et)};
    CsvTable table;
    table.header = header;
    for_each_case(ids, 1, status, [&](std::size_t) {
      RimInputs in = request.seg ? rim_inputs_from_seg(config, *request.seg, *request.scalar, request.neh)
                                 : RimInputs{load_mask(*request.et), load_mask(*request.neh), load_scalar(*request.scalar),
                                             {}, {}, {*request.et, *request.neh, *request.scalar}};
      if (request.seg && request.et) in.et = load_mask(*request.et);
      for (const auto& path : request.exclude) in.exclusions.push_back(load_mask(path));
      if (request.brain_mask) in.options.brain_mask = load_mask(*request.brain_mask);
      for (const auto& r : rim_profile(config, in)) table.rows.push_back(rim_row(r));
    });
    if (status.failures.empty()) emit_text(request.out, to_csv_text(table));
    return status;
  }

  if (request.out.empty()) throw InvalidArgument("rim --cases-dir needs an output directory");
  const auto dirs = case_directories(*request.cases_dir);
  std::vector<std::string> ids;
  for (const auto& d : dirs) ids.push_back(d.filename().string());
  std::vector<std::vector<RegionStats>> profiles(ids.size());
  std::vector<std::vector<fs::path>> files(ids.size());
  const auto ok = for_each_case(ids, config.jobs, status, [&](std::size_t i) {
    std::optional<fs::path> neh;
    if (request.fused_dir) neh = require_volume(*request.fused_dir / ids[i], "neh_mask");
    const auto scalar = find_volume(dirs[i], "rcbv") ? require_volume(dirs[i], "rcbv") : require_volume(dirs[i], "scalar");
    RimInputs in = rim_inputs_from_seg(config, require_volume(dirs[i], "seg"), scalar, neh);
    for (const auto& path : nifti_files(dirs[i], "exclude_")) {
      in.exclusions.push_back(load_mask(path));
      in.files.push_back(path);
    }
    if (auto brain = find_volume(dirs[i], "brain_mask")) {
      in.options.brain_mask = load_mask(*brain);
      in.files.push_back(*brain);
    }
    profiles[i] = rim_profile(config, in);
    files[i] = in.files;
  });

  CsvTable table;
  table.header = {"case_id"};
  table.header.insert(table.header.end(), header.begin(), header.end());
  Provenance provenance;
  provenance.command = "rim";
  provenance.parameters = rim_parameters(config);
  provenance.parameters["neh_source"] = request.fused_dir ? "fused" : "segmentation";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!ok[i]) continue;
    for (const auto& r : profiles[i]) {
      auto row = rim_row(r);
      row.insert(row.begin(), ids[i]);
      table.rows.push_back(std::move(row));
    }
    for (const auto& f : files[i]) provenance.add_input(f);
  }
  fs::create_directories(request.out);
  const auto cases_path = request.out / "rim_cases.csv";
  write_csv(cases_path, table);
  provenance.add_output(cases_path);
  write_json(request.out / "provenance.json", provenance.to_json());
  return status;
}

// ---------------------------------------------------------------- spatial

namespace {

SpatialOptions spatial_options(const PipelineConfig& config) {
  return {config.spatial.near_threshold_mm,
          config.spatial.to_region ? EdgeReference::kRegion : EdgeReference::kBoundary};
}

SpatialReport spatial_case(const PipelineConfig& config, const BinaryMask& pneh, const BinaryMask& etrl) {
  const auto options = spatial_options(config);
  SpatialReport report = spatial_report(pneh, etrl, options);
  if (config.spatial.ratio_vs_null) {
    report.ratio_vs_null =
        ratio_vs_null(pneh, etrl, options, config.spatial.null_draws, config.permutation.seed);
  }
  return report;
}

json metrics_json(const SpatialMetrics& m) {
  return {{"MeanEdgeDistance", m.mean_edge_distance_mm},
          {"FractionNearEdge", m.fraction_near_edge},
          {"VolumeContainment_mm3", m.volume_containment_mm3},
          {"VolumeContainment", optional_json(m.volume_containment_log10)},
          {"FractionInside", m.fraction_inside},
          {"near_threshold_mm", m.near_threshold_mm}};
}

json spatial_json(const std::string& case_id, const PipelineConfig& config, const SpatialReport& r) {
  json doc = {
      {"case_id", case_id},
      {"edge_reference", config.spatial.to_region ? "region" : "boundary"},
      {"metrics", metrics_json(r.metrics)},
      {"benchmarks",
       {{"proximity", r.benchmarks.proximity},
        {"near_edge", r.benchmarks.near_edge},
        {"containment", r.benchmarks.containment},
        {"inside", r.benchmarks.inside}}},
      {"pneh_mm3", r.pneh_mm3},
      {"etrl_mm3", r.etrl_mm3},
      {"ratio_vs_null", nullptr},
  };
  if (r.ratio_vs_null) {
    const auto& c = *r.ratio_vs_null;
    doc["ratio_vs_null"] = {{"draws", c.draws},
                            {"seed", c.seed},
                            {"null_mean", metrics_json(c.null_mean)},
                            {"MeanEdgeDistance", optional_json(c.mean_edge_distance)},
                            {"FractionNearEdge", optional_json(c.fraction_near_edge)},
                            {"VolumeContainment", optional_json(c.volume_containment)},
                            {"FractionInside", optional_json(c.fraction_inside)}};
  }
  return doc;
}

std::string flag(bool b) { return b ? "true" : "false"; }

}  // namespace

RunStatus run_spatial(const PipelineConfig& config, const SpatialRequest& request) {
  config.validate();
  RunStatus status;
  if (!request.cases_dir) {
    if (!request.pneh || !request.etrl) throw InvalidArgument("spatial needs --pneh and --etrl, or --cases-dir");
    std::vector<std::string> ids{case_id_from_path(*request.pneh)};
    for_each_case(ids, 1, status, [&](std::size_t) {
      const auto report = spatial_case(config, load_mask(*request.pneh), load_mask(*request.etrl));
      emit_text(request.out, spatial_json(ids[0], config, report).dump(2) + "\n");
    });
    return status;
  }

  if (request.out.empty()) throw InvalidArgument("spatial --cases-dir needs an output directory");
  const auto dirs = case_directories(*request.cases_dir);
  std::vector<std::string> ids;
  for (const auto& d : dirs) ids.push_back(d.filename().string());
  std::vector<std::optional<SpatialReport>> reports(ids.size());
  std::vector<std::vector<fs::path>> files(ids.size());
  const auto ok = for_each_case(ids, config.jobs, status, [&](std::size_t i) {
    const auto pneh_path = request.fused_dir ? require_volume(*request.fused_dir / ids[i], "neh_mask")
                                             : require_volume(dirs[i], "pneh");
    const auto etrl_path = require_volume(dirs[i], "etrl");
    reports[i] = spatial_case(config, load_mask(pneh_path), load_mask(etrl_path));
    files[i] = {pneh_path, etrl_path};
  });

  CsvTable table;
  table.header = {"case_id",  "MeanEdgeDistance", "FractionNearEdge", "VolumeContainment", "VolumeContainment_mm3",
                  "FractionInside", "pneh_mm3", "etrl_mm3", "proximity", "near_edge", "containment", "inside"};
  if (config.spatial.ratio_vs_null) {
    for (const auto& metric : spatial_metric_names()) table.header.push_back(metric + "_vs_null");
  }
  Provenance provenance;
  provenance.command = "spatial";
  provenance.parameters = {{"near_threshold_mm", config.spatial.near_threshold_mm},
                           {"to_region", config.spatial.to_region},
                           {"ratio_vs_null", config.spatial.ratio_vs_null},
                           {"null_draws", config.spatial.null_draws},
                           {"seed", config.permutation.seed}};
  fs::create_directories(request.out / "cases");
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!ok[i]) continue;
    const auto& r = *reports[i];
    const auto& m = r.metrics;
    std::vector<std::string> row{ids[i],
                                 format_number(m.mean_edge_distance_mm),
                                 format_number(m.fraction_near_edge),
                                 format_optional(m.volume_containment_log10),
                                 format_number(m.volume_containment_mm3),
                                 format_number(m.fraction_inside),
                                 format_number(r.pneh_mm3),
                                 format_number(r.etrl_mm3),
                                 flag(r.benchmarks.proximity),
                                 flag(r.benchmarks.near_edge),
                                 flag(r.benchmarks.containment),
                                 flag(r.benchmarks.inside)};
    if (r.ratio_vs_null) {
      // Same order as spatial_metric_names().
      row.push_back(format_optional(r.ratio_vs_null->fraction_inside));
      row.push_back(format_optional(r.ratio_vs_null->fraction_near_edge));
      row.push_back(format_optional(r.ratio_vs_null->mean_edge_distance));
      row.push_back(format_optional(r.ratio_vs_null->volume_containment));
    }
    table.rows.push_back(std::move(row));
    const auto case_path = request.out / "cases" / (ids[i] + ".json");
    write_json(case_path, spatial_json(ids[i], config, r));
    for (const auto& f : files[i]) provenance.add_input(f);
    provenance.add_output(case_path);
  }
  const auto cases_path = request.out / "spatial_cases.csv";
  write_csv(cases_path, table);
  provenance.add_output(cases_path);
  if (!table.rows.empty()) {
    const auto summary_path = request.out / "table8.csv";
    write_csv(summary_path, build_spatial_table(table, config.report.use_ratios && config.spatial.ratio_vs_null));
    provenance.add_output(summary_path);
  }
  write_json(request.out / "provenance.json", provenance.to_json());
  return status;
}

// ---------------------------------------------------------------- permtest

RunStatus run_permtest(const PipelineConfig& config, const PermtestRequest& request) {
  config.validate();
  RunStatus status;
  const CsvTable input = read_csv(request.input);
  Provenance provenance;
  provenance.command = "permtest";
  provenance.add_input(request.input);

  if (request.batch) {
    if (request.out.empty()) throw InvalidArgument("permtest --batch needs an output directory");
    auto permutation = config.permutation;
    const bool use_ratios = config.report.use_ratios;
    const auto rows = run_spatial_permutations(input, permutation, use_ratios, config.jobs);
    fs::create_directories(request.out);
    const auto table_path = request.out / "table9.csv";
    const auto json_path = request.out / "permtest.json";
    write_csv(table_path, build_permutation_table(rows));
    write_json(json_path, permutation_json(rows));
    provenance.parameters = {{"draws", permutation.draws},
                             {"seed", permutation.seed},
                             {"tail", std::string(tail_name(permutation.tail))},
                             {"baselines", permutation.baselines},
                             {"use_ratios", use_ratios}};
    provenance.add_output(table_path);
    provenance.add_output(json_path);
    write_json(request.out / "provenance.json", provenance.to_json());
    status.succeeded = rows.size();
    return status;
  }

  if (!request.column) throw InvalidArgument("permtest needs --column (or --batch)");
  const auto values = column_values(input, *request.column);
  if (values.empty()) throw InvalidArgument("column '" + *request.column + "' has no values");
  PermutationOptions options;
  if (request.baseline) {
    options.baseline = *request.baseline;
  } else if (auto it = config.permutation.baselines.find(*request.column); it != config.permutation.baselines.end()) {
    options.baseline = it->second;
  }
  options.n_draws = config.permutation.draws;
  options.seed = config.permutation.seed;
  options.tail = config.permutation.tail;
  options.jobs = config.jobs;
  PermutationRow row{*request.column, *request.column, sign_flip_permutation(values, options)};
  const auto doc = permutation_json(std::span<const PermutationRow>(&row, 1))[0];
  emit_text(request.out, doc.dump(2) + "\n");
  status.succeeded = 1;
  return status;
}

// ---------------------------------------------------------------- report

namespace {

enum class TableKind { kMetrics, kSpatial, kRim };

TableKind classify(const CsvTable& table, const fs::path& path) {
  if (table.find_column("dice") && table.find_column("region")) return TableKind::kMetrics;
  if (table.find_column("MeanEdgeDistance")) return TableKind::kSpatial;
  if (table.find_column("region") && table.find_column("mean") && table.find_column("count")) return TableKind::kRim;
  throw FormatError(path.string() + ": not a metrics, spatial or rim case table");
}

/// Writes a summary table, reads it back and re-derives every cell.
void write_checked(const fs::path& path, const CsvTable& table,
                   const std::function<std::vector<double>(std::size_t row, std::size_t col)>& values_for) {
  write_csv(path, table);
  const CsvTable written = read_csv(path);
  if (written.header != table.header || written.rows.size() != table.rows.size()) {
    throw Error("report self-check failed: " + path.string() + " did not round-trip");
  }
  for (std::size_t r = 0; r < written.rows.size(); ++r) {
    for (std::size_t c = 1; c < written.header.size(); ++c) {
      if (written.header[c] == "n") continue;
      verify_summary_cell(written.rows[r][c], values_for(r, c), 2,
                          path.filename().string() + " row " + written.rows[r][0] + " column " + written.header[c]);
    }
  }
}

}  // namespace

RunStatus run_report(const PipelineConfig& config, const ReportRequest& request) {
  config.validate();
  if (request.inputs.empty()) throw InvalidArgument("report needs at least one --input");
  if (request.out_dir.empty()) throw InvalidArgument("report needs --out-dir");
  RunStatus status;
  fs::create_directories(request.out_dir);
  Provenance provenance;
  provenance.command = "report";
  provenance.parameters = {{"permtest", config.report.permtest},
                           {"use_ratios", config.report.use_ratios},
                           {"permutation",
                            {{"draws", config.permutation.draws},
                             {"seed", config.permutation.seed},
                             {"tail", std::string(tail_name(config.permutation.tail))},
                             {"baselines", config.permutation.baselines}}}};
  json report = {{"tables", json::array()}};
  static const char* kSegColumns[] = {"dice", "hausdorff95_mm", "jaccard", "surface_dice"};

  for (const auto& input : request.inputs) {
    const CsvTable table = read_csv(input);
    provenance.add_input(input);
    switch (classify(table, input)) {
      case TableKind::kMetrics: {
        std::set<std::string> present;
        for (const auto& row : table.rows) present.insert(row[table.column("region")]);
        std::vector<std::string> main_regions;
        for (const char* region : {"ET", "TC", "WT"}) {
          if (present.contains(region)) main_regions.push_back(region);
        }
        auto emit = [&](const std::string& name, const std::vector<std::string>& regions) {
          const auto path = request.out_dir / name;
          write_checked(path, build_segmentation_table(table, regions), [&](std::size_t r, std::size_t c) {
            return column_values(table, kSegColumns[r], "region", regions[c - 1]);
          });
          provenance.add_output(path);
          report["tables"].push_back(name);
        };
        if (!main_regions.empty()) emit("table1.csv", main_regions);
        if (present.contains("NEH")) emit("table2.csv", {"NEH"});
        break;
      }
      case TableKind::kSpatial: {
        const bool use_ratios = config.report.use_ratios;
        const auto path = request.out_dir / "table8.csv";
        write_checked(path, build_spatial_table(table, use_ratios), [&](std::size_t r, std::size_t) {
          const auto& metric = spatial_metric_names()[r];
          const bool ratio = use_ratios && (metric == "FractionInside" || metric == "FractionNearEdge");
          return column_values(table, ratio ? metric + "_vs_null" : metric);
        });
        provenance.add_output(path);
        report["tables"].push_back("table8.csv");
        if (config.report.permtest) {
          const auto rows = run_spatial_permutations(table, config.permutation, use_ratios, config.jobs);
          const auto perm_path = request.out_dir / "table9.csv";
          write_csv(perm_path, build_permutation_table(rows));
          const CsvTable check = read_csv(perm_path);
          for (std::size_t r = 0; r < rows.size(); ++r) {
            const auto values = column_values(table, rows[r].column);
            const auto d = descriptive(values);
            if (check.rows[r][1] != format_fixed(d.mean, 3)) {
              throw Error("report self-check failed: table9.csv observed mean for " + rows[r].metric);
            }
          }
          provenance.add_output(perm_path);
          report["tables"].push_back("table9.csv");
          report["permutation"] = permutation_json(rows);
        }
        break;
      }
      case TableKind::kRim: {
        const auto path = request.out_dir / "rim_table.csv";
        const auto rim = build_rim_table(table);
        write_checked(path, rim, [&](std::size_t r, std::size_t) {
          return column_values(table, "mean", "region", rim.rows[r][0]);
        });
        provenance.add_output(path);
        report["tables"].push_back("rim_table.csv");
        if (auto anova = rim_anova(table)) {
          report["rim_anova"] = {{"f_value", std::isfinite(anova->f_value) ? json(anova->f_value) : json("inf")},
                                 {"df_between", anova->df_between},
                                 {"df_within", anova->df_within},
                                 {"p_value", anova->p_value}};
        } else {
          report["rim_anova"] = nullptr;
        }
        break;
      }
    }
    ++status.succeeded;
  }
  const auto report_path = request.out_dir / "report.json";
  write_json(report_path, report);
  provenance.add_output(report_path);
  write_json(request.out_dir / "provenance.json", provenance.to_json());
  return status;
}

// ---------------------------------------------------------------- phantom

PhantomKind parse_phantom_kind(std::string_view name) {
  if (name == "label") return PhantomKind::kLabel;
  if (name == "scalar") return PhantomKind::kScalar;
  if (name == "probability") return PhantomKind::kProbability;
  throw InvalidArgument("unknown phantom kind '" + std::string(name) + "' (expected label, scalar or probability)");
}

namespace {

std::array<double, 3> triple(const json& v, const char* what) {
  if (!v.is_array() || v.size() != 3) throw InvalidArgument(std::string("phantom: '") + what + "' needs 3 numbers");
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

void check_keys(const json& object, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!object.is_object()) throw InvalidArgument("phantom: " + std::string(where) + " must be an object");
  for (const auto& [key, value] : object.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw InvalidArgument("phantom: unknown key '" + key + "' in " + std::string(where));
    }
  }
}

}  // namespace

PhantomSpec phantom_spec_from_json(const json& doc) {
  check_keys(doc, "spec", {"dims", "spacing", "primitives", "background", "noise_sd", "seed"});
  PhantomSpec spec;
  try {
    if (doc.contains("dims")) {
      const auto& d = doc.at("dims");
      if (!d.is_array() || d.size() != 3) throw InvalidArgument("phantom: 'dims' needs 3 integers");
      spec.dims = {d[0].get<std::size_t>(), d[1].get<std::size_t>(), d[2].get<std::size_t>()};
    }
    if (doc.contains("spacing")) spec.spacing = triple(doc.at("spacing"), "spacing");
    spec.background = doc.value("background", 0.0);
    spec.noise_sd = doc.value("noise_sd", 0.0);
    spec.seed = doc.value("seed", std::uint64_t{0});
    for (const auto& p : doc.value("primitives", json::array())) {
      check_keys(p, "primitive", {"shape", "center_mm", "radius_mm", "inner_radius_mm", "half_extent_mm", "value"});
      Primitive prim;
      prim.shape = parse_shape(p.value("shape", std::string("sphere")));
      if (!p.contains("center_mm")) throw InvalidArgument("phantom: primitive needs center_mm");
      prim.center_mm = triple(p.at("center_mm"), "center_mm");
      prim.radius_mm = p.value("radius_mm", 0.0);
      prim.inner_radius_mm = p.value("inner_radius_mm", 0.0);
      if (p.contains("half_extent_mm")) prim.half_extent_mm = triple(p.at("half_extent_mm"), "half_extent_mm");
      prim.value = p.value("value", 1.0);
      spec.primitives.push_back(prim);
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("phantom spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

namespace {

// Geometry of one synthetic case, drawn from Philox keyed by (seed, case).
struct CohortCase {
  std::array<double, 3> center;
  std::array<double, 3> direction;
  double et_radius;
  std::array<double, 3> pred_shift;
  double pred_radius_delta;
  double recurrence_offset;
  double recurrence_inner;
  double recurrence_thickness;
};

constexpr Dims kCohortDims{56, 56, 40};
constexpr Spacing kCohortSpacing{1.0, 1.0, 1.5};

CohortCase draw_case(std::uint64_t seed, std::size_t index) {
  const KeyedStream stream(seed, index);
  const auto u0 = stream.uniform_pair(0);
  const auto u1 = stream.uniform_pair(1);
  const auto u2 = stream.uniform_pair(2);
  const auto u3 = stream.uniform_pair(3);
  const auto u4 = stream.uniform_pair(4);
  const auto u5 = stream.uniform_pair(5);
  CohortCase c;
  c.center = {27.5 + 4.0 * (u0[0] - 0.5), 27.5 + 4.0 * (u0[1] - 0.5), 29.25 + 4.0 * (u1[0] - 0.5)};
  c.et_radius = 7.0 + 3.0 * u1[1];
  const double cos_theta = 2.0 * u2[0] - 1.0;
  const double sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
  const double phi = 2.0 * std::numbers::pi * u2[1];
  c.direction = {sin_theta * std::cos(phi), sin_theta * std::sin(phi), cos_theta};
  // Prediction error: up to 3 mm of displacement along one axis and up to
  // 2 mm of radius error.
  c.pred_shift = {0.0, 0.0, 0.0};
  c.pred_shift[static_cast<std::size_t>(3.0 * u3[0]) % 3] = 6.0 * (u4[0] - 0.5);
  c.pred_radius_delta = 4.0 * (u3[1] - 0.5);
  c.recurrence_offset = 2.0 + 6.0 * u4[1];
  c.recurrence_inner = c.et_radius + 0.5 + 2.0 * u5[0];
  c.recurrence_thickness = 2.0 + 3.0 * u5[1];
  return c;
}

std::array<double, 3> offset(const std::array<double, 3>& c, const std::array<double, 3>& d, double t) {
  return {c[0] + t * d[0], c[1] + t * d[1], c[2] + t * d[2]};
}

Primitive sphere(std::array<double, 3> center, double radius, double value) {
  Primitive p;
  p.center_mm = center;
  p.radius_mm = radius;
  p.value = value;
  return p;
}

// Edema, then non-enhancing hyperintensity displaced along the case
// direction, enhancing tumor and a necrotic core.
std::vector<Primitive> anatomy(const std::array<double, 3>& center, const std::array<double, 3>& direction,
                               double et_radius) {
  return {sphere(center, et_radius + 8.0, 2.0), sphere(offset(center, direction, 2.5), et_radius + 4.0, 3.0),
          sphere(center, et_radius, 4.0), sphere(center, et_radius - 3.0, 1.0)};
}

PhantomSpec cohort_spec(std::vector<Primitive> primitives) {
  PhantomSpec spec;
  spec.dims = kCohortDims;
  spec.spacing = kCohortSpacing;
  spec.primitives = std::move(primitives);
  return spec;
}

void write_cohort_case(const fs::path& root, const std::string& id, const CohortCase& c, std::uint64_t seed,
                       std::size_t index) {
  const auto ref = anatomy(c.center, c.direction, c.et_radius);
  const auto pred_center = offset(c.center, c.pred_shift, 1.0);
  const auto pred = anatomy(pred_center, c.direction, c.et_radius + c.pred_radius_delta);

  const LabelVolume ref_seg = generate_label_phantom(cohort_spec(ref));
  const LabelVolume pred_seg = generate_label_phantom(cohort_spec(pred));
  save_volume(ref_seg, root / "ref" / (id + ".nii.gz"));
  save_volume(pred_seg, root / "pred" / (id + ".nii.gz"));

  const fs::path dir = root / "cases" / id;
  fs::create_directories(dir);
  save_volume(ref_seg, dir / "seg.nii.gz");

  // NEH-only targets: the NEH sphere with the enhancing tumor carved out.
  auto neh_target = [](const std::vector<Primitive>& a) {
    auto neh = a[1];
    auto et = a[2];
    neh.value = 1.0;
    et.value = 0.0;
    return cohort_spec({neh, et});
  };
  save_volume(generate_probability_phantom(neh_target(pred), 1.0), dir / "prob_a.nii.gz", NiftiDatatype::kFloat32);
  save_volume(generate_probability_phantom(neh_target(ref), 1.0), dir / "prob_b.nii.gz", NiftiDatatype::kFloat32);

  auto perfusion = cohort_spec({sphere(c.center, c.et_radius + 8.0, 1.5),
                                sphere(offset(c.center, c.direction, 2.5), c.et_radius + 4.0, 2.5),
                                sphere(c.center, c.et_radius, 3.5), sphere(c.center, c.et_radius - 3.0, 0.5)});
  perfusion.background = 1.0;
  perfusion.noise_sd = 0.3;
  perfusion.seed = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  save_volume(generate_scalar_phantom(perfusion), dir / "rcbv.nii.gz", NiftiDatatype::kFloat32);

  save_volume(label_mask(ref_seg, region_preset("NEH")), dir / "pneh.nii.gz");
  Primitive recurrence;
  recurrence.shape = PrimitiveShape::kShell;
  recurrence.center_mm = offset(c.center, c.direction, c.recurrence_offset);
  recurrence.radius_mm = c.recurrence_inner + c.recurrence_thickness;
  recurrence.inner_radius_mm = c.recurrence_inner;
  save_volume(generate_label_phantom(cohort_spec({recurrence})), dir / "etrl.nii.gz");
}

}  // namespace

RunStatus run_phantom(const PipelineConfig& config, const PhantomRequest& request) {
  config.validate();
  if (request.out.empty()) throw InvalidArgument("phantom needs --out");
  RunStatus status;
  if (request.cohort > 0) {
    if (request.spec) throw InvalidArgument("use either --spec or --cohort, not both");
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < request.cohort; ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "case_%03zu", i + 1);
      ids.emplace_back(name);
    }
    fs::create_directories(request.out / "pred");
    fs::create_directories(request.out / "ref");
    for_each_case(ids, config.jobs, status, [&](std::size_t i) {
      write_cohort_case(request.out, ids[i], draw_case(request.seed, i), request.seed, i);
    });
    write_json(request.out / "cohort.json", {{"cases", request.cohort},
                                             {"seed", request.seed},
                                             {"dims", kCohortDims},
                                             {"spacing_mm", kCohortSpacing}});
    return status;
  }

  if (!request.spec) throw InvalidArgument("phantom needs --spec or --cohort");
  std::ifstream in(*request.spec);
  if (!in) throw IoError("cannot open " + request.spec->string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(request.spec->string() + ": " + e.what());
  }
  PhantomSpec spec = phantom_spec_from_json(doc);
  switch (request.kind) {
    case PhantomKind::kLabel: save_volume(generate_label_phantom(spec), request.out); break;
    case PhantomKind::kScalar: save_volume(generate_scalar_phantom(spec), request.out); break;
    case PhantomKind::kProbability:
      save_volume(generate_probability_phantom(spec, request.blur_mm), request.out);
      break;
  }
  status.succeeded = 1;
  return status;
}

}  // namespace voxelval::pipeline
