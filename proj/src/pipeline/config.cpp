#include "voxelval/pipeline/config.hpp"

#include <cmath>
#include <fstream>

#include "voxelval/error.hpp"
#include "voxelval/volume.hpp"

namespace voxelval::pipeline {

using nlohmann::json;

namespace {

void reject_unknown(const json& object, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!object.is_object()) throw InvalidArgument("config: '" + std::string(where) + "' must be an object");
  for (const auto& [key, value] : object.items()) {
    bool known = false;
    for (auto name : allowed) known = known || key == name;
    if (!known) throw InvalidArgument("config: unknown key '" + std::string(where) + "." + key + "'");
  }
}

template <typename T>
void read(const json& object, const char* key, T& target, std::string_view where) {
  if (!object.contains(key)) return;
  try {
    target = object.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument("config: '" + std::string(where) + "." + key + "' has the wrong type");
  }
}

void read_path(const json& object, const char* key, std::optional<std::filesystem::path>& target) {
  if (!object.contains(key) || object.at(key).is_null()) return;
  if (!object.at(key).is_string()) throw InvalidArgument(std::string("config: 'paths.") + key + "' must be a string");
  target = object.at(key).get<std::string>();
}

}  // namespace

void PipelineConfig::validate() const {
  fusion.validate();
  if (rim.radii_mm.empty()) throw InvalidArgument("config: rim.radii_mm must not be empty");
  for (std::size_t i = 0; i < rim.radii_mm.size(); ++i) {
    if (!(rim.radii_mm[i] > 0.0)) throw InvalidArgument("config: rim radii must be positive");
    if (i > 0 && !(rim.radii_mm[i] > rim.radii_mm[i - 1])) {
      throw InvalidArgument("config: rim radii must be strictly increasing");
    }
  }
  for (int label : rim.exclude_labels) {
    if (label < 0) throw InvalidArgument("config: rim.exclude_labels must be non-negative");
  }
  if (metrics.regions.empty()) throw InvalidArgument("config: metrics.regions must not be empty");
  for (const auto& name : metrics.regions) region_preset(name);
  if (!(metrics.surface_tau_mm > 0.0)) throw InvalidArgument("config: metrics.surface_tau_mm must be positive");
  if (!(spatial.near_threshold_mm > 0.0)) throw InvalidArgument("config: spatial.near_threshold_mm must be positive");
  if (spatial.ratio_vs_null && spatial.null_draws == 0) throw InvalidArgument("config: spatial.null_draws must be positive");
  if (permutation.draws == 0) throw InvalidArgument("config: permutation.draws must be positive");
  for (const auto& [metric, baseline] : permutation.baselines) {
    if (!std::isfinite(baseline)) throw InvalidArgument("config: baseline for " + metric + " must be finite");
  }
  if (jobs == 0) throw InvalidArgument("config: jobs must be at least 1");
}

json to_json(const PipelineConfig& c) {
  json paths = json::object();
  paths["input"] = c.paths.input ? json(c.paths.input->string()) : json(nullptr);
  paths["output"] = c.paths.output ? json(c.paths.output->string()) : json(nullptr);
  return json{
      {"fusion",
       {{"sigma_mm", c.fusion.sigma_mm},
        {"threshold", c.fusion.threshold},
        {"high_confidence_threshold", c.fusion.high_confidence_threshold},
        {"kernel_truncation", c.fusion.kernel_truncation}}},
      {"rim", {{"radii_mm", c.rim.radii_mm}, {"annular", c.rim.annular}, {"exclude_labels", c.rim.exclude_labels}}},
      {"metrics", {{"regions", c.metrics.regions}, {"surface_tau_mm", c.metrics.surface_tau_mm}}},
      {"spatial",
       {{"near_threshold_mm", c.spatial.near_threshold_mm},
        {"to_region", c.spatial.to_region},
        {"ratio_vs_null", c.spatial.ratio_vs_null},
        {"null_draws", c.spatial.null_draws}}},
      {"permutation",
       {{"draws", c.permutation.draws},
        {"seed", c.permutation.seed},
        {"tail", std::string(tail_name(c.permutation.tail))},
        {"baselines", c.permutation.baselines}}},
      {"report", {{"permtest", c.report.permtest}, {"use_ratios", c.report.use_ratios}}},
      {"paths", paths},
      {"jobs", c.jobs},
  };
}

PipelineConfig config_from_json(const json& doc) {
  PipelineConfig c;
  reject_unknown(doc, "config", {"fusion", "rim", "metrics", "spatial", "permutation", "report", "paths", "jobs"});
  if (doc.contains("fusion")) {
    const auto& f = doc.at("fusion");
    reject_unknown(f, "fusion", {"sigma_mm", "threshold", "high_confidence_threshold", "kernel_truncation"});
    read(f, "sigma_mm", c.fusion.sigma_mm, "fusion");
    read(f, "threshold", c.fusion.threshold, "fusion");
    read(f, "high_confidence_threshold", c.fusion.high_confidence_threshold, "fusion");
    read(f, "kernel_truncation", c.fusion.kernel_truncation, "fusion");
  }
  if (doc.contains("rim")) {
    const auto& r = doc.at("rim");
    reject_unknown(r, "rim", {"radii_mm", "annular", "exclude_labels"});
    read(r, "radii_mm", c.rim.radii_mm, "rim");
    read(r, "annular", c.rim.annular, "rim");
    read(r, "exclude_labels", c.rim.exclude_labels, "rim");
  }
  if (doc.contains("metrics")) {
    const auto& m = doc.at("metrics");
    reject_unknown(m, "metrics", {"regions", "surface_tau_mm"});
    read(m, "regions", c.metrics.regions, "metrics");
    read(m, "surface_tau_mm", c.metrics.surface_tau_mm, "metrics");
  }
  if (doc.contains("spatial")) {
    const auto& s = doc.at("spatial");
    reject_unknown(s, "spatial", {"near_threshold_mm", "to_region", "ratio_vs_null", "null_draws"});
    read(s, "near_threshold_mm", c.spatial.near_threshold_mm, "spatial");
    read(s, "to_region", c.spatial.to_region, "spatial");
    read(s, "ratio_vs_null", c.spatial.ratio_vs_null, "spatial");
    read(s, "null_draws", c.spatial.null_draws, "spatial");
  }
  if (doc.contains("permutation")) {
    const auto& p = doc.at("permutation");
    reject_unknown(p, "permutation", {"draws", "seed", "tail", "baselines"});
    read(p, "draws", c.permutation.draws, "permutation");
    read(p, "seed", c.permutation.seed, "permutation");
    std::string tail(tail_name(c.permutation.tail));
    read(p, "tail", tail, "permutation");
    c.permutation.tail = parse_tail(tail);
    if (p.contains("baselines")) {
      const auto& b = p.at("baselines");
      if (!b.is_object()) throw InvalidArgument("config: 'permutation.baselines' must be an object");
      for (const auto& [metric, value] : b.items()) {
        if (!c.permutation.baselines.contains(metric)) {
          throw InvalidArgument("config: unknown key 'permutation.baselines." + metric + "'");
        }
        if (!value.is_number()) throw InvalidArgument("config: baseline for " + metric + " must be a number");
        c.permutation.baselines[metric] = value.get<double>();
      }
    }
  }
  if (doc.contains("report")) {
    const auto& r = doc.at("report");
    reject_unknown(r, "report", {"permtest", "use_ratios"});
    read(r, "permtest", c.report.permtest, "report");
    read(r, "use_ratios", c.report.use_ratios, "report");
  }
  if (doc.contains("paths")) {
    const auto& p = doc.at("paths");
    reject_unknown(p, "paths", {"input", "output"});
    read_path(p, "input", c.paths.input);
    read_path(p, "output", c.paths.output);
  }
  read(doc, "jobs", c.jobs, "config");
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(doc);
}

}  // namespace voxelval::pipeline
