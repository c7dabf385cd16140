// Acceptance suite: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

#include "oracles.hpp"
#include "voxelval/fusion.hpp"
#include "voxelval/morphology.hpp"
#include "voxelval/nifti.hpp"
#include "voxelval/pipeline/config.hpp"
#include "voxelval/pipeline/runs.hpp"
#include "voxelval/segmetrics.hpp"
#include "voxelval/spatial.hpp"
#include "voxelval/stats.hpp"

using namespace voxelval;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("voxelval_acceptance_" + tag + "_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// ------------------------------------------------------------------ 1

Outcome metric_identities() {
  Outcome o;
  const auto start = Clock::now();
  std::mt19937_64 rng(101);
  const VolumeGeometry g({16, 16, 16}, {1, 1, 1});
  const int pairs = 500;
  double worst = 0.0;
  for (int p = 0; p < pairs; ++p) {
    const auto a = oracle::random_mask(g, rng);
    const auto b = oracle::random_mask(g, rng);
    const auto ab = region_metrics(a, b, 2.0);
    const auto ba = region_metrics(b, a, 2.0);
    worst = std::max(worst, std::fabs(ab.dice - 2.0 * ab.jaccard / (1.0 + ab.jaccard)));
    o.require(ab.dice == ba.dice, "dice not symmetric");
    o.require(ab.jaccard == ba.jaccard, "jaccard not symmetric");
    o.require(ab.hausdorff95_mm == ba.hausdorff95_mm, "hausdorff95 not symmetric");
    o.require(ab.surface_dice == ba.surface_dice, "surface dice not symmetric");
  }
  const double elapsed = seconds_since(start);
  o.require(worst <= 1e-12, "dice/jaccard identity off by " + std::to_string(worst));
  o.require(elapsed < 5.0, "took " + std::to_string(elapsed) + " s");
  if (o.pass) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%d pairs, max identity error %.1e, %.2f s", pairs, worst, elapsed);
    o.detail = buf;
  }
  return o;
}

// ------------------------------------------------------------------ 2

Outcome oracle_equivalence() {
  Outcome o;
  const auto start = Clock::now();
  std::mt19937_64 rng(202);
  double worst_edt = 0.0, worst_hd = 0.0, worst_sd = 0.0, worst_med = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const Spacing s = inst % 2 == 0 ? Spacing{1, 1, 1} : Spacing{1, 1.2, 2.5};
    const VolumeGeometry g({16, 16, 16}, s);
    const auto a = oracle::random_mask(g, rng);
    const auto b = oracle::random_mask(g, rng);
    const auto fast = edt(a);
    const auto slow = oracle::edt(a);
    for (std::size_t i = 0; i < a.size(); ++i) worst_edt = std::max(worst_edt, std::fabs(fast[i] - slow[i]));
    worst_hd = std::max(worst_hd, std::fabs(hausdorff95(a, b) - oracle::hausdorff95(a, b)));
    worst_sd = std::max(worst_sd, std::fabs(surface_dice(a, b, 2.0) - oracle::surface_dice(a, b, 2.0)));
    worst_med = std::max(worst_med, std::fabs(mean_edge_distance(a, b) - oracle::mean_edge_distance(a, b)));
  }
  const double elapsed = seconds_since(start);
  o.require(worst_edt <= 1e-9, "edt differs by " + std::to_string(worst_edt));
  o.require(worst_hd <= 1e-9, "hausdorff95 differs by " + std::to_string(worst_hd));
  o.require(worst_sd <= 1e-9, "surface dice differs by " + std::to_string(worst_sd));
  o.require(worst_med <= 1e-9, "mean edge distance differs by " + std::to_string(worst_med));
  o.require(elapsed < 60.0, "took " + std::to_string(elapsed) + " s");
  if (o.pass) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "100 instances, max diff edt %.1e hd95 %.1e sdice %.1e med %.1e, %.2f s", worst_edt,
                  worst_hd, worst_sd, worst_med, elapsed);
    o.detail = buf;
  }
  return o;
}

// ------------------------------------------------------------------ 3

Outcome fusion_constants() {
  Outcome o;
  const pipeline::PipelineConfig defaults;
  o.require(defaults.fusion.sigma_mm == 1.5, "default sigma is not 1.5 mm");
  o.require(defaults.fusion.threshold == 0.5, "default threshold is not 0.5");

  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (auto s : {Spacing{1, 1, 1}, Spacing{1, 1.2, 2.5}}) {
    const VolumeGeometry g({15, 15, 15}, s);
    std::vector<double> v(g.voxel_count());
    for (auto& x : v) x = u(rng);
    const auto fast = gaussian_smooth(ScalarVolume(g, v), defaults.fusion.sigma_mm, defaults.fusion.kernel_truncation);
    const auto slow = oracle::dense_gaussian(g, v, defaults.fusion.sigma_mm, defaults.fusion.kernel_truncation);
    for (std::size_t i = 0; i < v.size(); ++i) worst = std::max(worst, std::fabs(fast[i] - slow[i]));
  }
  o.require(worst <= 1e-9, "separable vs dense differs by " + std::to_string(worst));

  for (double sigma : {0.25, 0.5, 1.0, 1.25, 1.5, 2.0, 3.3, 6.0}) {
    double sum = 0.0;
    for (double w : gaussian_kernel(sigma, 4.0)) sum += w;
    o.require(std::fabs(sum - 1.0) <= 1e-9, "kernel for sigma " + std::to_string(sigma) + " does not sum to 1");
  }

  const VolumeGeometry g({15, 15, 15}, {1, 1.2, 2.5});
  for (double c : {0.0, 0.1, 0.5, 0.7, 1.0}) {
    const auto s = gaussian_smooth_3d(ProbabilityVolume::filled(g, c), defaults.fusion.sigma_mm);
    bool exact = true;
    for (std::size_t i = 0; i < s.size(); ++i) exact = exact && s[i] == c;
    o.require(exact, "constant field " + std::to_string(c) + " not preserved");
  }
  if (o.pass) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "sigma 1.5 mm, threshold 0.5, separable vs dense max diff %.1e", worst);
    o.detail = buf;
  }
  return o;
}

// ------------------------------------------------------------------ 4

BinaryMask sphere(const VolumeGeometry& g, std::array<double, 3> c, double r) {
  std::vector<std::uint8_t> bits(g.voxel_count());
  const auto s = g.spacing();
  for (std::size_t idx = 0; idx < bits.size(); ++idx) {
    const auto p = g.coords(idx);
    const double dx = p[0] * s[0] - c[0], dy = p[1] * s[1] - c[1], dz = p[2] * s[2] - c[2];
    bits[idx] = dx * dx + dy * dy + dz * dz <= r * r;
  }
  return BinaryMask(g, bits);
}

void check_shells(Outcome& o, const RimShellSet& set, const BinaryMask& et, const std::vector<BinaryMask>& excl,
                  const std::string& fixture) {
  for (std::size_t i = 0; i < set.shells.size(); ++i) {
    o.require(intersection_count(set.shells[i], et) == 0, fixture + ": shell overlaps ET");
    for (const auto& e : excl) o.require(intersection_count(set.shells[i], e) == 0, fixture + ": shell overlaps exclusion");
    if (i > 0) o.require(is_subset(set.shells[i - 1], set.shells[i]), fixture + ": shells not nested");
  }
}

Outcome rim_geometry() {
  Outcome o;
  const VolumeGeometry g({64, 64, 64}, {1, 1, 1});
  const auto et = sphere(g, {32, 32, 32}, 20.0);
  const std::vector<double> radii{2, 4, 6};
  const auto set = rim_shells(et, radii, {});
  const double analytic = 4.0 / 3.0 * std::numbers::pi * (std::pow(22.0, 3) - std::pow(20.0, 3));
  const double measured = set.shells[0].volume_mm3();
  const double rel = std::fabs(measured - analytic) / analytic;
  o.require(rel < 0.05, "shell(0-2) volume " + std::to_string(measured) + " vs analytic " + std::to_string(analytic));
  check_shells(o, set, et, {}, "sphere");

  // Anisotropic fixture with a vessel exclusion and a necrotic core.
  const VolumeGeometry ga({40, 40, 24}, {1, 1.2, 2.5});
  const auto et2 = sphere(ga, {20, 24, 30}, 7.0);
  const auto core = sphere(ga, {20, 24, 30}, 3.0);
  const auto vessel = sphere(ga, {29, 24, 30}, 3.0);
  const std::vector<BinaryMask> excl{core, vessel};
  check_shells(o, rim_shells(mask_minus(et2, core), radii, excl), mask_minus(et2, core), excl, "anisotropic");

  // Monotone scalar: falls off with distance from the tumour centre.
  std::vector<double> v(g.voxel_count());
  for (std::size_t idx = 0; idx < v.size(); ++idx) {
    const auto p = g.coords(idx);
    v[idx] = 5.0 - 0.1 * std::hypot(p[0] - 32.0, p[1] - 32.0, p[2] - 32.0);
  }
  const auto profile = rim_intensity_profile(ScalarVolume(g, v), set, BinaryMask::empty(g));
  bool decreasing = true;
  for (std::size_t i = 2; i < profile.size(); ++i) decreasing = decreasing && *profile[i].stats.mean < *profile[i - 1].stats.mean;
  o.require(decreasing, "mean scalar does not decrease with rim size");
  if (o.pass) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "shell(0-2) %.0f mm3 vs analytic %.0f mm3 (%.2f%%), nested, disjoint, decreasing",
                  measured, analytic, 100.0 * rel);
    o.detail = buf;
  }
  return o;
}

// ------------------------------------------------------------------ 5

double enumerate_upper(const std::vector<int>& v) {
  long observed = 0;
  for (int x : v) observed += x;
  std::size_t count = 0;
  const std::uint64_t patterns = std::uint64_t{1} << v.size();
  for (std::uint64_t p = 0; p < patterns; ++p) {
    long s = 0;
    for (std::size_t i = 0; i < v.size(); ++i) s += ((p >> i) & 1) ? -v[i] : v[i];
    count += s >= observed;
  }
  return static_cast<double>(count) / static_cast<double>(patterns);
}

Outcome permutation_exactness() {
  Outcome o;
  const auto simple = sign_flip_permutation(std::vector<double>{1, 2, 3}, {});
  o.require(simple.exact && simple.p_one_sided == 0.125, "[1,2,3] does not give p = 1/8");

  std::mt19937_64 rng(505);
  std::uniform_int_distribution<int> u(-4, 8);
  for (std::size_t n = 1; n <= 12; ++n) {
    std::vector<int> iv(n);
    for (auto& x : iv) x = u(rng);
    const std::vector<double> dv(iv.begin(), iv.end());
    o.require(sign_flip_permutation(dv, {}).p_one_sided == enumerate_upper(iv),
              "exact p differs from enumeration at n = " + std::to_string(n));
  }

  const std::vector<int> iv{3, -1, 2, 4, 0, 1, -2, 5, 1, 2, -3, 1};
  const std::vector<double> dv(iv.begin(), iv.end());
  const double exact = enumerate_upper(iv);
  const double sigma = std::sqrt(exact * (1.0 - exact) / 10000.0);
  int within = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    PermutationOptions opt;
    opt.mode = PermutationMode::kSampled;
    opt.n_draws = 10000;
    opt.seed = seed;
    within += std::fabs(sign_flip_permutation(dv, opt).p_one_sided - exact) <= 4.0 * sigma;
  }
  o.require(within >= 99, "only " + std::to_string(within) + "/100 seeds within 4 sigma");

  PermutationOptions zero;
  zero.baseline = 2.5;
  o.require(sign_flip_permutation(std::vector<double>(9, 2.5), zero).p_two_sided == 1.0, "all-zero exact p != 1");
  zero.mode = PermutationMode::kSampled;
  o.require(sign_flip_permutation(std::vector<double>(9, 2.5), zero).p_two_sided == 1.0, "all-zero sampled p != 1");

  std::normal_distribution<double> nd(0.2, 1.0);
  std::vector<double> big(60);
  for (auto& x : big) x = nd(rng);
  PermutationOptions det;
  det.n_draws = 10000;
  det.seed = 42;
  PermutationResult first;
  bool identical = true;
  for (unsigned jobs : {1u, 4u, 16u}) {
    det.jobs = jobs;
    const auto r = sign_flip_permutation(big, det);
    if (jobs == 1) {
      first = r;
    } else {
      identical = identical && std::memcmp(&r.p_one_sided, &first.p_one_sided, sizeof(double)) == 0 &&
                  std::memcmp(&r.p_two_sided, &first.p_two_sided, sizeof(double)) == 0 &&
                  std::memcmp(&r.null_mean, &first.null_mean, sizeof(double)) == 0;
    }
  }
  o.require(identical, "results differ across job counts");
  if (o.pass) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "p([1,2,3]) = 1/8, n<=12 exact, %d/100 seeds within 4 sigma, jobs 1/4/16 identical",
                  within);
    o.detail = buf;
  }
  return o;
}

// ------------------------------------------------------------------ 6

Outcome composite_labels() {
  Outcome o;
  o.require(region_preset("ET").labels == std::vector<int>{4}, "ET != {4}");
  o.require(region_preset("TC").labels == std::vector<int>{1, 3, 4}, "TC != {1,3,4}");
  o.require(region_preset("WT").labels == std::vector<int>{1, 2, 3, 4}, "WT != {1,2,3,4}");

  pipeline::PipelineConfig config;
  TempDir tmp("labels");
  pipeline::PhantomRequest req;
  req.cohort = 3;
  req.seed = 11;
  req.out = tmp.path;
  pipeline::run_phantom(config, req);
  const std::vector<RegionPreset> regions{region_preset("WT"), region_preset("NEH")};
  for (const auto& entry : fs::directory_iterator(tmp.path / "ref")) {
    const auto seg = load_labels(entry.path());
    std::vector<std::int32_t> relabelled(seg.labels().begin(), seg.labels().end());
    for (auto& l : relabelled) l = l == 3 ? 2 : l;
    const LabelVolume moved(seg.geometry(), relabelled);
    const auto r = evaluate_case(seg, moved, regions);
    o.require(r.regions[0].dice == 1.0 && r.regions[0].jaccard == 1.0 && r.regions[0].hausdorff95_mm == 0.0 &&
                  r.regions[0].surface_dice == 1.0,
              "WT metrics change under 3->2 relabelling");
    o.require(r.regions[1].dice == 0.0, "label-3 dice does not drop to 0");
  }
  if (o.pass) o.detail = "ET={4}, TC={1,3,4}, WT={1,2,3,4}; 3->2 keeps WT, NEH dice 0 on 3 fixtures";
  return o;
}

// ------------------------------------------------------------------ 7

void build_golden_outputs(const fs::path& root) {
  pipeline::PipelineConfig config;
  pipeline::PhantomRequest cohort;
  cohort.cohort = 10;
  cohort.seed = 7;
  cohort.out = root / "cohort";
  pipeline::run_phantom(config, cohort);
  pipeline::MetricsRequest metrics{root / "cohort" / "pred", root / "cohort" / "ref", root / "metrics"};
  pipeline::run_metrics(config, metrics);
  pipeline::SpatialRequest spatial;
  spatial.cases_dir = root / "cohort" / "cases";
  spatial.out = root / "spatial";
  pipeline::run_spatial(config, spatial);
  pipeline::ReportRequest report{{root / "metrics" / "metrics_cases.csv", root / "spatial" / "spatial_cases.csv"},
                                 root / "report"};
  pipeline::run_report(config, report);
}

Outcome golden_layout() {
  Outcome o;
  TempDir tmp("golden");
  build_golden_outputs(tmp.path);
  const fs::path golden = VOXELVAL_GOLDEN_DIR;
  const bool update = std::getenv("VOXELVAL_UPDATE_GOLDEN") != nullptr;
  for (const char* name : {"table1.csv", "table8.csv", "table9.csv"}) {
    const auto produced = read_file(tmp.path / "report" / name);
    if (update) {
      fs::create_directories(golden);
      std::ofstream(golden / name, std::ios::binary) << produced;
    }
    o.require(fs::exists(golden / name), std::string("missing golden file ") + name);
    o.require(produced == read_file(golden / name), std::string(name) + " differs from golden");
  }
  const auto t9 = read_file(tmp.path / "report" / "table9.csv");
  o.require(t9.rfind("metric,observed_mean,null_mean,p_one_sided,p_two_sided\n", 0) == 0, "table9 header differs");
  if (o.pass) o.detail = "table1.csv, table8.csv, table9.csv byte-identical to golden files";
  return o;
}

// ------------------------------------------------------------------ 8

int run(const std::string& command, const fs::path& log) {
  const std::string full = command + " >>" + log.string() + " 2>&1";
  const int status = std::system(full.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::pair<std::string, std::string>> provenance_hashes(const fs::path& root) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.path().filename() != "provenance.json") continue;
    const auto doc = nlohmann::json::parse(read_file(e.path()));
    out.emplace_back(fs::relative(e.path(), root).string(), doc.at("provenance_sha256").get<std::string>());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Outcome end_to_end() {
  Outcome o;
  TempDir tmp("e2e");
  const std::string cli = VOXELVAL_CLI_PATH;
  const fs::path log = tmp.path / "log.txt";
  const auto start = Clock::now();
  const auto cohort = tmp.path / "cohort";
  o.require(run(cli + " phantom --cohort 10 --seed 3 --out " + cohort.string(), log) == 0, "phantom failed");

  auto pipeline_run = [&](const fs::path& out) {
    const std::string cases = (cohort / "cases").string();
    const std::vector<std::pair<std::string, std::string>> steps{
        {"fuse", cli + " fuse --cases-dir " + cases + " --out " + (out / "fused").string()},
        {"metrics", cli + " metrics --pred " + (cohort / "pred").string() + " --ref " + (cohort / "ref").string() +
                        " --out " + (out / "metrics").string()},
        {"rim", cli + " rim --cases-dir " + cases + " --fused-dir " + (out / "fused").string() + " --out " +
                    (out / "rim").string()},
        {"spatial", cli + " spatial --cases-dir " + cases + " --fused-dir " + (out / "fused").string() + " --out " +
                        (out / "spatial").string()},
        {"permtest", cli + " permtest --batch --input " + (out / "spatial" / "spatial_cases.csv").string() +
                         " --out " + (out / "permtest").string()},
        {"report", cli + " report --input " + (out / "metrics" / "metrics_cases.csv").string() + " --input " +
                       (out / "spatial" / "spatial_cases.csv").string() + " --input " +
                       (out / "rim" / "rim_cases.csv").string() + " --out-dir " + (out / "report").string()},
    };
    for (const auto& [name, command] : steps) o.require(run(command, log) == 0, name + " exited non-zero");
  };
  pipeline_run(tmp.path / "run1");
  const double elapsed = seconds_since(start);
  pipeline_run(tmp.path / "run2");

  const auto h1 = provenance_hashes(tmp.path / "run1");
  const auto h2 = provenance_hashes(tmp.path / "run2");
  o.require(h1.size() >= 15, "expected provenance for every case and step, found " + std::to_string(h1.size()));
  o.require(h1 == h2, "provenance hashes differ between reruns");
  for (const char* table : {"table1.csv", "table8.csv", "table9.csv", "rim_table.csv"}) {
    o.require(read_file(tmp.path / "run1" / "report" / table) == read_file(tmp.path / "run2" / "report" / table),
              std::string(table) + " differs between reruns");
  }
  o.require(elapsed < 60.0, "pipeline took " + std::to_string(elapsed) + " s");
  if (!o.pass) std::cerr << read_file(log);
  if (o.pass) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "10 cases, 6 steps exit 0 in %.2f s, %zu provenance hashes stable", elapsed,
                  h1.size());
    o.detail = buf;
  }
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"metric identities", metric_identities},
      {"oracle equivalence", oracle_equivalence},
      {"fusion constants", fusion_constants},
      {"rim geometry", rim_geometry},
      {"permutation exactness", permutation_exactness},
      {"composite labels", composite_labels},
      {"report golden layout", golden_layout},
      {"end-to-end cohort", end_to_end},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first
              << "): " << o.detail << std::endl;
    failed += !o.pass;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
