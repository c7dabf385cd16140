#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace voxelval {

enum class Tail { kUpper, kLower, kTwo };

Tail parse_tail(std::string_view name);
std::string_view tail_name(Tail tail);

enum class PermutationMode {
  /// Exact enumeration when 2^n <= 2^20 sign patterns, sampling otherwise.
  kAuto,
  kExact,
  kSampled,
};

struct PermutationOptions {
  double baseline = 0.0;
  std::size_t n_draws = 10000;
  std::uint64_t seed = 0;
  Tail tail = Tail::kUpper;
  PermutationMode mode = PermutationMode::kAuto;
  /// Worker threads for sampled draws; results do not depend on it.
  unsigned jobs = 1;
};

struct PermutationResult {
  double observed_mean = 0.0;
  double null_mean = 0.0;
  /// Upper tail for kUpper, lower tail for kLower; for kTwo, the tail on the
  /// side of the observed deviation.
  double p_one_sided = 1.0;
  double p_two_sided = 1.0;
  /// Number of sign patterns evaluated (2^n in exact mode).
  std::size_t n_draws = 0;
  std::uint64_t seed = 0;
  bool exact = false;
  double baseline = 0.0;
  Tail tail = Tail::kUpper;
  std::size_t n_values = 0;
};

/// Largest sample size enumerated exactly in kAuto mode.
inline constexpr std::size_t kExactEnumerationLimit = 20;

/// Sign-flip permutation test of the mean against a baseline.
///
/// Deviations d_i = x_i - baseline have their signs flipped independently
/// with probability 1/2 per draw and the mean baseline + mean(e_i d_i) is
/// recorded. Sampled p-values carry the add-one correction
/// (1 + #extreme) / (1 + draws); exact p-values are #extreme / 2^n. Draw k
/// takes its flips from Philox4x32-10 keyed by (seed, k).
PermutationResult sign_flip_permutation(std::span<const double> values, const PermutationOptions& options);

struct AnovaResult {
  double f_value = 0.0;
  std::size_t df_between = 0;
  std::size_t df_within = 0;
  double p_value = 1.0;
};

/// Classical one-way ANOVA. Needs >= 2 groups of >= 2 values each.
AnovaResult one_way_anova(std::span<const std::vector<double>> groups);

/// Regularised incomplete beta I_x(a, b).
double regularized_incomplete_beta(double a, double b, double x);

/// P(F > f) for an F(d1, d2) variable.
double f_distribution_sf(double f, double d1, double d2);

struct Descriptive {
  double mean = 0.0;
  /// Sample sd (n - 1); absent for a single value.
  std::optional<double> sd;
  std::size_t n = 0;
};

Descriptive descriptive(std::span<const double> values);

}  // namespace voxelval
