#include <cmath>

#include "voxelval/error.hpp"
#include "voxelval/parallel.hpp"
#include "voxelval/random.hpp"
#include "voxelval/stats.hpp"
#include "voxelval/summation.hpp"

namespace voxelval {

Tail parse_tail(std::string_view name) {
  if (name == "upper") return Tail::kUpper;
  if (name == "lower") return Tail::kLower;
  if (name == "two") return Tail::kTwo;
  throw InvalidArgument("unknown tail '" + std::string(name) + "' (expected upper, lower or two)");
}

std::string_view tail_name(Tail tail) {
  switch (tail) {
    case Tail::kUpper: return "upper";
    case Tail::kLower: return "lower";
    case Tail::kTwo: return "two";
  }
  return "upper";
}

namespace {

constexpr std::size_t kChunk = 512;

struct Counts {
  std::size_t upper = 0;
  std::size_t lower = 0;
  std::size_t two = 0;
};

// Comparisons of signed sums carry a slack proportional to the sum of
// |deviations| so that patterns with mathematically equal sums tie.
struct Extremes {
  double observed;
  double slack;

  void tally(double s, Counts& c) const {
    c.upper += s >= observed - slack;
    c.lower += s <= observed + slack;
    c.two += std::fabs(s) >= std::fabs(observed) - slack;
  }
};

double signed_sum(std::span<const double> deviations, std::uint64_t pattern) {
  double s = 0.0;
  for (std::size_t i = 0; i < deviations.size(); ++i) {
    s += ((pattern >> i) & 1u) ? -deviations[i] : deviations[i];
  }
  return s;
}

double sampled_sum(std::span<const double> deviations, const KeyedStream& stream) {
  double s = 0.0;
  Philox4x32::Counter bits{};
  for (std::size_t i = 0; i < deviations.size(); ++i) {
    if (i % 128 == 0) bits = stream.block(i / 128);
    const bool flip = (bits[(i % 128) / 32] >> (i % 32)) & 1u;
    s += flip ? -deviations[i] : deviations[i];
  }
  return s;
}

}  // namespace

PermutationResult sign_flip_permutation(std::span<const double> values, const PermutationOptions& options) {
  if (values.empty()) throw InvalidArgument("permutation test needs at least one value");
  if (!std::isfinite(options.baseline)) throw InvalidArgument("baseline must be finite");
  const std::size_t n = values.size();

  std::vector<double> deviations(n);
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(values[i])) throw InvalidArgument("permutation test values must be finite");
    deviations[i] = values[i] - options.baseline;
    scale += std::fabs(deviations[i]);
  }
  const Extremes extremes{signed_sum(deviations, 0), 1e-12 * scale};

  PermutationResult result;
  result.seed = options.seed;
  result.baseline = options.baseline;
  result.tail = options.tail;
  result.n_values = n;
  CompensatedSum observed;
  for (double d : deviations) observed.add(d);
  result.observed_mean = options.baseline + observed.value() / static_cast<double>(n);

  bool exact = options.mode == PermutationMode::kExact ||
               (options.mode == PermutationMode::kAuto && n <= kExactEnumerationLimit);
  if (exact && n > 30) throw InvalidArgument("exact enumeration is limited to 30 values");

  Counts counts;
  if (exact) {
    const std::uint64_t patterns = std::uint64_t{1} << n;
    const std::size_t chunks = static_cast<std::size_t>((patterns + kChunk - 1) / kChunk);
    std::vector<Counts> per_chunk(chunks);
    parallel_for(chunks, options.jobs, [&](std::size_t c) {
      const std::uint64_t end = std::min<std::uint64_t>(patterns, (c + 1) * kChunk);
      for (std::uint64_t p = c * kChunk; p < end; ++p) extremes.tally(signed_sum(deviations, p), per_chunk[c]);
    });
    for (const auto& c : per_chunk) {
      counts.upper += c.upper;
      counts.lower += c.lower;
      counts.two += c.two;
    }
    const auto total = static_cast<double>(patterns);
    result.exact = true;
    result.n_draws = static_cast<std::size_t>(patterns);
    // Every pattern is matched by its negation, so the null mean is the
    // baseline exactly.
    result.null_mean = options.baseline;
    const double upper = static_cast<double>(counts.upper) / total;
    const double lower = static_cast<double>(counts.lower) / total;
    result.p_two_sided = static_cast<double>(counts.two) / total;
    result.p_one_sided = options.tail == Tail::kUpper   ? upper
                         : options.tail == Tail::kLower ? lower
                         : extremes.observed >= 0.0     ? upper
                                                        : lower;
    return result;
  }

  if (options.n_draws == 0) throw InvalidArgument("n_draws must be at least 1");
  std::vector<double> sums(options.n_draws);
  const std::size_t chunks = (options.n_draws + kChunk - 1) / kChunk;
  parallel_for(chunks, options.jobs, [&](std::size_t c) {
    const std::size_t end = std::min(options.n_draws, (c + 1) * kChunk);
    for (std::size_t k = c * kChunk; k < end; ++k) sums[k] = sampled_sum(deviations, KeyedStream(options.seed, k));
  });
  CompensatedSum null_total;
  for (double s : sums) {
    extremes.tally(s, counts);
    null_total.add(s);
  }
  const auto draws = static_cast<double>(options.n_draws);
  result.exact = false;
  result.n_draws = options.n_draws;
  result.null_mean = options.baseline + null_total.value() / (draws * static_cast<double>(n));
  const double upper = (1.0 + static_cast<double>(counts.upper)) / (1.0 + draws);
  const double lower = (1.0 + static_cast<double>(counts.lower)) / (1.0 + draws);
  result.p_two_sided = (1.0 + static_cast<double>(counts.two)) / (1.0 + draws);
  result.p_one_sided = options.tail == Tail::kUpper   ? upper
                       : options.tail == Tail::kLower ? lower
                       : extremes.observed >= 0.0     ? upper
                                                      : lower;
  return result;
}

}  // namespace voxelval
