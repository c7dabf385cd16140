#include <cmath>
#include <limits>

#include "voxelval/error.hpp"
#include "voxelval/stats.hpp"
#include "voxelval/summation.hpp"

namespace voxelval {

namespace {

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 10000;
  constexpr double kEpsilon = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEpsilon) return h;
  }
  throw Error("incomplete beta continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw InvalidArgument("incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("incomplete beta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double f_distribution_sf(double f, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) throw InvalidArgument("F distribution needs positive degrees of freedom");
  if (std::isnan(f)) throw InvalidArgument("F statistic is NaN");
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return regularized_incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

AnovaResult one_way_anova(std::span<const std::vector<double>> groups) {
  if (groups.size() < 2) throw InvalidArgument("ANOVA needs at least two groups");
  std::size_t total_n = 0;
  std::vector<double> means(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].size() < 2) throw InvalidArgument("every ANOVA group needs at least two values");
    for (double v : groups[g]) {
      if (!std::isfinite(v)) throw InvalidArgument("ANOVA values must be finite");
    }
    means[g] = descriptive(groups[g]).mean;
    total_n += groups[g].size();
  }

  // Grand mean as an offset from the first group mean: identical groups give
  // a between-group sum of squares of exactly zero.
  CompensatedSum offset;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    offset.add(static_cast<double>(groups[g].size()) * (means[g] - means[0]));
  }
  const double grand = means[0] + offset.value() / static_cast<double>(total_n);

  CompensatedSum between;
  CompensatedSum within;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double d = means[g] - grand;
    between.add(static_cast<double>(groups[g].size()) * d * d);
    for (double v : groups[g]) {
      const double e = v - means[g];
      within.add(e * e);
    }
  }

  AnovaResult result;
  result.df_between = groups.size() - 1;
  result.df_within = total_n - groups.size();
  const double ss_between = between.value();
  const double ss_within = within.value();
  if (ss_within == 0.0) {
    result.f_value = ss_between == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    result.p_value = ss_between == 0.0 ? 1.0 : 0.0;
    return result;
  }
  result.f_value = (ss_between / static_cast<double>(result.df_between)) /
                   (ss_within / static_cast<double>(result.df_within));
  result.p_value = f_distribution_sf(result.f_value, static_cast<double>(result.df_between),
                                     static_cast<double>(result.df_within));
  return result;
}

Descriptive descriptive(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("descriptive statistics need at least one value");
  const double reference = values[0];
  CompensatedSum sum;
  for (double v : values) sum.add(v - reference);
  Descriptive d;
  d.n = values.size();
  d.mean = reference + sum.value() / static_cast<double>(d.n);
  if (d.n >= 2) {
    CompensatedSum squares;
    for (double v : values) {
      const double e = v - d.mean;
      squares.add(e * e);
    }
    d.sd = std::sqrt(squares.value() / static_cast<double>(d.n - 1));
  }
  return d;
}

}  // namespace voxelval
