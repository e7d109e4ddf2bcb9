#include "physagent/stats.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "physagent/errors.hpp"

namespace physagent {
namespace {

// Modified Lentz evaluation of the incomplete-beta continued fraction.
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw NoConvergence("incomplete beta continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw ConfigError("incomplete beta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double f_survival(double f, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) throw ConfigError("F distribution needs d1, d2 > 0");
  if (std::isinf(f)) return 0.0;
  if (!(f > 0.0)) return 1.0;
  return regularized_incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

double f_density(double f, double d1, double d2) {
  if (!(f > 0.0)) return 0.0;
  const double log_beta =
      std::lgamma(d1 / 2.0) + std::lgamma(d2 / 2.0) - std::lgamma((d1 + d2) / 2.0);
  const double log_pdf = 0.5 * d1 * std::log(d1 / d2) + (0.5 * d1 - 1.0) * std::log(f) -
                         0.5 * (d1 + d2) * std::log1p(d1 * f / d2) - log_beta;
  return std::exp(log_pdf);
}

AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups) {
  const std::size_t k = groups.size();
  if (k < 2) throw ConfigError("ANOVA needs at least 2 groups");
  const std::size_t m = groups.front().size();
  for (const auto& g : groups) {
    if (g.size() != m) {
      throw UnbalancedGroups("ANOVA groups differ in size (" + std::to_string(m) +
                             " vs " + std::to_string(g.size()) + ")");
    }
  }
  if (m < 2) throw ConfigError("ANOVA needs at least 2 values per group");

  double grand = 0.0;
  std::vector<double> means(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (double v : groups[i]) means[i] += v;
    grand += means[i];
    means[i] /= static_cast<double>(m);
  }
  grand /= static_cast<double>(k * m);

  double ss_between = 0.0;
  double ss_within = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    ss_between += static_cast<double>(m) * (means[i] - grand) * (means[i] - grand);
    for (double v : groups[i]) ss_within += (v - means[i]) * (v - means[i]);
  }

  AnovaResult r;
  r.df_between = static_cast<int>(k - 1);
  r.df_within = static_cast<int>(k * m - k);
  const double ms_between = ss_between / r.df_between;
  const double ms_within = ss_within / r.df_within;
  // Relative guard: sums of squares of exactly equal data can carry rounding.
  const double scale = std::max(1.0, grand * grand) * static_cast<double>(k * m);
  const bool no_between = ss_between <= 1e-24 * scale;
  const bool no_within = ss_within <= 1e-24 * scale;
  if (no_between) {
    r.f_statistic = 0.0;
    r.p_value = 1.0;
  } else if (no_within) {
    r.f_statistic = std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
  } else {
    r.f_statistic = ms_between / ms_within;
    r.p_value = f_survival(r.f_statistic, r.df_between, r.df_within);
  }
  return r;
}

MeanCi mean_ci95(const std::vector<double>& values) {
  if (values.empty()) throw ConfigError("mean of an empty sample");
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

}  // namespace physagent
