#pragma once

#include <vector>

namespace physagent {

struct AnovaResult {
  double f_statistic = 0.0;
  int df_between = 0;
  int df_within = 0;
  double p_value = 1.0;
};

// k >= 2 groups of equal size m >= 2. Throws UnbalancedGroups for unequal
// sizes and ConfigError for too few groups or values. Zero within-group
// variance gives F = +inf, p = 0 (or F = 0, p = 1 when all groups agree).
AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups);

// I_x(a, b) by continued fraction. a, b > 0; x in [0, 1].
double regularized_incomplete_beta(double a, double b, double x);

// Upper tail P(F > f) of the F(d1, d2) distribution.
double f_survival(double f, double d1, double d2);
double f_density(double f, double d1, double d2);

struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;  // 1.96 * standard error
};

// Sample mean with a normal-approximation 95% interval. Empty input throws
// ConfigError; one value gives a zero-width interval.
MeanCi mean_ci95(const std::vector<double>& values);

}  // namespace physagent
