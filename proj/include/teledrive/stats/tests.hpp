#pragma once

// Welch two-sample t-test, one-way ANOVA, Bonferroni-corrected pairwise
// comparisons on the ANOVA pooled error, and two-sample power sizing.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "teledrive/stats/distributions.hpp"

namespace teledrive::stats {

struct SampleGroup {
  std::string label;
  std::vector<double> values;
};

enum class Tail { Left, Right, Two };

inline const char* to_string(Tail t) {
  switch (t) {
    case Tail::Left: return "left";
    case Tail::Right: return "right";
    case Tail::Two: return "two";
  }
  return "?";
}

struct TestResult {
  double statistic{0};
  double df1{0};
  double df2{0};  // second df for F tests, 0 otherwise
  double p_value{1};
  Tail tail{Tail::Two};
};

inline double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Unbiased sample variance (two-pass).
inline double sample_variance(const std::vector<double>& v) {
  const double m = mean(v);
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

inline double t_p_value(double t, double df, Tail tail) {
  switch (tail) {
    case Tail::Left: return student_t_cdf(t, df);
    case Tail::Right: return student_t_sf(t, df);
    case Tail::Two: return std::min(1.0, 2.0 * student_t_cdf(-std::abs(t), df));
  }
  return 1.0;
}

/// Welch's unequal-variance t-test of mean(a) - mean(b) with Satterthwaite df.
inline TestResult welch_ttest(const SampleGroup& a, const SampleGroup& b, Tail tail = Tail::Two) {
  if (a.values.size() < 2 || b.values.size() < 2)
    throw std::invalid_argument("welch_ttest: each group needs at least two values");
  const double na = static_cast<double>(a.values.size()), nb = static_cast<double>(b.values.size());
  const double va = sample_variance(a.values) / na, vb = sample_variance(b.values) / nb;
  if (!(va + vb > 0)) throw std::invalid_argument("welch_ttest: both groups have zero variance");
  TestResult r;
  r.tail = tail;
  r.statistic = (mean(a.values) - mean(b.values)) / std::sqrt(va + vb);
  r.df1 = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  r.p_value = t_p_value(r.statistic, r.df1, tail);
  return r;
}

struct AnovaTable {
  TestResult f_test;
  double ss_between{0}, ss_within{0};
  double ms_error{0};
  double df_error{0};
  std::vector<double> means;
  std::vector<std::size_t> sizes;
};

inline AnovaTable anova_table(const std::vector<SampleGroup>& groups) {
  if (groups.size() < 2) throw std::invalid_argument("oneway_anova: need at least two groups");
  AnovaTable t;
  double total = 0;
  std::size_t n = 0;
  for (const auto& g : groups) {
    if (g.values.empty()) throw std::invalid_argument("oneway_anova: empty group '" + g.label + "'");
    t.means.push_back(mean(g.values));
    t.sizes.push_back(g.values.size());
    for (double v : g.values) total += v;
    n += g.values.size();
  }
  const double k = static_cast<double>(groups.size());
  if (static_cast<double>(n) <= k) throw std::invalid_argument("oneway_anova: no within-group degrees of freedom");
  const double grand = total / static_cast<double>(n);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    t.ss_between += static_cast<double>(t.sizes[i]) * (t.means[i] - grand) * (t.means[i] - grand);
    for (double v : groups[i].values) t.ss_within += (v - t.means[i]) * (v - t.means[i]);
  }
  t.df_error = static_cast<double>(n) - k;
  t.ms_error = t.ss_within / t.df_error;
  t.f_test.df1 = k - 1.0;
  t.f_test.df2 = t.df_error;
  t.f_test.tail = Tail::Right;
  t.f_test.statistic = (t.ss_between / t.f_test.df1) / t.ms_error;
  t.f_test.p_value = t.ss_within > 0 ? f_sf(t.f_test.statistic, t.f_test.df1, t.f_test.df2)
                                     : (t.ss_between > 0 ? 0.0 : 1.0);
  return t;
}

inline TestResult oneway_anova(const std::vector<SampleGroup>& groups) { return anova_table(groups).f_test; }

struct PairwiseComparison {
  std::size_t i{0}, j{0};
  std::string label_i, label_j;
  double mean_difference{0};
  double statistic{0};
  double raw_p{1};
  double adjusted_p{1};
  bool significant{false};
};

/// All k(k-1)/2 pairwise t comparisons on the ANOVA pooled error, Bonferroni-adjusted.
inline std::vector<PairwiseComparison> bonferroni_pairwise(const std::vector<SampleGroup>& groups,
                                                           double alpha = 0.05) {
  const AnovaTable table = anova_table(groups);
  const std::size_t k = groups.size();
  const double m = static_cast<double>(k * (k - 1) / 2);
  std::vector<PairwiseComparison> out;
  out.reserve(k * (k - 1) / 2);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      PairwiseComparison c;
      c.i = i;
      c.j = j;
      c.label_i = groups[i].label;
      c.label_j = groups[j].label;
      c.mean_difference = table.means[i] - table.means[j];
      const double se = std::sqrt(table.ms_error * (1.0 / static_cast<double>(table.sizes[i]) +
                                                    1.0 / static_cast<double>(table.sizes[j])));
      if (se > 0) {
        c.statistic = c.mean_difference / se;
        c.raw_p = t_p_value(c.statistic, table.df_error, Tail::Two);
      } else {
        c.statistic = 0;
        c.raw_p = c.mean_difference == 0 ? 1.0 : 0.0;
      }
      c.adjusted_p = std::min(1.0, c.raw_p * m);
      c.significant = c.adjusted_p < alpha;
      out.push_back(std::move(c));
    }
  }
  return out;
}

struct SampleSize {
  int per_group{0};
  int recruit{0};
  double raw{0};  // unrounded per-group size
};

/// Two-sample two-tailed sample size from the normal approximation
/// n = 2 ((z_{1-alpha/2} + z_power) / d)^2, optionally with the small-sample
/// t correction + z_{1-alpha/2}^2 / 4. Recruitment inflates n for dropout.
inline SampleSize power_sample_size(double effect, double alpha, double power, double dropout,
                                    bool t_correction = true) {
  if (!(effect > 0)) throw std::invalid_argument("power_sample_size: effect size must be positive");
  if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("power_sample_size: alpha must lie in (0,1)");
  if (!(power > alpha && power < 1)) throw std::invalid_argument("power_sample_size: power must exceed alpha");
  if (!(dropout >= 0 && dropout < 1)) throw std::invalid_argument("power_sample_size: dropout must lie in [0,1)");
  const double za = normal_quantile(1.0 - alpha / 2.0);
  const double zb = normal_quantile(power);
  SampleSize s;
  s.raw = 2.0 * std::pow((za + zb) / effect, 2);
  if (t_correction) s.raw += za * za / 4.0;
  s.per_group = std::max(2, static_cast<int>(std::ceil(s.raw - 1e-9)));
  s.recruit = static_cast<int>(std::ceil(s.per_group / (1.0 - dropout) - 1e-9));
  return s;
}

}  // namespace teledrive::stats
