#pragma once

// Reader-agreement statistics for paired attenuation measurements:
// Pearson correlation, Bland-Altman limits of agreement, Cohen's kappa with
// its normal-approximation CI and significance test, plus cohort summaries.
//
// Confusion-matrix orientation: series/reader A is the prediction, series/
// reader B is the reference. tp counts pairs positive in both.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "alarm/types.hpp"

namespace alarmkit {

struct PairedSeries {
  std::vector<std::string> ids;
  std::vector<double> a;
  std::vector<double> b;
};

namespace agree_detail {

inline void check_pair_lengths(const std::vector<double>& a,
                               const std::vector<double>& b) {
  if (a.size() != b.size())
    fail(ErrorCode::DimMismatch, "paired series differ in length");
  if (a.size() < 2)
    fail(ErrorCode::EmptySeries, "paired statistics need at least 2 pairs");
  for (double v : a)
    if (!std::isfinite(v)) fail(ErrorCode::NonFinite, "non-finite value");
  for (double v : b)
    if (!std::isfinite(v)) fail(ErrorCode::NonFinite, "non-finite value");
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Two-sided tail probability of |Z| >= |z| for a standard normal.
inline double two_sided_normal_p(double z) {
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

}  // namespace agree_detail

inline double pearson(const std::vector<double>& a,
                      const std::vector<double>& b) {
  agree_detail::check_pair_lengths(a, b);
  const double ma = agree_detail::mean_of(a), mb = agree_detail::mean_of(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0)
    fail(ErrorCode::DegenerateSeries,
         "correlation undefined for a constant series");
  return sab / std::sqrt(saa * sbb);
}

struct BlandAltman {
  double bias = 0.0;      // mean of (a - b)
  double sd = 0.0;        // sample SD of the differences (n-1)
  double loa_low = 0.0;   // bias - 1.96 sd
  double loa_high = 0.0;  // bias + 1.96 sd
};

inline BlandAltman bland_altman(const std::vector<double>& a,
                                const std::vector<double>& b) {
  agree_detail::check_pair_lengths(a, b);
  const std::size_t n = a.size();
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = a[i] - b[i];
  BlandAltman r;
  r.bias = agree_detail::mean_of(diff);
  double ss = 0.0;
  for (double d : diff) ss += (d - r.bias) * (d - r.bias);
  r.sd = std::sqrt(ss / static_cast<double>(n - 1));
  r.loa_low = r.bias - 1.96 * r.sd;
  r.loa_high = r.bias + 1.96 * r.sd;
  return r;
}

struct ConfusionMatrix {
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::int64_t total() const { return tp + fp + fn + tn; }
};

// Steatosis call: attenuation strictly below the cutoff. A value exactly at
// the cutoff is negative.
inline bool classify_steatosis(double mean_hu, double cutoff_hu) {
  return mean_hu < cutoff_hu;
}

inline ConfusionMatrix build_confusion(const std::vector<bool>& predicted,
                                       const std::vector<bool>& reference) {
  if (predicted.size() != reference.size())
    fail(ErrorCode::DimMismatch, "paired series differ in length");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] && reference[i]) ++cm.tp;
    else if (predicted[i] && !reference[i]) ++cm.fp;
    else if (!predicted[i] && reference[i]) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

inline double sensitivity(const ConfusionMatrix& cm) {
  if (cm.tp + cm.fn == 0)
    fail(ErrorCode::UndefinedRate, "no reference positives: sensitivity undefined");
  return static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
}

inline double specificity(const ConfusionMatrix& cm) {
  if (cm.tn + cm.fp == 0)
    fail(ErrorCode::UndefinedRate, "no reference negatives: specificity undefined");
  return static_cast<double>(cm.tn) / static_cast<double>(cm.tn + cm.fp);
}

enum class AgreementBand { Poor, Fair, Moderate, Substantial, AlmostPerfect };

inline AgreementBand agreement_band(double kappa) {
  if (kappa <= 0.20) return AgreementBand::Poor;
  if (kappa <= 0.40) return AgreementBand::Fair;
  if (kappa <= 0.60) return AgreementBand::Moderate;
  if (kappa <= 0.80) return AgreementBand::Substantial;
  return AgreementBand::AlmostPerfect;
}

inline const char* band_name(AgreementBand b) {
  switch (b) {
    case AgreementBand::Poor: return "poor";
    case AgreementBand::Fair: return "fair";
    case AgreementBand::Moderate: return "moderate";
    case AgreementBand::Substantial: return "substantial";
    case AgreementBand::AlmostPerfect: return "almost_perfect";
  }
  return "?";
}

struct AgreementStats {
  double kappa = 0.0;
  double ci_low = 0.0, ci_high = 0.0;  // 95% CI, clamped to [-1, 1]
  double p_value = 1.0;                // H0: kappa == 0, two-sided
  double agreement_pct = 0.0;          // 100 * observed agreement
  std::optional<double> sensitivity;   // absent when no reference positives
  std::optional<double> specificity;   // absent when no reference negatives
  AgreementBand band = AgreementBand::Poor;
};

inline AgreementStats kappa_stats(const ConfusionMatrix& cm) {
  const std::int64_t n = cm.total();
  if (n <= 0) fail(ErrorCode::EmptySeries, "empty confusion matrix");
  const double dn = static_cast<double>(n);
  const double po = static_cast<double>(cm.tp + cm.tn) / dn;
  const double pe =
      (static_cast<double>(cm.tp + cm.fp) * static_cast<double>(cm.tp + cm.fn) +
       static_cast<double>(cm.fn + cm.tn) *
           static_cast<double>(cm.fp + cm.tn)) /
      (dn * dn);
  if (pe >= 1.0)
    fail(ErrorCode::UndefinedKappa,
         "chance agreement is 1: kappa undefined (single-class data)");

  AgreementStats s;
  s.kappa = (po - pe) / (1.0 - pe);
  s.agreement_pct = 100.0 * po;

  // Large-sample standard error for the CI, and the null-hypothesis SE
  // (kappa == 0) for the significance test.
  const double se =
      std::sqrt(po * (1.0 - po) / (dn * (1.0 - pe) * (1.0 - pe)));
  s.ci_low = std::max(-1.0, s.kappa - 1.96 * se);
  s.ci_high = std::min(1.0, s.kappa + 1.96 * se);
  const double se0 = std::sqrt(pe / (dn * (1.0 - pe)));
  s.p_value = se0 > 0.0 ? agree_detail::two_sided_normal_p(s.kappa / se0) : 0.0;

  if (cm.tp + cm.fn > 0) s.sensitivity = sensitivity(cm);
  if (cm.tn + cm.fp > 0) s.specificity = specificity(cm);
  s.band = agreement_band(s.kappa);
  return s;
}

struct SeriesSummary {
  std::int64_t n = 0;
  double mean = 0.0;
  std::optional<double> sd;  // sample SD; absent for n == 1
  double median = 0.0;
  double q25 = 0.0, q75 = 0.0;
  double min = 0.0, max = 0.0;
  std::int64_t count_below_cutoff = 0;
};

namespace agree_detail {

// Linear-interpolation quantile on sorted data (the common "type 7" rule):
// rank h = (n-1)p, interpolate between the straddling order statistics.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = static_cast<double>(n - 1) * p;
  const std::size_t lo = static_cast<std::size_t>(h);
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace agree_detail

inline SeriesSummary summarize(const std::vector<double>& values,
                               double cutoff_hu) {
  if (values.empty())
    fail(ErrorCode::EmptySeries, "cannot summarize an empty series");
  for (double v : values)
    if (!std::isfinite(v)) fail(ErrorCode::NonFinite, "non-finite value");

  SeriesSummary s;
  s.n = static_cast<std::int64_t>(values.size());
  s.mean = agree_detail::mean_of(values);
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  s.max = sorted.back();
  s.median = agree_detail::quantile_sorted(sorted, 0.5);
  s.q25 = agree_detail::quantile_sorted(sorted, 0.25);
  s.q75 = agree_detail::quantile_sorted(sorted, 0.75);
  for (double v : values) s.count_below_cutoff += classify_steatosis(v, cutoff_hu);
  return s;
}

}  // namespace alarmkit
