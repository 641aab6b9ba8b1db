#ifndef MIXSEL_CRITERIA_HPP
#define MIXSEL_CRITERIA_HPP

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mixsel {

// Natural logarithm truncated below at 1: Ln(x) = log(max(e, x)).
// Returns exactly 1.0 for x <= e so that downstream penalty comparisons
// against the plain BIC are bit-exact in the truncated regime.
double ln_trunc(double x);

// nu-fold composition Ln∘...∘Ln(x). Always >= 1.
double ln_compose(int nu, double x);

enum class CriterionKind { aic, bic, nu_bic, eps_bic };

// paper: dim(S_k) = (m+1)k as the mixture parameterization is written;
// free : (m+1)k - 1, discounting the weight-simplex constraint.
enum class DimConvention { paper, free_params };

inline std::string dim_convention_name(DimConvention c) {
  return c == DimConvention::paper ? "paper" : "free";
}

inline DimConvention dim_convention_from_name(const std::string& s) {
  if (s == "paper") return DimConvention::paper;
  if (s == "free") return DimConvention::free_params;
  throw std::invalid_argument("unknown dim convention: " + s);
}

int space_dim(int k, int m, DimConvention conv);

// A penalty family together with the complexity weight alpha(k, m).
// alpha defaults to (m+1)k/2, which makes the nu-BIC and eps-BIC directly
// comparable to the BIC under DimConvention::paper.
struct CriterionSpec {
  CriterionKind kind = CriterionKind::bic;
  int nu = 3;         // used by nu_bic
  double eps = 0.02;  // used by eps_bic
  DimConvention dim_convention = DimConvention::paper;
  std::function<double(int k, int m)> alpha;  // empty => default (m+1)k/2

  static CriterionSpec aic();
  static CriterionSpec bic();
  static CriterionSpec nu_bic(int nu);
  static CriterionSpec eps_bic(double eps);
  static CriterionSpec from_name(const std::string& name, int nu, double eps);

  double alpha_value(int k, int m) const;
  std::string name() const;

  // Verifies alpha is strictly increasing in k on 1..kbar for this m.
  void validate(int kbar, int m) const;
};

// Per-observation penalty pen_{k,n}:
//   aic     : dim(S_k) / n
//   bic     : dim(S_k) log(n) / (2n)
//   nu_bic  : alpha(k) Ln∘nu(n) log(n) / n
//   eps_bic : alpha(k) (log n)^(1+eps) / n
double penalty(const CriterionSpec& spec, int k, int m, double n);

// risk + penalty; the objective minimized over k by the selector.
double criterion_value(const CriterionSpec& spec, double risk, int k, int m, double n);

// Finite-grid proxies for the consistency conditions on a penalty family:
// B1: pen_{k,n} decreases toward 0 in n for every k;
// B2: the scaled gap (n/log n)(pen_{l,n} - pen_{k,n}) is non-decreasing in n
//     and positive at the grid end, for every k < l.
struct PenaltyConditionReport {
  bool b1_ok = true;
  bool b2_ok = true;
  std::vector<std::string> violations;
  bool ok() const { return b1_ok && b2_ok; }
};

PenaltyConditionReport check_b1_b2(const std::function<double(int, double)>& pen,
                                   int kbar, const std::vector<double>& n_grid);
PenaltyConditionReport check_b1_b2(const CriterionSpec& spec, int kbar, int m,
                                   const std::vector<double>& n_grid);

// Largest sample size for which a log factor stays below a given level.
// For nu-BIC the bound Ln∘nu(n) <= level holds up to n = exp∘nu(level);
// for eps-BIC the bound (log n)^eps <= level holds up to n = exp(level^(1/eps)).
// Values beyond double range are reported through log_value / magnitude.
struct ThresholdEntry {
  double level = 1.0;
  double log_value = 0.0;   // natural log of the threshold n
  double value = 0.0;       // the threshold itself; +inf when not representable
  bool representable = true;
  std::string magnitude;    // decimal rendering, e.g. "9.6e+50" or "4.3e+1656520"
};

struct NuThresholdReport {
  int nu = 0;
  ThresholdEntry at_1;    // level 1.0
  ThresholdEntry at_1_1;  // level 1.1
};

struct EpsThresholdReport {
  double eps = 0.0;
  ThresholdEntry at_1_1;  // level 1.1
};

NuThresholdReport nu_thresholds(int nu);
EpsThresholdReport eps_thresholds(double eps);

}  // namespace mixsel

#endif
