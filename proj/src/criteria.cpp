#include "mixsel/criteria.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace mixsel {

namespace {
constexpr double kE = 2.718281828459045235360287471352662498;
constexpr double kLn10 = 2.302585092994045684017991454684364208;
// exp overflows double just above this.
constexpr double kMaxExpArg = 709.0;
}  // namespace

double ln_trunc(double x) {
  if (!(x >= 0.0)) throw std::invalid_argument("ln_trunc: argument must be >= 0");
  return x <= kE ? 1.0 : std::log(x);
}

double ln_compose(int nu, double x) {
  if (nu < 1) throw std::invalid_argument("ln_compose: nu must be >= 1");
  double v = ln_trunc(x);
  for (int i = 1; i < nu; ++i) v = ln_trunc(v);
  return v;
}

int space_dim(int k, int m, DimConvention conv) {
  const int full = (m + 1) * k;
  return conv == DimConvention::paper ? full : full - 1;
}

CriterionSpec CriterionSpec::aic() {
  CriterionSpec s;
  s.kind = CriterionKind::aic;
  return s;
}

CriterionSpec CriterionSpec::bic() {
  CriterionSpec s;
  s.kind = CriterionKind::bic;
  return s;
}

CriterionSpec CriterionSpec::nu_bic(int nu) {
  if (nu < 1) throw std::invalid_argument("nu-bic: nu must be a positive integer");
  CriterionSpec s;
  s.kind = CriterionKind::nu_bic;
  s.nu = nu;
  return s;
}

CriterionSpec CriterionSpec::eps_bic(double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps-bic: eps must be > 0");
  CriterionSpec s;
  s.kind = CriterionKind::eps_bic;
  s.eps = eps;
  return s;
}

CriterionSpec CriterionSpec::from_name(const std::string& name, int nu, double eps) {
  if (name == "aic") return aic();
  if (name == "bic") return bic();
  if (name == "nu-bic") return nu_bic(nu);
  if (name == "eps-bic") return eps_bic(eps);
  throw std::invalid_argument("unknown criterion: " + name);
}

double CriterionSpec::alpha_value(int k, int m) const {
  if (alpha) return alpha(k, m);
  return 0.5 * static_cast<double>((m + 1) * k);
}

std::string CriterionSpec::name() const {
  char buf[64];
  switch (kind) {
    case CriterionKind::aic: return "aic";
    case CriterionKind::bic: return "bic";
    case CriterionKind::nu_bic:
      std::snprintf(buf, sizeof(buf), "nu-bic(%d)", nu);
      return buf;
    case CriterionKind::eps_bic:
      std::snprintf(buf, sizeof(buf), "eps-bic(%g)", eps);
      return buf;
  }
  throw std::logic_error("unknown criterion kind");
}

void CriterionSpec::validate(int kbar, int m) const {
  if (kind == CriterionKind::nu_bic && nu < 1)
    throw std::invalid_argument("nu-bic: nu must be >= 1");
  if (kind == CriterionKind::eps_bic && !(eps > 0.0))
    throw std::invalid_argument("eps-bic: eps must be > 0");
  double prev = alpha_value(1, m);
  if (!(prev > 0.0)) throw std::invalid_argument("alpha(k) must be positive");
  for (int k = 2; k <= kbar; ++k) {
    const double cur = alpha_value(k, m);
    if (!(cur > prev))
      throw std::invalid_argument("alpha(k) must be strictly increasing in k");
    prev = cur;
  }
}

double penalty(const CriterionSpec& spec, int k, int m, double n) {
  if (k < 1) throw std::invalid_argument("penalty: k must be >= 1");
  if (m < 1) throw std::invalid_argument("penalty: m must be >= 1");
  if (!(n >= 1.0)) throw std::invalid_argument("penalty: n must be >= 1");
  const double logn = std::log(n);
  switch (spec.kind) {
    case CriterionKind::aic:
      return static_cast<double>(space_dim(k, m, spec.dim_convention)) / n;
    case CriterionKind::bic:
      // dim (2n)^-1 log n, written so that the nu-BIC below is bit-identical
      // whenever Ln∘nu(n) == 1 and alpha == dim/2.
      return (0.5 * static_cast<double>(space_dim(k, m, spec.dim_convention))) * logn / n;
    case CriterionKind::nu_bic:
      return spec.alpha_value(k, m) * (ln_compose(spec.nu, n) * logn) / n;
    case CriterionKind::eps_bic:
      return spec.alpha_value(k, m) * std::pow(logn, 1.0 + spec.eps) / n;
  }
  throw std::logic_error("unknown criterion kind");
}

double criterion_value(const CriterionSpec& spec, double risk, int k, int m, double n) {
  if (!std::isfinite(risk)) throw std::invalid_argument("criterion_value: risk must be finite");
  return risk + penalty(spec, k, m, n);
}

PenaltyConditionReport check_b1_b2(const std::function<double(int, double)>& pen,
                                   int kbar, const std::vector<double>& n_grid) {
  if (n_grid.size() < 2) throw std::invalid_argument("check_b1_b2: need at least two grid points");
  for (std::size_t j = 1; j < n_grid.size(); ++j)
    if (!(n_grid[j] > n_grid[j - 1]))
      throw std::invalid_argument("check_b1_b2: n_grid must be increasing");

  PenaltyConditionReport rep;
  char buf[160];

  for (int k = 1; k <= kbar; ++k) {
    double first = pen(k, n_grid.front());
    double prev = first;
    for (std::size_t j = 1; j < n_grid.size(); ++j) {
      const double cur = pen(k, n_grid[j]);
      if (cur > prev) {
        std::snprintf(buf, sizeof(buf), "B1: pen(k=%d) increases from n=%g to n=%g", k,
                      n_grid[j - 1], n_grid[j]);
        rep.b1_ok = false;
        rep.violations.emplace_back(buf);
      }
      prev = cur;
    }
    // must actually head toward zero, not flatline at a positive level
    if (!(prev <= 0.1 * first || first == 0.0)) {
      std::snprintf(buf, sizeof(buf), "B1: pen(k=%d) does not decay toward 0 over the grid", k);
      rep.b1_ok = false;
      rep.violations.emplace_back(buf);
    }
  }

  for (int k = 1; k <= kbar; ++k) {
    for (int l = k + 1; l <= kbar; ++l) {
      double prev = -std::numeric_limits<double>::infinity();
      double last = 0.0;
      for (double n : n_grid) {
        const double s = n / std::log(n) * (pen(l, n) - pen(k, n));
        if (s < prev * (1.0 - 1e-12) - 1e-300) {
          std::snprintf(buf, sizeof(buf),
                        "B2: scaled gap (k=%d,l=%d) decreases at n=%g", k, l, n);
          rep.b2_ok = false;
          rep.violations.emplace_back(buf);
        }
        prev = s;
        last = s;
      }
      if (!(last > 0.0)) {
        std::snprintf(buf, sizeof(buf), "B2: scaled gap (k=%d,l=%d) not positive at grid end", k, l);
        rep.b2_ok = false;
        rep.violations.emplace_back(buf);
      }
    }
  }
  return rep;
}

PenaltyConditionReport check_b1_b2(const CriterionSpec& spec, int kbar, int m,
                                   const std::vector<double>& n_grid) {
  spec.validate(kbar, m);
  return check_b1_b2([&spec, m](int k, double n) { return penalty(spec, k, m, n); }, kbar,
                     n_grid);
}

namespace {

// Renders exp(log_value) as a decimal string even when it overflows double.
std::string magnitude_string(double log_value) {
  if (!std::isfinite(log_value)) return "exceeds representable range";
  const double log10v = log_value / kLn10;
  const double e10 = std::floor(log10v);
  const double mant = std::pow(10.0, log10v - e10);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1fe+%.0f", mant, e10);
  return buf;
}

ThresholdEntry make_entry(double level, double log_value) {
  ThresholdEntry e;
  e.level = level;
  e.log_value = log_value;
  if (std::isfinite(log_value) && log_value <= kMaxExpArg) {
    e.value = std::exp(log_value);
    e.representable = true;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", e.value);
    e.magnitude = buf;
  } else {
    e.value = std::numeric_limits<double>::infinity();
    e.representable = false;
    e.magnitude = magnitude_string(log_value);
  }
  return e;
}

// log of exp∘nu(level): applies exp (nu-1) times, saturating to +inf.
double iterated_exp_log(int nu, double level) {
  double v = level;
  for (int i = 1; i < nu; ++i) {
    if (v > kMaxExpArg) return std::numeric_limits<double>::infinity();
    v = std::exp(v);
  }
  return v;
}

}  // namespace

NuThresholdReport nu_thresholds(int nu) {
  if (nu < 1) throw std::invalid_argument("nu_thresholds: nu must be >= 1");
  NuThresholdReport rep;
  rep.nu = nu;
  rep.at_1 = make_entry(1.0, iterated_exp_log(nu, 1.0));
  rep.at_1_1 = make_entry(1.1, iterated_exp_log(nu, 1.1));
  return rep;
}

EpsThresholdReport eps_thresholds(double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps_thresholds: eps must be > 0");
  EpsThresholdReport rep;
  rep.eps = eps;
  // (log n)^eps <= level up to log n = level^(1/eps); computed in log space.
  const double log_exponent = std::log(1.1) / eps;
  const double exponent =
      log_exponent > kMaxExpArg ? std::numeric_limits<double>::infinity() : std::exp(log_exponent);
  rep.at_1_1 = make_entry(1.1, exponent);
  return rep;
}

}  // namespace mixsel
