#ifndef MIXSEL_TYPES_HPP
#define MIXSEL_TYPES_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace mixsel {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Observations are rows of a dense matrix. Column layout by family:
//   gaussian   : the m_x coordinates of x
//   laplace    : a single column
//   regression : covariates u (intercept included as column 0), response y last
using DataSet = Eigen::MatrixXd;

enum class Family { gaussian, laplace, regression };

inline std::string family_name(Family f) {
  switch (f) {
    case Family::gaussian: return "gaussian";
    case Family::laplace: return "laplace";
    case Family::regression: return "regression";
  }
  throw std::logic_error("unknown family");
}

inline Family family_from_name(const std::string& s) {
  if (s == "gaussian") return Family::gaussian;
  if (s == "laplace") return Family::laplace;
  if (s == "regression") return Family::regression;
  throw std::invalid_argument("unknown family: " + s);
}

// Compact constraint set for component parameters: locations/coefficients are
// bounded in Euclidean norm by b, scales (rates, noise s.d., covariance
// eigenvalues) are confined to [1/c, c]. Defaults are wide enough to be
// inactive on any sane data while keeping the set formally bounded.
struct ParamSpace {
  Family family = Family::gaussian;
  double b = 1e6;
  double c = 1e6;

  ParamSpace() = default;
  ParamSpace(Family f, double b_, double c_) : family(f), b(b_), c(c_) {
    if (b < 0.0) throw std::invalid_argument("ParamSpace: b must be >= 0");
    if (c < 1.0) throw std::invalid_argument("ParamSpace: c must be >= 1");
  }

  double scale_lo() const { return 1.0 / c; }
  double scale_hi() const { return c; }
};

}  // namespace mixsel

#endif
