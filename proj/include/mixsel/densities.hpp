#ifndef MIXSEL_DENSITIES_HPP
#define MIXSEL_DENSITIES_HPP

#include <variant>
#include <vector>

#include "mixsel/rng.hpp"
#include "mixsel/types.hpp"

namespace mixsel {

// Multivariate normal component. The Cholesky factor and log-determinant are
// computed once at construction; construction rejects non-SPD covariances.
class GaussianParams {
public:
  GaussianParams(VectorXd mean, MatrixXd covariance);

  const VectorXd& mean() const { return mean_; }
  const MatrixXd& covariance() const { return cov_; }
  const MatrixXd& chol_lower() const { return chol_; }
  double log_det() const { return log_det_; }
  int dim() const { return static_cast<int>(mean_.size()); }

private:
  VectorXd mean_;
  MatrixXd cov_;
  MatrixXd chol_;  // lower triangular, cov = chol chol^T
  double log_det_;
};

// Laplace component with density (rate/2) exp(-rate |x - location|).
struct LaplaceParams {
  double location = 0.0;
  double rate = 1.0;
};

// Gaussian-linear conditional component: y | u ~ N(beta^T u, noise_sd^2).
// The covariate u carries the intercept as its first coordinate.
struct RegressionParams {
  VectorXd coefficients;
  double noise_sd = 1.0;
};

using ComponentParams = std::variant<GaussianParams, LaplaceParams, RegressionParams>;

Family family_of(const ComponentParams& p);

// Number of data columns an observation row occupies for this component.
int obs_cols(const ComponentParams& p);

// Free parameter count m of the component family given the data column count:
// gaussian m_x + m_x(m_x+1)/2, laplace 2, regression p + 1.
int param_dim(Family family, int data_cols);

// log phi(x; theta). For regression this is the conditional log-density
// log rho(y|u; theta); the covariate density is never evaluated.
double log_density(const ComponentParams& p, const Eigen::Ref<const VectorXd>& x);

// Vectorized evaluation over all rows of data; the E-step hot path.
VectorXd log_density_batch(const ComponentParams& p, const DataSet& data);

bool is_feasible(const ComponentParams& p, const ParamSpace& space);

// Metric projection onto the compact space: locations/coefficients rescaled to
// norm <= b, scalar scales clamped to [1/c, c], covariance eigenvalues clamped
// to [1/c, c] via symmetric eigendecomposition. Feasible inputs are returned
// unchanged, which makes the projection exactly idempotent.
ComponentParams project(const ComponentParams& p, const ParamSpace& space);

struct MStepResult {
  ComponentParams params;
  // Set when the weighted problem is ill-posed: Gaussian weight mass carried by
  // fewer than m_x+1 points, zero Laplace mean absolute deviation, or a
  // rank-deficient regression design. The returned params are still usable
  // (scales sit at the projection floor/ceiling); the caller decides whether
  // to re-seed.
  bool degenerate = false;
  // Set when projection changed the unconstrained estimate. EM monotonicity is
  // only guaranteed while this stays false; the fitter logs risk increases in
  // projection-active iterations separately.
  bool projection_active = false;
};

// Weighted maximum-likelihood update for one component, projected into space.
// Gaussian: weighted mean / covariance. Laplace: weighted median and inverse
// weighted MAD. Regression: weighted least squares and weighted RMS residual.
MStepResult weighted_mstep(Family family, const DataSet& data, const VectorXd& weights,
                           const ParamSpace& space);

// Laplace fast path reusing a precomputed ascending ordering of column 0,
// so EM does not re-sort the data every iteration.
MStepResult weighted_mstep_laplace_sorted(const DataSet& data, const VectorXd& weights,
                                          const ParamSpace& space,
                                          const std::vector<int>& ascending_order);

// Lower weighted median: the smallest x_j whose cumulative weight reaches half
// the total (ties at exactly one half resolve to that point).
double weighted_median(const VectorXd& values, const VectorXd& weights);

// One draw from the component. Gaussian uses the Cholesky factor, Laplace the
// inverse CDF. Not defined for regression (a covariate is required).
VectorXd sample(const ComponentParams& p, Rng& rng);

// Regression draw: returns the full observation row [u..., y].
VectorXd sample_given_covariate(const RegressionParams& p, const Eigen::Ref<const VectorXd>& u,
                                Rng& rng);

}  // namespace mixsel

#endif
