#ifndef MIXSEL_MIXTURE_HPP
#define MIXSEL_MIXTURE_HPP

#include <vector>

#include "mixsel/criteria.hpp"
#include "mixsel/densities.hpp"
#include "mixsel/rng.hpp"
#include "mixsel/types.hpp"

namespace mixsel {

// k-component mixture with weights on the simplex and components living in a
// common ParamSpace. Construction renormalizes the weights and rejects
// infeasible components, so instances always satisfy the type invariants.
class MixtureParams {
public:
  MixtureParams(VectorXd weights, std::vector<ComponentParams> components, ParamSpace space);

  int k() const { return static_cast<int>(components_.size()); }
  const VectorXd& weights() const { return weights_; }
  const std::vector<ComponentParams>& components() const { return components_; }
  const ComponentParams& component(int z) const { return components_[static_cast<std::size_t>(z)]; }
  const ParamSpace& space() const { return space_; }
  Family family() const { return family_; }
  // Number of data columns an observation row occupies.
  int data_cols() const { return data_cols_; }

  // Components reordered by `perm` (new index -> old index), weights permuted
  // to match. Used by label-permutation tests and the selector's warm starts.
  MixtureParams permuted(const std::vector<int>& perm) const;

private:
  VectorXd weights_;
  std::vector<ComponentParams> components_;
  ParamSpace space_;
  Family family_;
  int data_cols_;
};

// log f_k(x; psi) via stable log-sum-exp of {log pi_z + log phi(x; theta_z)};
// zero-weight components are skipped. Exactly invariant under component
// relabeling (exact summation of the exp terms).
double log_mixture_density(const MixtureParams& psi, const Eigen::Ref<const VectorXd>& x);

// E-step posterior r_z proportional to pi_z phi(x; theta_z); sums to 1.
VectorXd responsibilities(const MixtureParams& psi, const Eigen::Ref<const VectorXd>& x);

// n x k matrix of log pi_z + log phi(x_i; theta_z); -inf where pi_z = 0.
// Shared building block for empirical_risk and the EM E-step.
MatrixXd weighted_log_densities(const MixtureParams& psi, const DataSet& data);

// Empirical risk: mean of -log f_k over the rows of data. Exactly invariant
// under permutations of the data and of the component labels.
double empirical_risk(const MixtureParams& psi, const DataSet& data);

// Row-wise log-sum-exp of one row of weighted_log_densities output.
double row_log_sum_exp(const Eigen::Ref<const Eigen::RowVectorXd>& row);

// dim of the parameter space at order k: (m+1)k under DimConvention::paper,
// (m+1)k - 1 counting free parameters (the simplex constraint).
int space_dim(Family family, int data_cols, int k, DimConvention conv = DimConvention::paper);
int space_dim(const MixtureParams& psi, DimConvention conv = DimConvention::paper);

// Covariate draw for mixture-of-regressions sampling: an intercept column
// followed by `extra` independent Uniform(lo, hi) coordinates.
struct CovariateSampler {
  bool intercept = true;
  int extra = 1;
  double lo = -1.0;
  double hi = 1.0;

  int dim() const { return (intercept ? 1 : 0) + extra; }
  VectorXd draw(Rng& rng) const;
};

struct SampleResult {
  DataSet data;             // n rows in family layout
  std::vector<int> labels;  // generating component per row, 0-based
};

// n draws: label from the weights, observation from the labeled component.
// The regression overload draws the covariate first and stores [u..., y].
SampleResult sample_mixture(const MixtureParams& psi, int n, Rng& rng);
SampleResult sample_mixture(const MixtureParams& psi, int n, Rng& rng,
                            const CovariateSampler& cov);

}  // namespace mixsel

#endif
