#include "mixsel/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mixsel/numeric.hpp"

namespace mixsel {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

MixtureParams::MixtureParams(VectorXd weights, std::vector<ComponentParams> components,
                             ParamSpace space)
    : weights_(std::move(weights)), components_(std::move(components)), space_(space) {
  const auto k = static_cast<Eigen::Index>(components_.size());
  if (k < 1) throw std::invalid_argument("MixtureParams: need at least one component");
  if (weights_.size() != k)
    throw std::invalid_argument("MixtureParams: weight count does not match components");
  if (!weights_.allFinite() || (weights_.array() < 0.0).any())
    throw std::invalid_argument("MixtureParams: weights must be finite and nonnegative");
  const double total = weights_.sum();
  if (!(total > 0.0)) throw std::invalid_argument("MixtureParams: weights sum to zero");
  weights_ /= total;

  family_ = family_of(components_[0]);
  data_cols_ = obs_cols(components_[0]);
  for (const auto& comp : components_) {
    if (family_of(comp) != family_)
      throw std::invalid_argument("MixtureParams: mixed component families");
    if (obs_cols(comp) != data_cols_)
      throw std::invalid_argument("MixtureParams: inconsistent component dimensions");
    if (space_.family != family_)
      throw std::invalid_argument("MixtureParams: space family tag mismatch");
    if (!is_feasible(comp, space_))
      throw std::invalid_argument("MixtureParams: component outside the parameter space");
  }
}

MixtureParams MixtureParams::permuted(const std::vector<int>& perm) const {
  if (static_cast<int>(perm.size()) != k())
    throw std::invalid_argument("permuted: permutation length mismatch");
  VectorXd w(k());
  std::vector<ComponentParams> comps;
  comps.reserve(perm.size());
  std::vector<bool> seen(perm.size(), false);
  for (int i = 0; i < k(); ++i) {
    const int src = perm[static_cast<std::size_t>(i)];
    if (src < 0 || src >= k() || seen[static_cast<std::size_t>(src)])
      throw std::invalid_argument("permuted: not a permutation");
    seen[static_cast<std::size_t>(src)] = true;
    w[i] = weights_[src];
    comps.push_back(components_[static_cast<std::size_t>(src)]);
  }
  return MixtureParams(std::move(w), std::move(comps), space_);
}

double row_log_sum_exp(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  double best = kNegInf;
  for (Eigen::Index z = 0; z < row.size(); ++z)
    if (row[z] > best) best = row[z];
  if (!std::isfinite(best)) return kNegInf;
  ExactSum acc;
  for (Eigen::Index z = 0; z < row.size(); ++z)
    if (row[z] != kNegInf) acc.add(std::exp(row[z] - best));
  return best + std::log(acc.total());
}

double log_mixture_density(const MixtureParams& psi, const Eigen::Ref<const VectorXd>& x) {
  Eigen::RowVectorXd terms(psi.k());
  for (int z = 0; z < psi.k(); ++z) {
    const double w = psi.weights()[z];
    terms[z] = w > 0.0 ? std::log(w) + log_density(psi.component(z), x) : kNegInf;
  }
  return row_log_sum_exp(terms);
}

VectorXd responsibilities(const MixtureParams& psi, const Eigen::Ref<const VectorXd>& x) {
  VectorXd terms(psi.k());
  double best = kNegInf;
  for (int z = 0; z < psi.k(); ++z) {
    const double w = psi.weights()[z];
    terms[z] = w > 0.0 ? std::log(w) + log_density(psi.component(z), x) : kNegInf;
    best = std::max(best, terms[z]);
  }
  VectorXd r(psi.k());
  for (int z = 0; z < psi.k(); ++z)
    r[z] = terms[z] == kNegInf ? 0.0 : std::exp(terms[z] - best);
  return r / r.sum();
}

MatrixXd weighted_log_densities(const MixtureParams& psi, const DataSet& data) {
  if (data.cols() != psi.data_cols())
    throw std::invalid_argument("weighted_log_densities: data column count mismatch");
  MatrixXd L(data.rows(), psi.k());
  for (int z = 0; z < psi.k(); ++z) {
    const double w = psi.weights()[z];
    if (w > 0.0)
      L.col(z) = log_density_batch(psi.component(z), data).array() + std::log(w);
    else
      L.col(z).setConstant(kNegInf);
  }
  return L;
}

double empirical_risk(const MixtureParams& psi, const DataSet& data) {
  const Eigen::Index n = data.rows();
  if (n < 1) throw std::invalid_argument("empirical_risk: empty data");
  const MatrixXd L = weighted_log_densities(psi, data);
  ExactSum acc;
  for (Eigen::Index i = 0; i < n; ++i) acc.add(row_log_sum_exp(L.row(i)));
  return -acc.total() / static_cast<double>(n);
}

int space_dim(Family family, int data_cols, int k, DimConvention conv) {
  return space_dim(k, param_dim(family, data_cols), conv);
}

int space_dim(const MixtureParams& psi, DimConvention conv) {
  return space_dim(psi.family(), psi.data_cols(), psi.k(), conv);
}

VectorXd CovariateSampler::draw(Rng& rng) const {
  VectorXd u(dim());
  int at = 0;
  if (intercept) u[at++] = 1.0;
  for (int j = 0; j < extra; ++j) u[at++] = rng.uniform(lo, hi);
  return u;
}

namespace {

int draw_label(const VectorXd& weights, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (Eigen::Index z = 0; z < weights.size(); ++z) {
    cum += weights[z];
    if (u <= cum) return static_cast<int>(z);
  }
  return static_cast<int>(weights.size()) - 1;
}

}  // namespace

SampleResult sample_mixture(const MixtureParams& psi, int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_mixture: n must be >= 1");
  if (psi.family() == Family::regression)
    throw std::invalid_argument("sample_mixture: regression needs a CovariateSampler");
  SampleResult out;
  out.data.resize(n, psi.data_cols());
  out.labels.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int z = draw_label(psi.weights(), rng);
    out.labels[static_cast<std::size_t>(i)] = z;
    out.data.row(i) = sample(psi.component(z), rng).transpose();
  }
  return out;
}

SampleResult sample_mixture(const MixtureParams& psi, int n, Rng& rng,
                            const CovariateSampler& cov) {
  if (n < 1) throw std::invalid_argument("sample_mixture: n must be >= 1");
  if (psi.family() != Family::regression)
    throw std::invalid_argument("sample_mixture: covariate sampler is for regression mixtures");
  if (cov.dim() != psi.data_cols() - 1)
    throw std::invalid_argument("sample_mixture: covariate dimension does not match coefficients");
  SampleResult out;
  out.data.resize(n, psi.data_cols());
  out.labels.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int z = draw_label(psi.weights(), rng);
    out.labels[static_cast<std::size_t>(i)] = z;
    const VectorXd u = cov.draw(rng);
    const auto& comp = std::get<RegressionParams>(psi.component(z));
    out.data.row(i) = sample_given_covariate(comp, u, rng).transpose();
  }
  return out;
}

}  // namespace mixsel
