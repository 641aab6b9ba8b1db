#include "mixsel/densities.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mixsel {

namespace {
constexpr double kLog2Pi = 1.837877066409345483560659472811235279;
// Relative slack for feasibility checks on norms and scalar scales; wide
// enough to absorb the rounding of an exact clamp or rescale.
constexpr double kNormSlack = 1e-12;
// Eigenvalue slack is scaled by c: reconstruction after an eigen-clamp
// perturbs eigenvalues at machine precision relative to the largest one.
constexpr double kEigSlack = 1e-13;
}  // namespace

GaussianParams::GaussianParams(VectorXd mean, MatrixXd covariance)
    : mean_(std::move(mean)), cov_(std::move(covariance)) {
  const int m = static_cast<int>(mean_.size());
  if (cov_.rows() != m || cov_.cols() != m)
    throw std::invalid_argument("GaussianParams: covariance shape does not match mean");
  const double scale = cov_.cwiseAbs().maxCoeff();
  if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-8 * std::max(scale, 1.0))
    throw std::invalid_argument("GaussianParams: covariance is not symmetric");
  cov_ = ((cov_ + cov_.transpose()) * 0.5).eval();
  Eigen::LLT<MatrixXd> llt(cov_);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("GaussianParams: covariance is not positive definite");
  chol_ = llt.matrixL();
  log_det_ = 2.0 * chol_.diagonal().array().log().sum();
}

Family family_of(const ComponentParams& p) {
  if (std::holds_alternative<GaussianParams>(p)) return Family::gaussian;
  if (std::holds_alternative<LaplaceParams>(p)) return Family::laplace;
  return Family::regression;
}

int obs_cols(const ComponentParams& p) {
  if (const auto* g = std::get_if<GaussianParams>(&p)) return g->dim();
  if (std::holds_alternative<LaplaceParams>(p)) return 1;
  return static_cast<int>(std::get<RegressionParams>(p).coefficients.size()) + 1;
}

int param_dim(Family family, int data_cols) {
  switch (family) {
    case Family::gaussian:
      return data_cols + data_cols * (data_cols + 1) / 2;
    case Family::laplace:
      return 2;
    case Family::regression:
      return data_cols;  // p coefficients + noise sd, with y occupying one column
  }
  throw std::logic_error("unknown family");
}

double log_density(const ComponentParams& p, const Eigen::Ref<const VectorXd>& x) {
  if (x.size() != obs_cols(p))
    throw std::invalid_argument("log_density: observation dimension mismatch");

  if (const auto* g = std::get_if<GaussianParams>(&p)) {
    const VectorXd centered = x - g->mean();
    const VectorXd y = g->chol_lower().triangularView<Eigen::Lower>().solve(centered);
    return -0.5 * (g->dim() * kLog2Pi + g->log_det() + y.squaredNorm());
  }
  if (const auto* l = std::get_if<LaplaceParams>(&p)) {
    return std::log(l->rate / 2.0) - l->rate * std::abs(x[0] - l->location);
  }
  const auto& r = std::get<RegressionParams>(p);
  const int pdim = static_cast<int>(r.coefficients.size());
  const double resid = x[pdim] - r.coefficients.dot(x.head(pdim));
  const double s2 = r.noise_sd * r.noise_sd;
  return -0.5 * (kLog2Pi + std::log(s2) + resid * resid / s2);
}

VectorXd log_density_batch(const ComponentParams& p, const DataSet& data) {
  if (data.cols() != obs_cols(p))
    throw std::invalid_argument("log_density_batch: data column count mismatch");

  if (const auto* g = std::get_if<GaussianParams>(&p)) {
    const MatrixXd centered = data.rowwise() - g->mean().transpose();
    const MatrixXd y =
        g->chol_lower().triangularView<Eigen::Lower>().solve(centered.transpose());
    const double base = -0.5 * (g->dim() * kLog2Pi + g->log_det());
    return (-0.5 * y.colwise().squaredNorm().array() + base).transpose();
  }
  if (const auto* l = std::get_if<LaplaceParams>(&p)) {
    const double base = std::log(l->rate / 2.0);
    return base - l->rate * (data.col(0).array() - l->location).abs();
  }
  const auto& r = std::get<RegressionParams>(p);
  const int pdim = static_cast<int>(r.coefficients.size());
  const VectorXd resid = data.col(pdim) - data.leftCols(pdim) * r.coefficients;
  const double s2 = r.noise_sd * r.noise_sd;
  const double base = -0.5 * (kLog2Pi + std::log(s2));
  return base - 0.5 / s2 * resid.array().square();
}

namespace {

bool scale_ok(double v, const ParamSpace& space) {
  return v >= space.scale_lo() * (1.0 - kNormSlack) && v <= space.scale_hi() * (1.0 + kNormSlack);
}

bool norm_ok(double v, double b) { return v <= b * (1.0 + kNormSlack); }

}  // namespace

bool is_feasible(const ComponentParams& p, const ParamSpace& space) {
  if (const auto* g = std::get_if<GaussianParams>(&p)) {
    if (!norm_ok(g->mean().norm(), space.b)) return false;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(g->covariance(), Eigen::EigenvaluesOnly);
    const double slack = kEigSlack * space.scale_hi();
    return es.eigenvalues().minCoeff() >= space.scale_lo() - slack &&
           es.eigenvalues().maxCoeff() <= space.scale_hi() + slack;
  }
  if (const auto* l = std::get_if<LaplaceParams>(&p)) {
    return norm_ok(std::abs(l->location), space.b) && scale_ok(l->rate, space);
  }
  const auto& r = std::get<RegressionParams>(p);
  return norm_ok(r.coefficients.norm(), space.b) && scale_ok(r.noise_sd, space);
}

namespace {

double clamp_scale(double v, const ParamSpace& space) {
  if (!(v > 0.0) || !std::isfinite(v)) return space.scale_lo();
  return std::min(std::max(v, space.scale_lo()), space.scale_hi());
}

struct ProjectedGaussian {
  GaussianParams params;
  bool clamped;
};

// Projection on raw Gaussian moments; also used by the M-step before the
// params object (which insists on SPD) is constructed. When no bound is hit
// the covariance is kept as given instead of being reconstructed from its
// eigendecomposition, so feasible estimates pass through untouched.
ProjectedGaussian project_gaussian_raw(VectorXd mean, MatrixXd cov, const ParamSpace& space) {
  bool active = false;
  const double norm = mean.norm();
  if (norm > space.b) {
    mean *= space.b / norm;
    active = true;
  }
  cov = ((cov + cov.transpose()) * 0.5).eval();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov);
  VectorXd ev = es.eigenvalues();
  bool any_clamp = false;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const double cl = clamp_scale(ev[i], space);
    if (cl != ev[i]) any_clamp = true;
    ev[i] = cl;
  }
  if (any_clamp) {
    MatrixXd fixed = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    fixed = ((fixed + fixed.transpose()) * 0.5).eval();
    return {GaussianParams(std::move(mean), std::move(fixed)), true};
  }
  return {GaussianParams(std::move(mean), std::move(cov)), active};
}

}  // namespace

ComponentParams project(const ComponentParams& p, const ParamSpace& space) {
  if (is_feasible(p, space)) return p;

  if (const auto* g = std::get_if<GaussianParams>(&p)) {
    return project_gaussian_raw(g->mean(), g->covariance(), space).params;
  }
  if (const auto* l = std::get_if<LaplaceParams>(&p)) {
    LaplaceParams out;
    out.location = std::min(std::max(l->location, -space.b), space.b);
    out.rate = clamp_scale(l->rate, space);
    return out;
  }
  const auto& r = std::get<RegressionParams>(p);
  RegressionParams out;
  out.coefficients = r.coefficients;
  const double norm = out.coefficients.norm();
  if (norm > space.b) out.coefficients *= space.b / norm;
  out.noise_sd = clamp_scale(r.noise_sd, space);
  return out;
}

double weighted_median(const VectorXd& values, const VectorXd& weights) {
  const Eigen::Index n = values.size();
  if (n == 0) throw std::invalid_argument("weighted_median: empty input");
  if (weights.size() != n) throw std::invalid_argument("weighted_median: size mismatch");
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&values](int a, int b) { return values[a] < values[b]; });
  const double total = weights.sum();
  double cum = 0.0;
  for (int idx : order) {
    cum += weights[idx];
    if (cum >= 0.5 * total) return values[idx];
  }
  return values[order.back()];
}

namespace {

MStepResult mstep_gaussian(const DataSet& data, const VectorXd& w, const ParamSpace& space) {
  const Eigen::Index n = data.rows();
  const int m = static_cast<int>(data.cols());
  const double total = w.sum();
  MStepResult res{ComponentParams{LaplaceParams{}}, true, true};
  if (!(total > 0.0) || !std::isfinite(total)) {
    res.params = project_gaussian_raw(VectorXd::Zero(m), MatrixXd::Identity(m, m), space).params;
    return res;
  }
  const VectorXd mean = data.transpose() * w / total;
  const MatrixXd centered = data.rowwise() - mean.transpose();
  const MatrixXd cov =
      (centered.array().colwise() * w.array()).matrix().transpose() * centered / total;

  int support = 0;
  const double thresh = 1e-12 * total;
  for (Eigen::Index i = 0; i < n; ++i)
    if (w[i] > thresh) ++support;

  auto proj = project_gaussian_raw(mean, cov, space);
  res.params = std::move(proj.params);
  res.degenerate = support < m + 1;
  res.projection_active = proj.clamped;
  return res;
}

MStepResult mstep_laplace_impl(const DataSet& data, const VectorXd& w, const ParamSpace& space,
                               const std::vector<int>& order) {
  const double total = w.sum();
  MStepResult res{ComponentParams{LaplaceParams{}}, true, true};
  if (!(total > 0.0) || !std::isfinite(total)) {
    res.params = project(ComponentParams{LaplaceParams{0.0, 1.0}}, space);
    return res;
  }
  double cum = 0.0;
  double mu = data(order.back(), 0);
  for (int idx : order) {
    cum += w[idx];
    if (cum >= 0.5 * total) {
      mu = data(idx, 0);
      break;
    }
  }
  const double mad = (w.array() * (data.col(0).array() - mu).abs()).sum() / total;
  LaplaceParams out;
  out.location = std::min(std::max(mu, -space.b), space.b);
  // Zero MAD means a point mass; the rate lands on the ceiling of the space.
  const double raw_rate = mad > 0.0 ? 1.0 / mad : space.scale_hi();
  out.rate = clamp_scale(raw_rate, space);
  res.params = ComponentParams{out};
  res.degenerate = !(mad > 0.0);
  res.projection_active = out.location != mu || out.rate != raw_rate || res.degenerate;
  return res;
}

MStepResult mstep_regression(const DataSet& data, const VectorXd& w, const ParamSpace& space) {
  const int p = static_cast<int>(data.cols()) - 1;
  if (p < 1) throw std::invalid_argument("regression M-step: need at least one covariate column");
  const double total = w.sum();
  MStepResult res{ComponentParams{LaplaceParams{}}, true, true};
  if (!(total > 0.0) || !std::isfinite(total)) {
    RegressionParams out;
    out.coefficients = VectorXd::Zero(p);
    out.noise_sd = 1.0;
    res.params = project(ComponentParams{out}, space);
    return res;
  }
  const VectorXd sw = w.array().sqrt();
  const MatrixXd design = data.leftCols(p).array().colwise() * sw.array();
  const VectorXd target = data.col(p).array() * sw.array();
  Eigen::ColPivHouseholderQR<MatrixXd> qr(design);
  const bool rank_deficient = qr.rank() < p;
  VectorXd beta = qr.solve(target);
  if (!beta.allFinite()) beta = VectorXd::Zero(p);

  const VectorXd resid = data.col(p) - data.leftCols(p) * beta;
  const double ms = (w.array() * resid.array().square()).sum() / total;
  RegressionParams out;
  out.coefficients = std::move(beta);
  bool active = false;
  const double norm = out.coefficients.norm();
  if (norm > space.b) {
    out.coefficients *= space.b / norm;
    active = true;
  }
  const double raw_sd = ms > 0.0 ? std::sqrt(ms) : 0.0;
  out.noise_sd = clamp_scale(raw_sd, space);
  if (out.noise_sd != raw_sd) active = true;
  res.params = ComponentParams{out};
  res.degenerate = rank_deficient;
  res.projection_active = active;
  return res;
}

}  // namespace

MStepResult weighted_mstep(Family family, const DataSet& data, const VectorXd& weights,
                           const ParamSpace& space) {
  if (data.rows() == 0) throw std::invalid_argument("weighted_mstep: empty data");
  if (weights.size() != data.rows())
    throw std::invalid_argument("weighted_mstep: weight count does not match data");
  if ((weights.array() < 0.0).any())
    throw std::invalid_argument("weighted_mstep: negative weight");

  switch (family) {
    case Family::gaussian:
      return mstep_gaussian(data, weights, space);
    case Family::laplace: {
      std::vector<int> order(static_cast<std::size_t>(data.rows()));
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(),
                [&data](int a, int b) { return data(a, 0) < data(b, 0); });
      return mstep_laplace_impl(data, weights, space, order);
    }
    case Family::regression:
      return mstep_regression(data, weights, space);
  }
  throw std::logic_error("unknown family");
}

MStepResult weighted_mstep_laplace_sorted(const DataSet& data, const VectorXd& weights,
                                          const ParamSpace& space,
                                          const std::vector<int>& ascending_order) {
  if (static_cast<Eigen::Index>(ascending_order.size()) != data.rows())
    throw std::invalid_argument("weighted_mstep_laplace_sorted: order size mismatch");
  return mstep_laplace_impl(data, weights, space, ascending_order);
}

VectorXd sample(const ComponentParams& p, Rng& rng) {
  if (const auto* g = std::get_if<GaussianParams>(&p)) {
    VectorXd z(g->dim());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
    return g->mean() + g->chol_lower() * z;
  }
  if (const auto* l = std::get_if<LaplaceParams>(&p)) {
    const double u = rng.uniform();
    VectorXd x(1);
    x[0] = u < 0.5 ? l->location + std::log(2.0 * u) / l->rate
                   : l->location - std::log(2.0 * (1.0 - u)) / l->rate;
    return x;
  }
  throw std::invalid_argument("sample: regression components need a covariate (use sample_given_covariate)");
}

VectorXd sample_given_covariate(const RegressionParams& p, const Eigen::Ref<const VectorXd>& u,
                                Rng& rng) {
  const int pd = static_cast<int>(p.coefficients.size());
  if (u.size() != pd)
    throw std::invalid_argument("sample_given_covariate: covariate dimension mismatch");
  VectorXd row(pd + 1);
  row.head(pd) = u;
  row[pd] = p.coefficients.dot(u) + p.noise_sd * rng.normal();
  return row;
}

}  // namespace mixsel
