#include "mixsel/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

#include "mixsel/format.hpp"

namespace mixsel {

void SimulationConfig::validate() const {
  if (n_grid.empty()) throw std::invalid_argument("SimulationConfig: empty n_grid");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 1) throw std::invalid_argument("SimulationConfig: n must be >= 1");
    if (i > 0 && n_grid[i] <= n_grid[i - 1])
      throw std::invalid_argument("SimulationConfig: n_grid must be strictly increasing");
  }
  if (criteria.empty()) throw std::invalid_argument("SimulationConfig: no criteria");
  if (replicates < 1) throw std::invalid_argument("SimulationConfig: replicates must be >= 1");
  if (k_bar < 1) throw std::invalid_argument("SimulationConfig: k_bar must be >= 1");
  if (truth.k() > k_bar)
    throw std::invalid_argument("SimulationConfig: true order exceeds k_bar");
  const bool is_reg = truth.family() == Family::regression;
  if (is_reg != covariates.has_value())
    throw std::invalid_argument(
        "SimulationConfig: covariate sampler required exactly for regression truths");
  if (is_reg && covariates->dim() != truth.data_cols() - 1)
    throw std::invalid_argument("SimulationConfig: covariate sampler dimension mismatch");
  if (record_hellinger && (is_reg || truth.data_cols() != 1))
    throw std::invalid_argument("SimulationConfig: Hellinger recording needs a 1-D family");
  fit_cfg.validate(k_bar);
}

std::uint64_t hash_data(const DataSet& data) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a offset basis
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
      const double v = data(i, j);
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &v, sizeof(double));
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
      }
    }
  }
  return h;
}

namespace {

double mixture_pdf(const MixtureParams& psi, double x) {
  VectorXd obs(1);
  obs[0] = x;
  return std::exp(log_mixture_density(psi, obs));
}

void collect_support(const MixtureParams& psi, double& mean_lo, double& mean_hi,
                     double& spread_hi) {
  for (const auto& comp : psi.components()) {
    double mean = 0.0;
    double spread = 1.0;
    if (const auto* g = std::get_if<GaussianParams>(&comp)) {
      mean = g->mean()[0];
      spread = std::sqrt(g->covariance()(0, 0));
    } else if (const auto* l = std::get_if<LaplaceParams>(&comp)) {
      mean = l->location;
      spread = 1.0 / l->rate;
    }
    mean_lo = std::min(mean_lo, mean);
    mean_hi = std::max(mean_hi, mean);
    spread_hi = std::max(spread_hi, spread);
  }
}

template <typename F>
double adaptive_trapezoid(const F& h, double a, double b, double fa, double fb, double whole,
                          double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double fm = h(m);
  const double left = 0.5 * (fa + fm) * (m - a);
  const double right = 0.5 * (fm + fb) * (b - m);
  const double refined = left + right;
  if (depth <= 0 || std::abs(refined - whole) <= 3.0 * tol) return refined;
  return adaptive_trapezoid(h, a, m, fa, fm, left, 0.5 * tol, depth - 1) +
         adaptive_trapezoid(h, m, b, fm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double hellinger_1d(const MixtureParams& f, const MixtureParams& g, const QuadratureSpec& quad) {
  for (const MixtureParams* psi : {&f, &g}) {
    if (psi->family() == Family::regression || psi->data_cols() != 1)
      throw std::invalid_argument("hellinger_1d: both mixtures must be 1-D densities");
  }
  double mean_lo = std::numeric_limits<double>::infinity();
  double mean_hi = -std::numeric_limits<double>::infinity();
  double spread_hi = 0.0;
  collect_support(f, mean_lo, mean_hi, spread_hi);
  collect_support(g, mean_lo, mean_hi, spread_hi);
  const double lo = mean_lo - quad.spread_mult * spread_hi;
  const double hi = mean_hi + quad.spread_mult * spread_hi;

  const auto integrand = [&](double x) {
    const double d = std::sqrt(mixture_pdf(f, x)) - std::sqrt(mixture_pdf(g, x));
    return d * d;
  };

  // Pre-split so narrow components between panel edges cannot be missed, then
  // refine each panel adaptively.
  const int panels = 128;
  const double width = (hi - lo) / panels;
  double integral = 0.0;
  double prev_x = lo;
  double prev_f = integrand(lo);
  for (int i = 1; i <= panels; ++i) {
    const double x = i == panels ? hi : lo + i * width;
    const double fx = integrand(x);
    const double whole = 0.5 * (prev_f + fx) * (x - prev_x);
    integral += adaptive_trapezoid(integrand, prev_x, x, prev_f, fx, whole,
                                   quad.tol / panels, quad.max_depth);
    prev_x = x;
    prev_f = fx;
  }
  const double h2 = std::max(0.0, 0.5 * integral);
  return std::min(1.0, std::sqrt(h2));
}

SimulationResult run_consistency(const SimulationConfig& cfg) {
  cfg.validate();
  const Family family = cfg.truth.family();
  const bool is_reg = family == Family::regression;
  const int k0 = cfg.k0();
  const std::size_t nc = cfg.criteria.size();

  struct Cell {
    int completed = 0;
    int failures = 0;
    int correct = 0;
    int under = 0;
    int over = 0;
    long k_sum = 0;
  };
  std::vector<Cell> cells(nc * cfg.n_grid.size());

  SimulationResult out;
  out.table.k0 = k0;

  for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
    const long n = cfg.n_grid[ni];
    for (int r = 0; r < cfg.replicates; ++r) {
      const std::uint64_t data_seed =
          split_seed(cfg.base_seed, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(r));
      Rng rng(data_seed);
      const SampleResult sample =
          is_reg ? sample_mixture(cfg.truth, static_cast<int>(n), rng, *cfg.covariates)
                 : sample_mixture(cfg.truth, static_cast<int>(n), rng);
      const std::uint64_t dhash = hash_data(sample.data);

      FitConfig fit_cfg = cfg.fit_cfg;
      fit_cfg.base_seed = split_seed(data_seed, 1);

      bool replicate_failed = false;
      FitPath path;
      try {
        path = fit_path(sample.data, family, cfg.k_bar, cfg.truth.space(), fit_cfg);
        for (const auto& err : path.errors)
          if (!err.empty()) replicate_failed = true;
      } catch (const std::exception&) {
        replicate_failed = true;
      }

      for (std::size_t ci = 0; ci < nc; ++ci) {
        Cell& cell = cells[ci * cfg.n_grid.size() + ni];
        ReplicateRecord rec;
        rec.criterion = cfg.criteria[ci].name();
        rec.n = n;
        rec.replicate = r;
        rec.data_hash = dhash;
        rec.hellinger = std::numeric_limits<double>::quiet_NaN();

        bool failed = replicate_failed;
        if (!failed) {
          try {
            const SelectionReport report = select_from_path(
                path, sample.data, family, cfg.k_bar, cfg.criteria[ci], fit_cfg,
                cfg.truth.space(), is_reg ? SelectMode::conditional : SelectMode::joint);
            rec.selected_k = report.selected_k;
            if (cfg.record_hellinger && report.selected_params)
              rec.hellinger = hellinger_1d(*report.selected_params, cfg.truth);
          } catch (const std::exception&) {
            failed = true;
          }
        }
        rec.failed = failed;
        if (failed) {
          ++cell.failures;
        } else {
          ++cell.completed;
          cell.k_sum += rec.selected_k;
          if (rec.selected_k == k0)
            ++cell.correct;
          else if (rec.selected_k < k0)
            ++cell.under;
          else
            ++cell.over;
        }
        out.details.push_back(std::move(rec));
      }
    }
  }

  for (std::size_t ci = 0; ci < nc; ++ci) {
    for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
      const Cell& cell = cells[ci * cfg.n_grid.size() + ni];
      AccuracyRow row;
      row.criterion = cfg.criteria[ci].name();
      row.n = cfg.n_grid[ni];
      row.replicates = cell.completed;
      row.failures = cell.failures;
      row.correct = cell.correct;
      row.accuracy = cell.completed > 0
                         ? static_cast<double>(cell.correct) / static_cast<double>(cell.completed)
                         : 0.0;
      row.mean_selected_k = cell.completed > 0 ? static_cast<double>(cell.k_sum) /
                                                     static_cast<double>(cell.completed)
                                               : 0.0;
      row.under = cell.under;
      row.over = cell.over;
      out.table.rows.push_back(std::move(row));
    }
  }
  return out;
}

namespace {

FitConfig scenario_fit_cfg(Family family) {
  FitConfig cfg;
  if (family == Family::regression) {
    cfg.max_iters = 500;
    cfg.restarts = 6;
    cfg.init_strategy = InitStrategy::random_responsibility;
  } else {
    cfg.max_iters = 300;
    cfg.restarts = 3;
    cfg.init_strategy = InitStrategy::greedy_seed;
  }
  return cfg;
}

std::vector<CriterionSpec> all_criteria() {
  return {CriterionSpec::aic(), CriterionSpec::bic(), CriterionSpec::nu_bic(3),
          CriterionSpec::eps_bic(0.02)};
}

MixtureParams gaussian_mixture_1d(const std::vector<double>& weights,
                                  const std::vector<double>& means,
                                  const std::vector<double>& sds) {
  ParamSpace space(Family::gaussian, 1e6, 1e6);
  VectorXd w(static_cast<Eigen::Index>(weights.size()));
  std::vector<ComponentParams> comps;
  for (std::size_t z = 0; z < weights.size(); ++z) {
    w[static_cast<Eigen::Index>(z)] = weights[z];
    VectorXd mu(1);
    mu[0] = means[z];
    MatrixXd cov(1, 1);
    cov(0, 0) = sds[z] * sds[z];
    comps.emplace_back(GaussianParams(mu, cov));
  }
  return MixtureParams(std::move(w), std::move(comps), space);
}

}  // namespace

std::vector<std::string> scenario_names() {
  return {"gaussian-2comp", "laplace-2comp", "regression-2line", "gaussian-1comp-null"};
}

SimulationConfig scenario(const std::string& name) {
  if (name == "gaussian-2comp") {
    SimulationConfig cfg{name, gaussian_mixture_1d({0.5, 0.5}, {0.0, 6.0}, {1.0, 1.0})};
    cfg.n_grid = {200, 500, 2000};
    cfg.criteria = all_criteria();
    cfg.replicates = 200;
    cfg.k_bar = 5;
    cfg.fit_cfg = scenario_fit_cfg(Family::gaussian);
    return cfg;
  }
  if (name == "laplace-2comp") {
    ParamSpace space(Family::laplace, 1e6, 1e6);
    VectorXd w(2);
    w << 0.5, 0.5;
    std::vector<ComponentParams> comps{LaplaceParams{0.0, 1.0}, LaplaceParams{6.0, 1.0}};
    SimulationConfig cfg{name, MixtureParams(std::move(w), std::move(comps), space)};
    cfg.n_grid = {200, 500, 2000};
    cfg.criteria = all_criteria();
    cfg.replicates = 200;
    cfg.k_bar = 5;
    cfg.fit_cfg = scenario_fit_cfg(Family::laplace);
    return cfg;
  }
  if (name == "regression-2line") {
    ParamSpace space(Family::regression, 1e6, 1e6);
    VectorXd w(2);
    w << 0.5, 0.5;
    RegressionParams up;
    up.coefficients = VectorXd(2);
    up.coefficients << 0.0, 2.0;
    up.noise_sd = 0.5;
    RegressionParams down;
    down.coefficients = VectorXd(2);
    down.coefficients << 0.0, -2.0;
    down.noise_sd = 0.5;
    std::vector<ComponentParams> comps{up, down};
    SimulationConfig cfg{name, MixtureParams(std::move(w), std::move(comps), space)};
    cfg.covariates = CovariateSampler{true, 1, -1.0, 1.0};
    cfg.n_grid = {1000};
    cfg.criteria = all_criteria();
    cfg.replicates = 200;
    cfg.k_bar = 4;
    cfg.fit_cfg = scenario_fit_cfg(Family::regression);
    return cfg;
  }
  if (name == "gaussian-1comp-null") {
    SimulationConfig cfg{name, gaussian_mixture_1d({1.0}, {0.0}, {1.0})};
    cfg.n_grid = {5000};
    cfg.criteria = all_criteria();
    cfg.replicates = 200;
    cfg.k_bar = 5;
    cfg.fit_cfg = scenario_fit_cfg(Family::gaussian);
    return cfg;
  }
  std::string known;
  for (const auto& s : scenario_names()) {
    if (!known.empty()) known += ", ";
    known += s;
  }
  throw std::invalid_argument("unknown scenario '" + name + "' (available: " + known + ")");
}

std::string accuracy_table_csv(const AccuracyTable& table) {
  std::string out =
      "criterion,n,replicates,failures,correct,accuracy,mean_selected_k,under,over\r\n";
  for (const auto& row : table.rows) {
    out += row.criterion;
    out += ',';
    out += std::to_string(row.n);
    out += ',';
    out += std::to_string(row.replicates);
    out += ',';
    out += std::to_string(row.failures);
    out += ',';
    out += std::to_string(row.correct);
    out += ',';
    out += format_double(row.accuracy);
    out += ',';
    out += format_double(row.mean_selected_k);
    out += ',';
    out += std::to_string(row.under);
    out += ',';
    out += std::to_string(row.over);
    out += "\r\n";
  }
  return out;
}

}  // namespace mixsel
