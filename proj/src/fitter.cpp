#include "mixsel/fitter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mixsel {

std::string init_strategy_name(InitStrategy s) {
  return s == InitStrategy::random_responsibility ? "random-responsibility" : "greedy-seed";
}

InitStrategy init_strategy_from_name(const std::string& s) {
  if (s == "random-responsibility") return InitStrategy::random_responsibility;
  if (s == "greedy-seed") return InitStrategy::greedy_seed;
  throw std::invalid_argument("unknown init strategy: " + s);
}

void FitConfig::validate(int k) const {
  if (max_iters < 1) throw std::invalid_argument("FitConfig: max_iters must be >= 1");
  if (!(rel_tol > 0.0)) throw std::invalid_argument("FitConfig: rel_tol must be > 0");
  if (restarts < 1) throw std::invalid_argument("FitConfig: restarts must be >= 1");
  if (weight_floor < 0.0 || weight_floor >= 1.0 / static_cast<double>(k))
    throw std::invalid_argument("FitConfig: weight_floor must lie in [0, 1/k)");
}

namespace {

constexpr double kMonoTol = 1e-9;

int min_points_per_component(Family family, int data_cols) {
  return family == Family::gaussian ? data_cols + 1 : 1;
}

struct EmContext {
  const DataSet& data;
  Family family;
  ParamSpace space;
  double weight_floor;
  std::vector<int> laplace_order;  // ascending by value, laplace family only
};

EmContext make_context(const DataSet& data, Family family, const ParamSpace& space,
                       double weight_floor) {
  EmContext ctx{data, family, space, weight_floor, {}};
  if (family == Family::laplace) {
    ctx.laplace_order.resize(static_cast<std::size_t>(data.rows()));
    std::iota(ctx.laplace_order.begin(), ctx.laplace_order.end(), 0);
    std::sort(ctx.laplace_order.begin(), ctx.laplace_order.end(),
              [&data](int a, int b) { return data(a, 0) < data(b, 0); });
  }
  return ctx;
}

MStepResult component_mstep(const EmContext& ctx, const VectorXd& weights) {
  if (ctx.family == Family::laplace)
    return weighted_mstep_laplace_sorted(ctx.data, weights, ctx.space, ctx.laplace_order);
  return weighted_mstep(ctx.family, ctx.data, weights, ctx.space);
}

ComponentParams reseed_params(Family family, const DataSet& data, Eigen::Index row,
                              const ParamSpace& space) {
  switch (family) {
    case Family::gaussian: {
      const int m = static_cast<int>(data.cols());
      GaussianParams g(data.row(row).transpose(), MatrixXd::Identity(m, m));
      return project(ComponentParams{std::move(g)}, space);
    }
    case Family::laplace: {
      LaplaceParams l{data(row, 0), 1.0};
      return project(ComponentParams{l}, space);
    }
    case Family::regression: {
      const int p = static_cast<int>(data.cols()) - 1;
      RegressionParams r;
      const VectorXd u = data.row(row).head(p).transpose();
      const double c = u.squaredNorm();
      r.coefficients = c > 0.0 ? VectorXd((data(row, p) / c) * u) : VectorXd(VectorXd::Zero(p));
      r.noise_sd = 1.0;
      return project(ComponentParams{std::move(r)}, space);
    }
  }
  throw std::logic_error("unknown family");
}

struct StepOutcome {
  double risk_before = 0.0;  // empirical risk of the input mixture
  bool projection_active = false;
  bool floored = false;
  int reseeds = 0;
};

// One E+M sweep. The returned outcome carries the risk of the *input* psi
// (a free by-product of the E-step), which the fit loop uses as its trace.
MixtureParams em_step_impl(const MixtureParams& psi, const EmContext& ctx, StepOutcome& out) {
  const Eigen::Index n = ctx.data.rows();
  const int k = psi.k();

  MatrixXd L = weighted_log_densities(psi, ctx.data);
  const VectorXd M = L.rowwise().maxCoeff();
  MatrixXd P = (L.colwise() - M).array().exp();
  const VectorXd S = P.rowwise().sum();
  const VectorXd lse = M.array() + S.array().log();
  out.risk_before = -lse.sum() / static_cast<double>(n);
  P.array().colwise() /= S.array();

  VectorXd w = P.colwise().sum().transpose() / static_cast<double>(n);

  std::vector<ComponentParams> comps;
  comps.reserve(static_cast<std::size_t>(k));
  std::vector<int> degenerate;
  for (int z = 0; z < k; ++z) {
    MStepResult r = component_mstep(ctx, P.col(z));
    if (r.projection_active) out.projection_active = true;
    if (r.degenerate) degenerate.push_back(z);
    comps.push_back(std::move(r.params));
  }

  if (!degenerate.empty()) {
    // Worst-fit rows under the current mixture, one per degenerate component.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(),
              [&lse](Eigen::Index a, Eigen::Index b) { return lse[a] < lse[b]; });
    for (std::size_t j = 0; j < degenerate.size(); ++j) {
      const int z = degenerate[j];
      const Eigen::Index row = order[j % order.size()];
      comps[static_cast<std::size_t>(z)] = reseed_params(ctx.family, ctx.data, row, ctx.space);
      w[z] = 1.0 / static_cast<double>(k);
      ++out.reseeds;
    }
    w /= w.sum();
  }

  if (ctx.weight_floor > 0.0 && (w.array() < ctx.weight_floor).any()) {
    out.floored = true;
    w = w.array().max(ctx.weight_floor);
    w /= w.sum();
  }

  return MixtureParams(std::move(w), std::move(comps), ctx.space);
}

struct RestartRun {
  MixtureParams params;
  double risk;  // exact empirical risk of params
  int iterations = 0;
  bool converged = false;
  bool final_degenerate = false;
  std::vector<double> trace;
  int monotonicity_violations = 0;
  int projection_flagged = 0;
  int reseeds = 0;
  int floor_activations = 0;
};

RestartRun run_em(MixtureParams start, const EmContext& ctx, const FitConfig& cfg) {
  RestartRun run{std::move(start), 0.0};
  double risk_prev = std::numeric_limits<double>::quiet_NaN();
  StepOutcome prev_out;
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    StepOutcome out;
    MixtureParams next = em_step_impl(run.params, ctx, out);
    run.trace.push_back(out.risk_before);
    if (iter > 1) {
      if (out.risk_before > risk_prev + kMonoTol) {
        // Attribute the increase to the step that produced this iterate.
        if (prev_out.projection_active || prev_out.reseeds > 0 || prev_out.floored)
          ++run.projection_flagged;
        else
          ++run.monotonicity_violations;
      }
      if (std::abs(out.risk_before - risk_prev) <=
          cfg.rel_tol * std::max(1.0, std::abs(risk_prev))) {
        run.converged = true;
        run.iterations = iter - 1;
        break;  // `next` is discarded; run.params already attains this risk
      }
    }
    run.reseeds += out.reseeds;
    if (out.floored) ++run.floor_activations;
    run.final_degenerate = out.reseeds > 0;
    risk_prev = out.risk_before;
    prev_out = out;
    run.params = std::move(next);
    run.iterations = iter;
  }
  run.risk = empirical_risk(run.params, ctx.data);
  return run;
}

}  // namespace

MixtureParams init(const DataSet& data, Family family, int k, const ParamSpace& space,
                   InitStrategy strategy, double weight_floor, Rng& rng) {
  const Eigen::Index n = data.rows();
  if (k < 1) throw std::invalid_argument("init: k must be >= 1");
  if (n < 1) throw std::invalid_argument("init: empty data");
  const EmContext ctx = make_context(data, family, space, weight_floor);

  auto finish = [&](const MatrixXd& resp) {
    VectorXd w = resp.colwise().sum().transpose() / static_cast<double>(n);
    if (weight_floor > 0.0) {
      w = w.array().max(weight_floor);
      w /= w.sum();
    }
    std::vector<ComponentParams> comps;
    comps.reserve(static_cast<std::size_t>(k));
    for (int z = 0; z < k; ++z) comps.push_back(component_mstep(ctx, resp.col(z)).params);
    return MixtureParams(std::move(w), std::move(comps), space);
  };

  if (strategy == InitStrategy::random_responsibility) {
    MatrixXd resp(n, k);
    for (Eigen::Index i = 0; i < n; ++i)
      for (int z = 0; z < k; ++z) resp(i, z) = rng.uniform();
    const VectorXd row_sums = resp.rowwise().sum();
    resp.array().colwise() /= row_sums.array();
    return finish(resp);
  }

  for (int attempt = 0; attempt < 20; ++attempt) {
    std::vector<Eigen::Index> seeds{static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(n)))};
    VectorXd dist = (ctx.data.rowwise() - ctx.data.row(seeds[0])).rowwise().squaredNorm();
    bool collapsed = false;
    for (int j = 1; j < k; ++j) {
      Eigen::Index best = 0;
      for (Eigen::Index i = 1; i < n; ++i)
        if (dist[i] > dist[best]) best = i;
      if (!(dist[best] > 0.0)) {
        collapsed = true;
        break;
      }
      seeds.push_back(best);
      dist = dist.cwiseMin(
          (ctx.data.rowwise() - ctx.data.row(best)).rowwise().squaredNorm().eval());
    }
    if (collapsed) continue;

    MatrixXd resp = MatrixXd::Zero(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
      int nearest = 0;
      double best = (ctx.data.row(i) - ctx.data.row(seeds[0])).squaredNorm();
      for (int j = 1; j < k; ++j) {
        const double d = (ctx.data.row(i) - ctx.data.row(seeds[static_cast<std::size_t>(j)])).squaredNorm();
        if (d < best) {
          best = d;
          nearest = j;
        }
      }
      resp(i, nearest) = 1.0;
    }
    return finish(resp);
  }
  throw std::runtime_error("init: greedy-seed failed to find " + std::to_string(k) +
                           " distinct seed points in 20 attempts");
}

std::pair<MixtureParams, double> em_step(const MixtureParams& psi, const DataSet& data,
                                         const ParamSpace& space, const FitConfig& cfg) {
  const EmContext ctx = make_context(data, psi.family(), space, cfg.weight_floor);
  StepOutcome out;
  MixtureParams next = em_step_impl(psi, ctx, out);
  const double risk = empirical_risk(next, data);
  return {std::move(next), risk};
}

FitResult fit(const DataSet& data, Family family, int k, const ParamSpace& space,
              const FitConfig& cfg, const std::vector<MixtureParams>& warm_starts) {
  if (k < 1) throw std::invalid_argument("fit: k must be >= 1");
  cfg.validate(k);
  const Eigen::Index n = data.rows();
  const Eigen::Index needed =
      static_cast<Eigen::Index>(k) * min_points_per_component(family, static_cast<int>(data.cols()));
  if (n < needed)
    throw std::invalid_argument("fit: need at least " + std::to_string(needed) +
                                " observations for k=" + std::to_string(k));
  for (const auto& ws : warm_starts) {
    if (ws.family() != family || ws.k() != k || ws.data_cols() != data.cols())
      throw std::invalid_argument("fit: warm start does not match family/k/data layout");
  }

  const EmContext ctx = make_context(data, family, space, cfg.weight_floor);

  std::vector<RestartRun> runs;
  runs.reserve(static_cast<std::size_t>(cfg.restarts) + warm_starts.size());
  int failed = 0;
  for (int r = 0; r < cfg.restarts; ++r) {
    Rng rng(split_seed(cfg.base_seed, static_cast<std::uint64_t>(r)));
    try {
      MixtureParams start = init(data, family, k, space, cfg.init_strategy, cfg.weight_floor, rng);
      runs.push_back(run_em(std::move(start), ctx, cfg));
    } catch (const std::runtime_error&) {
      ++failed;
    }
  }
  for (const auto& ws : warm_starts) runs.push_back(run_em(ws, ctx, cfg));

  if (runs.empty())
    throw std::runtime_error("fit: all " + std::to_string(cfg.restarts) + " restarts failed");
  if (std::all_of(runs.begin(), runs.end(),
                  [](const RestartRun& r) { return r.final_degenerate; }))
    throw std::runtime_error("fit: every restart ended on a degenerate component signal");

  std::size_t best = 0;
  for (std::size_t i = 1; i < runs.size(); ++i)
    if (runs[i].risk < runs[best].risk) best = i;

  FitResult res{runs[best].params, runs[best].risk, runs[best].iterations,
                runs[best].converged, {}, {}};
  res.restart_risks.reserve(runs.size());
  for (const auto& r : runs) res.restart_risks.push_back(r.risk);
  for (const auto& r : runs) {
    res.diagnostics.monotonicity_violations += r.monotonicity_violations;
    res.diagnostics.projection_flagged += r.projection_flagged;
    res.diagnostics.reseeds += r.reseeds;
    res.diagnostics.floor_activations += r.floor_activations;
  }
  res.diagnostics.risk_trace = runs[best].trace;
  res.diagnostics.failed_restarts = failed;
  return res;
}

}  // namespace mixsel
