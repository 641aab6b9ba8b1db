#include "mixsel/selector.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mixsel/format.hpp"

namespace mixsel {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int min_points_per_component(Family family, int data_cols) {
  return family == Family::gaussian ? data_cols + 1 : 1;
}

// k-solution with its heaviest component split in two equal halves: a valid
// (k+1)-mixture attaining exactly the same risk surface neighborhood.
MixtureParams duplicate_heaviest(const MixtureParams& psi) {
  int heavy = 0;
  for (int z = 1; z < psi.k(); ++z)
    if (psi.weights()[z] > psi.weights()[heavy]) heavy = z;
  VectorXd w(psi.k() + 1);
  w.head(psi.k()) = psi.weights();
  w[heavy] *= 0.5;
  w[psi.k()] = w[heavy];
  std::vector<ComponentParams> comps = psi.components();
  comps.push_back(comps[static_cast<std::size_t>(heavy)]);
  return MixtureParams(std::move(w), std::move(comps), psi.space());
}
}  // namespace

std::string select_mode_name(SelectMode m) {
  return m == SelectMode::joint ? "joint" : "conditional";
}

FitPath fit_path(const DataSet& data, Family family, int k_bar, const ParamSpace& space,
                 const FitConfig& cfg) {
  if (k_bar < 1) throw std::invalid_argument("fit_path: k_bar must be >= 1");
  FitPath path;
  path.fits.resize(static_cast<std::size_t>(k_bar));
  path.errors.resize(static_cast<std::size_t>(k_bar));
  std::optional<MixtureParams> prev_best;
  for (int k = 1; k <= k_bar; ++k) {
    std::vector<MixtureParams> warm;
    if (prev_best) warm.push_back(duplicate_heaviest(*prev_best));
    try {
      FitResult res = fit(data, family, k, space, cfg, warm);
      prev_best = res.params;
      path.fits[static_cast<std::size_t>(k - 1)] = std::move(res);
    } catch (const std::runtime_error& e) {
      path.errors[static_cast<std::size_t>(k - 1)] = e.what();
    }
  }
  return path;
}

SelectionReport select_from_path(const FitPath& path, const DataSet& data, Family family,
                                 int k_bar, const CriterionSpec& spec, const FitConfig& cfg,
                                 const ParamSpace& space, SelectMode mode) {
  const int m = param_dim(family, static_cast<int>(data.cols()));
  spec.validate(k_bar, m);

  SelectionReport report;
  report.family = family;
  report.mode = mode;
  report.n = static_cast<long>(data.rows());
  report.k_bar = k_bar;
  report.criterion = spec;
  report.fit_cfg = cfg;
  report.space = space;
  report.seed = cfg.base_seed;

  const double n = static_cast<double>(data.rows());
  double best_value = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= k_bar; ++k) {
    OrderEntry entry;
    entry.k = k;
    const auto& fitted = path.fits[static_cast<std::size_t>(k - 1)];
    if (fitted) {
      entry.fitted = true;
      entry.risk = fitted->risk;
      entry.penalty = penalty(spec, k, m, n);
      entry.value = entry.risk + entry.penalty;
      entry.iterations = fitted->iterations;
      entry.converged = fitted->converged;
      entry.reseeds = fitted->diagnostics.reseeds;
      best_value = std::min(best_value, entry.value);
    } else {
      entry.risk = kNaN;
      entry.penalty = kNaN;
      entry.value = kNaN;
      entry.warning = path.errors[static_cast<std::size_t>(k - 1)];
    }
    report.path.push_back(std::move(entry));
  }
  if (!std::isfinite(best_value))
    throw std::runtime_error("select: no order could be fitted");

  for (const auto& entry : report.path) {
    if (entry.fitted && entry.value <= best_value + kTieTol) {
      report.selected_k = entry.k;
      break;
    }
  }
  report.selected_params = path.fits[static_cast<std::size_t>(report.selected_k - 1)]->params;
  return report;
}

SelectionReport select(const DataSet& data, Family family, int k_bar, const CriterionSpec& spec,
                       const FitConfig& cfg, const ParamSpace& space) {
  if (k_bar < 1) throw std::invalid_argument("select: k_bar must be >= 1");
  const Eigen::Index needed = static_cast<Eigen::Index>(k_bar) *
                              min_points_per_component(family, static_cast<int>(data.cols()));
  if (data.rows() < needed)
    throw std::invalid_argument("select: data too small to fit k_bar components");

  const auto t0 = std::chrono::steady_clock::now();
  FitPath path = fit_path(data, family, k_bar, space, cfg);
  SelectionReport report =
      select_from_path(path, data, family, k_bar, spec, cfg, space, SelectMode::joint);
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

SelectionReport select_conditional(const DataSet& data, int k_bar, const CriterionSpec& spec,
                                   const FitConfig& cfg, const ParamSpace& space) {
  if (data.cols() < 2)
    throw std::invalid_argument("select_conditional: need covariate and response columns");
  if (space.family != Family::regression)
    throw std::invalid_argument("select_conditional: space must be a regression space");

  const auto t0 = std::chrono::steady_clock::now();
  FitPath path = fit_path(data, Family::regression, k_bar, space, cfg);
  SelectionReport report = select_from_path(path, data, Family::regression, k_bar, spec, cfg,
                                            space, SelectMode::conditional);
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::string criterion_path_csv(const SelectionReport& report) {
  std::string out = "k,risk,penalty,value\r\n";
  for (const auto& entry : report.path) {
    if (!entry.fitted) continue;
    out += std::to_string(entry.k);
    out += ',';
    out += format_double(entry.risk);
    out += ',';
    out += format_double(entry.penalty);
    out += ',';
    out += format_double(entry.value);
    out += "\r\n";
  }
  return out;
}

}  // namespace mixsel
