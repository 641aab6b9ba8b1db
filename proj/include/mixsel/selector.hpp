#ifndef MIXSEL_SELECTOR_HPP
#define MIXSEL_SELECTOR_HPP

#include <optional>
#include <string>
#include <vector>

#include "mixsel/criteria.hpp"
#include "mixsel/fitter.hpp"
#include "mixsel/mixture.hpp"

namespace mixsel {

enum class SelectMode { joint, conditional };

std::string select_mode_name(SelectMode m);

// Ties in the criterion value within this absolute tolerance resolve to the
// smallest k (the min-argmin convention).
inline constexpr double kTieTol = 1e-12;

// Fits at every order 1..k_bar on one dataset; the k-solution, with its
// heaviest component duplicated, seeds one extra restart at k+1 so the risk
// path inherits the nesting of the model classes.
struct FitPath {
  std::vector<std::optional<FitResult>> fits;  // index k-1, nullopt on failure
  std::vector<std::string> errors;             // parallel to fits, "" on success
};

FitPath fit_path(const DataSet& data, Family family, int k_bar, const ParamSpace& space,
                 const FitConfig& cfg);

struct OrderEntry {
  int k = 0;
  bool fitted = false;
  double risk = 0.0;     // NaN when !fitted
  double penalty = 0.0;  // NaN when !fitted
  double value = 0.0;    // risk + penalty, NaN when !fitted
  int iterations = 0;
  bool converged = false;
  int reseeds = 0;
  std::string warning;  // fit failure message when excluded
};

struct SelectionReport {
  int schema_version = 1;
  Family family = Family::gaussian;
  SelectMode mode = SelectMode::joint;
  long n = 0;
  int k_bar = 1;
  CriterionSpec criterion;
  FitConfig fit_cfg;
  ParamSpace space;
  std::uint64_t seed = 0;  // echo of fit_cfg.base_seed
  std::vector<OrderEntry> path;
  int selected_k = 0;
  std::optional<MixtureParams> selected_params;
  double wall_time_seconds = 0.0;  // excluded from determinism comparisons
};

// Criterion evaluation over an existing path; shared by select() and the
// simulation harness, which reuses one path for several criteria.
SelectionReport select_from_path(const FitPath& path, const DataSet& data, Family family,
                                 int k_bar, const CriterionSpec& spec, const FitConfig& cfg,
                                 const ParamSpace& space, SelectMode mode);

// The order estimator: fit 1..k_bar, add penalties, smallest minimizer.
SelectionReport select(const DataSet& data, Family family, int k_bar, const CriterionSpec& spec,
                       const FitConfig& cfg, const ParamSpace& space);

// Conditional-likelihood variant for mixtures of regressions; the component
// log-density is already log rho(y|u; theta), so the pipeline is identical.
SelectionReport select_conditional(const DataSet& data, int k_bar, const CriterionSpec& spec,
                                   const FitConfig& cfg, const ParamSpace& space);

// (k, risk, penalty, value) rows of the fitted path as RFC-4180 CSV.
std::string criterion_path_csv(const SelectionReport& report);

}  // namespace mixsel

#endif
