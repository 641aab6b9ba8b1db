#ifndef MIXSEL_FITTER_HPP
#define MIXSEL_FITTER_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mixsel/mixture.hpp"
#include "mixsel/types.hpp"

namespace mixsel {

enum class InitStrategy { random_responsibility, greedy_seed };

std::string init_strategy_name(InitStrategy s);
InitStrategy init_strategy_from_name(const std::string& s);

struct FitConfig {
  int max_iters = 500;
  double rel_tol = 1e-8;  // on relative change of empirical risk
  int restarts = 10;
  double weight_floor = 1e-8;
  InitStrategy init_strategy = InitStrategy::random_responsibility;
  std::uint64_t base_seed = 0;

  void validate(int k) const;
};

// Counters aggregated across restarts; the trace belongs to the winner.
struct FitDiagnostics {
  // Risk increases beyond 1e-9 in iterations where no projection clamped any
  // component. EM guarantees there are none; this stays 0 unless the
  // implementation is wrong.
  int monotonicity_violations = 0;
  // Risk increases beyond 1e-9 with a projection active; possible by design
  // and logged rather than hidden.
  int projection_flagged = 0;
  int reseeds = 0;
  int floor_activations = 0;
  int failed_restarts = 0;
  std::vector<double> risk_trace;  // winning restart, one entry per iteration
};

struct FitResult {
  MixtureParams params;
  double risk;  // = empirical_risk(params, data), = min(restart_risks)
  int iterations;
  bool converged;
  std::vector<double> restart_risks;
  FitDiagnostics diagnostics;
};

// Best of `cfg.restarts` independently seeded EM runs plus one run per entry
// of `warm_starts`. Deterministic given (data, cfg, warm_starts); ties in the
// final risk resolve to the lower restart index.
FitResult fit(const DataSet& data, Family family, int k, const ParamSpace& space,
              const FitConfig& cfg, const std::vector<MixtureParams>& warm_starts = {});

// One initial mixture. random-responsibility: uniform responsibility matrix,
// one M-step. greedy-seed: farthest-point seeds, hard assignment, one M-step;
// retries a new random start (at most 20) if seed points collapse.
MixtureParams init(const DataSet& data, Family family, int k, const ParamSpace& space,
                   InitStrategy strategy, double weight_floor, Rng& rng);

// One EM iteration; returns the updated mixture and its empirical risk.
// Degenerate components are re-seeded at the worst-fit data point.
std::pair<MixtureParams, double> em_step(const MixtureParams& psi, const DataSet& data,
                                         const ParamSpace& space, const FitConfig& cfg);

}  // namespace mixsel

#endif
