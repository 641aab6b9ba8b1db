#ifndef MIXSEL_SIMULATION_HPP
#define MIXSEL_SIMULATION_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mixsel/mixture.hpp"
#include "mixsel/selector.hpp"

namespace mixsel {

struct SimulationConfig {
  std::string name;  // scenario name, "" for ad-hoc configs
  MixtureParams truth;
  // Required exactly when truth is a regression mixture.
  std::optional<CovariateSampler> covariates;
  std::vector<long> n_grid;  // strictly increasing
  std::vector<CriterionSpec> criteria;
  int replicates = 200;
  int k_bar = 5;
  FitConfig fit_cfg;
  std::uint64_t base_seed = 0;
  // Compute fitted-vs-truth Hellinger per replicate (1-D families only).
  bool record_hellinger = false;

  int k0() const { return truth.k(); }
  void validate() const;
};

struct AccuracyRow {
  std::string criterion;
  long n = 0;
  int replicates = 0;  // completed replicates (the accuracy denominator)
  int failures = 0;    // excluded replicates, reported separately
  int correct = 0;
  double accuracy = 0.0;  // correct / replicates, exact
  double mean_selected_k = 0.0;
  int under = 0;  // selected k < k0
  int over = 0;   // selected k > k0
};

struct AccuracyTable {
  int k0 = 0;
  std::vector<AccuracyRow> rows;  // one per criterion x n, criteria outermost
};

struct ReplicateRecord {
  std::string criterion;
  long n = 0;
  int replicate = 0;
  std::uint64_t data_hash = 0;  // equal across criteria: the paired design
  bool failed = false;
  int selected_k = 0;
  double hellinger = 0.0;  // NaN unless record_hellinger
};

struct SimulationResult {
  AccuracyTable table;
  std::vector<ReplicateRecord> details;
};

// Monte Carlo trace of the consistency theorem: data for replicate r at size n
// is drawn with seed split(base_seed, n, r) and shared across all criteria;
// one fit path per replicate serves every criterion (fits are criterion-free).
SimulationResult run_consistency(const SimulationConfig& cfg);

// FNV-1a over the raw bytes of the sample, used to assert the paired design.
std::uint64_t hash_data(const DataSet& data);

struct QuadratureSpec {
  double tol = 1e-8;
  int max_depth = 40;
  double spread_mult = 12.0;  // integration reach in spread units
};

// Hellinger divergence {1/2 integral (sqrt f - sqrt g)^2}^{1/2} between 1-D
// mixture densities by adaptive trapezoid quadrature.
double hellinger_1d(const MixtureParams& f, const MixtureParams& g,
                    const QuadratureSpec& quad = {});

// Canned acceptance scenarios.
std::vector<std::string> scenario_names();
SimulationConfig scenario(const std::string& name);

std::string accuracy_table_csv(const AccuracyTable& table);

}  // namespace mixsel

#endif
