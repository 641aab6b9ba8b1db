#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mixsel/csv.hpp"
#include "mixsel/format.hpp"
#include "mixsel/selector.hpp"
#include "mixsel/serialize.hpp"
#include "mixsel/simulation.hpp"

namespace {

using mixsel::CriterionSpec;
using mixsel::DataSet;
using mixsel::Family;
using mixsel::FitConfig;
using mixsel::ParamSpace;
using nlohmann::json;

// Usage and input problems exit 2; numerical failures (fit impossibility)
// surface as std::runtime_error and exit 1.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write file: " + path);
  out << content;
}

// Columns of a numeric CSV in family layout; regression inputs name the
// response column and get an intercept column unless suppressed.
DataSet load_dataset(const std::string& path, Family family, const std::string& response,
                     bool no_intercept) {
  const mixsel::CsvTable table = mixsel::parse_csv(read_file(path));
  if (table.rows.empty()) throw UsageError(path + ": no data rows");
  const std::size_t cols = table.header.size();

  auto cell = [&](std::size_t r, std::size_t c) {
    double v;
    try {
      v = mixsel::parse_double(table.rows[r][c]);
    } catch (const std::invalid_argument&) {
      throw UsageError(path + " line " + std::to_string(r + 2) + ", column '" +
                       table.header[c] + "': not a number: '" + table.rows[r][c] + "'");
    }
    if (!std::isfinite(v))
      throw UsageError(path + " line " + std::to_string(r + 2) + ", column '" +
                       table.header[c] + "': NaN/Inf rejected");
    return v;
  };

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  if (family == Family::regression) {
    if (response.empty()) throw UsageError("regression input needs --response <column>");
    std::size_t y_col = cols;
    for (std::size_t c = 0; c < cols; ++c)
      if (table.header[c] == response) y_col = c;
    if (y_col == cols) throw UsageError("response column '" + response + "' not in header");
    if (cols < 2 && !no_intercept)
      throw UsageError("regression input needs at least one covariate or an intercept");
    const std::size_t p_cov = cols - 1;
    const Eigen::Index p = static_cast<Eigen::Index>(p_cov) + (no_intercept ? 0 : 1);
    if (p < 1) throw UsageError("regression input has no covariates");
    DataSet data(n, p + 1);
    for (Eigen::Index r = 0; r < n; ++r) {
      Eigen::Index at = 0;
      if (!no_intercept) data(r, at++) = 1.0;
      for (std::size_t c = 0; c < cols; ++c) {
        if (c == y_col) continue;
        data(r, at++) = cell(static_cast<std::size_t>(r), c);
      }
      data(r, p) = cell(static_cast<std::size_t>(r), y_col);
    }
    return data;
  }

  if (!response.empty()) throw UsageError("--response only applies to the regression family");
  if (family == Family::laplace && cols != 1)
    throw UsageError("laplace input must have exactly one column, got " + std::to_string(cols));
  DataSet data(n, static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < n; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      data(r, static_cast<Eigen::Index>(c)) = cell(static_cast<std::size_t>(r), c);
  return data;
}

CriterionSpec make_criterion(const std::string& name, const std::optional<int>& nu,
                             const std::optional<double>& eps, const std::string& dim_conv) {
  CriterionSpec spec;
  if (name == "aic" || name == "bic") {
    if (nu) throw UsageError("--nu is only valid with --criterion nu-bic");
    if (eps) throw UsageError("--eps is only valid with --criterion eps-bic");
    spec = name == "aic" ? CriterionSpec::aic() : CriterionSpec::bic();
  } else if (name == "nu-bic") {
    if (!nu) throw UsageError("--criterion nu-bic requires --nu");
    if (eps) throw UsageError("--eps is only valid with --criterion eps-bic");
    if (*nu < 1) throw UsageError("--nu must be >= 1");
    spec = CriterionSpec::nu_bic(*nu);
  } else if (name == "eps-bic") {
    if (!eps) throw UsageError("--criterion eps-bic requires --eps");
    if (nu) throw UsageError("--nu is only valid with --criterion nu-bic");
    if (!(*eps > 0.0)) throw UsageError("--eps must be > 0");
    spec = CriterionSpec::eps_bic(*eps);
  } else {
    throw UsageError("unknown criterion '" + name + "' (aic, bic, nu-bic, eps-bic)");
  }
  spec.dim_convention = mixsel::dim_convention_from_name(dim_conv);
  return spec;
}

// "1..5" or "1,3,9"; every entry must be a positive integer.
std::vector<long> parse_int_list(const std::string& text, const std::string& flag) {
  std::vector<long> out;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    const auto dots = token.find("..");
    try {
      if (dots != std::string::npos) {
        const long lo = std::stol(token.substr(0, dots));
        const long hi = std::stol(token.substr(dots + 2));
        if (lo > hi) throw UsageError(flag + ": empty range " + token);
        for (long v = lo; v <= hi; ++v) out.push_back(v);
      } else {
        out.push_back(std::stol(token));
      }
    } catch (const std::logic_error&) {
      throw UsageError(flag + ": cannot parse '" + token + "'");
    }
  }
  if (out.empty()) throw UsageError(flag + ": empty list");
  for (long v : out)
    if (v < 1) throw UsageError(flag + ": entries must be >= 1");
  return out;
}

struct FitFlags {
  int max_iters = 500;
  double rel_tol = 1e-8;
  int restarts = 10;
  double weight_floor = 1e-8;
  std::string init = "random-responsibility";
  std::uint64_t seed = 0;

  CLI::Option* max_iters_opt = nullptr;
  CLI::Option* rel_tol_opt = nullptr;
  CLI::Option* restarts_opt = nullptr;
  CLI::Option* weight_floor_opt = nullptr;
  CLI::Option* init_opt = nullptr;

  void add_to(CLI::App* sub) {
    max_iters_opt = sub->add_option("--max-iters", max_iters, "EM iteration cap");
    rel_tol_opt = sub->add_option("--rel-tol", rel_tol, "relative risk-change tolerance");
    restarts_opt = sub->add_option("--restarts", restarts, "independent EM restarts");
    weight_floor_opt = sub->add_option("--weight-floor", weight_floor, "mixing weight floor");
    init_opt = sub->add_option("--init", init,
                               "init strategy: random-responsibility | greedy-seed");
    sub->add_option("--seed", seed, "base seed; all randomness splits from it");
  }

  FitConfig config() const {
    FitConfig cfg;
    cfg.max_iters = max_iters;
    cfg.rel_tol = rel_tol;
    cfg.restarts = restarts;
    cfg.weight_floor = weight_floor;
    cfg.init_strategy = mixsel::init_strategy_from_name(init);
    cfg.base_seed = seed;
    return cfg;
  }

  // Scenario configs keep their own tuned defaults; only explicit flags win.
  void override_onto(FitConfig& cfg) const {
    if (max_iters_opt->count()) cfg.max_iters = max_iters;
    if (rel_tol_opt->count()) cfg.rel_tol = rel_tol;
    if (restarts_opt->count()) cfg.restarts = restarts;
    if (weight_floor_opt->count()) cfg.weight_floor = weight_floor;
    if (init_opt->count()) cfg.init_strategy = mixsel::init_strategy_from_name(init);
    cfg.base_seed = seed;
  }
};

std::string trim_copy(const std::string& s) {
  const auto from = s.find_first_not_of(" \t\r");
  if (from == std::string::npos) return "";
  const auto to = s.find_last_not_of(" \t\r");
  return s.substr(from, to - from + 1);
}

// CLI11 applies config files only at the top-level app, so each subcommand's
// --config is merged by hand after parsing: explicit flags keep precedence,
// unknown keys are rejected, and required flags are checked post-merge so the
// config file alone can drive a run.
class StrictConfig {
 public:
  // entries_ is a deque: CLI11 holds a reference to ent.path, so entries must
  // stay put as more subcommands attach.
  void attach(CLI::App* sub, std::vector<std::string> required) {
    Entry& ent = entries_.emplace_back();
    ent.sub = sub;
    ent.required = std::move(required);
    sub->add_option("--config", ent.path, "key=value config file; flags override it");
  }

  void apply_parsed() const {
    for (const Entry& ent : entries_)
      if (ent.sub->parsed()) apply(ent);
  }

 private:
  struct Entry {
    CLI::App* sub = nullptr;
    std::string path;
    std::vector<std::string> required;
  };

  static void apply(const Entry& ent) {
    if (!ent.path.empty()) {
      std::istringstream in(read_file(ent.path));
      std::string line;
      int lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        const auto where = [&] { return ent.path + " line " + std::to_string(lineno); };
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line.erase(comment);
        line = trim_copy(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw UsageError(where() + ": expected key=value");
        const std::string key = trim_copy(line.substr(0, eq));
        std::string value = trim_copy(line.substr(eq + 1));
        if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') &&
            value.back() == value.front())
          value = value.substr(1, value.size() - 2);
        if (key.empty() || value.empty()) throw UsageError(where() + ": expected key=value");
        CLI::Option* opt =
            key == "config" || key == "help" ? nullptr : ent.sub->get_option_no_throw("--" + key);
        if (opt == nullptr) throw UsageError(where() + ": unknown key '" + key + "'");
        if (opt->count() > 0) continue;
        try {
          opt->add_result(value);
          opt->run_callback();
        } catch (const CLI::Error& e) {
          throw UsageError(where() + ": key '" + key + "': " + e.what());
        }
      }
    }
    for (const std::string& flag : ent.required)
      if (ent.sub->get_option_no_throw(flag)->count() == 0)
        throw UsageError(ent.sub->get_name() + " requires " + flag +
                         " (flag or config file key)");
  }

  std::deque<Entry> entries_;
};

int run(int argc, char** argv) {
  CLI::App app{"Penalized-likelihood order selection for finite mixtures"};
  app.require_subcommand(1);
  argv = app.ensure_utf8(argv);
  StrictConfig strict;

  // ---- fit ----
  auto* fit_cmd = app.add_subcommand("fit", "Fit a k-component mixture to CSV data");
  std::string fit_input, fit_family, fit_out, fit_response;
  int fit_k = 1;
  bool fit_no_intercept = false;
  double fit_b = 1e6, fit_c = 1e6;
  int fit_threads = 0;
  FitFlags fit_flags;
  fit_cmd->add_option("--input,-i", fit_input, "CSV input path");
  fit_cmd->add_option("--family", fit_family, "gaussian | laplace | regression");
  fit_cmd->add_option("--k", fit_k, "number of components");
  fit_cmd->add_option("--response", fit_response, "response column (regression)");
  fit_cmd->add_flag("--no-intercept", fit_no_intercept, "do not prepend an intercept column");
  fit_cmd->add_option("--b", fit_b, "location/coefficient norm bound");
  fit_cmd->add_option("--c", fit_c, "scale bound: scales confined to [1/c, c]");
  fit_cmd->add_option("--threads", fit_threads, "parallelism cap (output-identical)");
  fit_flags.add_to(fit_cmd);
  fit_cmd->add_option("--out", fit_out, "write JSON here instead of stdout");
  strict.attach(fit_cmd, {"--input", "--family", "--k"});

  // ---- select ----
  auto* sel_cmd = app.add_subcommand("select", "Choose the mixture order by penalized risk");
  std::string sel_input, sel_family, sel_out, sel_response, sel_criterion, sel_path_csv;
  std::string sel_dim_conv = "paper";
  int sel_kmax = 1;
  bool sel_no_intercept = false, sel_conditional = false;
  double sel_b = 1e6, sel_c = 1e6;
  int sel_threads = 0;
  std::optional<int> sel_nu;
  std::optional<double> sel_eps;
  FitFlags sel_flags;
  sel_cmd->add_option("--input,-i", sel_input, "CSV input path");
  sel_cmd->add_option("--family", sel_family, "gaussian | laplace | regression");
  sel_cmd->add_option("--kmax", sel_kmax, "largest order to consider");
  sel_cmd->add_option("--criterion", sel_criterion, "aic | bic | nu-bic | eps-bic");
  sel_cmd->add_option("--nu", sel_nu, "compositions of Ln (nu-bic)");
  sel_cmd->add_option("--eps", sel_eps, "log-power surplus (eps-bic)");
  sel_cmd->add_option("--dim-convention", sel_dim_conv, "paper | free");
  sel_cmd->add_option("--response", sel_response, "response column (regression)");
  sel_cmd->add_flag("--no-intercept", sel_no_intercept, "do not prepend an intercept column");
  sel_cmd->add_flag("--conditional", sel_conditional,
                    "conditional-likelihood mode (regression only; implied for regression)");
  sel_cmd->add_option("--b", sel_b, "location/coefficient norm bound");
  sel_cmd->add_option("--c", sel_c, "scale bound");
  sel_cmd->add_option("--threads", sel_threads, "parallelism cap (output-identical)");
  sel_flags.add_to(sel_cmd);
  sel_cmd->add_option("--out", sel_out, "write JSON here instead of stdout");
  sel_cmd->add_option("--path-csv", sel_path_csv, "also write the criterion path as CSV");
  strict.attach(sel_cmd, {"--input", "--family", "--kmax", "--criterion"});

  // ---- simulate ----
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo consistency experiment");
  std::string sim_scenario, sim_out;
  std::string sim_n_grid;
  int sim_replicates = 0, sim_kbar = 0, sim_threads = 0;
  bool sim_verbose = false;
  FitFlags sim_flags;
  sim_cmd->add_option("--scenario", sim_scenario, "canned scenario name");
  sim_cmd->add_option("--replicates", sim_replicates, "override scenario replicates");
  sim_cmd->add_option("--n-grid", sim_n_grid, "override n grid, e.g. 200,500,2000");
  sim_cmd->add_option("--kbar", sim_kbar, "override largest candidate order");
  sim_cmd->add_option("--threads", sim_threads, "parallelism cap (output-identical)");
  sim_flags.add_to(sim_cmd);
  sim_cmd->add_flag("--verbose", sim_verbose, "per-replicate JSON lines on stderr");
  sim_cmd->add_option("--out", sim_out, "accuracy table CSV path");
  strict.attach(sim_cmd, {"--scenario"});

  // ---- thresholds ----
  auto* thr_cmd = app.add_subcommand("thresholds", "Negligibility thresholds of the penalties");
  std::optional<int> thr_nu;
  std::optional<double> thr_eps;
  std::uint64_t thr_seed = 0;
  std::string thr_out;
  thr_cmd->add_option("--nu", thr_nu, "report exp∘nu(1) and exp∘nu(1.1)");
  thr_cmd->add_option("--eps", thr_eps, "report exp(1.1^(1/eps))");
  thr_cmd->add_option("--seed", thr_seed, "echoed in the output");
  thr_cmd->add_option("--out", thr_out, "write JSON here instead of stdout");
  strict.attach(thr_cmd, {});

  // ---- penalty-table ----
  auto* pen_cmd = app.add_subcommand("penalty-table", "Penalty values over a (criterion,k,m,n) grid");
  std::string pen_k, pen_n, pen_m = "2", pen_criteria, pen_out;
  std::string pen_dim_conv = "paper";
  std::optional<int> pen_nu;
  std::optional<double> pen_eps;
  std::uint64_t pen_seed = 0;
  pen_cmd->add_option("--k", pen_k, "orders, e.g. 1..5 or 1,3");
  pen_cmd->add_option("--n", pen_n, "sample sizes, e.g. 100,1000");
  pen_cmd->add_option("--m", pen_m, "component parameter counts (default 2)");
  pen_cmd->add_option("--criterion", pen_criteria, "comma list of aic|bic|nu-bic|eps-bic");
  pen_cmd->add_option("--nu", pen_nu, "compositions of Ln (nu-bic)");
  pen_cmd->add_option("--eps", pen_eps, "log-power surplus (eps-bic)");
  pen_cmd->add_option("--dim-convention", pen_dim_conv, "paper | free");
  pen_cmd->add_option("--seed", pen_seed, "echoed in the output");
  pen_cmd->add_option("--out", pen_out, "write CSV here instead of stdout");
  strict.attach(pen_cmd, {"--k", "--n", "--criterion"});

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    strict.apply_parsed();

    if (fit_cmd->parsed()) {
      const Family family = mixsel::family_from_name(fit_family);
      if (fit_k < 1) throw UsageError("--k must be >= 1");
      if (fit_threads < 0) throw UsageError("--threads must be >= 0");
      const DataSet data = load_dataset(fit_input, family, fit_response, fit_no_intercept);
      const ParamSpace space(family, fit_b, fit_c);
      const FitConfig cfg = fit_flags.config();
      const mixsel::FitResult res = mixsel::fit(data, family, fit_k, space, cfg);
      json out{{"schema_version", 1},
               {"command", "fit"},
               {"family", family_name(family)},
               {"k", fit_k},
               {"n", static_cast<long>(data.rows())},
               {"seed", cfg.base_seed},
               {"config", mixsel::fit_config_to_json(cfg)},
               {"space", json{{"b", space.b}, {"c", space.c}}},
               {"fit", mixsel::fit_result_to_json(res)}};
      write_output(fit_out, out.dump(2) + "\n");
      return 0;
    }

    if (sel_cmd->parsed()) {
      const Family family = mixsel::family_from_name(sel_family);
      if (sel_kmax < 1) throw UsageError("--kmax must be >= 1");
      if (sel_conditional && family != Family::regression)
        throw UsageError("--conditional requires --family regression");
      const DataSet data = load_dataset(sel_input, family, sel_response, sel_no_intercept);
      const ParamSpace space(family, sel_b, sel_c);
      const FitConfig cfg = sel_flags.config();
      const CriterionSpec spec = make_criterion(sel_criterion, sel_nu, sel_eps, sel_dim_conv);
      const mixsel::SelectionReport report =
          family == Family::regression
              ? mixsel::select_conditional(data, sel_kmax, spec, cfg, space)
              : mixsel::select(data, family, sel_kmax, spec, cfg, space);
      write_output(sel_out, mixsel::report_to_json(report).dump(2) + "\n");
      if (!sel_path_csv.empty()) write_output(sel_path_csv, mixsel::criterion_path_csv(report));
      return 0;
    }

    if (sim_cmd->parsed()) {
      mixsel::SimulationConfig cfg = mixsel::scenario(sim_scenario);
      if (sim_replicates > 0) cfg.replicates = sim_replicates;
      if (sim_kbar > 0) cfg.k_bar = sim_kbar;
      if (!sim_n_grid.empty()) cfg.n_grid = parse_int_list(sim_n_grid, "--n-grid");
      sim_flags.override_onto(cfg.fit_cfg);
      cfg.base_seed = sim_flags.seed;
      const mixsel::SimulationResult result = mixsel::run_consistency(cfg);
      if (sim_verbose)
        for (const auto& rec : result.details)
          std::cerr << mixsel::replicate_record_to_json(rec).dump() << "\n";
      if (!sim_out.empty()) write_output(sim_out, mixsel::accuracy_table_csv(result.table));
      json names = json::array();
      for (const auto& c : cfg.criteria) names.push_back(c.name());
      json out{{"schema_version", 1},
               {"command", "simulate"},
               {"scenario", cfg.name},
               {"seed", cfg.base_seed},
               {"k0", cfg.k0()},
               {"k_bar", cfg.k_bar},
               {"replicates", cfg.replicates},
               {"n_grid", cfg.n_grid},
               {"criteria", std::move(names)},
               {"table", mixsel::accuracy_table_to_json(result.table)}};
      std::cout << out.dump(2) << "\n";
      return 0;
    }

    if (thr_cmd->parsed()) {
      if (!thr_nu && !thr_eps) throw UsageError("thresholds: give --nu and/or --eps");
      auto entry_json = [](const mixsel::ThresholdEntry& e) {
        return json{{"level", e.level},
                    {"log_value", e.log_value},
                    {"value", e.value},
                    {"representable", e.representable},
                    {"magnitude", e.magnitude}};
      };
      json out{{"schema_version", 1}, {"command", "thresholds"}, {"seed", thr_seed}};
      if (thr_nu) {
        if (*thr_nu < 1) throw UsageError("--nu must be >= 1");
        const auto rep = mixsel::nu_thresholds(*thr_nu);
        out["nu"] = json{{"nu", rep.nu},
                         {"at_1", entry_json(rep.at_1)},
                         {"at_1_1", entry_json(rep.at_1_1)}};
      }
      if (thr_eps) {
        if (!(*thr_eps > 0.0)) throw UsageError("--eps must be > 0");
        const auto rep = mixsel::eps_thresholds(*thr_eps);
        out["eps"] = json{{"eps", rep.eps}, {"at_1_1", entry_json(rep.at_1_1)}};
      }
      write_output(thr_out, out.dump(2) + "\n");
      return 0;
    }

    if (pen_cmd->parsed()) {
      const std::vector<long> ks = parse_int_list(pen_k, "--k");
      const std::vector<long> ns = parse_int_list(pen_n, "--n");
      const std::vector<long> ms = parse_int_list(pen_m, "--m");
      std::vector<CriterionSpec> specs;
      std::stringstream ss(pen_criteria);
      std::string name;
      while (std::getline(ss, name, ','))
        specs.push_back(make_criterion(name, pen_nu, pen_eps, pen_dim_conv));
      if (specs.empty()) throw UsageError("--criterion: empty list");

      std::string csv = "criterion,k,m,n,penalty,seed\r\n";
      for (const auto& spec : specs)
        for (long k : ks)
          for (long m : ms)
            for (long n : ns) {
              csv += spec.name();
              csv += ',';
              csv += std::to_string(k);
              csv += ',';
              csv += std::to_string(m);
              csv += ',';
              csv += std::to_string(n);
              csv += ',';
              csv += mixsel::format_double(mixsel::penalty(spec, static_cast<int>(k),
                                                           static_cast<int>(m),
                                                           static_cast<double>(n)));
              csv += ',';
              csv += std::to_string(pen_seed);
              csv += "\r\n";
            }
      write_output(pen_out, csv);
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
