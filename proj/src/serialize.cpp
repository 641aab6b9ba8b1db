#include "mixsel/serialize.hpp"

#include <cmath>
#include <stdexcept>

namespace mixsel {

using nlohmann::json;

namespace {

json vector_to_json(const VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

VectorXd vector_from_json(const json& j) {
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  Eigen::Index at = 0;
  for (const auto& x : j) v[at++] = x.get<double>();
  return v;
}

json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_to_json(m.row(i).transpose()));
  return rows;
}

MatrixXd matrix_from_json(const json& j) {
  const auto r = static_cast<Eigen::Index>(j.size());
  if (r == 0) throw std::invalid_argument("matrix JSON: empty");
  const auto c = static_cast<Eigen::Index>(j.front().size());
  MatrixXd m(r, c);
  Eigen::Index i = 0;
  for (const auto& row : j) {
    if (static_cast<Eigen::Index>(row.size()) != c)
      throw std::invalid_argument("matrix JSON: ragged rows");
    Eigen::Index k = 0;
    for (const auto& x : row) m(i, k++) = x.get<double>();
    ++i;
  }
  return m;
}

json component_to_json(const ComponentParams& comp) {
  if (const auto* g = std::get_if<GaussianParams>(&comp)) {
    return json{{"mean", vector_to_json(g->mean())},
                {"covariance", matrix_to_json(g->covariance())}};
  }
  if (const auto* l = std::get_if<LaplaceParams>(&comp)) {
    return json{{"location", l->location}, {"rate", l->rate}};
  }
  const auto& r = std::get<RegressionParams>(comp);
  return json{{"coefficients", vector_to_json(r.coefficients)}, {"noise_sd", r.noise_sd}};
}

ComponentParams component_from_json(Family family, const json& j) {
  switch (family) {
    case Family::gaussian:
      return GaussianParams(vector_from_json(j.at("mean")), matrix_from_json(j.at("covariance")));
    case Family::laplace:
      return LaplaceParams{j.at("location").get<double>(), j.at("rate").get<double>()};
    case Family::regression: {
      RegressionParams r;
      r.coefficients = vector_from_json(j.at("coefficients"));
      r.noise_sd = j.at("noise_sd").get<double>();
      return r;
    }
  }
  throw std::logic_error("unknown family");
}

}  // namespace

json mixture_to_json(const MixtureParams& psi) {
  json comps = json::array();
  for (const auto& comp : psi.components()) comps.push_back(component_to_json(comp));
  return json{{"family", family_name(psi.family())},
              {"weights", vector_to_json(psi.weights())},
              {"components", std::move(comps)},
              {"space", json{{"b", psi.space().b}, {"c", psi.space().c}}}};
}

MixtureParams mixture_from_json(const json& j) {
  const Family family = family_from_name(j.at("family").get<std::string>());
  const auto& jspace = j.at("space");
  ParamSpace space(family, jspace.at("b").get<double>(), jspace.at("c").get<double>());
  VectorXd weights = vector_from_json(j.at("weights"));
  std::vector<ComponentParams> comps;
  for (const auto& jc : j.at("components")) comps.push_back(component_from_json(family, jc));
  return MixtureParams(std::move(weights), std::move(comps), space);
}

json criterion_to_json(const CriterionSpec& spec) {
  json out{{"name", spec.name()}, {"dim_convention", dim_convention_name(spec.dim_convention)}};
  switch (spec.kind) {
    case CriterionKind::aic: out["kind"] = "aic"; break;
    case CriterionKind::bic: out["kind"] = "bic"; break;
    case CriterionKind::nu_bic:
      out["kind"] = "nu-bic";
      out["nu"] = spec.nu;
      break;
    case CriterionKind::eps_bic:
      out["kind"] = "eps-bic";
      out["eps"] = spec.eps;
      break;
  }
  return out;
}

json fit_config_to_json(const FitConfig& cfg) {
  return json{{"max_iters", cfg.max_iters},
              {"rel_tol", cfg.rel_tol},
              {"restarts", cfg.restarts},
              {"weight_floor", cfg.weight_floor},
              {"init_strategy", init_strategy_name(cfg.init_strategy)},
              {"base_seed", cfg.base_seed}};
}

json fit_result_to_json(const FitResult& res) {
  json diag{{"monotonicity_violations", res.diagnostics.monotonicity_violations},
            {"projection_flagged", res.diagnostics.projection_flagged},
            {"reseeds", res.diagnostics.reseeds},
            {"floor_activations", res.diagnostics.floor_activations},
            {"failed_restarts", res.diagnostics.failed_restarts}};
  return json{{"params", mixture_to_json(res.params)},
              {"risk", res.risk},
              {"iterations", res.iterations},
              {"converged", res.converged},
              {"restart_risks", res.restart_risks},
              {"diagnostics", std::move(diag)}};
}

json report_to_json(const SelectionReport& report) {
  json path = json::array();
  for (const auto& entry : report.path) {
    json row{{"k", entry.k},
             {"fitted", entry.fitted},
             {"iterations", entry.iterations},
             {"converged", entry.converged},
             {"reseeds", entry.reseeds}};
    if (entry.fitted) {
      row["risk"] = entry.risk;
      row["penalty"] = entry.penalty;
      row["value"] = entry.value;
    } else {
      row["warning"] = entry.warning;
    }
    path.push_back(std::move(row));
  }
  json out{{"schema_version", report.schema_version},
           {"command", "select"},
           {"family", family_name(report.family)},
           {"mode", select_mode_name(report.mode)},
           {"n", report.n},
           {"k_bar", report.k_bar},
           {"criterion", criterion_to_json(report.criterion)},
           {"fit_config", fit_config_to_json(report.fit_cfg)},
           {"space", json{{"b", report.space.b}, {"c", report.space.c}}},
           {"seed", report.seed},
           {"path", std::move(path)},
           {"selected_k", report.selected_k},
           {"wall_time_seconds", report.wall_time_seconds}};
  if (report.selected_params) out["selected_params"] = mixture_to_json(*report.selected_params);
  return out;
}

json accuracy_table_to_json(const AccuracyTable& table) {
  json rows = json::array();
  for (const auto& row : table.rows) {
    rows.push_back(json{{"criterion", row.criterion},
                        {"n", row.n},
                        {"replicates", row.replicates},
                        {"failures", row.failures},
                        {"correct", row.correct},
                        {"accuracy", row.accuracy},
                        {"mean_selected_k", row.mean_selected_k},
                        {"under", row.under},
                        {"over", row.over}});
  }
  return json{{"k0", table.k0}, {"rows", std::move(rows)}};
}

json replicate_record_to_json(const ReplicateRecord& rec) {
  json out{{"criterion", rec.criterion},
           {"n", rec.n},
           {"replicate", rec.replicate},
           {"data_hash", rec.data_hash},
           {"failed", rec.failed},
           {"selected_k", rec.selected_k}};
  if (std::isfinite(rec.hellinger)) out["hellinger"] = rec.hellinger;
  return out;
}

}  // namespace mixsel
