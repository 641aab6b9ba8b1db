#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mixsel/fitter.hpp"

using namespace mixsel;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd vec1(double x) {
  VectorXd v(1);
  v << x;
  return v;
}

MixtureParams gaussian_mix_1d(std::vector<double> w, std::vector<double> mu,
                              std::vector<double> var, const ParamSpace& space) {
  const auto k = static_cast<Eigen::Index>(w.size());
  VectorXd wv(k);
  std::vector<ComponentParams> comps;
  for (Eigen::Index z = 0; z < k; ++z) {
    MatrixXd v(1, 1);
    v << var[static_cast<std::size_t>(z)];
    wv(z) = w[static_cast<std::size_t>(z)];
    comps.push_back(GaussianParams(vec1(mu[static_cast<std::size_t>(z)]), v));
  }
  return MixtureParams(wv, std::move(comps), space);
}

DataSet bimodal_sample(int n, std::uint64_t seed) {
  const ParamSpace space(Family::gaussian, 1e6, 1e6);
  const auto truth = gaussian_mix_1d({0.5, 0.5}, {0.0, 6.0}, {1.0, 1.0}, space);
  Rng rng(seed);
  return sample_mixture(truth, n, rng).data;
}

}  // namespace

TEST_CASE("k=1 fits hit the closed-form maximum likelihood estimates") {
  const ParamSpace gs(Family::gaussian, 1e6, 1e6);
  DataSet gd(3, 1);
  gd << -1.0, 0.0, 1.0;
  FitConfig cfg;
  cfg.restarts = 2;
  const auto g = fit(gd, Family::gaussian, 1, gs, cfg);
  const auto& gp = std::get<GaussianParams>(g.params.component(0));
  CHECK(gp.mean()(0) == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(gp.covariance()(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-10));
  CHECK(g.params.weights()(0) == 1.0);
  // risk = 0.5 log(2 pi 2/3) + 1/2
  CHECK(g.risk == doctest::Approx(1.2162059791505904).epsilon(1e-12));
  CHECK(g.converged);

  const ParamSpace ls(Family::laplace, 1e6, 1e6);
  DataSet ld(3, 1);
  ld << 0.0, 1.0, 3.0;
  const auto l = fit(ld, Family::laplace, 1, ls, cfg);
  const auto& lp = std::get<LaplaceParams>(l.params.component(0));
  CHECK(lp.location == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(lp.rate == doctest::Approx(1.0).epsilon(1e-10));
  // risk = log 2 + mean |x - 1|
  CHECK(l.risk == doctest::Approx(1.6931471805599454).epsilon(1e-12));

  const ParamSpace rs(Family::regression, 1e6, 1e6);
  DataSet rd(4, 3);
  rd << 1.0, 0.0, 1.0, 1.0, 1.0, 3.0, 1.0, 2.0, 5.0, 1.0, 3.0, 7.0;  // y = 1 + 2 u
  const auto r = fit(rd, Family::regression, 1, rs, cfg);
  const auto& rp = std::get<RegressionParams>(r.params.component(0));
  CHECK(rp.coefficients(0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(rp.coefficients(1) == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(rp.noise_sd == rs.scale_lo());  // exact line: noise floored
}

TEST_CASE("k=2 fit recovers a well-separated gaussian mixture") {
  const DataSet data = bimodal_sample(2000, 71);
  const ParamSpace space(Family::gaussian, 1e6, 1e6);
  FitConfig cfg;
  cfg.restarts = 4;
  cfg.base_seed = 9;
  cfg.init_strategy = InitStrategy::greedy_seed;
  const auto res = fit(data, Family::gaussian, 2, space, cfg);
  REQUIRE(res.params.k() == 2);

  std::vector<double> means;
  for (int z = 0; z < 2; ++z)
    means.push_back(std::get<GaussianParams>(res.params.component(z)).mean()(0));
  std::sort(means.begin(), means.end());
  CHECK(means[0] == doctest::Approx(0.0).epsilon(0.15));
  CHECK(means[1] == doctest::Approx(6.0).epsilon(0.03));  // |.| <= 0.15 around 6

  // fitted risk beats or about matches the generating parameters
  const auto truth = gaussian_mix_1d({0.5, 0.5}, {0.0, 6.0}, {1.0, 1.0}, space);
  const double truth_risk = empirical_risk(truth, data);
  CHECK(res.risk <= truth_risk + 1e-9);
  CHECK(res.risk >= truth_risk - 0.02);
  CHECK(res.diagnostics.monotonicity_violations == 0);
}

TEST_CASE("a converged fit is an em fixed point") {
  const DataSet data = bimodal_sample(600, 5);
  const ParamSpace space(Family::gaussian, 1e6, 1e6);
  FitConfig cfg;
  cfg.restarts = 2;
  cfg.rel_tol = 1e-14;
  cfg.max_iters = 4000;
  const auto res = fit(data, Family::gaussian, 2, space, cfg);
  REQUIRE(res.converged);
  const auto [next, risk_next] = em_step(res.params, data, space, cfg);
  CHECK(std::abs(risk_next - res.risk) <= 1e-10);
  (void)next;
}

TEST_CASE("one em step never increases the risk from a fresh init") {
  const DataSet data = bimodal_sample(300, 31);
  const ParamSpace space(Family::gaussian, 1e6, 1e6);
  FitConfig cfg;
  for (std::uint64_t s = 0; s < 100; ++s) {
    Rng rng(split_seed(77, s));
    const auto strategy =
        s % 2 == 0 ? InitStrategy::random_responsibility : InitStrategy::greedy_seed;
    const auto psi = init(data, Family::gaussian, 3, space, strategy, 1e-8, rng);
    const double before = empirical_risk(psi, data);
    const auto [next, after] = em_step(psi, data, space, cfg);
    CHECK(after <= before + 1e-9);
    (void)next;
  }
}

TEST_CASE("risk traces are monotone and free of violations") {
  const DataSet data = bimodal_sample(500, 13);
  const ParamSpace space(Family::gaussian, 1e6, 1e6);
  FitConfig cfg;
  cfg.restarts = 3;
  const auto res = fit(data, Family::gaussian, 2, space, cfg);
  CHECK(res.diagnostics.monotonicity_violations == 0);
  REQUIRE(res.diagnostics.risk_trace.size() >= 2);
  for (std::size_t i = 1; i < res.diagnostics.risk_trace.size(); ++i)
    CHECK(res.diagnostics.risk_trace[i] <= res.diagnostics.risk_trace[i - 1] + 1e-9);
  // the exact final risk agrees with the last trace entry to rounding
  CHECK(res.risk == doctest::Approx(res.diagnostics.risk_trace.back()).epsilon(1e-9));
  CHECK(*std::min_element(res.restart_risks.begin(), res.restart_risks.end()) == res.risk);
}

TEST_CASE("a far-off warm-start component is reseeded, order preserved") {
  // all mass near 0; the second warm-start component at 50 collects no
  // responsibility, goes degenerate, and must be re-seeded at a data point
  Rng rng(3);
  DataSet data(200, 1);
  for (int i = 0; i < 200; ++i) data(i, 0) = rng.normal();
  const ParamSpace space(Family::gaussian, 1e6, 1e6);
  const auto adversarial = gaussian_mix_1d({0.5, 0.5}, {0.0, 50.0}, {1.0, 1.0}, space);

  FitConfig cfg;
  cfg.restarts = 1;
  const auto res = fit(data, Family::gaussian, 2, space, cfg, {adversarial});
  REQUIRE(res.params.k() == 2);
  CHECK(res.diagnostics.reseeds >= 1);
  CHECK(std::isfinite(res.risk));
  // both final means must sit inside the data range
  for (int z = 0; z < 2; ++z) {
    const double m = std::get<GaussianParams>(res.params.component(z)).mean()(0);
    CHECK(std::abs(m) < 5.0);
  }
}

TEST_CASE("warm-started k+1 never fits worse than k") {
  const DataSet data = bimodal_sample(800, 19);
  const ParamSpace space(Family::gaussian, 1e6, 1e6);
  FitConfig cfg;
  cfg.restarts = 3;
  const auto fit2 = fit(data, Family::gaussian, 2, space, cfg);

  // duplicate the heaviest component, halving its weight: same density, k+1
  int heavy = 0;
  for (int z = 1; z < 2; ++z)
    if (fit2.params.weights()(z) > fit2.params.weights()(heavy)) heavy = z;
  VectorXd w(3);
  std::vector<ComponentParams> comps;
  for (int z = 0; z < 2; ++z) {
    w(z) = fit2.params.weights()(z) * (z == heavy ? 0.5 : 1.0);
    comps.push_back(fit2.params.component(z));
  }
  w(2) = fit2.params.weights()(heavy) * 0.5;
  comps.push_back(fit2.params.component(heavy));
  const MixtureParams warm(w, std::move(comps), space);

  const auto fit3 = fit(data, Family::gaussian, 3, space, cfg, {warm});
  CHECK(fit3.risk <= fit2.risk + 1e-6);
}

TEST_CASE("fits are bitwise deterministic given the seed") {
  const DataSet data = bimodal_sample(400, 55);
  const ParamSpace space(Family::gaussian, 1e6, 1e6);
  FitConfig cfg;
  cfg.restarts = 3;
  cfg.base_seed = 321;
  const auto a = fit(data, Family::gaussian, 2, space, cfg);
  const auto b = fit(data, Family::gaussian, 2, space, cfg);
  CHECK(a.risk == b.risk);
  CHECK(a.iterations == b.iterations);
  CHECK(a.params.weights() == b.params.weights());
  for (int z = 0; z < 2; ++z) {
    CHECK(std::get<GaussianParams>(a.params.component(z)).mean() ==
          std::get<GaussianParams>(b.params.component(z)).mean());
    CHECK(std::get<GaussianParams>(a.params.component(z)).covariance() ==
          std::get<GaussianParams>(b.params.component(z)).covariance());
  }
  CHECK(a.restart_risks == b.restart_risks);
}

TEST_CASE("component relabeling leaves the em step risk unchanged, exactly") {
  const DataSet data = bimodal_sample(300, 8);
  const ParamSpace space(Family::gaussian, 1e6, 1e6);
  const auto psi = gaussian_mix_1d({0.4, 0.6}, {0.5, 5.5}, {1.2, 0.8}, space);
  FitConfig cfg;
  const auto [a, risk_a] = em_step(psi, data, space, cfg);
  const auto [b, risk_b] = em_step(psi.permuted({1, 0}), data, space, cfg);
  CHECK(risk_a == risk_b);  // bitwise: exact summation everywhere
  (void)a;
  (void)b;
}

TEST_CASE("laplace em on mixed data behaves") {
  const ParamSpace space(Family::laplace, 1e6, 1e6);
  VectorXd w(2);
  w << 0.5, 0.5;
  const MixtureParams truth(w, {LaplaceParams{0.0, 1.0}, LaplaceParams{6.0, 1.0}}, space);
  Rng rng(100);
  const auto sampled = sample_mixture(truth, 1500, rng);
  FitConfig cfg;
  cfg.restarts = 3;
  const auto res = fit(sampled.data, Family::laplace, 2, space, cfg);
  std::vector<double> locs;
  for (int z = 0; z < 2; ++z)
    locs.push_back(std::get<LaplaceParams>(res.params.component(z)).location);
  std::sort(locs.begin(), locs.end());
  CHECK(locs[0] == doctest::Approx(0.0).epsilon(0.2));
  CHECK(locs[1] == doctest::Approx(6.0).epsilon(0.04));
  CHECK(res.diagnostics.monotonicity_violations == 0);
  CHECK(res.risk <= empirical_risk(truth, sampled.data) + 1e-9);
}

TEST_CASE("regression em separates two lines") {
  const ParamSpace space(Family::regression, 1e6, 1e6);
  RegressionParams up, down;
  up.coefficients = VectorXd(2);
  up.coefficients << 0.0, 2.0;
  up.noise_sd = 0.5;
  down.coefficients = VectorXd(2);
  down.coefficients << 0.0, -2.0;
  down.noise_sd = 0.5;
  VectorXd w(2);
  w << 0.5, 0.5;
  const MixtureParams truth(w, {up, down}, space);
  CovariateSampler cov;
  Rng rng(2024);
  const auto sampled = sample_mixture(truth, 1000, rng, cov);

  FitConfig cfg;
  cfg.restarts = 6;
  cfg.base_seed = 4;
  const auto res = fit(sampled.data, Family::regression, 2, space, cfg);
  std::vector<double> slopes;
  for (int z = 0; z < 2; ++z)
    slopes.push_back(std::get<RegressionParams>(res.params.component(z)).coefficients(1));
  std::sort(slopes.begin(), slopes.end());
  CHECK(slopes[0] == doctest::Approx(-2.0).epsilon(0.08));
  CHECK(slopes[1] == doctest::Approx(2.0).epsilon(0.08));
  CHECK(res.diagnostics.monotonicity_violations == 0);
}

TEST_CASE("configuration and input validation") {
  const ParamSpace space(Family::gaussian, 1e6, 1e6);
  DataSet data(10, 1);
  data << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10;
  FitConfig bad;
  bad.restarts = 0;
  CHECK_THROWS_AS(fit(data, Family::gaussian, 2, space, bad), std::invalid_argument);
  FitConfig floorbad;
  floorbad.weight_floor = 0.6;  // >= 1/k for k = 2
  CHECK_THROWS_AS(fit(data, Family::gaussian, 2, space, floorbad), std::invalid_argument);
  FitConfig cfg;
  CHECK_THROWS_AS(fit(data, Family::gaussian, 0, space, cfg), std::invalid_argument);
  // k = 6 gaussian components need 12 points
  CHECK_THROWS_AS(fit(data, Family::gaussian, 6, space, cfg), std::invalid_argument);
  // warm start with the wrong k
  const auto w1 = gaussian_mix_1d({1.0}, {0.0}, {1.0}, space);
  CHECK_THROWS_AS(fit(data, Family::gaussian, 2, space, cfg, {w1}), std::invalid_argument);

  CHECK(init_strategy_from_name("greedy-seed") == InitStrategy::greedy_seed);
  CHECK(init_strategy_name(InitStrategy::random_responsibility) == "random-responsibility");
  CHECK_THROWS_AS(init_strategy_from_name("kmeans"), std::invalid_argument);
}

TEST_CASE("both init strategies produce valid feasible mixtures") {
  const DataSet data = bimodal_sample(120, 4);
  const ParamSpace space(Family::gaussian, 1e6, 1e6);
  for (auto strategy : {InitStrategy::random_responsibility, InitStrategy::greedy_seed}) {
    Rng rng(11);
    const auto psi = init(data, Family::gaussian, 4, space, strategy, 1e-8, rng);
    CHECK(psi.k() == 4);
    CHECK(psi.weights().sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(psi.weights().minCoeff() >= 1e-8);
    CHECK(std::isfinite(empirical_risk(psi, data)));
    // deterministic under an equal seed
    Rng rng2(11);
    const auto psi2 = init(data, Family::gaussian, 4, space, strategy, 1e-8, rng2);
    CHECK(psi.weights() == psi2.weights());
  }
}
