#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <nckrm/estimator.hpp>
#include <nckrm/rng.hpp>

#include "helpers.hpp"

using namespace nckrm;
using nckrm_test::sample_test_spec;

namespace {

// synthesize y from a known non-causal FIR driven by white noise
std::vector<double> apply_fir(const NoncausalFir& g,
                              const std::vector<double>& u) {
  std::vector<double> y(u.size(), 0.0);
  int N = static_cast<int>(u.size());
  for (int t = 0; t < N; ++t) {
    double acc = 0.0;
    for (int k = -g.n_a; k <= g.n_c; ++k) {
      int j = t - k;
      if (j >= 0 && j < N) acc += g.at(k) * u[static_cast<std::size_t>(j)];
    }
    y[static_cast<std::size_t>(t)] = acc;
  }
  return y;
}

}  // namespace

TEST_CASE("build_regression index layout") {
  std::vector<double> u = {10.0, 20.0, 30.0, 40.0, 50.0};
  std::vector<double> y = {1.0, 2.0, 3.0, 4.0, 5.0};

  RegressionProblem p0 = build_regression(u, y, 0, 0);
  REQUIRE(p0.m() == 5);
  REQUIRE(p0.n() == 1);
  for (int r = 0; r < 5; ++r) {
    REQUIRE(p0.Y(r) == y[static_cast<std::size_t>(r)]);
    REQUIRE(p0.Psi(r, 0) == u[static_cast<std::size_t>(r)]);
  }

  RegressionProblem p1 = build_regression(u, y, 1, 1);
  REQUIRE(p1.m() == 3);
  REQUIRE(p1.n() == 3);
  // first row is [u(3), u(2), u(1)] in 1-based data indexing
  REQUIRE(p1.Psi(0, 0) == 30.0);
  REQUIRE(p1.Psi(0, 1) == 20.0);
  REQUIRE(p1.Psi(0, 2) == 10.0);
  REQUIRE(p1.Y(0) == 2.0);
  REQUIRE(p1.Y(2) == 4.0);

  REQUIRE_THROWS_WITH(build_regression(u, y, 3, 2),
                      Catch::Matchers::ContainsSubstring("insufficient data"));
}

TEST_CASE("least squares recovers a noiseless 7-tap FIR") {
  Rng rng(21);
  NoncausalFir g(3, 3);
  for (auto& c : g.coeffs) c = rng.gauss();
  std::vector<double> u(200);
  for (auto& v : u) v = rng.gauss();
  auto y = apply_fir(g, u);
  RegressionProblem prob = build_regression(u, y, 3, 3);
  Eigen::VectorXd theta = prob.G.ldlt().solve(prob.zv);
  for (int k = -3; k <= 3; ++k)
    REQUIRE(theta(k + 3) == Catch::Approx(g.at(k)).margin(1e-10));
  REQUIRE(estimate_noise_variance(prob) <= 1e-20);
}

TEST_CASE("noise variance concentrates around the truth") {
  NoncausalFir g(5, 5);
  {
    Rng rng(77);
    for (auto& c : g.coeffs) c = rng.gauss();
  }
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    Rng rng(seed);
    std::vector<double> u(5010);
    for (auto& v : u) v = rng.gauss();
    auto y = apply_fir(g, u);
    const double sd = std::sqrt(0.1);
    for (auto& v : y) v += sd * rng.gauss();
    RegressionProblem prob = build_regression(u, y, 5, 5);
    double s2 = estimate_noise_variance(prob);
    REQUIRE(s2 > 0.09);
    REQUIRE(s2 < 0.11);
  }
}

TEST_CASE("noise variance shrinks the window when m < 2n") {
  Rng rng(6);
  std::vector<double> u(600), y(600);
  for (auto& v : u) v = rng.gauss();
  for (auto& v : y) v = rng.gauss();
  RegressionProblem prob = build_regression(u, y, 150, 150);
  REQUIRE(prob.m() == 300);
  REQUIRE(prob.m() < 2 * prob.n());
  double s2 = estimate_noise_variance(prob);
  REQUIRE(std::isfinite(s2));
  REQUIRE(s2 > 0.0);

  // pure white y: the reduced-window LS residual is close to var(y) = 1
  REQUIRE(s2 > 0.7);
  REQUIRE(s2 < 1.4);
}

TEST_CASE("rls approaches least squares as regularization vanishes") {
  Rng rng(15);
  NoncausalFir g(2, 2);
  for (auto& c : g.coeffs) c = rng.gauss();
  std::vector<double> u(300);
  for (auto& v : u) v = rng.gauss();
  auto y = apply_fir(g, u);
  RegressionProblem prob = build_regression(u, y, 2, 2);
  Eigen::VectorXd theta_ls = prob.G.ldlt().solve(prob.zv);
  KernelSpec spec(KernelFamily::kNcsiFo,
                  {0.6, -0.4, 1.0, 0.5, -0.8, 0.7, 0.5, 0.3, 0.2});
  NoncausalFir theta = rls(prob, spec, 1e-8);
  for (int k = -2; k <= 2; ++k)
    REQUIRE(theta.at(k) == Catch::Approx(theta_ls(k + 2)).margin(1e-6));
}

TEST_CASE("rls joint scale invariance and dense oracle") {
  Rng rng(50);
  std::vector<double> u(60), y(60);
  for (auto& v : u) v = rng.gauss();
  for (auto& v : y) v = rng.gauss();
  RegressionProblem prob = build_regression(u, y, 2, 2);
  KernelSpec spec(KernelFamily::kNcsiFo,
                  {0.6, -0.4, 1.0, 0.5, -0.8, 0.7, 0.5, 0.3, 0.2});
  const double s2 = 0.3;
  NoncausalFir t1 = rls(prob, spec, s2);

  // scaling both K and sigma^2 by 10 leaves the estimate unchanged
  std::vector<double> eta = spec.eta;
  for (int i = 2; i <= 4; ++i) eta[static_cast<std::size_t>(i)] *= std::sqrt(10.0);
  KernelSpec scaled(KernelFamily::kNcsiFo, eta);
  NoncausalFir t2 = rls(prob, scaled, 10.0 * s2);
  for (int k = -2; k <= 2; ++k)
    REQUIRE(t1.at(k) == Catch::Approx(t2.at(k)).margin(1e-10));

  // dense dual-form oracle: theta = K Psi^T (Psi K Psi^T + s2 I)^{-1} Y
  Eigen::MatrixXd K = gram(spec, prob.grid());
  Eigen::MatrixXd S = prob.Psi * K * prob.Psi.transpose();
  S.diagonal().array() += s2;
  Eigen::VectorXd dual = K * prob.Psi.transpose() * S.ldlt().solve(prob.Y);
  for (int k = -2; k <= 2; ++k)
    REQUIRE(t1.at(k) == Catch::Approx(dual(k + 2)).margin(
                            1e-8 * std::max(1.0, dual.cwiseAbs().maxCoeff())));

  // normal-equation residual for PD K
  Eigen::VectorXd theta_v(5);
  for (int k = -2; k <= 2; ++k) theta_v(k + 2) = t1.at(k);
  Eigen::MatrixXd Kinv = K.inverse();
  Eigen::VectorXd resid =
      (prob.G + s2 * Kinv) * theta_v - prob.zv;
  REQUIRE(resid.norm() <= 1e-8 * prob.zv.norm());
}

TEST_CASE("eb objective closed cases and oracle agreement") {
  Rng rng(90);
  std::vector<double> u(30), y(30);
  for (auto& v : u) v = rng.gauss();
  for (auto& v : y) v = rng.gauss();
  RegressionProblem prob = build_regression(u, y, 2, 2);
  const double s2 = 0.7;

  // zero kernel: quad = ||Y||^2/s2, logdet = m log s2
  KernelSpec zero(KernelFamily::kNcTc, {0.0, 0.5, 0.5});
  double expect = prob.yty / s2 + prob.m() * std::log(s2);
  REQUIRE(eb_objective(zero, prob, s2) == Catch::Approx(expect).margin(1e-8));

  for (int rep = 0; rep < 6; ++rep) {
    KernelSpec spec = sample_test_spec(KernelFamily::kNcsiFo, rng);
    double fast = eb_objective(spec, prob, s2);
    double output_form = eb_objective_output_form(spec, prob, s2);
    REQUIRE(fast == Catch::Approx(output_form).margin(
                        1e-8 * std::max(1.0, std::abs(output_form))));

    // eigendecomposition oracle on the m x m covariance
    Eigen::MatrixXd K = gram(spec, prob.grid());
    Eigen::MatrixXd S = prob.Psi * K * prob.Psi.transpose();
    S.diagonal().array() += s2;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    double quad = 0.0, logdet = 0.0;
    for (int i = 0; i < prob.m(); ++i) {
      double proj = es.eigenvectors().col(i).dot(prob.Y);
      quad += proj * proj / es.eigenvalues()(i);
      logdet += std::log(es.eigenvalues()(i));
    }
    REQUIRE(fast == Catch::Approx(quad + logdet)
                        .margin(1e-10 * std::max(1.0, std::abs(quad + logdet))));
  }
}

TEST_CASE("eb objective at rho = 1 matches the rank-1 optimal form") {
  Rng rng(14);
  std::vector<double> u(40), y(40);
  for (auto& v : u) v = rng.gauss();
  for (auto& v : y) v = rng.gauss();
  RegressionProblem prob = build_regression(u, y, 3, 3);
  const double s2 = 0.4;
  KernelSpec dc(KernelFamily::kNcsiDc, {0.7, 0.5, 1.2, 0.8, -0.6, 1.0, 1.0});
  auto [g0, b] = fo_params_of(dc);
  NoncausalFir tabulated(3, 3);
  for (int k = -3; k <= 3; ++k) tabulated.at(k) = g0_fo(k, g0);
  KernelSpec opt = KernelSpec::optimal(tabulated);
  double a = eb_objective(dc, prob, s2);
  double o = eb_objective(opt, prob, s2);
  REQUIRE(a == Catch::Approx(o).margin(1e-8 * std::max(1.0, std::abs(o))));
}

TEST_CASE("tune runs ten local searches per hyper-parameter") {
  Rng rng(33);
  NoncausalFir g(2, 2);
  for (auto& c : g.coeffs) c = rng.gauss();
  std::vector<double> u(120);
  for (auto& v : u) v = rng.gauss();
  auto y = apply_fir(g, u);
  for (auto& v : y) v += 0.1 * rng.gauss();
  RegressionProblem prob = build_regression(u, y, 2, 2);
  double s2 = estimate_noise_variance(prob);
  TuneOptions topt;
  topt.max_iterations = 60;
  TuneResult res = tune_hyperparameters(KernelFamily::kNcTc, prob, s2, 5, topt);
  REQUIRE(res.n_runs == 30);
  REQUIRE(res.spec.family == KernelFamily::kNcTc);
  REQUIRE(std::isfinite(res.objective));

  TuneResult res2 = tune_hyperparameters(KernelFamily::kNcTc, prob, s2, 5, topt);
  REQUIRE(res2.spec.eta == res.spec.eta);  // bit-exact determinism
  REQUIRE(res2.objective == res.objective);
}

TEST_CASE("one-dimensional restriction matches golden-section search") {
  Rng rng(44);
  std::vector<double> u(100), y(100);
  for (auto& v : u) v = rng.gauss();
  for (auto& v : y) v = rng.gauss();
  RegressionProblem prob = build_regression(u, y, 2, 2);
  const double s2 = 0.5;
  auto restricted = [&](double c) {
    KernelSpec spec(KernelFamily::kNcTc, {c, 0.6, 0.6});
    return eb_objective(spec, prob, s2);
  };
  // golden-section oracle over c in [1e-6, 50]
  double lo = 1e-6, hi = 50.0;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
  double fa = restricted(a), fb = restricted(b);
  while (hi - lo > 1e-8) {
    if (fa < fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - phi * (hi - lo);
      fa = restricted(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + phi * (hi - lo);
      fb = restricted(b);
    }
  }
  double golden_c = 0.5 * (lo + hi);

  Objective f1 = [&](const Eigen::VectorXd& x) { return restricted(x(0)); };
  std::vector<BoxCoord> box = {{1e-6, 50.0, true}};
  MultistartResult res = multistart_minimize(f1, box, 10, 2, {});
  REQUIRE(res.x(0) == Catch::Approx(golden_c).margin(1e-4 * std::max(1.0, golden_c)));
}

TEST_CASE("identify composes the pipeline deterministically") {
  Rng rng(60);
  NoncausalFir g(3, 3);
  for (auto& c : g.coeffs) c = rng.gauss();
  std::vector<double> u(250);
  for (auto& v : u) v = rng.gauss();
  auto y = apply_fir(g, u);
  for (auto& v : y) v += 0.05 * rng.gauss();
  TuneOptions topt;
  topt.max_iterations = 60;
  EstimationResult r1 = identify(u, y, KernelFamily::kNcTc, 3, 3, 9, topt);
  EstimationResult r2 = identify(u, y, KernelFamily::kNcTc, 3, 3, 9, topt);
  REQUIRE(r1.eta_hat.eta == r2.eta_hat.eta);
  REQUIRE(r1.theta_hat.coeffs == r2.theta_hat.coeffs);
  REQUIRE(r1.n_restarts == 30);
  REQUIRE(r1.sigma2_hat > 0.0);
  // invariant: stored objective is reproducible from the stored eta
  RegressionProblem prob = build_regression(u, y, 3, 3);
  double recomputed = eb_objective(r1.eta_hat, prob, r1.sigma2_hat);
  REQUIRE(recomputed == Catch::Approx(r1.eb_objective)
                            .epsilon(1e-6));
  nlohmann::json j = to_json(r1);
  REQUIRE(j.at("n_restarts").get<int>() == 30);
  REQUIRE(j.at("theta").size() == 7);
}
