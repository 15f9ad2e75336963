#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "nckrm/fir.hpp"
#include "nckrm/kernels.hpp"
#include "nckrm/optim.hpp"
#include "nckrm/semisep.hpp"

namespace nckrm {

// Y = Psi * theta + noise, theta = [g(-n_a), ..., g(n_c)].
// Row r is output time t = n_c + 1 + r (1-based data indexing), and
// Psi(r, j) = u(t + n_a - j).
struct RegressionProblem {
  Eigen::VectorXd Y;
  Eigen::MatrixXd Psi;
  int n_a = 0;
  int n_c = 0;
  int N = 0;
  std::vector<double> u, y;  // retained for the reduced-window noise fit

  // cached cross-products (the hyper-parameter search reuses them heavily)
  Eigen::MatrixXd G;   // Psi^T Psi
  Eigen::VectorXd zv;  // Psi^T Y
  double yty = 0.0;

  // whitened-input quantities for the numerically stable evidence form,
  // available when G is positive definite: G = L L^T, b1 = L^{-1} z, and
  // rss = ||Y||^2 - ||b1||^2 is the least-squares residual sum of squares
  bool g_pd = false;
  Eigen::MatrixXd L;
  Eigen::VectorXd b1;
  double rss = 0.0;

  int m() const { return static_cast<int>(Y.size()); }
  int n() const { return n_a + n_c + 1; }

  std::vector<int> grid() const {
    std::vector<int> g;
    for (int k = -n_a; k <= n_c; ++k) g.push_back(k);
    return g;
  }
};

inline RegressionProblem build_regression(const std::vector<double>& u,
                                          const std::vector<double>& y, int n_a,
                                          int n_c) {
  if (u.size() != y.size())
    throw std::invalid_argument("build_regression: u and y lengths differ");
  if (n_a < 0 || n_c < 0)
    throw std::invalid_argument("build_regression: negative order");
  const int N = static_cast<int>(u.size());
  const int m = N - n_a - n_c;
  if (m < 1)
    throw std::invalid_argument("build_regression: insufficient data (N = " +
                                std::to_string(N) + ", window = " +
                                std::to_string(n_a + n_c + 1) + ")");
  RegressionProblem prob;
  prob.n_a = n_a;
  prob.n_c = n_c;
  prob.N = N;
  prob.u = u;
  prob.y = y;
  const int n = n_a + n_c + 1;
  prob.Y.resize(m);
  prob.Psi.resize(m, n);
  for (int r = 0; r < m; ++r) {
    prob.Y(r) = y[static_cast<std::size_t>(n_c + r)];
    for (int j = 0; j < n; ++j)
      prob.Psi(r, j) = u[static_cast<std::size_t>(n_c + r + n_a - j)];
  }
  prob.G.noalias() = prob.Psi.transpose() * prob.Psi;
  prob.zv.noalias() = prob.Psi.transpose() * prob.Y;
  prob.yty = prob.Y.squaredNorm();
  if (m >= n) {
    Eigen::LLT<Eigen::MatrixXd> llt(prob.G);
    if (llt.info() == Eigen::Success) {
      Eigen::VectorXd d = llt.matrixL().toDenseMatrix().diagonal();
      if (d.minCoeff() > 1e-8 * d.maxCoeff()) {
        prob.L = llt.matrixL();
        prob.b1 = prob.L.triangularView<Eigen::Lower>().solve(prob.zv);
        prob.rss = std::max(0.0, prob.yty - prob.b1.squaredNorm());
        prob.g_pd = true;
      }
    }
  }
  return prob;
}

// Residual-variance estimate from an ordinary least-squares FIR fit. When the
// window is too wide for well-posed LS (m < 2n), the FIR orders are shrunk
// symmetrically to the largest h with N - 2h >= 2(2h + 1).
inline double estimate_noise_variance(const RegressionProblem& prob) {
  const RegressionProblem* p = &prob;
  std::optional<RegressionProblem> reduced;
  if (prob.m() < 2 * prob.n()) {
    int h = (prob.N - 2) / 6;
    if (h < 0) h = 0;
    reduced = build_regression(prob.u, prob.y, h, h);
    p = &reduced.value();
    if (p->m() - p->n() <= 0)
      throw std::runtime_error(
          "estimate_noise_variance: too little data even after shrinking the "
          "window (N = " + std::to_string(prob.N) + ")");
  }
  Eigen::VectorXd theta = p->G.ldlt().solve(p->zv);
  double resid = (p->Y - p->Psi * theta).squaredNorm();
  return resid / (p->m() - p->n());
}

namespace detail {

// Shared factorization behind the estimate and the evidence:
//   theta  = (sigma^2 I + K G)^{-1} K z
//   quad   = Y^T (sigma^2 I_m + Psi K Psi^T)^{-1} Y
//   logdet(sigma^2 I_m + Psi K Psi^T) = (m - n) log sigma^2 + logdet_M
struct EbFactorization {
  Eigen::VectorXd theta;
  double quad = 0.0;
  double logdet_M = 0.0;
};

// Grid span beyond which generator magnitudes |a|^(span/2) would leave the
// comfortable double range; falls back to the dense Gram path.
inline bool semisep_safe(const NominalFoParams& g0, int span) {
  double amin = std::min(std::abs(g0.a_c), std::abs(g0.a_a));
  if (amin == 0.0) return false;
  return 0.5 * span * std::log(amin) > -250.0;
}

inline EbFactorization eb_factorize(const KernelSpec& spec,
                                    const RegressionProblem& prob,
                                    double sigma2) {
  if (!(sigma2 > 0.0))
    throw std::invalid_argument("eb_factorize: sigma2 must be positive");
  const int n = prob.n();
  EbFactorization out;

  if (prob.g_pd) {
    // Whitened form: with G = L L^T and S = L^T K L (symmetric PSD),
    //   logdet_M = logdet(sigma^2 I + S)
    //   quad     = rss / sigma^2 + b1^T (sigma^2 I + S)^{-1} b1
    //   theta    = L^{-T} (b1 - sigma^2 (sigma^2 I + S)^{-1} b1)
    // Every term is a PD solve or a nonnegative sum, so a numerically
    // rank-deficient K cannot produce spurious cancellation.
    Eigen::MatrixXd KL;
    bool structured = false;
    if (is_ncsi_family(spec.family)) {
      auto [g0, b] = fo_params_of(spec);
      if (semisep_safe(g0, prob.n_a + prob.n_c)) {
        SemisepGenerators gen = fo_generators(g0, b, prob.grid());
        KL = semisep_matmat(gen, prob.L);
        structured = true;
      }
    }
    if (!structured) {
      Eigen::MatrixXd K = gram(spec, prob.grid());
      KL.noalias() = K * prob.L.triangularView<Eigen::Lower>().toDenseMatrix();
    }
    Eigen::MatrixXd S;
    S.noalias() = prob.L.transpose() * KL;
    S = 0.5 * (S + S.transpose()).eval();
    S.diagonal().array() += sigma2;
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("eb_factorize: regularized system not PD");
    double logdet = 0.0;
    for (int i = 0; i < n; ++i) logdet += std::log(llt.matrixL()(i, i));
    out.logdet_M = 2.0 * logdet;
    Eigen::VectorXd w = llt.solve(prob.b1);
    out.quad = prob.rss / sigma2 + prob.b1.dot(w);
    out.theta = prob.L.transpose().triangularView<Eigen::Upper>().solve(
        Eigen::VectorXd(prob.b1 - sigma2 * w));
    return out;
  }

  // Fallback for rank-deficient G (short records, m < n): LU of the
  // unsymmetric M = sigma^2 I + K G, which stays valid for singular K.
  Eigen::MatrixXd M;
  Eigen::VectorXd Kz;
  bool structured = false;
  if (is_ncsi_family(spec.family)) {
    auto [g0, b] = fo_params_of(spec);
    if (semisep_safe(g0, prob.n_a + prob.n_c)) {
      SemisepGenerators gen = fo_generators(g0, b, prob.grid());
      M.noalias() = semisep_matmat(gen, prob.G);
      Kz = semisep_matvec(gen, prob.zv);
      structured = true;
    }
  }
  if (!structured) {
    Eigen::MatrixXd K = gram(spec, prob.grid());
    M.noalias() = K * prob.G;
    Kz.noalias() = K * prob.zv;
  }
  M.diagonal().array() += sigma2;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
  const auto& lu_mat = lu.matrixLU();
  double logdet = 0.0;
  for (int i = 0; i < n; ++i) {
    double piv = std::abs(lu_mat(i, i));
    if (!(piv > 0.0))
      throw std::runtime_error("eb_factorize: singular regularized system");
    logdet += std::log(piv);
  }
  out.logdet_M = logdet;
  out.theta = lu.solve(Kz);
  out.quad = (prob.yty - prob.zv.dot(out.theta)) / sigma2;
  if (!(out.quad >= 0.0))
    throw std::runtime_error("eb_factorize: evidence quadratic lost positivity");
  return out;
}

}  // namespace detail

// theta = argmin ||Y - Psi theta||^2 + sigma^2 theta^T K^{-1} theta,
// computed as (sigma^2 I + K Psi^T Psi)^{-1} K Psi^T Y, which is also valid
// for singular K.
inline NoncausalFir rls(const RegressionProblem& prob, const KernelSpec& spec,
                        double sigma2) {
  auto fac = detail::eb_factorize(spec, prob, sigma2);
  NoncausalFir fir(prob.n_a, prob.n_c);
  for (int k = -prob.n_a; k <= prob.n_c; ++k)
    fir.at(k) = fac.theta(k + prob.n_a);
  return fir;
}

// Negative log evidence Y^T (Psi K Psi^T + sigma^2 I)^{-1} Y
//                      + logdet(Psi K Psi^T + sigma^2 I).
inline double eb_objective(const KernelSpec& spec, const RegressionProblem& prob,
                           double sigma2) {
  auto fac = detail::eb_factorize(spec, prob, sigma2);
  return fac.quad + (prob.m() - prob.n()) * std::log(sigma2) + fac.logdet_M;
}

// Same objective evaluated literally in the output space via an m x m
// Cholesky; the oracle the fast path must agree with.
inline double eb_objective_output_form(const KernelSpec& spec,
                                       const RegressionProblem& prob,
                                       double sigma2) {
  Eigen::MatrixXd K = gram(spec, prob.grid());
  Eigen::MatrixXd Sigma = prob.Psi * K * prob.Psi.transpose();
  Sigma.diagonal().array() += sigma2;
  Eigen::LLT<Eigen::MatrixXd> llt(Sigma);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("eb_objective_output_form: matrix not PD");
  double logdet = 0.0;
  for (int i = 0; i < prob.m(); ++i) logdet += std::log(llt.matrixL()(i, i));
  return prob.Y.dot(llt.solve(prob.Y)) + 2.0 * logdet;
}

struct TuneOptions {
  int max_iterations = 500;
  double rel_tol = 1e-8;
  double fd_step = 1e-6;
  int prune_after = 6;       // 0 = run every start to convergence
  double prune_slack = 0.25;  // probes within 25% of the incumbent still finish
  int screen_factor = 20;     // candidate pool size multiple for start selection
  std::function<void(double)> on_step;
};

struct TuneResult {
  KernelSpec spec;
  double objective = 0.0;
  int n_runs = 0;
};

// Empirical-Bayes hyper-parameter search: 10 * dim(eta) quasi-Newton runs
// from uniform starts in the tuning box, lowest objective wins (ties break
// toward the earliest start).
inline TuneResult tune_hyperparameters(KernelFamily family,
                                       const RegressionProblem& prob,
                                       double sigma2, std::uint64_t seed,
                                       const TuneOptions& topt = {}) {
  auto kinds = kernel_coord_kinds(family);
  if (kinds.empty())
    throw std::invalid_argument("tune_hyperparameters: family has no tunable eta");
  std::vector<BoxCoord> box;
  for (CoordKind k : kinds) {
    Interval iv = coord_tuning_interval(k);
    box.push_back({iv.lo, iv.hi, k == CoordKind::kPositive});
  }
  Objective fn = [&](const Eigen::VectorXd& x) {
    KernelSpec spec(family, std::vector<double>(x.data(), x.data() + x.size()));
    return eb_objective(spec, prob, sigma2);
  };
  MultistartOptions mopt;
  mopt.max_iterations = topt.max_iterations;
  mopt.rel_tol = topt.rel_tol;
  mopt.fd_step = topt.fd_step;
  mopt.prune_after = topt.prune_after;
  mopt.prune_slack = topt.prune_slack;
  mopt.screen_factor = topt.screen_factor;
  mopt.on_step = topt.on_step;
  int n_starts = 10 * static_cast<int>(kinds.size());
  MultistartResult mr = multistart_minimize(fn, box, n_starts, seed, mopt);
  TuneResult out;
  out.spec = KernelSpec(family,
                        std::vector<double>(mr.x.data(), mr.x.data() + mr.x.size()));
  out.objective = mr.value;
  out.n_runs = mr.n_runs;
  return out;
}

struct EstimationResult {
  NoncausalFir theta_hat;
  KernelSpec eta_hat;
  double sigma2_hat = 0.0;
  double eb_objective = 0.0;
  int n_restarts = 0;
  double fit = std::numeric_limits<double>::quiet_NaN();  // filled by bench
  double err = std::numeric_limits<double>::quiet_NaN();  // filled by bench
};

inline EstimationResult identify(const std::vector<double>& u,
                                 const std::vector<double>& y,
                                 KernelFamily family, int n_a, int n_c,
                                 std::uint64_t seed,
                                 const TuneOptions& topt = {}) {
  RegressionProblem prob = build_regression(u, y, n_a, n_c);
  double sigma2 = estimate_noise_variance(prob);
  TuneResult tuned = tune_hyperparameters(family, prob, sigma2, seed, topt);
  EstimationResult res;
  res.theta_hat = rls(prob, tuned.spec, sigma2);
  res.eta_hat = tuned.spec;
  res.sigma2_hat = sigma2;
  res.eb_objective = tuned.objective;
  res.n_restarts = tuned.n_runs;
  return res;
}

inline nlohmann::json to_json(const EstimationResult& r) {
  nlohmann::json j;
  j["family"] = kernel_family_name(r.eta_hat.family);
  j["eta"] = r.eta_hat.eta;
  j["sigma2"] = r.sigma2_hat;
  j["eb_objective"] = r.eb_objective;
  j["n_restarts"] = r.n_restarts;
  nlohmann::json taps = nlohmann::json::array();
  for (int k = -r.theta_hat.n_a; k <= r.theta_hat.n_c; ++k)
    taps.push_back({k, r.theta_hat.at(k)});
  j["theta"] = taps;
  if (std::isfinite(r.fit)) j["fit"] = r.fit;
  if (std::isfinite(r.err)) j["err"] = r.err;
  return j;
}

}  // namespace nckrm
