// Acceptance checks: one pass/fail line per criterion.
//
// Criteria 1-3 run full Monte-Carlo campaigns (hours of CPU); their results
// are cached under NCKRM_ACCEPTANCE_CACHE (default ./acceptance_cache) so a
// re-run only re-reads summary.json. Pass criterion numbers as arguments to
// run a subset, e.g. `nckrm_acceptance 4 5 6 7 8`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nckrm/bench.hpp>
#include <nckrm/estimator.hpp>
#include <nckrm/inverse.hpp>
#include <nckrm/kernels.hpp>
#include <nckrm/semisep.hpp>
#include <nckrm/systems.hpp>

#include "helpers.hpp"

using namespace nckrm;
using nckrm_test::sample_test_spec;

namespace {

std::filesystem::path cache_dir() {
  if (const char* env = std::getenv("NCKRM_ACCEPTANCE_CACHE"))
    return std::filesystem::path(env);
  return std::filesystem::path("acceptance_cache");
}

int n_jobs() {
  if (const char* env = std::getenv("NCKRM_JOBS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

struct CampaignRow {
  double fit_mean = 0.0;
  double err_mean = 0.0;
  int n_runs = 0;
};

// Runs (or re-reads) a cached benchmark campaign and returns per-family means.
std::map<std::string, CampaignRow> campaign(
    const std::string& name, const DatabankConfig& cfg,
    const std::vector<KernelFamily>& families, int N, int runs,
    std::uint64_t bench_seed) {
  std::filesystem::path bank_dir = cache_dir() / (name + "_bank");
  std::filesystem::path res_dir = cache_dir() / (name + "_results");
  if (!std::filesystem::exists(res_dir / "summary.json")) {
    if (!std::filesystem::exists(bank_dir / "manifest.json")) {
      std::fprintf(stderr, "[acceptance] generating databank %s...\n",
                   name.c_str());
      make_databank(cfg, bank_dir);
    }
    Databank bank = load_databank(bank_dir);
    BenchmarkOptions opt;
    opt.mc_runs = runs;
    opt.seed = bench_seed;
    opt.jobs = n_jobs();
    auto t0 = std::chrono::steady_clock::now();
    opt.on_progress = [&](int done, int total) {
      double el = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
      std::fprintf(stderr, "[acceptance] %s: %d/%d tasks (%.0f s elapsed)\n",
                   name.c_str(), done, total, el);
    };
    BenchmarkResult res = run_benchmark(bank, families, {N}, opt);
    write_benchmark_outputs(res, databank_name(cfg.id), res_dir);
  }
  nlohmann::json summary = nlohmann::json::parse(
      detail::read_text_file(res_dir / "summary.json"));
  std::map<std::string, CampaignRow> out;
  for (const auto& row : summary.at("summary")) {
    if (row.at("N").get<int>() != N) continue;
    CampaignRow cr;
    cr.n_runs = row.at("n_runs").get<int>();
    if (cr.n_runs > 0) {
      cr.fit_mean = row.at("fit").at("mean").get<double>();
      cr.err_mean = row.at("err").at("mean").get<double>();
    }
    out[row.at("family").get<std::string>()] = cr;
  }
  return out;
}

std::map<std::string, CampaignRow> d1_campaign() {
  DatabankConfig cfg = default_databank_config(DatabankId::kD1);
  cfg.n_systems = 50;
  cfg.seed = 1;
  return campaign("d1", cfg,
                  {KernelFamily::kNcTc, KernelFamily::kNcbdTc,
                   KernelFamily::kNcbdDc, KernelFamily::kNcsiDc,
                   KernelFamily::kNcsiFo},
                  2000, 50, 11);
}

std::map<std::string, CampaignRow> d4_campaign() {
  DatabankConfig cfg = default_databank_config(DatabankId::kD4);
  cfg.n_systems = 50;
  cfg.seed = 4;
  return campaign("d4", cfg,
                  {KernelFamily::kNcbdDc, KernelFamily::kNcsiFo,
                   KernelFamily::kNcsiFoMp},
                  700, 50, 41);
}

bool criterion1(std::string& msg) {
  auto rows = d1_campaign();
  double fit_nctc = rows.at("nctc").fit_mean;
  double fit_fo = rows.at("ncsifo").fit_mean;
  double err_fo = rows.at("ncsifo").err_mean;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "D1 N=2000: FIT nctc %.2f (target 49.48+-6), FIT ncsifo %.2f "
                "(target 76.85+-5), ERR ncsifo %.4f (target 0.087+-0.015)",
                fit_nctc, fit_fo, err_fo);
  msg = buf;
  return std::abs(fit_nctc - 49.48) <= 6.0 && std::abs(fit_fo - 76.85) <= 5.0 &&
         std::abs(err_fo - 0.087) <= 0.015;
}

bool criterion2(std::string& msg) {
  auto rows = d1_campaign();
  double fo = rows.at("ncsifo").fit_mean, dc = rows.at("ncsidc").fit_mean,
         bd = rows.at("ncbddc").fit_mean, bt = rows.at("ncbdtc").fit_mean,
         nc = rows.at("nctc").fit_mean;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "D1 ordering: ncsifo %.2f > ncsidc-2 %.2f > ncbddc %.2f > "
                "ncbdtc %.2f > nctc %.2f",
                fo, dc - 2.0, bd, bt, nc);
  msg = buf;
  return fo > dc - 2.0 && dc - 2.0 > bd && bd > bt && bt > nc;
}

bool criterion3(std::string& msg) {
  auto rows = d4_campaign();
  double mp = rows.at("ncsifo-mp").fit_mean, fo = rows.at("ncsifo").fit_mean,
         bd = rows.at("ncbddc").fit_mean;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "D4 N=700: FIT ncsifo-mp %.2f >= ncsifo %.2f, both >= "
                "ncbddc %.2f + 4",
                mp, fo, bd);
  msg = buf;
  return mp >= fo && fo >= bd + 4.0 && mp >= bd + 4.0;
}

bool criterion4(std::string& msg) {
  Rng rng(40404);
  double worst = 0.0;
  for (KernelFamily fam : {KernelFamily::kNcsiFo, KernelFamily::kNcsiDc,
                           KernelFamily::kNcsiTc}) {
    for (int rep = 0; rep < 20; ++rep) {
      KernelSpec spec = sample_test_spec(fam, rng);
      auto [g0, b] = fo_params_of(spec);
      for (int t = -20; t <= 20; ++t)
        for (int s = t; s <= 20; ++s) {
          double oracle = ncsi_truncated_oracle(g0, b, t, s, 400);
          worst = std::max(worst, std::abs(eval(spec, t, s) - oracle));
        }
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof buf,
                "closed forms vs truncated oracle: max abs error %.3g "
                "(tolerance 1e-9)", worst);
  msg = buf;
  return worst <= 1e-9;
}

bool criterion5(std::string& msg) {
  Rng rng(50505);
  // generator reconstruction + Corollary diagonal case
  double worst_rec = 0.0, worst_diag = 0.0;
  std::vector<int> grid;
  for (int t = -15; t <= 15; ++t) grid.push_back(t);
  for (int rep = 0; rep < 10; ++rep) {
    KernelSpec spec = sample_test_spec(KernelFamily::kNcsiFo, rng);
    SemisepGenerators gen = fo_generators(spec, grid);
    double scale = 0.0;
    for (int t : grid) scale = std::max(scale, std::abs(eval(spec, t, t)));
    for (int t : grid)
      for (int s : grid)
        if (t != s)
          worst_rec = std::max(
              worst_rec,
              std::abs(reconstruct(gen, t, s) - eval(spec, t, s)) / scale);

    std::vector<double> eta = spec.eta;
    eta[3] = eta[2];  // c_0 = c_c: diagonal correction must vanish
    SemisepGenerators tied =
        fo_generators(KernelSpec(KernelFamily::kNcsiFo, eta), grid);
    for (int i = 0; i < tied.size(); ++i) {
      double prod = tied.mu.row(i).dot(tied.nu.row(i));
      worst_diag = std::max(worst_diag, std::abs(tied.diag(i) - prod) /
                                            std::max(1.0, std::abs(prod)));
    }
  }
  bool rec_ok = worst_rec <= 1e-10 && worst_diag <= 1e-10;

  // structured Cholesky residual vs dense at fixed sizes. The bare Gram is
  // numerically rank-deficient, so a ridge (seen identically by both
  // representations) keeps the comparison well-posed; the parameter sets are
  // chosen so the generator dynamic range stays in double range at n=1024.
  const NominalFoParams chol_g0[3] = {{0.9, 0.85, 0.7, -0.3, 1.2},
                                      {0.97, -0.9, 1.0, 1.0, 1.0},
                                      {0.92, -0.88, 1.0, 0.5, -0.8}};
  const UncertaintyFoParams chol_b[3] = {
      {0.9, 0.7, 1.0, 0.6}, {0.85, 0.9, 0.4, 1.1}, {0.8, 0.8, 0.5, 0.5}};
  double worst_chol = 0.0;
  for (int c = 0; c < 3; ++c)
    for (int n : {64, 256, 1024}) {
      std::vector<int> g;
      for (int t = -n / 2; t < n - n / 2; ++t) g.push_back(t);
      SemisepGenerators gen = fo_generators(chol_g0[c], chol_b[c], g);
      gen.diag.array() += 1e-4 * gen.diag.sum() / n;
      Eigen::MatrixXd K = expand_dense(gen);
      K.diagonal().array() += 1e-10 * K.trace() / n;
      Eigen::MatrixXd L = structured_cholesky(gen).expand_dense();
      worst_chol =
          std::max(worst_chol, (L * L.transpose() - K).norm() / K.norm());
    }
  bool chol_ok = worst_chol <= 1e-8;

  // timing slopes on log-log over n in {1000..8000}; the strong ridge only
  // conditions the factorizations, the flop count is unchanged
  NominalFoParams g0{0.95, -0.95, 1.0, 0.5, -0.8};
  UncertaintyFoParams b{0.8, 0.8, 0.5, 0.5};
  std::vector<double> logn, logts, logtd;
  for (int n : {1000, 2000, 4000, 8000}) {
    std::vector<int> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = i - n / 2;
    SemisepGenerators gen = fo_generators(g0, b, g);
    gen.diag.array() += gen.diag.sum() / n;
    auto t0 = std::chrono::steady_clock::now();
    structured_cholesky(gen);
    auto t1 = std::chrono::steady_clock::now();
    Eigen::MatrixXd K = expand_dense(gen);
    auto t2 = std::chrono::steady_clock::now();
    dense_cholesky(std::move(K));
    auto t3 = std::chrono::steady_clock::now();
    logn.push_back(std::log(static_cast<double>(n)));
    logts.push_back(
        std::log(std::chrono::duration<double>(t1 - t0).count() + 1e-9));
    logtd.push_back(
        std::log(std::chrono::duration<double>(t3 - t2).count() + 1e-9));
  }
  auto slope = [&](const std::vector<double>& y) {
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < logn.size(); ++i) {
      mx += logn[i];
      my += y[i];
    }
    mx /= static_cast<double>(logn.size());
    my /= static_cast<double>(logn.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < logn.size(); ++i) {
      num += (logn[i] - mx) * (y[i] - my);
      den += (logn[i] - mx) * (logn[i] - mx);
    }
    return num / den;
  };
  double s_struct = slope(logts), s_dense = slope(logtd);
  bool timing_ok = s_struct <= 1.3 && s_dense >= 2.5;

  char buf[256];
  std::snprintf(buf, sizeof buf,
                "reconstruction %.2g, tied-diagonal %.2g, chol residual %.2g, "
                "slopes structured %.2f (<=1.3) dense %.2f (>=2.5)",
                worst_rec, worst_diag, worst_chol, s_struct, s_dense);
  msg = buf;
  return rec_ok && chol_ok && timing_ok;
}

bool criterion6(std::string& msg) {
  Rng rng(60606);
  double worst_ratio = 0.0;
  const std::vector<KernelFamily> families = {
      KernelFamily::kNcTc,     KernelFamily::kNcbdTc,
      KernelFamily::kNcbdTcMp, KernelFamily::kNcbdDc,
      KernelFamily::kNcbdDcMp, KernelFamily::kNcsiTc,
      KernelFamily::kNcsiDc,   KernelFamily::kNcsiFo,
      KernelFamily::kNcsiFoMp, KernelFamily::kDc,
      KernelFamily::kTc,       KernelFamily::kOptimal};
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<int> grid;
    int t = -static_cast<int>(rng.uniform(10.0, 30.0));
    std::size_t sz = 20 + static_cast<std::size_t>(rng.uniform(0.0, 40.0));
    while (grid.size() < sz) {
      grid.push_back(t);
      t += 1 + static_cast<int>(rng.uniform(0.0, 2.0));
    }
    for (KernelFamily fam : families) {
      KernelSpec spec;
      if (fam == KernelFamily::kOptimal) {
        NoncausalFir g(static_cast<int>(-grid.front()),
                       static_cast<int>(grid.back()));
        for (auto& c : g.coeffs) c = rng.gauss();
        spec = KernelSpec::optimal(g);
      } else {
        spec = sample_test_spec(fam, rng);
      }
      Eigen::MatrixXd K = gram(spec, grid);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
      double lmax = std::max(1.0, es.eigenvalues().maxCoeff());
      double lmin = es.eigenvalues().minCoeff();
      if (lmin < 0.0) worst_ratio = std::max(worst_ratio, -lmin / lmax);
    }
  }
  bool psd_ok = worst_ratio <= 1e-8;

  bool tail_ok = true;
  for (int rep = 0; rep < 10; ++rep) {
    KernelSpec spec = sample_test_spec(KernelFamily::kNcsiFo, rng);
    StabilityTail st = stability_tail(spec, 80);
    if (!(st.partial_sum <= st.bound)) tail_ok = false;
  }
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "PSD worst -lmin/lmax %.3g (tolerance 1e-8), stability bound %s",
                worst_ratio, tail_ok ? "respected" : "VIOLATED");
  msg = buf;
  return psd_ok && tail_ok;
}

bool criterion7(std::string& msg) {
  Rng rng(70707);
  double worst_dual = 0.0, worst_scale = 0.0, worst_eb = 0.0;
  for (int rep = 0; rep < 8; ++rep) {
    int n_a = 2 + static_cast<int>(rng.uniform(0.0, 2.0));
    int n_c = 2 + static_cast<int>(rng.uniform(0.0, 2.0));
    int N = 40 + static_cast<int>(rng.uniform(0.0, 20.0));
    std::vector<double> u(static_cast<std::size_t>(N)),
        y(static_cast<std::size_t>(N));
    for (auto& v : u) v = rng.gauss();
    for (auto& v : y) v = rng.gauss();
    RegressionProblem prob = build_regression(u, y, n_a, n_c);
    double s2 = 0.2 + rng.uniform(0.0, 1.0);
    KernelSpec spec = sample_test_spec(KernelFamily::kNcsiFo, rng);
    int n = prob.n();

    NoncausalFir t1 = rls(prob, spec, s2);
    Eigen::VectorXd tv(n);
    for (int k = -n_a; k <= n_c; ++k) tv(k + n_a) = t1.at(k);

    Eigen::MatrixXd K = gram(spec, prob.grid());
    Eigen::MatrixXd S = prob.Psi * K * prob.Psi.transpose();
    S.diagonal().array() += s2;
    Eigen::VectorXd dual = K * prob.Psi.transpose() * S.ldlt().solve(prob.Y);
    worst_dual = std::max(worst_dual,
                          (tv - dual).norm() / std::max(1.0, dual.norm()));

    std::vector<double> eta = spec.eta;
    for (int i = 2; i <= 4; ++i) eta[static_cast<std::size_t>(i)] *= 2.0;
    NoncausalFir t2 = rls(prob, KernelSpec(KernelFamily::kNcsiFo, eta),
                          4.0 * s2);
    for (int k = -n_a; k <= n_c; ++k)
      worst_scale = std::max(worst_scale, std::abs(t1.at(k) - t2.at(k)));

    double fast = eb_objective(spec, prob, s2);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    double quad = 0.0, logdet = 0.0;
    for (int i = 0; i < prob.m(); ++i) {
      double proj = es.eigenvectors().col(i).dot(prob.Y);
      quad += proj * proj / es.eigenvalues()(i);
      logdet += std::log(es.eigenvalues()(i));
    }
    worst_eb = std::max(worst_eb, std::abs(fast - quad - logdet) /
                                      std::max(1.0, std::abs(quad + logdet)));
  }

  // multistart count: exactly 10 * dim(eta)
  bool count_ok = true;
  {
    std::vector<double> u(120), y(120);
    for (auto& v : u) v = rng.gauss();
    for (auto& v : y) v = rng.gauss();
    RegressionProblem prob = build_regression(u, y, 2, 2);
    TuneOptions topt;
    topt.max_iterations = 40;
    for (KernelFamily fam : {KernelFamily::kNcTc, KernelFamily::kNcsiTc}) {
      TuneResult res = tune_hyperparameters(fam, prob, 0.5, 3, topt);
      int expected = 10 * static_cast<int>(kernel_coord_kinds(fam).size());
      if (res.n_runs != expected) count_ok = false;
    }
  }
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "dual-form %.2g (<=1e-8), scale invariance %.2g (<=1e-10), EB "
                "vs eigen oracle %.2g (<=1e-10), restart count %s",
                worst_dual, worst_scale, worst_eb, count_ok ? "exact" : "WRONG");
  msg = buf;
  return worst_dual <= 1e-8 && worst_scale <= 1e-10 && worst_eb <= 1e-10 &&
         count_ok;
}

bool criterion8(std::string& msg) {
  double worst = 0.0;
  {
    NoncausalFir g = noncausal_inverse_ir(d1_system(), 150, 150);
    NoncausalFir o = noncausal_inverse_ir_fft_oracle(d1_system(), 150, 4096);
    for (int k = -150; k <= 150; ++k)
      worst = std::max(worst, std::abs(g.at(k) - o.at(k)));
  }
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    DiscreteRational P = random_system_d2(seed);
    NoncausalFir g = noncausal_inverse_ir(P, 300, 300);
    NoncausalFir o = noncausal_inverse_ir_fft_oracle(P, 300, 4096);
    for (int k = -300; k <= 300; ++k)
      worst = std::max(worst, std::abs(g.at(k) - o.at(k)));
  }
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    DiscreteRational P = random_system_d4(seed);
    NoncausalFir g = noncausal_inverse_ir(P, 300, 300);
    NoncausalFir o = noncausal_inverse_ir_fft_oracle(P, 300, 4096);
    for (int k = -300; k <= 300; ++k)
      worst = std::max(worst, std::abs(g.at(k) - o.at(k)));
  }

  // P * g-hat approximates the unit impulse within the truncation bound
  DiscreteRational P = d1_system();
  InverseResult res = noncausal_inverse_ir_info(P, 150, 150);
  const int p_len = 600;
  std::vector<double> impulse(static_cast<std::size_t>(p_len), 0.0);
  impulse[0] = 1.0;
  auto p_ir = simulate(P.to_state_space(), impulse);
  double p_linf = 0.0;
  for (double v : p_ir) p_linf = std::max(p_linf, std::abs(v));
  double conv_bound = 4.0 * (res.l1_tail + 1e-9) * p_linf + 1e-9;
  double conv_worst = 0.0;
  for (int lag = -20; lag <= 20; ++lag) {
    double acc = 0.0;
    for (int k = 0; k < p_len; ++k)
      acc += p_ir[static_cast<std::size_t>(k)] * res.fir.tap(lag - k);
    acc -= (lag == 0) ? 1.0 : 0.0;
    conv_worst = std::max(conv_worst, std::abs(acc));
  }
  char buf[192];
  std::snprintf(buf, sizeof buf,
                "inversion vs FFT oracle max error %.3g (<=1e-6); convolution "
                "deviation %.3g (bound %.3g)",
                worst, conv_worst, conv_bound);
  msg = buf;
  return worst <= 1e-6 && conv_worst <= conv_bound;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  if (wanted.empty()) wanted = {1, 2, 3, 4, 5, 6, 7, 8};

  using Check = bool (*)(std::string&);
  const std::pair<int, Check> checks[] = {
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},
      {5, criterion5}, {6, criterion6}, {7, criterion7}, {8, criterion8}};
  bool all_ok = true;
  for (auto [num, fn] : checks) {
    if (wanted.count(num) == 0) continue;
    std::string msg;
    bool ok = false;
    try {
      ok = fn(msg);
    } catch (const std::exception& e) {
      msg = std::string("exception: ") + e.what();
    }
    std::printf("criterion %d: %s — %s\n", num, ok ? "PASS" : "FAIL",
                msg.c_str());
    std::fflush(stdout);
    all_ok = all_ok && ok;
  }
  return all_ok ? 0 : 1;
}
