#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <utility>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nckrm/fir.hpp"
#include "nckrm/rng.hpp"

namespace nckrm {

// ---------------------------------------------------------------------------
// Two-sided first-order building blocks.
//
// Nominal impulse response g0 and modulation envelope b, both piecewise
// exponential around t = 0. The simulation-induced kernel is
//   k(t,s) = sum_k b(k)^2 g0(t-k) g0(s-k).
// ---------------------------------------------------------------------------

struct NominalFoParams {
  double a_c = 0.0;  // causal pole, |a_c| < 1
  double a_a = 0.0;  // anti-causal pole, |a_a| < 1
  double c_c = 0.0;
  double c_0 = 0.0;
  double c_a = 0.0;
};

struct UncertaintyFoParams {
  double lambda_c = 0.0;  // causal decay, [0, 1)
  double lambda_a = 0.0;  // anti-causal decay, [0, 1)
  double sigma_c = 0.0;
  double sigma_a = 0.0;
  // the center weight sigma_0 is fixed to 1 for identifiability
};

inline double g0_fo(int t, const NominalFoParams& p) {
  if (t > 0) return p.c_c * std::pow(p.a_c, t);
  if (t < 0) return p.c_a * std::pow(p.a_a, -t);
  return p.c_0;
}

inline double b_fo(int t, const UncertaintyFoParams& p) {
  if (t > 0) return p.sigma_c * std::pow(p.lambda_c, 0.5 * t);
  if (t < 0) return p.sigma_a * std::pow(p.lambda_a, -0.5 * t);
  return 1.0;
}

// Brute-force truncated sum; ground truth for the closed-form evaluation.
template <typename G0Fn, typename BFn>
  requires std::invocable<G0Fn&, int> && std::invocable<BFn&, int>
double ncsi_truncated_oracle(G0Fn&& g0, BFn&& b, int t, int s, int k_trunc) {
  if (k_trunc < 1) throw std::invalid_argument("ncsi_truncated_oracle: k_trunc < 1");
  double sum = 0.0;
  for (int k = -k_trunc; k <= k_trunc; ++k) {
    double bk = b(k);
    sum += bk * bk * g0(t - k) * g0(s - k);
  }
  return sum;
}

inline double ncsi_truncated_oracle(const NominalFoParams& g0,
                                    const UncertaintyFoParams& b, int t, int s,
                                    int k_trunc) {
  return ncsi_truncated_oracle([&](int k) { return g0_fo(k, g0); },
                               [&](int k) { return b_fo(k, b); }, t, s, k_trunc);
}

// Geometric bound on the truncation error of the oracle beyond |k| = k_trunc.
inline double ncsi_oracle_tail_bound(const NominalFoParams& g0,
                                     const UncertaintyFoParams& b, int k_trunc) {
  double r = std::max({b.lambda_c, b.lambda_a, g0.a_c * g0.a_c, g0.a_a * g0.a_a});
  double amp = std::max({b.sigma_c * b.sigma_c, b.sigma_a * b.sigma_a, 1.0}) *
               std::max({g0.c_c * g0.c_c, g0.c_0 * g0.c_0, g0.c_a * g0.c_a, 1.0});
  if (r >= 1.0) return std::numeric_limits<double>::infinity();
  // each dropped term is bounded by amp * r^{|k|}; two tails
  return 2.0 * amp * std::pow(r, k_trunc + 1) / (1.0 - r);
}

// ---------------------------------------------------------------------------
// Closed-form evaluation of the simulation-induced kernel.
//
// The series sum_k b^2(k) g0(t-k) g0(s-k) is piecewise geometric in k with
// breakpoints at k in {0, s, t}. We split Z at those breakpoints: each
// breakpoint is evaluated directly, each open segment between (or beyond)
// them is a geometric series summed in closed form from its endpoint values.
// Endpoint terms only ever raise |a|, lambda < 1 to nonnegative powers, so
// nothing overflows regardless of how far t and s sit from the origin.
// ---------------------------------------------------------------------------

class NcsiFoEval {
 public:
  // table_span > 0 pre-tabulates integer powers up to that exponent, which
  // turns Gram-matrix fills into table lookups.
  NcsiFoEval(const NominalFoParams& g0, const UncertaintyFoParams& b,
             int table_span = 0)
      : g0_(g0), b_(b) {
    if (table_span > 0) {
      fill_table(ac_pow_, g0_.a_c, table_span);
      fill_table(aa_pow_, g0_.a_a, table_span);
      fill_table(lc_pow_, b_.lambda_c, table_span);
      fill_table(la_pow_, b_.lambda_a, table_span);
    }
  }

  double operator()(int t, int s) const {
    if (t < s) std::swap(t, s);  // canonical order makes symmetry exact
    int bp[3] = {0, s, t};
    std::sort(bp, bp + 3);
    int nbp = static_cast<int>(std::unique(bp, bp + 3) - bp);

    double sum = left_tail(bp[0] - 1, t, s) + right_tail(bp[nbp - 1] + 1, t, s);
    for (int i = 0; i < nbp; ++i) {
      sum += term(bp[i], t, s);
      if (i + 1 < nbp) sum += segment(bp[i] + 1, bp[i + 1] - 1, t, s);
    }
    return sum;
  }

  // One term of the series, safe for any k.
  double term(int k, int t, int s) const {
    return b2(k) * g0v(t - k) * g0v(s - k);
  }

 private:
  static void fill_table(std::vector<double>& tab, double base, int span) {
    tab.resize(static_cast<std::size_t>(span) + 1);
    tab[0] = 1.0;
    for (int e = 1; e <= span; ++e) tab[e] = tab[e - 1] * base;
  }

  static double pw(const std::vector<double>& tab, double base, int e) {
    if (!tab.empty() && e < static_cast<int>(tab.size())) return tab[static_cast<std::size_t>(e)];
    return std::pow(base, e);
  }

  double b2(int k) const {
    if (k > 0) return b_.sigma_c * b_.sigma_c * pw(lc_pow_, b_.lambda_c, k);
    if (k < 0) return b_.sigma_a * b_.sigma_a * pw(la_pow_, b_.lambda_a, -k);
    return 1.0;
  }

  double g0v(int tau) const {
    if (tau > 0) return g0_.c_c * pw(ac_pow_, g0_.a_c, tau);
    if (tau < 0) return g0_.c_a * pw(aa_pow_, g0_.a_a, -tau);
    return g0_.c_0;
  }

  // Per-step ratio term(k+1)/term(k) on a segment lying strictly between
  // breakpoints, so every factor stays on one branch. Call only after the
  // zero-endpoint guard: a factor with zero base zeroes both endpoints.
  double step_ratio(int any_k, int t, int s) const {
    double r = any_k > 0 ? b_.lambda_c : 1.0 / b_.lambda_a;
    r *= any_k < t ? 1.0 / g0_.a_c : g0_.a_a;
    r *= any_k < s ? 1.0 / g0_.a_c : g0_.a_a;
    return r;
  }

  double segment(int lo, int hi, int t, int s) const {
    if (lo > hi) return 0.0;
    double p_lo = term(lo, t, s), p_hi = term(hi, t, s);
    if (p_lo == 0.0 && p_hi == 0.0) return 0.0;
    if (hi - lo < 8) {  // short segments: just add them up
      double sum = 0.0;
      for (int k = lo; k <= hi; ++k) sum += term(k, t, s);
      return sum;
    }
    double r = step_ratio(lo, t, s);
    if (std::abs(1.0 - r) < 1e-9) {  // near-constant run, rare box-edge case
      double sum = 0.0;
      for (int k = lo; k <= hi; ++k) sum += term(k, t, s);
      return sum;
    }
    return (p_lo - r * p_hi) / (1.0 - r);
  }

  // sum over k <= hi; here both g0 factors sit on the causal branch and b on
  // the anti-causal one, so the terms decay by lambda_a * a_c^2 toward -inf.
  double left_tail(int hi, int t, int s) const {
    double p_hi = term(hi, t, s);
    if (p_hi == 0.0) return 0.0;
    return p_hi / (1.0 - b_.lambda_a * g0_.a_c * g0_.a_c);
  }

  // sum over k >= lo; decay ratio lambda_c * a_a^2 toward +inf.
  double right_tail(int lo, int t, int s) const {
    double p_lo = term(lo, t, s);
    if (p_lo == 0.0) return 0.0;
    return p_lo / (1.0 - b_.lambda_c * g0_.a_a * g0_.a_a);
  }

  NominalFoParams g0_;
  UncertaintyFoParams b_;
  std::vector<double> ac_pow_, aa_pow_, lc_pow_, la_pow_;
};

// ---------------------------------------------------------------------------
// Kernel families.
// ---------------------------------------------------------------------------

enum class KernelFamily {
  kNcTc,       // eta = [c, lambda_c, lambda_a]
  kNcbdTc,     // eta = [c, lambda_c, lambda_a]
  kNcbdTcMp,   // eta = [c, lambda]
  kNcbdDc,     // eta = [lambda_c, lambda_a, c_c, c_0, c_a, rho_c, rho_a]
  kNcbdDcMp,   // eta = [lambda, c_c, c_0, c_a, rho_c, rho_a]
  kNcsiTc,     // eta = [lambda_c, lambda_a, c_c, c_0, c_a]
  kNcsiDc,     // eta = [lambda_c, lambda_a, c_c, c_0, c_a, rho_c, rho_a]
  kNcsiFo,     // eta = [a_c, a_a, c_c, c_0, c_a, lambda_c, lambda_a, sigma_c, sigma_a]
  kNcsiFoMp,   // eta = [a, c_c, c_0, c_a, lambda_c, lambda_a, sigma_c, sigma_a]
  kOptimal,    // rank-1 kernel g0(t) g0(s) from a supplied impulse response
  kDc,         // eta = [c, lambda, rho] (causal)
  kTc,         // eta = [c, lambda]      (causal)
};

// How a hyper-parameter coordinate is bounded; drives both the tuning box
// and the optimizer's change of variables.
enum class CoordKind {
  kDecay01,      // lambda-type: [1e-6, 1 - 1e-6], log-odds transform
  kSignedUnit,   // a/rho-type: [-1 + 1e-6, 1 - 1e-6], log-odds transform
  kPositive,     // c >= 0 or sigma-type: [1e-6, 1e3], log transform
  kSignedScale,  // c_c/c_0/c_a: [-1e3, 1e3], log-odds transform
};

inline const char* kernel_family_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::kNcTc: return "nctc";
    case KernelFamily::kNcbdTc: return "ncbdtc";
    case KernelFamily::kNcbdTcMp: return "ncbdtc-mp";
    case KernelFamily::kNcbdDc: return "ncbddc";
    case KernelFamily::kNcbdDcMp: return "ncbddc-mp";
    case KernelFamily::kNcsiTc: return "ncsitc";
    case KernelFamily::kNcsiDc: return "ncsidc";
    case KernelFamily::kNcsiFo: return "ncsifo";
    case KernelFamily::kNcsiFoMp: return "ncsifo-mp";
    case KernelFamily::kOptimal: return "optimal";
    case KernelFamily::kDc: return "dc";
    case KernelFamily::kTc: return "tc";
  }
  throw std::logic_error("kernel_family_name: bad enum");
}

inline KernelFamily kernel_family_from_name(const std::string& name) {
  static const std::pair<const char*, KernelFamily> table[] = {
      {"nctc", KernelFamily::kNcTc},         {"ncbdtc", KernelFamily::kNcbdTc},
      {"ncbdtc-mp", KernelFamily::kNcbdTcMp}, {"ncbddc", KernelFamily::kNcbdDc},
      {"ncbddc-mp", KernelFamily::kNcbdDcMp}, {"ncsitc", KernelFamily::kNcsiTc},
      {"ncsidc", KernelFamily::kNcsiDc},     {"ncsifo", KernelFamily::kNcsiFo},
      {"ncsifo-mp", KernelFamily::kNcsiFoMp}, {"optimal", KernelFamily::kOptimal},
      {"dc", KernelFamily::kDc},             {"tc", KernelFamily::kTc},
  };
  for (const auto& [n, f] : table)
    if (name == n) return f;
  throw std::invalid_argument("unknown kernel family: " + name);
}

inline std::vector<std::string> kernel_eta_names(KernelFamily f) {
  switch (f) {
    case KernelFamily::kNcTc:
    case KernelFamily::kNcbdTc: return {"c", "lambda_c", "lambda_a"};
    case KernelFamily::kNcbdTcMp: return {"c", "lambda"};
    case KernelFamily::kNcbdDc:
      return {"lambda_c", "lambda_a", "c_c", "c_0", "c_a", "rho_c", "rho_a"};
    case KernelFamily::kNcbdDcMp:
      return {"lambda", "c_c", "c_0", "c_a", "rho_c", "rho_a"};
    case KernelFamily::kNcsiTc: return {"lambda_c", "lambda_a", "c_c", "c_0", "c_a"};
    case KernelFamily::kNcsiDc:
      return {"lambda_c", "lambda_a", "c_c", "c_0", "c_a", "rho_c", "rho_a"};
    case KernelFamily::kNcsiFo:
      return {"a_c", "a_a", "c_c", "c_0", "c_a",
              "lambda_c", "lambda_a", "sigma_c", "sigma_a"};
    case KernelFamily::kNcsiFoMp:
      return {"a", "c_c", "c_0", "c_a", "lambda_c", "lambda_a", "sigma_c", "sigma_a"};
    case KernelFamily::kOptimal: return {};
    case KernelFamily::kDc: return {"c", "lambda", "rho"};
    case KernelFamily::kTc: return {"c", "lambda"};
  }
  throw std::logic_error("kernel_eta_names: bad enum");
}

inline std::vector<CoordKind> kernel_coord_kinds(KernelFamily f) {
  using K = CoordKind;
  switch (f) {
    case KernelFamily::kNcTc:
    case KernelFamily::kNcbdTc: return {K::kPositive, K::kDecay01, K::kDecay01};
    case KernelFamily::kNcbdTcMp: return {K::kPositive, K::kDecay01};
    case KernelFamily::kNcbdDc:
      return {K::kDecay01, K::kDecay01, K::kSignedScale, K::kSignedScale,
              K::kSignedScale, K::kSignedUnit, K::kSignedUnit};
    case KernelFamily::kNcbdDcMp:
      return {K::kDecay01, K::kSignedScale, K::kSignedScale, K::kSignedScale,
              K::kSignedUnit, K::kSignedUnit};
    case KernelFamily::kNcsiTc:
      return {K::kDecay01, K::kDecay01, K::kSignedScale, K::kSignedScale,
              K::kSignedScale};
    case KernelFamily::kNcsiDc:
      return {K::kDecay01, K::kDecay01, K::kSignedScale, K::kSignedScale,
              K::kSignedScale, K::kSignedUnit, K::kSignedUnit};
    case KernelFamily::kNcsiFo:
      return {K::kSignedUnit, K::kSignedUnit, K::kSignedScale, K::kSignedScale,
              K::kSignedScale, K::kDecay01, K::kDecay01, K::kPositive, K::kPositive};
    case KernelFamily::kNcsiFoMp:
      return {K::kSignedUnit, K::kSignedScale, K::kSignedScale, K::kSignedScale,
              K::kDecay01, K::kDecay01, K::kPositive, K::kPositive};
    case KernelFamily::kOptimal: return {};
    case KernelFamily::kDc: return {K::kPositive, K::kDecay01, K::kSignedUnit};
    case KernelFamily::kTc: return {K::kPositive, K::kDecay01};
  }
  throw std::logic_error("kernel_coord_kinds: bad enum");
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Box the hyper-parameter tuner searches over. Decay rates and correlations
// are kept a hair inside their open theoretical bounds so the change of
// variables stays finite.
inline Interval coord_tuning_interval(CoordKind k) {
  switch (k) {
    case CoordKind::kDecay01: return {1e-6, 1.0 - 1e-6};
    case CoordKind::kSignedUnit: return {-1.0 + 1e-6, 1.0 - 1e-6};
    case CoordKind::kPositive: return {1e-4, 1e2};
    case CoordKind::kSignedScale: return {-100.0, 100.0};
  }
  throw std::logic_error("coord_tuning_interval: bad enum");
}

inline std::vector<Interval> kernel_tuning_box(KernelFamily f) {
  std::vector<Interval> box;
  for (CoordKind k : kernel_coord_kinds(f)) box.push_back(coord_tuning_interval(k));
  return box;
}

struct KernelSpec {
  KernelFamily family = KernelFamily::kTc;
  std::vector<double> eta;
  NoncausalFir g0_table;  // used only by the rank-1 "optimal" family

  KernelSpec() = default;
  KernelSpec(KernelFamily f, std::vector<double> e) : family(f), eta(std::move(e)) {
    validate();
  }
  static KernelSpec optimal(NoncausalFir g0) {
    KernelSpec s;
    s.family = KernelFamily::kOptimal;
    s.g0_table = std::move(g0);
    return s;
  }

  int dim() const { return static_cast<int>(kernel_eta_names(family).size()); }

  void validate() const {
    auto names = kernel_eta_names(family);
    if (eta.size() != names.size())
      throw std::invalid_argument(std::string(kernel_family_name(family)) +
                                  ": eta has " + std::to_string(eta.size()) +
                              " entries, expected " + std::to_string(names.size()));
    auto kinds = kernel_coord_kinds(family);
    for (std::size_t i = 0; i < eta.size(); ++i) {
      double v = eta[i];
      bool ok = true;
      switch (kinds[i]) {
        case CoordKind::kDecay01: ok = v >= 0.0 && v < 1.0; break;
        case CoordKind::kSignedUnit:
          // poles strictly inside the unit disc; correlations may touch +-1
          ok = names[i][0] == 'r' ? std::abs(v) <= 1.0 : std::abs(v) < 1.0;
          break;
        case CoordKind::kPositive: ok = v >= 0.0; break;
        case CoordKind::kSignedScale: ok = std::isfinite(v); break;
      }
      if (!ok)
        throw std::domain_error(std::string(kernel_family_name(family)) + ": " +
                                names[i] + " = " + std::to_string(v) +
                                " outside its feasible range");
    }
  }
};

// Uniform draw from the tuning box; deterministic per Rng state.
inline KernelSpec sample_kernel_spec(KernelFamily f, Rng& rng) {
  std::vector<double> eta;
  for (const Interval& iv : kernel_tuning_box(f)) eta.push_back(rng.uniform(iv.lo, iv.hi));
  return KernelSpec(f, std::move(eta));
}

// First-order parameterization behind each simulation-induced family.
inline std::pair<NominalFoParams, UncertaintyFoParams> fo_params_of(
    const KernelSpec& spec) {
  const auto& e = spec.eta;
  NominalFoParams g0;
  UncertaintyFoParams b;
  switch (spec.family) {
    case KernelFamily::kNcsiFo:
      g0 = {e[0], e[1], e[2], e[3], e[4]};
      b = {e[5], e[6], e[7], e[8]};
      return {g0, b};
    case KernelFamily::kNcsiFoMp:
      g0 = {e[0], e[0], e[1], e[2], e[3]};
      b = {e[4], e[5], e[6], e[7]};
      return {g0, b};
    case KernelFamily::kNcsiDc: {
      double lc = e[0], la = e[1], rc = e[5], ra = e[6];
      g0 = {rc * std::sqrt(lc), ra * std::sqrt(la), e[2], e[3], e[4]};
      b = {lc, la, std::sqrt(std::max(0.0, 1.0 - rc * rc)),
           std::sqrt(std::max(0.0, 1.0 - ra * ra))};
      return {g0, b};
    }
    case KernelFamily::kNcsiTc: {
      // correlation tied to the decay rate: rho = sqrt(lambda)
      double lc = e[0], la = e[1];
      g0 = {lc, la, e[2], e[3], e[4]};
      b = {lc, la, std::sqrt(1.0 - lc), std::sqrt(1.0 - la)};
      return {g0, b};
    }
    default:
      throw std::invalid_argument(std::string("fo_params_of: ") +
                                  kernel_family_name(spec.family) +
                                  " is not a simulation-induced family");
  }
}

namespace detail {

inline double nctc_b(double lambda_c, double lambda_a, int t) {
  return t >= 0 ? std::pow(lambda_c, t) : std::pow(lambda_a, -t);
}

inline double dc_eval(double c, double lambda, double rho, int t, int s) {
  return c * std::pow(lambda, 0.5 * (t + s)) * std::pow(rho, std::abs(t - s));
}

inline double ncbd_dc_eval(double lc, double la, double cc, double c0, double ca,
                           double rc, double ra, int t, int s) {
  if (t >= 1 && s >= 1) return dc_eval(cc * cc, lc, rc, t, s);
  if (t == 0 && s == 0) return c0 * c0;
  if (t <= -1 && s <= -1) return dc_eval(ca * ca, la, ra, -t, -s);
  return 0.0;
}

}  // namespace detail

inline double eval(const KernelSpec& spec, int t, int s) {
  if (t < s) std::swap(t, s);
  const auto& e = spec.eta;
  switch (spec.family) {
    case KernelFamily::kNcTc:
      return e[0] * std::min(detail::nctc_b(e[1], e[2], t),
                             detail::nctc_b(e[1], e[2], s));
    case KernelFamily::kNcbdTc:
    case KernelFamily::kNcbdTcMp: {
      double lc = e[1], la = spec.family == KernelFamily::kNcbdTc ? e[2] : e[1];
      if (t >= 0 && s >= 0) return e[0] * std::pow(lc, std::max(t, s));
      if (t < 0 && s < 0) return e[0] * std::pow(la, -std::min(t, s));
      return 0.0;
    }
    case KernelFamily::kNcbdDc:
      return detail::ncbd_dc_eval(e[0], e[1], e[2], e[3], e[4], e[5], e[6], t, s);
    case KernelFamily::kNcbdDcMp:
      return detail::ncbd_dc_eval(e[0], e[0], e[1], e[2], e[3], e[4], e[5], t, s);
    case KernelFamily::kNcsiTc:
    case KernelFamily::kNcsiDc:
    case KernelFamily::kNcsiFo:
    case KernelFamily::kNcsiFoMp: {
      auto [g0, b] = fo_params_of(spec);
      return NcsiFoEval(g0, b)(t, s);
    }
    case KernelFamily::kOptimal:
      return spec.g0_table.tap(t) * spec.g0_table.tap(s);
    case KernelFamily::kDc:
      return detail::dc_eval(e[0], e[1], e[2], t, s);
    case KernelFamily::kTc:
      return e[0] * std::pow(e[1], std::max(t, s));
  }
  throw std::logic_error("eval: bad family enum");
}

inline bool is_ncsi_family(KernelFamily f) {
  return f == KernelFamily::kNcsiTc || f == KernelFamily::kNcsiDc ||
         f == KernelFamily::kNcsiFo || f == KernelFamily::kNcsiFoMp;
}

inline Eigen::MatrixXd gram(const KernelSpec& spec, const std::vector<int>& grid) {
  const int n = static_cast<int>(grid.size());
  for (int i = 1; i < n; ++i)
    if (grid[i] <= grid[i - 1])
      throw std::invalid_argument("gram: grid must be strictly increasing");
  Eigen::MatrixXd K(n, n);
  if (is_ncsi_family(spec.family) && n > 0) {
    auto [g0, b] = fo_params_of(spec);
    int span = 2 * std::max(std::abs(grid.front()), std::abs(grid.back())) + 4;
    NcsiFoEval k(g0, b, span);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) K(i, j) = K(j, i) = k(grid[i], grid[j]);
    return K;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) K(i, j) = K(j, i) = eval(spec, grid[i], grid[j]);
  return K;
}

// Partial absolute sum of a simulation-induced kernel over the square
// |t|,|s| <= T, with a closed-form bound (sum b^2) * (sum |g0|)^2 on the
// full double series. The partial sums increase with T toward the bound.
struct StabilityTail {
  double partial_sum = 0.0;
  double bound = 0.0;
};

inline StabilityTail stability_tail(const KernelSpec& spec, int T) {
  auto [g0, b] = fo_params_of(spec);
  NcsiFoEval k(g0, b, 2 * T + 4);
  StabilityTail out;
  for (int t = -T; t <= T; ++t)
    for (int s = -T; s <= T; ++s) out.partial_sum += std::abs(k(t, s));
  double sum_b2 = 1.0 + b.sigma_c * b.sigma_c * b.lambda_c / (1.0 - b.lambda_c) +
                  b.sigma_a * b.sigma_a * b.lambda_a / (1.0 - b.lambda_a);
  double abs_ac = std::abs(g0.a_c), abs_aa = std::abs(g0.a_a);
  double sum_g0 = std::abs(g0.c_0) + std::abs(g0.c_c) * abs_ac / (1.0 - abs_ac) +
                  std::abs(g0.c_a) * abs_aa / (1.0 - abs_aa);
  out.bound = sum_b2 * sum_g0 * sum_g0;
  return out;
}

}  // namespace nckrm
