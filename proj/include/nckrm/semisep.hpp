#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nckrm/kernels.hpp"

namespace nckrm {

// ---------------------------------------------------------------------------
// Rank-structured form of the simulation-induced Gram matrices.
//
// On a grid t_0 < ... < t_{n-1} the kernel matrix is
//   K(i,j) = sum_p mu_p(t_i) nu_p(t_j)   for t_i > t_j,
//   K(i,i) = d(t_i),
// with p_bar = 2 generator pairs. This enables O(n) Cholesky factorization.
//
// Numerical conventions:
//  - exponents are referenced to the grid center, so each generator carries
//    at most a^(span/2) of dynamic range instead of a^span;
//  - the cross-generator cumulative sum is anchored toward +inf when
//    |a_c| >= |a_a| and toward -inf otherwise. The anchored series then
//    always converges (|lambda_c a_a / a_c| <= lambda_c in the first case)
//    and the terms the two generator products exchange stay at or below the
//    kernel's own scale, avoiding catastrophic cancellation.
// ---------------------------------------------------------------------------

struct SemisepGenerators {
  std::vector<int> grid;
  Eigen::MatrixXd mu;   // n x p_bar
  Eigen::MatrixXd nu;   // n x p_bar
  Eigen::VectorXd diag; // d(t_i)

  int size() const { return static_cast<int>(grid.size()); }
  int order() const { return static_cast<int>(mu.cols()); }

  int index_of(int t) const {
    auto it = std::lower_bound(grid.begin(), grid.end(), t);
    if (it == grid.end() || *it != t)
      throw std::out_of_range("SemisepGenerators: grid point " +
                              std::to_string(t) + " not on the grid");
    return static_cast<int>(it - grid.begin());
  }
};

inline double reconstruct(const SemisepGenerators& gen, int t, int s) {
  int i = gen.index_of(t), j = gen.index_of(s);
  if (i == j) return gen.diag(i);
  if (i < j) std::swap(i, j);
  return gen.mu.row(i).dot(gen.nu.row(j));
}

namespace detail {

// Sum of a geometric run w(lo), w(lo)*r, ..., w(hi) given both endpoint
// values; falls back to direct accumulation when the ratio is too close to 1
// for the closed form.
template <typename TermFn>
double geo_finite(TermFn&& w, int lo, int hi, double r) {
  if (lo > hi) return 0.0;
  double w_lo = w(lo), w_hi = w(hi);
  if (w_lo == 0.0 && w_hi == 0.0) return 0.0;
  if (hi - lo < 8 || std::abs(1.0 - r) < 1e-9) {
    double sum = 0.0;
    for (int k = lo; k <= hi; ++k) sum += w(k);
    return sum;
  }
  return (w_lo - r * w_hi) / (1.0 - r);
}

// Builder for the two generator pairs of a first-order simulation-induced
// kernel. All member sums are evaluated with center-shifted exponents.
class FoGeneratorBuilder {
 public:
  FoGeneratorBuilder(const NominalFoParams& g0, const UncertaintyFoParams& b,
                     int t_ref)
      : g0_(g0), b_(b), tau_(t_ref),
        anchor_up_(std::abs(g0.a_c) >= std::abs(g0.a_a)) {}

  double mu1(int t) const { return g0_.c_c * std::pow(g0_.a_c, t - tau_); }
  double nu2(int s) const { return g0_.c_a * std::pow(g0_.a_a, tau_ - s); }
  double nu1(int s) const { return m1(s) + m2(s) + m3(s); }
  double mu2(int t) const { return n1(t) + n2(t) + n3(t); }

 private:
  double b2(int k) const {
    if (k > 0) return b_.sigma_c * b_.sigma_c * std::pow(b_.lambda_c, k);
    if (k < 0) return b_.sigma_a * b_.sigma_a * std::pow(b_.lambda_a, -k);
    return 1.0;
  }

  // Series terms are written so every call only multiplies powers whose
  // exponents stay within the center-shifted residual range.
  double pa(int e) const { return std::pow(g0_.a_c, e); }
  double pb(int e) const { return std::pow(g0_.a_a, e); }

  // --- nu1 pieces: contribution of the series region k <= s - 1 and k = s,
  // plus the anchored cross term (everything that multiplies mu1(t)).
  double m1(int s) const {
    const double A2 = g0_.a_c * g0_.a_c;
    double sum = 0.0;
    // k <= min(s-1, -1): terms c_c sa^2 la^{-k} A^{s+tau-2k}; moving k down
    // multiplies by la * A^2 < 1, so the infinite part is a clean tail.
    int m = std::min(s - 1, -1);
    double w_top = g0_.c_c * b_.sigma_a * b_.sigma_a * std::pow(b_.lambda_a, -m) *
                   pa(s + tau_ - 2 * m);
    sum += w_top / (1.0 - b_.lambda_a * A2);
    if (s - 1 >= 0) sum += g0_.c_c * pa(s + tau_);  // k = 0
    // k = 1..s-1, ratio lc / A^2 (can exceed 1; finite two-endpoint form)
    if (s >= 2) {
      auto w = [&](int k) {
        return g0_.c_c * b_.sigma_c * b_.sigma_c * std::pow(b_.lambda_c, k) *
               pa(s + tau_ - 2 * k);
      };
      sum += geo_finite(w, 1, s - 1, b_.lambda_c / A2);
    }
    return sum;
  }

  double m2(int s) const { return g0_.c_0 * b2(s) * pa(tau_ - s); }

  double m3(int s) const {
    if (anchor_up_) {
      // + c_a sum_{i >= s+1} b^2(i) B^{i-s} A^{tau-i}
      double sum = 0.0;
      int m = std::max(s + 1, 1);
      auto wc = [&](int i) {
        return g0_.c_a * b_.sigma_c * b_.sigma_c * std::pow(b_.lambda_c, i) *
               pb(i - s) * pa(tau_ - i);
      };
      double head = wc(m);
      if (head != 0.0) sum += head / (1.0 - b_.lambda_c * g0_.a_a / g0_.a_c);
      if (s <= -1) {
        sum += g0_.c_a * pb(-s) * pa(tau_);  // i = 0
        auto wa = [&](int i) {
          return g0_.c_a * b_.sigma_a * b_.sigma_a * std::pow(b_.lambda_a, -i) *
                 pb(i - s) * pa(tau_ - i);
        };
        sum += geo_finite(wa, s + 1, -1, g0_.a_a / (b_.lambda_a * g0_.a_c));
      }
      return sum;
    }
    // - c_a sum_{i <= s} b^2(i) B^{i-s} A^{tau-i}
    double sum = 0.0;
    int m = std::min(s, -1);
    auto wa = [&](int i) {
      return g0_.c_a * b_.sigma_a * b_.sigma_a * std::pow(b_.lambda_a, -i) *
             pb(i - s) * pa(tau_ - i);
    };
    double top = wa(m);
    if (top != 0.0) sum += top / (1.0 - b_.lambda_a * g0_.a_c / g0_.a_a);
    if (s >= 0) sum += g0_.c_a * pb(-s) * pa(tau_);  // i = 0
    if (s >= 1) {
      auto wc = [&](int i) {
        return g0_.c_a * b_.sigma_c * b_.sigma_c * std::pow(b_.lambda_c, i) *
               pb(i - s) * pa(tau_ - i);
      };
      sum += geo_finite(wc, 1, s, b_.lambda_c * g0_.a_a / g0_.a_c);
    }
    return -sum;
  }

  // --- mu2 pieces: contribution of the series region k >= t + 1 and k = t,
  // plus the anchored cross term (everything that multiplies nu2(s)).
  double n1(int t) const {
    const double B2 = g0_.a_a * g0_.a_a;
    double sum = 0.0;
    int m = std::max(t + 1, 1);
    double w_bot = g0_.c_a * b_.sigma_c * b_.sigma_c * std::pow(b_.lambda_c, m) *
                   pb(2 * m - t - tau_);
    sum += w_bot / (1.0 - b_.lambda_c * B2);
    if (t <= -1) sum += g0_.c_a * pb(-t - tau_);  // k = 0
    if (t <= -2) {
      auto w = [&](int k) {
        return g0_.c_a * b_.sigma_a * b_.sigma_a * std::pow(b_.lambda_a, -k) *
               pb(2 * k - t - tau_);
      };
      sum += geo_finite(w, t + 1, -1, B2 / b_.lambda_a);
    }
    return sum;
  }

  double n2(int t) const { return g0_.c_0 * b2(t) * pb(t - tau_); }

  double n3(int t) const {
    if (anchor_up_) {
      // - c_c sum_{i >= t} b^2(i) B^{i-tau} A^{t-i}
      double sum = 0.0;
      int m = std::max(t, 1);
      auto wc = [&](int i) {
        return g0_.c_c * b_.sigma_c * b_.sigma_c * std::pow(b_.lambda_c, i) *
               pb(i - tau_) * pa(t - i);
      };
      double head = wc(m);
      if (head != 0.0) sum += head / (1.0 - b_.lambda_c * g0_.a_a / g0_.a_c);
      if (t <= 0) {
        sum += g0_.c_c * pb(-tau_) * pa(t);  // i = 0
        auto wa = [&](int i) {
          return g0_.c_c * b_.sigma_a * b_.sigma_a * std::pow(b_.lambda_a, -i) *
                 pb(i - tau_) * pa(t - i);
        };
        sum += geo_finite(wa, t, -1, g0_.a_a / (b_.lambda_a * g0_.a_c));
      }
      return -sum;
    }
    // + c_c sum_{i <= t-1} b^2(i) B^{i-tau} A^{t-i}
    double sum = 0.0;
    int m = std::min(t - 1, -1);
    auto wa = [&](int i) {
      return g0_.c_c * b_.sigma_a * b_.sigma_a * std::pow(b_.lambda_a, -i) *
             pb(i - tau_) * pa(t - i);
    };
    double top = wa(m);
    if (top != 0.0) sum += top / (1.0 - b_.lambda_a * g0_.a_c / g0_.a_a);
    if (t - 1 >= 0) sum += g0_.c_c * pb(-tau_) * pa(t);  // i = 0
    if (t >= 2) {
      auto wc = [&](int i) {
        return g0_.c_c * b_.sigma_c * b_.sigma_c * std::pow(b_.lambda_c, i) *
               pb(i - tau_) * pa(t - i);
      };
      sum += geo_finite(wc, 1, t - 1, b_.lambda_c * g0_.a_a / g0_.a_c);
    }
    return sum;
  }

  NominalFoParams g0_;
  UncertaintyFoParams b_;
  int tau_;
  bool anchor_up_;
};

}  // namespace detail

inline SemisepGenerators fo_generators(const NominalFoParams& g0,
                                       const UncertaintyFoParams& b,
                                       const std::vector<int>& grid) {
  if (g0.a_c == 0.0 || g0.a_a == 0.0)
    throw std::invalid_argument(
        "singular causal dynamics: semiseparable form unavailable");
  const int n = static_cast<int>(grid.size());
  for (int i = 1; i < n; ++i)
    if (grid[i] <= grid[i - 1])
      throw std::invalid_argument("fo_generators: grid must be strictly increasing");
  SemisepGenerators gen;
  gen.grid = grid;
  gen.mu.resize(n, 2);
  gen.nu.resize(n, 2);
  gen.diag.resize(n);
  if (n == 0) return gen;
  int t_ref = (grid.front() + grid.back()) / 2;
  detail::FoGeneratorBuilder fb(g0, b, t_ref);
  int span = 2 * std::max(std::abs(grid.front() - t_ref),
                          std::abs(grid.back() - t_ref)) + 4;
  NcsiFoEval diag_eval(g0, b, span);
  for (int i = 0; i < n; ++i) {
    int t = grid[i];
    gen.mu(i, 0) = fb.mu1(t);
    gen.mu(i, 1) = fb.mu2(t);
    gen.nu(i, 0) = fb.nu1(t);
    gen.nu(i, 1) = fb.nu2(t);
    gen.diag(i) = diag_eval(t, t);
  }
  return gen;
}

inline SemisepGenerators fo_generators(const KernelSpec& spec,
                                       const std::vector<int>& grid) {
  auto [g0, b] = fo_params_of(spec);
  return fo_generators(g0, b, grid);
}

// Dense expansion, mainly for oracles and small problems.
inline Eigen::MatrixXd expand_dense(const SemisepGenerators& gen) {
  const int n = gen.size();
  Eigen::MatrixXd K(n, n);
  for (int i = 0; i < n; ++i) {
    K(i, i) = gen.diag(i);
    for (int j = 0; j < i; ++j)
      K(i, j) = K(j, i) = gen.mu.row(i).dot(gen.nu.row(j));
  }
  return K;
}

// Matrix-vector product K x in O(p_bar * n) using running prefix sums of the
// generator sequences; exact for the represented matrix.
inline Eigen::VectorXd semisep_matvec(const SemisepGenerators& gen,
                                      const Eigen::VectorXd& x) {
  const int n = gen.size();
  if (x.size() != n) throw std::invalid_argument("semisep_matvec: size mismatch");
  const int p = gen.order();
  Eigen::VectorXd y(n);
  Eigen::VectorXd below = Eigen::VectorXd::Zero(p);  // sum_{j<i} nu(j) x_j
  for (int i = 0; i < n; ++i) {
    y(i) = gen.diag(i) * x(i) + gen.mu.row(i).dot(below);
    below += gen.nu.row(i).transpose() * x(i);
  }
  Eigen::VectorXd above = Eigen::VectorXd::Zero(p);  // sum_{j>i} mu(j) x_j
  for (int i = n - 1; i >= 0; --i) {
    y(i) += gen.nu.row(i).dot(above);
    above += gen.mu.row(i).transpose() * x(i);
  }
  return y;
}

inline Eigen::MatrixXd semisep_matmat(const SemisepGenerators& gen,
                                      const Eigen::MatrixXd& X) {
  Eigen::MatrixXd Y(X.rows(), X.cols());
  for (int c = 0; c < X.cols(); ++c) Y.col(c) = semisep_matvec(gen, X.col(c));
  return Y;
}

// Cholesky factor of the represented matrix in generator-compressed form:
// L = (I + lowtri(U W^T)) diag(sqrt(D)).
struct SemisepCholesky {
  Eigen::MatrixXd U;       // copied generator mu
  Eigen::MatrixXd W;       // computed
  Eigen::VectorXd sqrt_d;  // sqrt of pivots

  int size() const { return static_cast<int>(sqrt_d.size()); }

  Eigen::MatrixXd expand_dense() const {
    const int n = size();
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < n; ++j) {
      L(j, j) = sqrt_d(j);
      for (int i = j + 1; i < n; ++i) L(i, j) = U.row(i).dot(W.row(j)) * sqrt_d(j);
    }
    return L;
  }
};

inline SemisepCholesky structured_cholesky(const SemisepGenerators& gen) {
  const int n = gen.size();
  const int p = gen.order();
  SemisepCholesky out;
  out.U = gen.mu;
  out.W.resize(n, p);
  out.sqrt_d.resize(n);
  const double jitter = n > 0 ? 1e-10 * gen.diag.sum() / n : 0.0;
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(p, p);
  for (int j = 0; j < n; ++j) {
    Eigen::RowVectorXd u = gen.mu.row(j);
    double d = gen.diag(j) + jitter - (u * S * u.transpose())(0);
    if (!(d > 0.0))
      throw std::runtime_error("matrix not PD: pivot " + std::to_string(j) +
                               " = " + std::to_string(d) + " after jitter");
    Eigen::RowVectorXd w = (gen.nu.row(j) - u * S) / d;
    out.W.row(j) = w;
    out.sqrt_d(j) = std::sqrt(d);
    S += d * w.transpose() * w;
  }
  return out;
}

// Plain dense Cholesky with explicit pivot reporting; the oracle and the
// baseline for the factorization timing comparison.
inline Eigen::MatrixXd dense_cholesky(Eigen::MatrixXd K) {
  const int n = static_cast<int>(K.rows());
  if (K.cols() != n) throw std::invalid_argument("dense_cholesky: not square");
  for (int j = 0; j < n; ++j) {
    double d = K(j, j);
    if (!(d > 0.0))
      throw std::runtime_error("matrix not PD: pivot " + std::to_string(j) +
                               " = " + std::to_string(d));
    double sd = std::sqrt(d);
    K(j, j) = sd;
    if (j + 1 < n) {
      K.col(j).tail(n - j - 1) /= sd;
      K.bottomRightCorner(n - j - 1, n - j - 1).selfadjointView<Eigen::Lower>()
          .rankUpdate(K.col(j).tail(n - j - 1), -1.0);
    }
  }
  return K.triangularView<Eigen::Lower>();
}

}  // namespace nckrm
