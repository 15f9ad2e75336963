#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "nckrm/fir.hpp"
#include "nckrm/rational.hpp"

namespace nckrm {

inline constexpr double kGeneratorMargin = 0.04;  // D2 pole/zero annulus margin
inline constexpr double kTruncationTailFraction = 1e-3;

struct InverseResult {
  NoncausalFir fir;
  double l1_tail = 0.0;        // estimated l1 mass outside the window
  bool tail_warning = false;   // l1_tail > kTruncationTailFraction * total mass
};

namespace detail {

struct PoleCluster {
  Complex location;
  int multiplicity = 1;
};

inline std::vector<PoleCluster> cluster_roots(const std::vector<Complex>& roots,
                                              double tol) {
  std::vector<PoleCluster> clusters;
  std::vector<bool> used(roots.size(), false);
  for (std::size_t i = 0; i < roots.size(); ++i) {
    if (used[i]) continue;
    PoleCluster c{roots[i], 1};
    Complex sum = roots[i];
    for (std::size_t j = i + 1; j < roots.size(); ++j) {
      if (!used[j] && std::abs(roots[j] - roots[i]) < tol) {
        used[j] = true;
        sum += roots[j];
        ++c.multiplicity;
      }
    }
    c.location = sum / static_cast<double>(c.multiplicity);
    if (c.multiplicity > 2)
      throw std::runtime_error(
          "noncausal_inverse_ir: pole cluster of multiplicity > 2 unsupported");
    clusters.push_back(c);
  }
  return clusters;
}

}  // namespace detail

// Two-sided impulse response of G(q) = 1/P(q) by partial-fraction expansion
// over the zeros of P. Zeros inside the unit circle feed the causal branch
// (series in q^{-1}), zeros outside feed the anti-causal branch (series in q).
inline InverseResult noncausal_inverse_ir_info(const DiscreteRational& P,
                                               int n_a, int n_c,
                                               double unit_circle_margin = 1e-9) {
  if (!P.is_biproper())
    throw std::invalid_argument("noncausal_inverse_ir: plant must be bi-proper");
  if (!P.is_stable())
    throw std::invalid_argument("noncausal_inverse_ir: plant must be stable");
  if (!P.zeros_clear_unit_circle(unit_circle_margin))
    throw std::domain_error(
        "non-invertible plant: zero magnitude within the unit-circle margin");

  // G = (1/gain) prod(q - p_i) / prod(q - z_j); poles of G are zeros of P.
  auto clusters = detail::cluster_roots(P.zeros, 1e-7);

  InverseResult res;
  res.fir = NoncausalFir(n_a, n_c);
  res.fir.at(0) += 1.0 / P.gain;  // direct term, G bi-proper

  const double tiny = 1e-300;
  for (const auto& cl : clusters) {
    const Complex z = cl.location;
    // r_m = lim (q-z)^m G; r_{m-1} adds the log-derivative correction.
    Complex num = 1.0 / P.gain, logd = 0.0;
    for (const auto& p : P.poles) {
      num *= (z - p);
      logd += 1.0 / (z - p);
    }
    for (const auto& other : P.zeros) {
      if (std::abs(other - z) < 1e-7) continue;  // member of this cluster
      num /= (z - other);
      logd -= 1.0 / (z - other);
    }
    const bool causal = std::abs(z) < 1.0;
    auto add_simple = [&](Complex r) {
      if (causal) {
        // r/(q-z) = r sum_{k>=1} z^{k-1} q^{-k}
        Complex term = r;
        for (int k = 1; k <= n_c; ++k) {
          res.fir.at(k) += term.real();
          term *= z;
        }
        for (int k = n_c + 1; std::abs(term) > tiny && k < n_c + 100000; ++k) {
          res.l1_tail += std::abs(term);
          term *= z;
          if (std::abs(term) < 1e-18 * std::abs(r)) break;
        }
      } else {
        // r/(q-z) = -r sum_{k>=0} z^{-k-1} q^{k}; q^k carries g(-k)
        Complex term = -r / z;
        for (int k = 0; k <= n_a; ++k) {
          res.fir.at(-k) += term.real();
          term /= z;
        }
        for (int k = n_a + 1; std::abs(term) > tiny && k < n_a + 100000; ++k) {
          res.l1_tail += std::abs(term);
          term /= z;
          if (std::abs(term) < 1e-18 * std::abs(r)) break;
        }
      }
    };
    auto add_double = [&](Complex r2) {
      if (causal) {
        // r2/(q-z)^2 = r2 sum_{k>=2} (k-1) z^{k-2} q^{-k}
        Complex pw = r2;
        for (int k = 2; k <= n_c; ++k) {
          res.fir.at(k) += (static_cast<double>(k - 1) * pw).real();
          pw *= z;
        }
        for (int k = n_c + 1; std::abs(pw) > tiny && k < n_c + 100000; ++k) {
          double t = static_cast<double>(k - 1) * std::abs(pw);
          res.l1_tail += t;
          pw *= z;
          if (t < 1e-18 * std::abs(r2)) break;
        }
      } else {
        // r2/(q-z)^2 = r2 sum_{k>=0} (k+1) z^{-k-2} q^{k}
        Complex pw = r2 / (z * z);
        for (int k = 0; k <= n_a; ++k) {
          res.fir.at(-k) += (static_cast<double>(k + 1) * pw).real();
          pw /= z;
        }
        for (int k = n_a + 1; std::abs(pw) > tiny && k < n_a + 100000; ++k) {
          double t = static_cast<double>(k + 1) * std::abs(pw);
          res.l1_tail += t;
          pw /= z;
          if (t < 1e-18 * std::abs(r2)) break;
        }
      }
    };
    if (cl.multiplicity == 1) {
      add_simple(num);
    } else {
      add_double(num);
      add_simple(num * logd);
    }
  }
  const double total = res.fir.l1_norm() + res.l1_tail;
  res.tail_warning = res.l1_tail > kTruncationTailFraction * total;
  return res;
}

inline NoncausalFir noncausal_inverse_ir(const DiscreteRational& P, int n_a,
                                         int n_c,
                                         double unit_circle_margin = 1e-9) {
  return noncausal_inverse_ir_info(P, n_a, n_c, unit_circle_margin).fir;
}

// Independent frequency-sampling route: evaluate 1/P on a uniform unit-circle
// grid and apply the inverse DFT. Aliasing error is bounded by the geometric
// tail of the zero nearest the unit circle.
inline NoncausalFir noncausal_inverse_ir_fft_oracle(const DiscreteRational& P,
                                                    int half_window,
                                                    int grid_size) {
  if (grid_size < 8 * half_window || (grid_size & (grid_size - 1)) != 0)
    throw std::invalid_argument(
        "noncausal_inverse_ir_fft_oracle: grid_size must be a power of two >= 8*half_window");
  if (!P.zeros_clear_unit_circle(1e-9))
    throw std::domain_error(
        "non-invertible plant: zero magnitude within the unit-circle margin");
  std::vector<Complex> H(static_cast<std::size_t>(grid_size));
  for (int m = 0; m < grid_size; ++m) {
    double w = 2.0 * std::numbers::pi * m / grid_size;
    H[static_cast<std::size_t>(m)] = 1.0 / P.eval(std::polar(1.0, w));
  }
  NoncausalFir fir(half_window, half_window);
  for (int k = -half_window; k <= half_window; ++k) {
    Complex acc = 0.0;
    for (int m = 0; m < grid_size; ++m) {
      double w = 2.0 * std::numbers::pi * m / grid_size;
      acc += H[static_cast<std::size_t>(m)] * std::polar(1.0, w * k);
    }
    fir.at(k) = acc.real() / grid_size;
  }
  return fir;
}

}  // namespace nckrm
