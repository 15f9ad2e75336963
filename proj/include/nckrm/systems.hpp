#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "nckrm/inverse.hpp"
#include "nckrm/rational.hpp"
#include "nckrm/rng.hpp"
#include "nckrm/state_space.hpp"

namespace nckrm {

// The fixed non-minimum-phase benchmark plant
//   P(q) = 1.550 (q^2 - 2.035 q + 1.052)(q^2 - 1.844 q + 0.9391)
//          / (q^2 (q - 0.9514)(q - 0.9511)).
inline DiscreteRational d1_system() {
  auto quad_roots = [](double b, double c) {
    // roots of q^2 + b q + c
    Complex disc = std::sqrt(Complex(b * b - 4.0 * c, 0.0));
    return std::pair<Complex, Complex>{(-b + disc) / 2.0, (-b - disc) / 2.0};
  };
  DiscreteRational P;
  auto [z1, z2] = quad_roots(-2.035, 1.052);
  auto [z3, z4] = quad_roots(-1.844, 0.9391);
  P.zeros = {z1, z2, z3, z4};
  P.poles = {0.0, 0.0, 0.9514, 0.9511};
  P.gain = 1.550;
  P.sample_time = -1.0;
  return P;
}

namespace detail {

// Random stable continuous-time SISO model: Gaussian A shifted so its
// spectrum sits strictly in the open left half-plane, Gaussian B, C, and a
// feedthrough bounded away from zero so the ZOH sample is bi-proper.
inline StateSpaceModel random_continuous_system(Rng& rng, int order) {
  StateSpaceModel ss;
  ss.time_domain = TimeDomain::kContinuous;
  ss.A.resize(order, order);
  for (int i = 0; i < order; ++i)
    for (int j = 0; j < order; ++j) ss.A(i, j) = rng.gauss();
  double max_re = -1e300;
  Eigen::VectorXcd eig = Eigen::EigenSolver<Eigen::MatrixXd>(ss.A, false).eigenvalues();
  for (int i = 0; i < eig.size(); ++i) max_re = std::max(max_re, eig[i].real());
  ss.A -= (max_re + rng.uniform(0.1, 1.0)) * Eigen::MatrixXd::Identity(order, order);
  ss.B.resize(order);
  ss.C.resize(order);
  for (int i = 0; i < order; ++i) {
    ss.B(i) = rng.gauss();
    ss.C(i) = rng.gauss();
  }
  do {
    ss.D = rng.gauss();
  } while (std::abs(ss.D) < 0.05);
  return ss;
}

inline bool d2_acceptable(const DiscreteRational& tf) {
  if (!tf.is_stable() || !tf.is_biproper() || tf.is_minimum_phase()) return false;
  auto clears = [](const std::vector<Complex>& v) {
    return std::all_of(v.begin(), v.end(), [](const Complex& c) {
      double m = std::abs(c);
      return m < 1.0 - kGeneratorMargin || m > 1.0 + kGeneratorMargin;
    });
  };
  return clears(tf.poles) && clears(tf.zeros);
}

}  // namespace detail

// Rejection-samples a 30th-order stable, bi-proper, non-minimum-phase plant
// whose poles and zeros all clear the annulus [0.96, 1.04], sampled at 100x
// the continuous model's bandwidth.
inline DiscreteRational random_system_d2(std::uint64_t seed, int order = 30) {
  Rng rng(seed);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    StateSpaceModel ct = detail::random_continuous_system(rng, order);
    double bw;
    try {
      bw = bandwidth(ct);
    } catch (const std::runtime_error&) {
      continue;  // degenerate frequency response; resample
    }
    double Ts = 2.0 * std::numbers::pi / (100.0 * bw);
    DiscreteRational tf;
    try {
      tf = zpk_from_state_space(zoh_discretize(ct, Ts), Ts);
    } catch (const std::exception&) {
      continue;
    }
    if (detail::d2_acceptable(tf)) return tf;
  }
  throw std::runtime_error(
      "random_system_d2: 10000 rejections; consider relaxing the annulus margin");
}

// Replaces the two smallest-magnitude zeros of a D2 plant with real zeros
// drawn from U[0.8, 0.9] and U[1.1, 1.2], planting over-damped dominant
// dynamics in the inverse. Gain is preserved.
inline DiscreteRational perturb_zeros_d3(const DiscreteRational& sys,
                                         std::uint64_t seed) {
  if (sys.zeros.size() < 2)
    throw std::invalid_argument("perturb_zeros_d3: needs at least two zeros");
  Rng rng(seed);
  DiscreteRational out = sys;
  auto by_magnitude = [](const Complex& a, const Complex& b) {
    return std::abs(a) < std::abs(b);
  };
  std::sort(out.zeros.begin(), out.zeros.end(), by_magnitude);
  out.zeros[0] = Complex(rng.uniform(0.8, 0.9), 0.0);
  out.zeros[1] = Complex(rng.uniform(1.1, 1.2), 0.0);
  // the removed pair was either real or conjugate, so realness is intact
  return out;
}

// Fourth-order plant with mirrored zero pairs (z, 1/z):
//   P(q) = (q-z1)(q-1/z1)(q-z2)(q-1/z2) / ((q-p1)...(q-p4)),
// z1 = 0.9 fixed, z2 and the poles drawn from U[0, 0.9].
inline DiscreteRational random_system_d4(std::uint64_t seed) {
  Rng rng(seed);
  DiscreteRational P;
  const double z1 = 0.9;
  double z2 = rng.uniform(0.0, 0.9);
  while (z2 < 1e-3) z2 = rng.uniform(0.0, 0.9);  // keep 1/z2 finite
  P.zeros = {z1, 1.0 / z1, z2, 1.0 / z2};
  P.poles.resize(4);
  for (auto& p : P.poles) p = rng.uniform(0.0, 0.9);
  P.gain = 1.0;
  P.sample_time = -1.0;
  return P;
}

}  // namespace nckrm
