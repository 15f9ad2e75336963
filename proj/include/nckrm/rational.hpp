#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nckrm/state_space.hpp"

namespace nckrm {

using Complex = std::complex<double>;

// Polynomial with the given roots, monic, coefficients in descending powers.
inline std::vector<Complex> poly_from_roots(const std::vector<Complex>& roots) {
  std::vector<Complex> coeffs{1.0};
  for (const Complex& r : roots) {
    coeffs.push_back(0.0);
    for (std::size_t i = coeffs.size() - 1; i >= 1; --i)
      coeffs[i] -= r * coeffs[i - 1];
  }
  return coeffs;
}

// Real part of a conjugate-symmetric polynomial; throws if the imaginary
// residue is not negligible.
inline std::vector<double> real_poly_from_roots(const std::vector<Complex>& roots) {
  auto c = poly_from_roots(roots);
  double scale = 0.0;
  for (auto& v : c) scale = std::max(scale, std::abs(v));
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (std::abs(c[i].imag()) > 1e-9 * std::max(1.0, scale))
      throw std::runtime_error("real_poly_from_roots: roots not conjugate-symmetric");
    out[i] = c[i].real();
  }
  return out;
}

// Pairs complex values into conjugate pairs and snaps each pair to exact
// conjugacy (used to clean eigenvalue output before storing zeros/poles).
inline std::vector<Complex> enforce_conjugate_pairs(std::vector<Complex> v,
                                                    double tol = 1e-8) {
  std::vector<Complex> out;
  std::vector<bool> used(v.size(), false);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (used[i]) continue;
    double scale = std::max(1.0, std::abs(v[i]));
    if (std::abs(v[i].imag()) <= tol * scale) {
      out.emplace_back(v[i].real(), 0.0);
      used[i] = true;
      continue;
    }
    std::size_t match = v.size();
    double best = tol * scale;
    for (std::size_t j = i + 1; j < v.size(); ++j) {
      if (used[j]) continue;
      double d = std::abs(v[j] - std::conj(v[i]));
      if (d < best) {
        best = d;
        match = j;
      }
    }
    if (match == v.size())
      throw std::runtime_error("enforce_conjugate_pairs: unpaired complex value");
    Complex avg = 0.5 * (v[i] + std::conj(v[match]));
    out.push_back(avg);
    out.push_back(std::conj(avg));
    used[i] = used[match] = true;
  }
  return out;
}

// Real-rational transfer function in the forward-shift variable q, stored as
// zeros/poles/gain: P(q) = gain * prod(q - z_i) / prod(q - p_i).
struct DiscreteRational {
  std::vector<Complex> zeros;
  std::vector<Complex> poles;
  double gain = 1.0;
  double sample_time = 1.0;  // seconds; <= 0 means "normalized"

  bool is_proper() const { return zeros.size() <= poles.size(); }
  bool is_biproper() const { return zeros.size() == poles.size() && gain != 0.0; }

  bool is_stable() const {
    for (const auto& p : poles)
      if (std::abs(p) >= 1.0) return false;
    return true;
  }

  bool is_minimum_phase() const {
    for (const auto& z : zeros)
      if (std::abs(z) > 1.0) return false;
    return true;
  }

  // True iff every zero clears the annulus [1-margin, 1+margin].
  bool zeros_clear_unit_circle(double margin) const {
    for (const auto& z : zeros) {
      double m = std::abs(z);
      if (m >= 1.0 - margin && m <= 1.0 + margin) return false;
    }
    return true;
  }

  std::vector<double> numerator() const {
    auto c = real_poly_from_roots(zeros);
    for (auto& v : c) v *= gain;
    return c;
  }
  std::vector<double> denominator() const { return real_poly_from_roots(poles); }

  Complex eval(const Complex& q) const {
    Complex num = gain, den = 1.0;
    for (const auto& z : zeros) num *= (q - z);
    for (const auto& p : poles) den *= (q - p);
    return num / den;
  }

  // Controllable canonical realization. Strictly proper part is realized in
  // the state, the direct feedthrough is the leading numerator coefficient.
  StateSpaceModel to_state_space() const {
    if (!is_proper())
      throw std::invalid_argument("to_state_space: improper transfer function");
    auto den = denominator();
    auto num = numerator();
    // pad numerator to denominator length
    std::vector<double> numf(den.size(), 0.0);
    std::copy(num.rbegin(), num.rend(), numf.rbegin());
    const int n = static_cast<int>(den.size()) - 1;
    const double d0 = numf[0];  // feedthrough (0 unless bi-proper)
    StateSpaceModel ss;
    ss.time_domain = TimeDomain::kDiscrete;
    ss.A = Eigen::MatrixXd::Zero(n, n);
    ss.B = Eigen::VectorXd::Zero(n);
    ss.C = Eigen::RowVectorXd::Zero(n);
    ss.D = d0;
    if (n == 0) return ss;
    for (int i = 0; i < n; ++i) ss.A(0, i) = -den[static_cast<std::size_t>(i) + 1];
    for (int i = 1; i < n; ++i) ss.A(i, i - 1) = 1.0;
    ss.B(0) = 1.0;
    for (int i = 0; i < n; ++i)
      ss.C(i) = numf[static_cast<std::size_t>(i) + 1] -
                d0 * den[static_cast<std::size_t>(i) + 1];
    return ss;
  }
};

// Discrete SISO state-space -> zeros/poles/gain. Requires bi-properness
// (D != 0) so zeros can be read off as eig(A - B D^{-1} C).
inline DiscreteRational zpk_from_state_space(const StateSpaceModel& ss,
                                             double sample_time) {
  if (ss.time_domain != TimeDomain::kDiscrete)
    throw std::invalid_argument("zpk_from_state_space: system must be discrete");
  if (ss.D == 0.0)
    throw std::invalid_argument("zpk_from_state_space: D == 0 (not bi-proper)");
  DiscreteRational tf;
  tf.sample_time = sample_time;
  tf.gain = ss.D;
  const int n = ss.order();
  if (n > 0) {
    Eigen::VectorXcd p = ss.pole_eigenvalues();
    Eigen::MatrixXd Az = ss.A - ss.B * ss.C / ss.D;
    Eigen::VectorXcd z = Eigen::EigenSolver<Eigen::MatrixXd>(Az, false).eigenvalues();
    std::vector<Complex> pv(p.data(), p.data() + p.size());
    std::vector<Complex> zv(z.data(), z.data() + z.size());
    tf.poles = enforce_conjugate_pairs(std::move(pv), 1e-6);
    tf.zeros = enforce_conjugate_pairs(std::move(zv), 1e-6);
  }
  return tf;
}

inline nlohmann::json to_json(const DiscreteRational& tf) {
  nlohmann::json j;
  auto pack = [](const std::vector<Complex>& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : v) arr.push_back({c.real(), c.imag()});
    return arr;
  };
  j["zeros"] = pack(tf.zeros);
  j["poles"] = pack(tf.poles);
  j["gain"] = tf.gain;
  if (tf.sample_time > 0.0)
    j["sample_time"] = tf.sample_time;
  else
    j["sample_time"] = "normalized";
  return j;
}

inline DiscreteRational rational_from_json(const nlohmann::json& j) {
  DiscreteRational tf;
  auto unpack = [](const nlohmann::json& arr) {
    std::vector<Complex> v;
    for (const auto& c : arr) v.emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
    return v;
  };
  tf.zeros = unpack(j.at("zeros"));
  tf.poles = unpack(j.at("poles"));
  tf.gain = j.at("gain").get<double>();
  if (j.at("sample_time").is_string())
    tf.sample_time = -1.0;
  else
    tf.sample_time = j.at("sample_time").get<double>();
  return tf;
}

}  // namespace nckrm
