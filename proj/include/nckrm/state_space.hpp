#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace nckrm {

enum class TimeDomain { kContinuous, kDiscrete };

// SISO state-space model x' = Ax + Bu, y = Cx + Du, continuous or discrete.
struct StateSpaceModel {
  Eigen::MatrixXd A;
  Eigen::VectorXd B;
  Eigen::RowVectorXd C;
  double D = 0.0;
  TimeDomain time_domain = TimeDomain::kDiscrete;

  int order() const { return static_cast<int>(A.rows()); }

  void check_dimensions() const {
    if (A.rows() != A.cols())
      throw std::invalid_argument("StateSpaceModel: A is " +
                                  std::to_string(A.rows()) + "x" +
                                  std::to_string(A.cols()) + ", not square");
    if (B.size() != A.rows())
      throw std::invalid_argument("StateSpaceModel: B has " +
                                  std::to_string(B.size()) +
                                  " rows, expected " + std::to_string(A.rows()));
    if (C.size() != A.rows())
      throw std::invalid_argument("StateSpaceModel: C has " +
                                  std::to_string(C.size()) +
                                  " cols, expected " + std::to_string(A.rows()));
  }

  Eigen::VectorXcd pole_eigenvalues() const {
    if (order() == 0) return Eigen::VectorXcd();
    return Eigen::EigenSolver<Eigen::MatrixXd>(A, false).eigenvalues();
  }

  bool is_stable() const {
    auto eig = pole_eigenvalues();
    for (int i = 0; i < eig.size(); ++i) {
      if (time_domain == TimeDomain::kDiscrete) {
        if (std::abs(eig[i]) >= 1.0) return false;
      } else {
        if (eig[i].real() >= 0.0) return false;
      }
    }
    return true;
  }
};

// Runs the discrete recursion x(t+1) = A x(t) + B u(t), y(t) = C x(t) + D u(t)
// over the whole input, starting from the given state.
inline std::vector<double> simulate(const StateSpaceModel& sys,
                                    const std::vector<double>& input,
                                    const Eigen::VectorXd& initial_state) {
  if (sys.time_domain != TimeDomain::kDiscrete)
    throw std::invalid_argument("simulate: system must be discrete-time");
  sys.check_dimensions();
  if (initial_state.size() != sys.A.rows())
    throw std::invalid_argument(
        "simulate: initial state has " + std::to_string(initial_state.size()) +
        " entries, expected " + std::to_string(sys.A.rows()));
  std::vector<double> output(input.size());
  Eigen::VectorXd x = initial_state;
  for (std::size_t t = 0; t < input.size(); ++t) {
    output[t] = sys.C.dot(x) + sys.D * input[t];
    x = sys.A * x + sys.B * input[t];
  }
  return output;
}

inline std::vector<double> simulate(const StateSpaceModel& sys,
                                    const std::vector<double>& input) {
  return simulate(sys, input, Eigen::VectorXd::Zero(sys.A.rows()));
}

// Zero-order-hold discretization via the augmented-matrix exponential
// exp([[A,B],[0,0]]*Ts) = [[Ad,Bd],[0,I]].
inline StateSpaceModel zoh_discretize(const StateSpaceModel& sys, double Ts) {
  if (sys.time_domain != TimeDomain::kContinuous)
    throw std::invalid_argument("zoh_discretize: system must be continuous-time");
  if (!(Ts > 0.0)) throw std::invalid_argument("zoh_discretize: Ts must be > 0");
  sys.check_dimensions();
  const int n = sys.order();
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + 1, n + 1);
  aug.topLeftCorner(n, n) = sys.A * Ts;
  aug.topRightCorner(n, 1) = sys.B * Ts;
  Eigen::MatrixXd e = aug.exp();
  if (!e.allFinite())
    throw std::runtime_error(
        "zoh_discretize: matrix exponential did not converge (||A*Ts|| = " +
        std::to_string(sys.A.norm() * Ts) + ")");
  StateSpaceModel out;
  out.A = e.topLeftCorner(n, n);
  out.B = e.topRightCorner(n, 1);
  out.C = sys.C;
  out.D = sys.D;
  out.time_domain = TimeDomain::kDiscrete;
  return out;
}

// |H(jw)| for a continuous-time model.
inline double frequency_gain(const StateSpaceModel& sys, double omega) {
  const int n = sys.order();
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Identity(n, n) * std::complex<double>(0.0, omega);
  M -= sys.A.cast<std::complex<double>>();
  Eigen::VectorXcd x = M.partialPivLu().solve(sys.B.cast<std::complex<double>>());
  std::complex<double> h = sys.C.cast<std::complex<double>>().dot(x) + sys.D;
  return std::abs(h);
}

// First -3 dB crossing of |H(jw)|, located by bracketing on a log grid and
// bisection to 1e-6 relative tolerance.
inline double bandwidth(const StateSpaceModel& sys) {
  if (sys.time_domain != TimeDomain::kContinuous)
    throw std::invalid_argument("bandwidth: system must be continuous-time");
  const double dc = frequency_gain(sys, 0.0);
  if (!(dc > 0.0)) throw std::runtime_error("bandwidth undefined: zero DC gain");
  const double target = dc / std::sqrt(2.0);
  const double lo_w = 1e-6, hi_w = 1e9;
  const int grid = 400;
  double prev_w = lo_w;
  double prev_g = frequency_gain(sys, prev_w);
  double bracket_lo = 0.0, bracket_hi = 0.0;
  for (int i = 1; i <= grid; ++i) {
    double w = lo_w * std::pow(hi_w / lo_w, static_cast<double>(i) / grid);
    double g = frequency_gain(sys, w);
    if ((prev_g - target) * (g - target) <= 0.0) {
      bracket_lo = prev_w;
      bracket_hi = w;
      break;
    }
    prev_w = w;
    prev_g = g;
  }
  if (bracket_hi == 0.0)
    throw std::runtime_error("bandwidth undefined: no -3 dB crossing in [1e-6, 1e9] rad/s");
  while ((bracket_hi - bracket_lo) > 1e-6 * bracket_hi) {
    double mid = std::sqrt(bracket_lo * bracket_hi);
    if ((frequency_gain(sys, bracket_lo) - target) *
            (frequency_gain(sys, mid) - target) <= 0.0)
      bracket_hi = mid;
    else
      bracket_lo = mid;
  }
  return 0.5 * (bracket_lo + bracket_hi);
}

}  // namespace nckrm
