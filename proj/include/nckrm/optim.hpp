#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "nckrm/rng.hpp"

namespace nckrm {

// Bounded coordinate with its optimization change of variables: the search
// runs in an unconstrained z-space and maps back through a logistic squash,
// linearly over [lo, hi] or over log-position for scale-like coordinates.
struct BoxCoord {
  double lo = 0.0;
  double hi = 1.0;
  bool log_scale = false;
};

namespace detail {

inline double squash(double z) { return 1.0 / (1.0 + std::exp(-z)); }
inline double unsquash(double u) {
  u = std::min(std::max(u, 1e-15), 1.0 - 1e-15);
  return std::log(u / (1.0 - u));
}

}  // namespace detail

inline double box_to_x(const BoxCoord& c, double z) {
  double u = detail::squash(z);
  if (c.log_scale) return std::exp(std::log(c.lo) + u * (std::log(c.hi) - std::log(c.lo)));
  return c.lo + u * (c.hi - c.lo);
}

inline double box_to_z(const BoxCoord& c, double x) {
  double u;
  if (c.log_scale)
    u = (std::log(x) - std::log(c.lo)) / (std::log(c.hi) - std::log(c.lo));
  else
    u = (x - c.lo) / (c.hi - c.lo);
  return detail::unsquash(u);
}

inline Eigen::VectorXd box_to_x(const std::vector<BoxCoord>& box,
                                const Eigen::VectorXd& z) {
  Eigen::VectorXd x(z.size());
  for (int i = 0; i < z.size(); ++i) x(i) = box_to_x(box[static_cast<std::size_t>(i)], z(i));
  return x;
}

inline Eigen::VectorXd box_to_z(const std::vector<BoxCoord>& box,
                                const Eigen::VectorXd& x) {
  Eigen::VectorXd z(x.size());
  for (int i = 0; i < x.size(); ++i) z(i) = box_to_z(box[static_cast<std::size_t>(i)], x(i));
  return z;
}

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct OptimOptions {
  int max_iterations = 500;
  double rel_tol = 1e-8;
  double fd_step = 1e-6;  // central-difference step in z-space
  std::function<void(double)> on_step;  // called with each accepted objective
};

struct LocalResult {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool evaluated = false;  // false if even the start point failed
};

// Box-constrained quasi-Newton descent: BFGS on the transformed coordinates
// with central-difference gradients and Armijo backtracking. Monotone by
// construction; stops on relative objective stagnation.
inline LocalResult bfgs_box(const Objective& f, const std::vector<BoxCoord>& box,
                            const Eigen::VectorXd& x0, const OptimOptions& opt) {
  const int d = static_cast<int>(box.size());
  auto safe_f = [&](const Eigen::VectorXd& z) {
    double v;
    try {
      v = f(box_to_x(box, z));
    } catch (const std::exception&) {
      return std::numeric_limits<double>::infinity();
    }
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  LocalResult res;
  Eigen::VectorXd z = box_to_z(box, x0);
  double fz = safe_f(z);
  res.x = box_to_x(box, z);
  res.value = fz;
  if (!std::isfinite(fz)) return res;
  res.evaluated = true;
  if (opt.on_step) opt.on_step(fz);

  auto gradient = [&](const Eigen::VectorXd& at) {
    Eigen::VectorXd g(d);
    Eigen::VectorXd probe = at;
    for (int i = 0; i < d; ++i) {
      probe(i) = at(i) + opt.fd_step;
      double fp = safe_f(probe);
      probe(i) = at(i) - opt.fd_step;
      double fm = safe_f(probe);
      probe(i) = at(i);
      g(i) = (std::isfinite(fp) && std::isfinite(fm))
                 ? (fp - fm) / (2.0 * opt.fd_step)
                 : 0.0;
    }
    return g;
  };

  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(d, d);  // inverse Hessian
  Eigen::VectorXd g = gradient(z);
  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    Eigen::VectorXd p = -(H * g);
    if (p.dot(g) >= 0.0) {  // lost positive definiteness; reset
      H.setIdentity();
      p = -g;
    }
    double gtp = g.dot(p);
    if (!(gtp < 0.0)) break;

    // Armijo backtracking
    double step = 1.0;
    double f_new = std::numeric_limits<double>::infinity();
    Eigen::VectorXd z_new;
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      z_new = z + step * p;
      f_new = safe_f(z_new);
      if (f_new <= fz + 1e-4 * step * gtp) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    Eigen::VectorXd g_new = gradient(z_new);
    Eigen::VectorXd s = z_new - z;
    Eigen::VectorXd y = g_new - g;
    double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      Eigen::VectorXd Hy = H * y;
      double yHy = y.dot(Hy);
      H += ((sy + yHy) / (sy * sy)) * (s * s.transpose()) -
           (Hy * s.transpose() + s * Hy.transpose()) / sy;
    }

    double drop = fz - f_new;
    z = z_new;
    fz = f_new;
    g = g_new;
    res.iterations = iter + 1;
    if (opt.on_step) opt.on_step(fz);
    if (drop <= opt.rel_tol * std::max(1.0, std::abs(fz))) break;
  }
  res.x = box_to_x(box, z);
  res.value = fz;
  return res;
}

struct MultistartOptions : OptimOptions {
  // After this many iterations a run still above the incumbent is cut short;
  // 0 disables. The incumbent guarantee (result <= every start value) is
  // unaffected because every start is evaluated.
  int prune_after = 0;
  // relative slack on the incumbent comparison: a probe within
  // prune_slack * |incumbent| of the best value so far is still finished
  double prune_slack = 0.0;
  // When positive, screen_factor * n_starts random candidates are scored with
  // a single objective evaluation each and the best n_starts become the local
  // search starting points. Screening costs a tiny fraction of one local run
  // per candidate and sharply improves basin coverage.
  int screen_factor = 0;
};

struct MultistartResult {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::infinity();
  int n_runs = 0;
  int best_start = -1;
  std::vector<double> start_values;
};

inline MultistartResult multistart_minimize(const Objective& f,
                                            const std::vector<BoxCoord>& box,
                                            int n_starts, std::uint64_t seed,
                                            const MultistartOptions& opt) {
  if (n_starts < 1) throw std::invalid_argument("multistart_minimize: n_starts < 1");
  Rng rng(seed);
  const int d = static_cast<int>(box.size());
  const int n_candidates =
      opt.screen_factor > 0 ? opt.screen_factor * n_starts : n_starts;
  std::vector<Eigen::VectorXd> starts;
  for (int r = 0; r < n_candidates; ++r) {
    Eigen::VectorXd x(d);
    for (int i = 0; i < d; ++i) {
      const BoxCoord& c = box[static_cast<std::size_t>(i)];
      // log-scaled coordinates span orders of magnitude; sample them
      // uniformly in the optimizer's own (log) parameterization
      x(i) = c.log_scale
                 ? std::exp(rng.uniform(std::log(c.lo), std::log(c.hi)))
                 : rng.uniform(c.lo, c.hi);
    }
    starts.push_back(std::move(x));
  }
  if (n_candidates > n_starts) {
    auto score = [&](const Eigen::VectorXd& x) {
      double v;
      try {
        v = f(x);
      } catch (const std::exception&) {
        return std::numeric_limits<double>::infinity();
      }
      return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };
    std::vector<std::pair<double, int>> ranked;
    ranked.reserve(starts.size());
    for (int r = 0; r < n_candidates; ++r)
      ranked.emplace_back(score(starts[static_cast<std::size_t>(r)]), r);
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Eigen::VectorXd> best;
    best.reserve(static_cast<std::size_t>(n_starts));
    for (int r = 0; r < n_starts; ++r)
      best.push_back(std::move(starts[static_cast<std::size_t>(ranked[static_cast<std::size_t>(r)].second)]));
    starts = std::move(best);
  }

  MultistartResult out;
  out.n_runs = n_starts;
  bool any = false;
  for (int r = 0; r < n_starts; ++r) {
    LocalResult lr;
    if (opt.prune_after > 0 && any) {
      // two-phase: probe cheaply, then finish only if competitive
      OptimOptions probe = opt;
      probe.max_iterations = opt.prune_after;
      lr = bfgs_box(f, box, starts[static_cast<std::size_t>(r)], probe);
      double cutoff = out.value + opt.prune_slack * std::abs(out.value);
      if (lr.evaluated && lr.value <= cutoff) {
        LocalResult fr = bfgs_box(f, box, lr.x, opt);
        if (fr.evaluated) lr = fr;
      }
    } else {
      lr = bfgs_box(f, box, starts[static_cast<std::size_t>(r)], opt);
    }
    out.start_values.push_back(lr.evaluated ? lr.value
                                            : std::numeric_limits<double>::infinity());
    if (!lr.evaluated) continue;
    any = true;
    if (lr.value < out.value) {
      out.value = lr.value;
      out.x = lr.x;
      out.best_start = r;
    }
  }
  if (!any)
    throw std::runtime_error("multistart_minimize: objective failed at every start");
  return out;
}

}  // namespace nckrm
