#pragma once

// Unconstrained minimization with numerical gradients: BFGS with Armijo
// backtracking, and Nelder-Mead as a derivative-free fallback.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rigame {

struct OptimOptions {
  int max_iter = 500;
  // Stop when the gradient max-norm falls to gtol.
  double gtol = 1e-5;
  // Stop when a step moves no coordinate by more than xtol (relative to max(1, |x|)).
  double xtol = 1e-8;
  // Central differences with step fd_step * max(1, |x_k|).
  double fd_step = 1e-5;
  int nm_max_iter = 5000;
  // Line-search failures before switching to Nelder-Mead.
  int max_line_search_failures = 2;
  // Stop once any coordinate exceeds this in magnitude: the objective keeps
  // improving along an unbounded direction and has no finite minimizer.
  double divergence_bound = std::numeric_limits<double>::infinity();
};

struct OptimResult {
  std::vector<double> x;
  double f = std::numeric_limits<double>::infinity();
  int iterations = 0;
  int evaluations = 0;
  double grad_norm = std::numeric_limits<double>::infinity();
  bool converged = false;
  bool used_fallback = false;
  bool diverged = false;
  std::string message;
};

using Objective = std::function<double(const std::vector<double>&)>;

inline std::vector<double> numeric_gradient(const Objective& f, const std::vector<double>& x,
                                            double rel_step, int* evals = nullptr) {
  std::vector<double> g(x.size());
  std::vector<double> y = x;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double h = rel_step * std::max(1.0, std::abs(x[k]));
    y[k] = x[k] + h;
    const double fp = f(y);
    y[k] = x[k] - h;
    const double fm = f(y);
    y[k] = x[k];
    g[k] = (fp - fm) / (2.0 * h);
    if (evals) *evals += 2;
  }
  return g;
}

inline double max_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double a : v) m = std::max(m, std::abs(a));
  return m;
}

inline OptimResult nelder_mead(const Objective& f, std::vector<double> x0, const OptimOptions& opt,
                               double initial_scale = 0.1) {
  const std::size_t n = x0.size();
  OptimResult out;
  std::vector<std::vector<double>> simplex(n + 1, x0);
  std::vector<double> fv(n + 1);
  for (std::size_t k = 0; k < n; ++k)
    simplex[k + 1][k] += initial_scale * std::max(1.0, std::abs(x0[k]));
  for (std::size_t k = 0; k <= n; ++k) fv[k] = f(simplex[k]);
  out.evaluations = static_cast<int>(n + 1);
  std::vector<std::size_t> order(n + 1);
  auto point = [&](const std::vector<double>& c, const std::vector<double>& w, double t) {
    std::vector<double> r(n);
    for (std::size_t k = 0; k < n; ++k) r[k] = c[k] + t * (w[k] - c[k]);
    return r;
  };
  int it = 0;
  for (; it < opt.nm_max_iter; ++it) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];
    double spread = 0.0;
    for (std::size_t k = 0; k <= n; ++k)
      for (std::size_t j = 0; j < n; ++j)
        spread = std::max(spread, std::abs(simplex[k][j] - simplex[best][j]) /
                                      std::max(1.0, std::abs(simplex[best][j])));
    if (spread <= opt.xtol && std::abs(fv[worst] - fv[best]) <= 1e-14 * std::max(1.0, std::abs(fv[best])))
      break;
    if (max_norm(simplex[best]) > opt.divergence_bound) {
      out.diverged = true;
      break;
    }
    std::vector<double> c(n, 0.0);
    for (std::size_t k = 0; k <= n; ++k)
      if (k != worst)
        for (std::size_t j = 0; j < n; ++j) c[j] += simplex[k][j] / static_cast<double>(n);
    const auto xr = point(c, simplex[worst], -1.0);
    const double fr = f(xr);
    ++out.evaluations;
    if (fr < fv[best]) {
      const auto xe = point(c, simplex[worst], -2.0);
      const double fe = f(xe);
      ++out.evaluations;
      if (fe < fr) { simplex[worst] = xe; fv[worst] = fe; }
      else { simplex[worst] = xr; fv[worst] = fr; }
    } else if (fr < fv[second]) {
      simplex[worst] = xr;
      fv[worst] = fr;
    } else {
      const bool outside = fr < fv[worst];
      const auto xc = point(c, outside ? xr : simplex[worst], 0.5);
      const double fc = f(xc);
      ++out.evaluations;
      if (fc < (outside ? fr : fv[worst])) {
        simplex[worst] = xc;
        fv[worst] = fc;
      } else {
        for (std::size_t k = 0; k <= n; ++k) {
          if (k == best) continue;
          simplex[k] = point(simplex[best], simplex[k], 0.5);
          fv[k] = f(simplex[k]);
          ++out.evaluations;
        }
      }
    }
  }
  const std::size_t best = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
  out.x = simplex[best];
  out.f = fv[best];
  out.iterations = it;
  out.used_fallback = true;
  return out;
}

// Minimizes f from x0. Non-finite objective values are treated as +inf, so
// the line search backs away from them.
inline OptimResult minimize_bfgs(const Objective& f_raw, std::vector<double> x0, const OptimOptions& opt = {}) {
  const Objective f = [&](const std::vector<double>& x) {
    const double v = f_raw(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  const std::size_t n = x0.size();
  OptimResult out;
  out.x = std::move(x0);
  out.f = f(out.x);
  ++out.evaluations;
  if (!std::isfinite(out.f)) {
    out.message = "objective is not finite at the start";
    return out;
  }
  if (n == 0) {
    out.converged = true;
    out.grad_norm = 0.0;
    return out;
  }
  using Vec = Eigen::VectorXd;
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  auto to_vec = [](const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), v.size()); };
  std::vector<double> g = numeric_gradient(f, out.x, opt.fd_step, &out.evaluations);
  out.grad_norm = max_norm(g);
  int failures = 0;
  bool scaled = false;
  for (out.iterations = 0; out.iterations < opt.max_iter; ++out.iterations) {
    if (out.grad_norm <= opt.gtol) {
      out.converged = true;
      out.message = "gradient tolerance reached";
      return out;
    }
    const Vec gv = to_vec(g);
    Vec d = -H * gv;
    double slope = gv.dot(d);
    if (!(slope < 0.0)) {
      H.setIdentity();
      d = -gv;
      slope = gv.dot(d);
    }
    double t = 1.0;
    if (!scaled) {
      // First step: cap the move at unit length in the max-norm.
      const double dm = d.cwiseAbs().maxCoeff();
      if (dm > 1.0) t = 1.0 / dm;
    }
    std::vector<double> xn(n);
    double fn = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t k = 0; k < n; ++k) xn[k] = out.x[k] + t * d[k];
      fn = f(xn);
      ++out.evaluations;
      if (fn <= out.f + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      ++failures;
      if (failures >= opt.max_line_search_failures) {
        OptimResult nm = nelder_mead(f, out.x, opt);
        nm.evaluations += out.evaluations;
        nm.iterations += out.iterations;
        if (!(nm.f <= out.f)) {
          nm.x = out.x;
          nm.f = out.f;
        }
        std::vector<double> gn = numeric_gradient(f, nm.x, opt.fd_step, &nm.evaluations);
        nm.grad_norm = max_norm(gn);
        nm.converged = !nm.diverged && nm.grad_norm <= opt.gtol;
        nm.message = nm.diverged    ? "parameters diverging during derivative-free fallback"
                     : nm.converged ? "converged after derivative-free fallback"
                                    : "line search failed; derivative-free fallback did not reach the gradient tolerance";
        return nm;
      }
      H.setIdentity();
      scaled = false;
      continue;
    }
    std::vector<double> gn = numeric_gradient(f, xn, opt.fd_step, &out.evaluations);
    const Vec s = t * d;
    const Vec yv = to_vec(gn) - gv;
    double step = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      step = std::max(step, std::abs(s[k]) / std::max(1.0, std::abs(xn[k])));
    out.x = xn;
    out.f = fn;
    g = std::move(gn);
    out.grad_norm = max_norm(g);
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      if (!scaled) {
        H *= sy / yv.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
      H = (I - rho * s * yv.transpose()) * H * (I - rho * yv * s.transpose()) + rho * s * s.transpose();
    }
    if (out.grad_norm <= opt.gtol) {
      out.converged = true;
      out.message = "gradient tolerance reached";
      ++out.iterations;
      return out;
    }
    if (max_norm(out.x) > opt.divergence_bound) {
      ++out.iterations;
      out.diverged = true;
      out.message = "parameters diverging: the objective has no finite optimum";
      return out;
    }
    if (step <= opt.xtol) {
      ++out.iterations;
      out.message = "step below tolerance before the gradient tolerance was reached";
      return out;
    }
  }
  out.message = "iteration limit reached";
  return out;
}

}  // namespace rigame
