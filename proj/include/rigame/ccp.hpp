#pragma once

// First-step conditional choice probabilities: a logistic series in the
// standardized covariates (x, z1, z2), all monomials of total degree <= kappa.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rigame/model.hpp"

namespace rigame {

// Exponent tuples of total degree <= kappa in `vars` variables, graded.
inline std::vector<std::vector<int>> total_degree_exponents(int vars, int kappa) {
  std::vector<std::vector<int>> out;
  std::vector<int> e(vars, 0);
  for (int deg = 0; deg <= kappa; ++deg) {
    // Enumerate compositions of deg into vars parts, lexicographically descending.
    auto rec = [&](auto&& self, int pos, int left) -> void {
      if (pos == vars - 1) {
        e[pos] = left;
        out.push_back(e);
        return;
      }
      for (int k = left; k >= 0; --k) {
        e[pos] = k;
        self(self, pos + 1, left - k);
      }
    };
    if (vars == 0) {
      if (deg == 0) out.push_back({});
      continue;
    }
    rec(rec, 0, deg);
  }
  return out;
}

struct CcpFitInfo {
  bool converged = false;
  bool ridge = false;
  int iterations = 0;
  double grad_norm = 0.0;
};

struct CcpModel {
  int kappa = 3;
  std::vector<double> center;
  std::vector<double> scale;
  std::vector<std::vector<int>> exponents;
  std::array<std::vector<double>, 2> gamma;
  std::array<CcpFitInfo, 2> info;

  static constexpr double kClip = 1e-12;

  std::vector<double> basis(const Covariates& c) const {
    std::vector<double> u(center.size());
    for (std::size_t k = 0; k < c.x.size(); ++k) u[k] = (c.x[k] - center[k]) / scale[k];
    const std::size_t kx = c.x.size();
    u[kx] = (c.z1 - center[kx]) / scale[kx];
    u[kx + 1] = (c.z2 - center[kx + 1]) / scale[kx + 1];
    std::vector<double> out(exponents.size());
    for (std::size_t t = 0; t < exponents.size(); ++t) {
      double v = 1.0;
      for (std::size_t k = 0; k < u.size(); ++k)
        for (int r = 0; r < exponents[t][k]; ++r) v *= u[k];
      out[t] = v;
    }
    return out;
  }

  // Fitted probabilities, strictly inside (0, 1).
  ChoiceProbPair predict(const Covariates& c) const {
    if (c.x.size() + 2 != center.size())
      throw ValidationError("covariate dimension does not match the fitted choice model");
    const auto b = basis(c);
    ChoiceProbPair p;
    for (int i = 0; i < 2; ++i) {
      double eta = 0.0;
      for (std::size_t t = 0; t < b.size(); ++t) eta += gamma[i][t] * b[t];
      const double q = eta >= 0 ? 1.0 / (1.0 + std::exp(-eta)) : std::exp(eta) / (1.0 + std::exp(eta));
      p[i] = std::clamp(q, kClip, 1.0 - kClip);
    }
    return p;
  }
};

namespace detail {

// Logistic regression by Newton-Raphson on the mean log-likelihood. Returns
// false when the iteration diverges or stalls.
inline bool fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double ridge,
                         Eigen::VectorXd& beta, CcpFitInfo& info, double gtol = 1e-8) {
  const Eigen::Index n = X.rows(), k = X.cols();
  beta = Eigen::VectorXd::Zero(k);
  const double ybar = y.mean();
  if (ybar > 0.0 && ybar < 1.0) beta[0] = std::log(ybar / (1.0 - ybar));
  auto objective = [&](const Eigen::VectorXd& b) {
    const Eigen::VectorXd eta = X * b;
    double ll = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) {
      const double e = eta[r];
      const double log1pexp = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
      ll += y[r] * e - log1pexp;
    }
    return ll / static_cast<double>(n) - 0.5 * ridge * b.squaredNorm();
  };
  double f = objective(beta);
  for (info.iterations = 0; info.iterations < 200; ++info.iterations) {
    const Eigen::VectorXd eta = X * beta;
    Eigen::VectorXd mu(n), w(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      mu[r] = 1.0 / (1.0 + std::exp(-eta[r]));
      w[r] = mu[r] * (1.0 - mu[r]);
    }
    const Eigen::VectorXd grad = X.transpose() * (y - mu) / static_cast<double>(n) - ridge * beta;
    info.grad_norm = grad.cwiseAbs().maxCoeff();
    if (info.grad_norm <= gtol) {
      info.converged = true;
      return true;
    }
    Eigen::MatrixXd hess = X.transpose() * w.asDiagonal() * X / static_cast<double>(n);
    hess.diagonal().array() += ridge;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return false;
    const Eigen::VectorXd step = ldlt.solve(grad);
    if (!step.allFinite()) return false;
    double t = 1.0;
    Eigen::VectorXd next;
    double fn = -std::numeric_limits<double>::infinity();
    for (int ls = 0; ls < 50; ++ls) {
      next = beta + t * step;
      fn = objective(next);
      if (fn >= f - 1e-14 * std::abs(f)) break;
      t *= 0.5;
    }
    if (!(fn >= f - 1e-14 * std::abs(f))) return false;
    beta = next;
    f = fn;
    if (beta.cwiseAbs().maxCoeff() > 1e4) return false;
  }
  return false;
}

}  // namespace detail

// Fits each player's logistic series by Newton-Raphson. If a fit diverges
// (for example under separation) it is redone with a 1e-6 ridge penalty and
// flagged.
inline CcpModel fit_first_step_ccp(const std::vector<Covariates>& covs,
                                   const std::array<std::vector<double>, 2>& y, int kappa = 3) {
  if (kappa < 0) throw ValidationError("series degree must be nonnegative");
  if (covs.empty()) throw ValidationError("cannot fit choice probabilities on an empty sample");
  const std::size_t kx = covs.front().x.size();
  const std::size_t vars = kx + 2;
  const std::size_t n = covs.size();
  CcpModel m;
  m.kappa = kappa;
  m.center.assign(vars, 0.0);
  m.scale.assign(vars, 1.0);
  auto value = [&](const Covariates& c, std::size_t k) {
    return k < kx ? c.x[k] : (k == kx ? c.z1 : c.z2);
  };
  for (std::size_t k = 0; k < vars; ++k) {
    double s = 0.0, s2 = 0.0;
    for (const auto& c : covs) s += value(c, k);
    const double mean = s / static_cast<double>(n);
    for (const auto& c : covs) s2 += (value(c, k) - mean) * (value(c, k) - mean);
    const double sd = std::sqrt(s2 / static_cast<double>(n));
    m.center[k] = mean;
    m.scale[k] = sd > 0.0 ? sd : 1.0;
  }
  m.exponents = total_degree_exponents(static_cast<int>(vars), kappa);
  Eigen::MatrixXd X(n, m.exponents.size());
  for (std::size_t r = 0; r < n; ++r) {
    const auto b = m.basis(covs[r]);
    for (std::size_t t = 0; t < b.size(); ++t) X(r, t) = b[t];
  }
  for (int i = 0; i < 2; ++i) {
    Eigen::VectorXd yv(n);
    for (std::size_t r = 0; r < n; ++r) yv[r] = y[i][r];
    Eigen::VectorXd beta;
    CcpFitInfo info;
    if (!detail::fit_logistic(X, yv, 0.0, beta, info)) {
      info = {};
      info.ridge = true;
      detail::fit_logistic(X, yv, 1e-6, beta, info);
    }
    m.gamma[i].assign(beta.data(), beta.data() + beta.size());
    m.info[i] = info;
  }
  return m;
}

inline CcpModel fit_first_step_ccp(const MarketDataset& data, int kappa = 3) {
  data.validate();
  std::vector<Covariates> covs;
  std::array<std::vector<double>, 2> y;
  for (const auto& r : data.rows) {
    covs.push_back(r.covariates());
    y[0].push_back(r.y1);
    y[1].push_back(r.y2);
  }
  return fit_first_step_ccp(covs, y, kappa);
}

}  // namespace rigame
