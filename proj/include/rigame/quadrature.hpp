#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Eigenvalues>

#include "rigame/model.hpp"

namespace rigame {

// Nodes and probability weights realizing E[g(eps)] under a prior.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  PriorSpec prior;

  std::size_t size() const { return nodes.size(); }

  template <class F>
  double expect(F&& g) const {
    double s = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) s += weights[k] * g(nodes[k]);
    return s;
  }
};

namespace detail {

// Golub-Welsch: eigen-decomposition of the symmetric Jacobi matrix. Returns
// nodes and weights normalized to sum to one.
inline void golub_welsch(const Eigen::VectorXd& offdiag, std::vector<double>& nodes,
                         std::vector<double>& weights) {
  const Eigen::Index n = offdiag.size() + 1;
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    jacobi(k, k + 1) = offdiag[k];
    jacobi(k + 1, k) = offdiag[k];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  nodes.resize(n);
  weights.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    nodes[k] = es.eigenvalues()[k];
    const double v0 = es.eigenvectors()(0, k);
    weights[k] = v0 * v0;
  }
  // Symmetrize: the rules are symmetric about zero and this removes the
  // eigen-solver's last-bit asymmetry, which matters for odd integrands.
  for (Eigen::Index k = 0; k < n / 2; ++k) {
    const Eigen::Index j = n - 1 - k;
    const double x = 0.5 * (nodes[j] - nodes[k]);
    const double w = 0.5 * (weights[j] + weights[k]);
    nodes[k] = -x;
    nodes[j] = x;
    weights[k] = w;
    weights[j] = w;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double& w : weights) w /= total;
}

}  // namespace detail

// Probabilists' Gauss-Hermite rule for a standard normal, scaled to the prior.
inline QuadratureRule gauss_hermite(const PriorSpec& prior, int n) {
  if (prior.family != PriorFamily::Normal)
    throw ValidationError("Gauss-Hermite rule requires a normal prior");
  if (n < 1) throw ValidationError("quadrature needs at least one node");
  Eigen::VectorXd off(n - 1);
  for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(static_cast<double>(k));
  QuadratureRule rule{{}, {}, prior};
  detail::golub_welsch(off, rule.nodes, rule.weights);
  const double mu = prior.mean();
  const double s = prior.sd();
  for (double& x : rule.nodes) x = mu + s * x;
  return rule;
}

// Gauss-Legendre nodes and weights on [-1, 1], weights summing to one.
inline void legendre_unit(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  Eigen::VectorXd off(n - 1);
  for (int k = 1; k < n; ++k) off[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  detail::golub_welsch(off, nodes, weights);
}

inline QuadratureRule gauss_legendre(const PriorSpec& prior, int n) {
  if (prior.family != PriorFamily::Uniform)
    throw ValidationError("Gauss-Legendre rule requires a uniform prior");
  if (n < 1) throw ValidationError("quadrature needs at least one node");
  QuadratureRule rule{{}, {}, prior};
  legendre_unit(n, rule.nodes, rule.weights);
  const double mid = 0.5 * (prior.param1 + prior.param2);
  const double half = 0.5 * (prior.param2 - prior.param1);
  for (double& x : rule.nodes) x = mid + half * x;
  return rule;
}

// Default rule for a prior: Gauss-Hermite for normal, Gauss-Legendre for uniform.
inline QuadratureRule default_rule(const PriorSpec& prior, int n = 64) {
  return prior.family == PriorFamily::Normal ? gauss_hermite(prior, n) : gauss_legendre(prior, n);
}

// Composite Gauss-Legendre on the probability scale: the unit interval is cut
// into equal-mass panels and mapped through the prior quantile. Every panel
// carries 1/panels of the mass, which bounds the error on step-like integrands.
inline QuadratureRule composite_rule(const PriorSpec& prior, int panels, int order = 4) {
  if (panels < 1 || order < 1) throw ValidationError("composite rule needs panels and order >= 1");
  std::vector<double> un, uw;
  legendre_unit(order, un, uw);
  QuadratureRule rule{{}, {}, prior};
  rule.nodes.reserve(static_cast<std::size_t>(panels) * order);
  rule.weights.reserve(rule.nodes.capacity());
  const double h = 1.0 / panels;
  for (int k = 0; k < panels; ++k) {
    for (int j = 0; j < order; ++j) {
      const double u = (k + 0.5 * (un[j] + 1.0)) * h;
      rule.nodes.push_back(prior.quantile(u));
      rule.weights.push_back(uw[j] * h);
    }
  }
  return rule;
}

// Composite Gauss-Legendre on a window of the normal prior's eps axis, with
// panels no wider than lambda / 2. The window reaches past sd^2 / lambda,
// where the exponentially tilted integrands behind the corner thresholds
// put their mass. Weights are density times node weight, renormalized.
inline QuadratureRule tilted_window_rule(const PriorSpec& prior, double lambda, int max_panels, int order = 4) {
  const double mu = prior.mean();
  const double s = prior.sd();
  const double reach = std::min(std::max(8.0, s / lambda + 6.0), 20.0) * s;
  const int panels = std::min(max_panels, static_cast<int>(std::ceil(2.0 * reach / (0.5 * lambda))));
  std::vector<double> un, uw;
  legendre_unit(order, un, uw);
  QuadratureRule rule{{}, {}, prior};
  const double h = 2.0 * reach / panels;
  double total = 0.0;
  for (int k = 0; k < panels; ++k) {
    for (int j = 0; j < order; ++j) {
      const double x = mu - reach + (k + 0.5 * (un[j] + 1.0)) * h;
      const double z = (x - mu) / s;
      const double w = uw[j] * std::exp(-0.5 * z * z);
      rule.nodes.push_back(x);
      rule.weights.push_back(w);
      total += w;
    }
  }
  for (double& w : rule.weights) w /= total;
  return rule;
}

// Picks a rule adequate for the given information cost. When lambda is small
// against the prior spread the choice rule is nearly a step in eps and the
// Gaussian rule is too coarse both at the step and in the tails that set the
// corner thresholds.
inline QuadratureRule rule_for_cost(const PriorSpec& prior, double lambda, int n = 64) {
  const double s = prior.sd();
  if (prior.family == PriorFamily::Normal && lambda < 0.4 * s) {
    constexpr int kMaxPanels = 2000;
    const double reach = std::min(std::max(8.0, s / lambda + 6.0), 20.0) * s;
    if (2.0 * reach / (0.5 * lambda) <= kMaxPanels) return tilted_window_rule(prior, lambda, kMaxPanels);
    return composite_rule(prior, kMaxPanels, 4);
  }
  if (lambda < 0.05 * s) return composite_rule(prior, 1000, 4);
  return default_rule(prior, n);
}

}  // namespace rigame
