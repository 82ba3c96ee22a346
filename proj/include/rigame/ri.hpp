#pragma once

// Single-agent rational inattention with a binary action: the optimal
// conditional choice rule, the unconditional choice probability it implies,
// its inverse, and the entropy-based information measures.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "rigame/errors.hpp"
#include "rigame/quadrature.hpp"

namespace rigame {

enum class Corner { Interior, AtZero, AtOne };

inline const char* to_string(Corner c) {
  switch (c) {
    case Corner::Interior: return "interior";
    case Corner::AtZero: return "at_zero";
    case Corner::AtOne: return "at_one";
  }
  return "?";
}

struct RiSolution {
  double p = 0.0;       // unconditional probability of action 1
  double v = 0.0;       // deterministic expected payoff of action 1
  double lambda = 1.0;  // unit information cost
  Corner corner = Corner::Interior;
};

namespace detail {

inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

inline double log_mean_exp(std::span<const double> w, std::span<const double> x, double sign) {
  double m = -INFINITY;
  for (std::size_t k = 0; k < x.size(); ++k)
    if (w[k] > 0.0) m = std::max(m, sign * x[k]);
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += w[k] * std::exp(sign * x[k] - m);
  return m + std::log(s);
}

}  // namespace detail

// P(action 1 | eps) = p A / (p A + 1 - p) with A = exp((v + eps) / lambda),
// evaluated as a logistic in log space so it never overflows.
inline double conditional_choice_prob(double p, double v, double lambda, double eps) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  return detail::logistic((v + eps) / lambda + detail::logit(p));
}

// -p ln p - (1-p) ln(1-p) in nats, with 0 ln 0 = 0.
inline double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log(p) - (1.0 - p) * std::log1p(-p);
}

// Solver for one player's problem under a fixed prior rule and cost lambda.
// Precomputes the scaled nodes so that each evaluation needs a single exp.
class ChoiceSolver {
 public:
  struct Moments {
    double q = 0.0;    // E[q]
    double q2 = 0.0;   // E[q^2]
    double qq = 0.0;   // E[q (1 - q)]
  };

  ChoiceSolver(QuadratureRule rule, double lambda) : rule_(std::move(rule)), lambda_(lambda) {
    if (!(lambda_ > 0.0) || !std::isfinite(lambda_))
      throw ValidationError("information cost lambda must be positive and finite");
    if (rule_.nodes.empty()) throw ValidationError("empty quadrature rule");
    const std::size_t n = rule_.size();
    scaled_.resize(n);
    expneg_.resize(n);
    double max_abs = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      scaled_[k] = rule_.nodes[k] / lambda_;
      if (!std::isfinite(scaled_[k]))
        throw NumericalError("prior nodes over lambda are not finite; rescale payoffs and lambda");
      max_abs = std::max(max_abs, std::abs(scaled_[k]));
    }
    fast_ = max_abs < 600.0;
    if (fast_)
      for (std::size_t k = 0; k < n; ++k) expneg_[k] = std::exp(-scaled_[k]);
    lme_plus_ = detail::log_mean_exp(rule_.weights, scaled_, 1.0);
    lme_minus_ = detail::log_mean_exp(rule_.weights, scaled_, -1.0);
  }

  ChoiceSolver(const PriorSpec& prior, double lambda, int nodes = 64)
      : ChoiceSolver(rule_for_cost(prior, lambda, nodes), lambda) {}

  const QuadratureRule& rule() const { return rule_; }
  double lambda() const { return lambda_; }

  // Below this payoff E[A] <= 1 and the optimum is p = 0.
  double zero_threshold() const { return -lambda_ * lme_plus_; }
  // Above this payoff E[1/A] <= 1 and the optimum is p = 1.
  double one_threshold() const { return lambda_ * lme_minus_; }

  // Moments of the conditional choice probability q(eps) at (p, v).
  Moments moments(double p, double v) const {
    Moments m;
    if (p <= 0.0) return m;
    if (p >= 1.0) return {1.0, 1.0, 0.0};
    const double log_c = -v / lambda_ - detail::logit(p);
    const auto& w = rule_.weights;
    const std::size_t n = w.size();
    if (fast_ && std::abs(log_c) < 100.0) {
      const double c = std::exp(log_c);
      for (std::size_t k = 0; k < n; ++k) {
        const double q = 1.0 / (1.0 + c * expneg_[k]);
        m.q += w[k] * q;
        m.q2 += w[k] * q * q;
        m.qq += w[k] * q * (1.0 - q);
      }
    } else {
      for (std::size_t k = 0; k < n; ++k) {
        const double q = detail::logistic(scaled_[k] - log_c);
        m.q += w[k] * q;
        m.q2 += w[k] * q * q;
        m.qq += w[k] * q * (1.0 - q);
      }
    }
    return m;
  }

  // The self-referential map p -> E[q(p, v)].
  double psi(double p, double v) const { return moments(p, v).q; }

  RiSolution solve(double v) const {
    if (!std::isfinite(v)) throw NumericalError("expected payoff is not finite");
    if (!std::isfinite(v / lambda_))
      throw NumericalError("payoff over lambda overflows; rescale payoffs and lambda");
    RiSolution s{0.0, v, lambda_, Corner::Interior};
    if (v / lambda_ + lme_plus_ <= 0.0) {
      s.corner = Corner::AtZero;
      return s;
    }
    if (-v / lambda_ + lme_minus_ <= 0.0) {
      s.p = 1.0;
      s.corner = Corner::AtOne;
      return s;
    }
    // Interior: the unique root in (0, 1) of h(p) = E[q]/p - 1. h is convex
    // with h(0) > 0 and h(1) = 0, so h > 0 left of the root and h < 0 right of
    // it. Safeguarded Newton keeps the bracket and falls back to bisection.
    double lo = 0.0, hi = 1.0, p = 0.5;
    for (int it = 0; it < kMaxIterations; ++it) {
      const Moments m = moments(p, v);
      const double g = m.q - p;
      if (g == 0.0) break;
      if (g > 0.0) lo = p; else hi = p;
      const double h = m.q / p - 1.0;
      const double hp = -(m.q2 / (p * p) - m.qq / (p * (1.0 - p)));
      double next = 0.5 * (lo + hi);
      bool newton = false;
      if (hp < 0.0) {
        const double cand = p - h / hp;
        if (cand > lo && cand < hi) {
          next = cand;
          newton = true;
        }
      }
      const double step = std::abs(next - p);
      p = next;
      if ((newton && step <= 1e-15 * p) || hi - lo <= 1e-17) break;
    }
    s.p = p;
    return s;
  }

  // v such that solve(v).p == p for p strictly inside (0, 1). Solves
  // E[q(p, v)] = p in v, which is strictly increasing.
  double invert(double p) const {
    if (!(p > 0.0 && p < 1.0))
      throw ValidationError("choice probability must lie strictly inside (0, 1) to invert");
    auto f = [&](double v) { return moments(p, v).q - p; };
    double a = -1.0, b = 1.0;
    for (int k = 0; k < 2000 && f(a) > 0.0; ++k) a *= 2.0;
    for (int k = 0; k < 2000 && f(b) < 0.0; ++k) b *= 2.0;
    double v = 0.5 * (a + b);
    for (int it = 0; it < kMaxIterations; ++it) {
      const Moments m = moments(p, v);
      const double fv = m.q - p;
      if (fv == 0.0) break;
      if (fv < 0.0) a = v; else b = v;
      const double d = m.qq / lambda_;
      double next = 0.5 * (a + b);
      bool newton = false;
      if (d > 0.0) {
        const double cand = v - fv / d;
        if (cand > a && cand < b) {
          next = cand;
          newton = true;
        }
      }
      const double step = std::abs(next - v);
      v = next;
      if ((newton && step <= 1e-15 * std::max(1.0, std::abs(v))) ||
          b - a <= 1e-15 * std::max(1.0, std::abs(v)))
        break;
    }
    return v;
  }

  // dp/dv at an interior solution; zero at corners.
  double slope(const RiSolution& s) const {
    if (s.corner != Corner::Interior) return 0.0;
    const double p = s.p;
    const Moments m = moments(p, s.v);
    const double den = lambda_ * (m.q2 * (1.0 - p) - m.qq * p);
    return den > 0.0 ? m.qq * p * (1.0 - p) / den : 0.0;
  }

  // Upper bound on dp/dv over the interior band, from a dense scan with a 5%
  // margin. Used to certify that composed best replies are a contraction.
  double slope_bound(int samples = 400) const {
    const double a = zero_threshold(), b = one_threshold();
    double best = 0.0;
    for (int k = 1; k < samples; ++k) {
      const double v = a + (b - a) * k / samples;
      best = std::max(best, slope(solve(v)));
    }
    return 1.05 * best;
  }

  // Mutual information between the shock and the action, H_b(p) - E[H_b(q)].
  // May be a hair below zero from round-off; see acquired_information.
  double information_raw(const RiSolution& s) const {
    if (s.corner != Corner::Interior) return 0.0;
    double expected = 0.0;
    for (std::size_t k = 0; k < rule_.size(); ++k)
      expected += rule_.weights[k] *
                  binary_entropy(conditional_choice_prob(s.p, s.v, lambda_, rule_.nodes[k]));
    return binary_entropy(s.p) - expected;
  }

  static constexpr int kMaxIterations = 200;

 private:
  QuadratureRule rule_;
  double lambda_;
  std::vector<double> scaled_;
  std::vector<double> expneg_;
  bool fast_ = false;
  double lme_plus_ = 0.0;
  double lme_minus_ = 0.0;
};

inline RiSolution solve_G(double v, double lambda, const QuadratureRule& rule) {
  return ChoiceSolver(rule, lambda).solve(v);
}

inline double invert_G(double p, double lambda, const QuadratureRule& rule) {
  return ChoiceSolver(rule, lambda).invert(p);
}

// Fixed-point residual |p - E[q(p, v)]| of a solution.
inline double fixed_point_residual(const RiSolution& s, const QuadratureRule& rule) {
  return std::abs(s.p - ChoiceSolver(rule, s.lambda).psi(s.p, s.v));
}

// I(eps; Y) = H_b(p) - E_eps[H_b(P(1 | eps))], clipped to [0, H_b(p)].
inline double acquired_information(const RiSolution& s, const QuadratureRule& rule) {
  const double raw = ChoiceSolver(rule, s.lambda).information_raw(s);
  return std::clamp(raw, 0.0, binary_entropy(s.p));
}

inline double information_cost(const RiSolution& s, const QuadratureRule& rule, double lambda) {
  return lambda * acquired_information(s, rule);
}

namespace detail {

inline void check_pmf(std::span<const double> pmf, const char* what) {
  double s = 0.0;
  for (double v : pmf) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw ValidationError(std::string(what) + " has a negative or non-finite entry");
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-9) throw ValidationError(std::string(what) + " does not sum to 1");
}

inline double entropy(std::span<const double> pmf) {
  double h = 0.0;
  for (double v : pmf)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

}  // namespace detail

// I(S; T) = H(T) - sum_s prior(s) H(T | s) for a discrete state S and signal
// T with channel[s][t] = P(t | s).
inline double discrete_mutual_information(std::span<const double> prior,
                                          const std::vector<std::vector<double>>& channel) {
  detail::check_pmf(prior, "prior");
  if (channel.size() != prior.size())
    throw ValidationError("channel needs one row per prior state");
  const std::size_t signals = channel.empty() ? 0 : channel.front().size();
  std::vector<double> marginal(signals, 0.0);
  double conditional = 0.0;
  for (std::size_t s = 0; s < prior.size(); ++s) {
    if (channel[s].size() != signals) throw ValidationError("channel rows differ in length");
    detail::check_pmf(channel[s], "channel row");
    for (std::size_t t = 0; t < signals; ++t) marginal[t] += prior[s] * channel[s][t];
    conditional += prior[s] * detail::entropy(channel[s]);
  }
  return std::max(0.0, detail::entropy(marginal) - conditional);
}

inline double information_cost(std::span<const double> prior,
                               const std::vector<std::vector<double>>& channel, double lambda) {
  return lambda * discrete_mutual_information(prior, channel);
}

}  // namespace rigame
