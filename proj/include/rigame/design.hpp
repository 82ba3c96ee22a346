#pragma once

// Parameterizations of the two payoff functions for estimation. Both the
// linear and the sieve models are linear in their parameters,
//   v_i = base_i(m) . theta_base_i + p_j * strategic_i(m) . theta_strategic_i,
// so each market is described by per-player feature rows.

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rigame/equilibrium.hpp"
#include "rigame/model.hpp"

namespace rigame {

enum class ModelKind { Linear, Sieve };

// Chebyshev polynomials T_0..T_d at t.
inline std::vector<double> chebyshev_values(int degree, double t) {
  std::vector<double> T(degree + 1);
  T[0] = 1.0;
  if (degree >= 1) T[1] = t;
  for (int k = 2; k <= degree; ++k) T[k] = 2.0 * t * T[k - 1] - T[k - 2];
  return T;
}

// Monomial coefficients in z of sum_k c_k T_k(t) with t = a z + b.
inline std::vector<double> chebyshev_to_monomial(const std::vector<double>& c, double a, double b) {
  const std::size_t n = c.size();
  // Coefficients of each T_k in t.
  std::vector<std::vector<double>> Tt(n);
  for (std::size_t k = 0; k < n; ++k) {
    Tt[k].assign(n, 0.0);
    if (k == 0) Tt[k][0] = 1.0;
    else if (k == 1) Tt[k][1] = 1.0;
    else {
      for (std::size_t j = 0; j + 1 < n; ++j) Tt[k][j + 1] += 2.0 * Tt[k - 1][j];
      for (std::size_t j = 0; j < n; ++j) Tt[k][j] -= Tt[k - 2][j];
    }
  }
  std::vector<double> in_t(n, 0.0);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t j = 0; j < n; ++j) in_t[j] += c[k] * Tt[k][j];
  // (a z + b)^j expanded binomially.
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double binom = 1.0;
    for (std::size_t r = 0; r <= j; ++r) {
      out[r] += in_t[j] * binom * std::pow(a, static_cast<double>(r)) *
                std::pow(b, static_cast<double>(j - r));
      binom = binom * static_cast<double>(j - r) / static_cast<double>(r + 1);
    }
  }
  return out;
}

struct ModelSpec {
  ModelKind kind = ModelKind::Linear;
  std::size_t x_dim = 0;
  // Linear: strategic effect over (const, x, z) instead of a constant.
  bool strategic_full = false;
  // Sieve: polynomial degrees of the base and strategic functions in z.
  int d_pi = 2;
  int d_delta = 2;
  // Sieve: z support used to map onto [-1, 1].
  double z_lo = 0.0;
  double z_hi = 1.0;
  std::array<PriorSpec, 2> priors{PriorSpec::normal(0.0, 1.0), PriorSpec::normal(0.0, 1.0)};
  std::array<double, 2> lambda{1.0, 1.0};
  int nodes = 64;
  // Parameters held at a fixed value, by flat index.
  std::map<std::size_t, double> fixed;

  std::size_t base_size() const {
    return kind == ModelKind::Linear ? x_dim + 2 : static_cast<std::size_t>(d_pi + 1);
  }
  std::size_t strategic_size() const {
    if (kind == ModelKind::Sieve) return static_cast<std::size_t>(d_delta + 1);
    return strategic_full ? x_dim + 2 : 1;
  }
  std::size_t player_size() const { return base_size() + strategic_size(); }
  std::size_t size() const { return 2 * player_size(); }
  std::size_t base_offset(int player) const { return player * player_size(); }
  std::size_t strategic_offset(int player) const { return player * player_size() + base_size(); }

  void validate() const {
    if (kind == ModelKind::Sieve) {
      if (d_pi < 0 || d_delta < 0) throw ValidationError("sieve degrees must be nonnegative");
      if (!(z_hi > z_lo)) throw ValidationError("sieve z support needs hi > lo");
    }
    for (int i = 0; i < 2; ++i) {
      priors[i].validate();
      if (!(lambda[i] > 0.0)) throw ValidationError("information cost lambda must be positive");
    }
    for (const auto& [k, v] : fixed)
      if (k >= size()) throw ValidationError("fixed parameter index out of range");
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (int i = 1; i <= 2; ++i) {
      const std::string s = std::to_string(i);
      if (kind == ModelKind::Linear) {
        out.push_back("beta" + s);
        for (std::size_t k = 1; k <= x_dim; ++k) out.push_back("x" + std::to_string(k) + "_" + s);
        out.push_back("gamma" + s);
        if (strategic_full) {
          out.push_back("delta" + s);
          for (std::size_t k = 1; k <= x_dim; ++k) out.push_back("delta" + s + "_x" + std::to_string(k));
          out.push_back("delta" + s + "_z");
        } else {
          out.push_back("delta" + s);
        }
      } else {
        for (int k = 0; k <= d_pi; ++k) out.push_back("pi" + s + "_z" + std::to_string(k));
        for (int k = 0; k <= d_delta; ++k) out.push_back("delta" + s + "_z" + std::to_string(k));
      }
    }
    return out;
  }

  double map_a() const { return 2.0 / (z_hi - z_lo); }
  double map_b() const { return -(z_hi + z_lo) / (z_hi - z_lo); }

  // Feature rows of one player at covariates (x, z_own).
  void features(int player, std::span<const double> x, double z, std::vector<double>& base,
                std::vector<double>& strategic) const {
    (void)player;
    if (kind == ModelKind::Linear) {
      base.assign(1, 1.0);
      base.insert(base.end(), x.begin(), x.end());
      base.push_back(z);
      if (strategic_full) strategic = base;
      else strategic.assign(1, 1.0);
    } else {
      const double t = map_a() * z + map_b();
      base = chebyshev_values(d_pi, t);
      strategic = chebyshev_values(d_delta, t);
    }
  }

  // Payoff models in the reporting basis: monomials in z for the sieve.
  std::array<PayoffModel, 2> payoffs(const std::vector<double>& theta) const {
    std::array<PayoffModel, 2> out;
    for (int i = 0; i < 2; ++i) {
      std::vector<double> b(theta.begin() + base_offset(i), theta.begin() + strategic_offset(i));
      std::vector<double> s(theta.begin() + strategic_offset(i),
                            theta.begin() + strategic_offset(i) + strategic_size());
      if (kind == ModelKind::Linear) {
        out[i] = PayoffModel::linear(std::move(b), std::move(s));
      } else {
        out[i] = PayoffModel::polynomial(chebyshev_to_monomial(b, map_a(), map_b()),
                                         chebyshev_to_monomial(s, map_a(), map_b()));
      }
    }
    return out;
  }

  // Coefficients in the reporting basis (monomials in z for the sieve), in
  // the same layout as theta.
  std::vector<double> report_theta(const std::vector<double>& theta) const {
    if (kind == ModelKind::Linear) return theta;
    std::vector<double> out;
    for (const auto& m : payoffs(theta)) {
      out.insert(out.end(), m.base.begin(), m.base.end());
      out.insert(out.end(), m.strategic.begin(), m.strategic.end());
    }
    return out;
  }

  // Parameter vector reproducing given payoff models. The sieve case needs
  // polynomials of degree at most (d_pi, d_delta).
  std::vector<double> theta_from(const std::array<PayoffModel, 2>& m) const {
    std::vector<double> theta(size(), 0.0);
    for (int i = 0; i < 2; ++i) {
      if (kind == ModelKind::Linear) {
        if (m[i].basis != PayoffBasis::Linear || m[i].base.size() != base_size() ||
            m[i].strategic.size() != strategic_size())
          throw ValidationError("payoff model does not match the linear specification");
        std::copy(m[i].base.begin(), m[i].base.end(), theta.begin() + base_offset(i));
        std::copy(m[i].strategic.begin(), m[i].strategic.end(), theta.begin() + strategic_offset(i));
      } else {
        const auto b = monomial_to_chebyshev(m[i].base, d_pi);
        const auto s = monomial_to_chebyshev(m[i].strategic, d_delta);
        std::copy(b.begin(), b.end(), theta.begin() + base_offset(i));
        std::copy(s.begin(), s.end(), theta.begin() + strategic_offset(i));
      }
    }
    return theta;
  }

  GameInstance game_template(const std::vector<double>& theta) const {
    GameInstance g;
    g.payoffs = payoffs(theta);
    g.priors = priors;
    g.lambda = lambda;
    g.covariates.x.assign(x_dim, 0.0);
    return g;
  }

 private:
  // Interpolation at Chebyshev-Lobatto points recovers the coefficients exactly.
  std::vector<double> monomial_to_chebyshev(const std::vector<double>& mono, int degree) const {
    if (static_cast<int>(mono.size()) > degree + 1)
      throw ValidationError("polynomial degree exceeds the sieve degree");
    const int n = degree + 1;
    Eigen::MatrixXd A(n, n);
    Eigen::VectorXd rhs(n);
    for (int r = 0; r < n; ++r) {
      const double t = n == 1 ? 0.0 : std::cos(M_PI * r / (n - 1));
      const double z = (t - map_b()) / map_a();
      const auto T = chebyshev_values(degree, t);
      for (int c = 0; c < n; ++c) A(r, c) = T[c];
      double v = 0.0;
      for (auto it = mono.rbegin(); it != mono.rend(); ++it) v = v * z + *it;
      rhs[r] = v;
    }
    const Eigen::VectorXd c = A.colPivHouseholderQr().solve(rhs);
    return {c.data(), c.data() + n};
  }
};

// Linear parametric model with the same shape as a game template.
inline ModelSpec linear_spec(const GameInstance& g, bool strategic_full = false) {
  ModelSpec s;
  s.kind = ModelKind::Linear;
  s.x_dim = g.covariates.x.size();
  s.strategic_full = strategic_full;
  s.priors = g.priors;
  s.lambda = g.lambda;
  return s;
}

inline ModelSpec sieve_spec(int d_pi, int d_delta, double z_lo, double z_hi, PriorSpec prior) {
  ModelSpec s;
  s.kind = ModelKind::Sieve;
  s.d_pi = d_pi;
  s.d_delta = d_delta;
  s.z_lo = z_lo;
  s.z_hi = z_hi;
  s.priors = {prior, prior};
  return s;
}

// Estimation sample: per-market features plus targets in [0, 1]. Targets are
// observed actions, or expected actions for a population-level sample.
struct ChoiceSample {
  ModelSpec spec;
  std::vector<std::int64_t> market_id;
  std::array<std::vector<std::vector<double>>, 2> base;
  std::array<std::vector<std::vector<double>>, 2> strategic;
  std::array<std::vector<double>, 2> y;
  std::vector<Covariates> covariates;

  std::size_t size() const { return market_id.size(); }

  ReducedGame game(const std::vector<double>& theta, std::size_t m) const {
    ReducedGame g;
    for (int i = 0; i < 2; ++i) {
      const auto& b = base[i][m];
      const auto& s = strategic[i][m];
      double vb = 0.0, vs = 0.0;
      const std::size_t ob = spec.base_offset(i), os = spec.strategic_offset(i);
      for (std::size_t k = 0; k < b.size(); ++k) vb += theta[ob + k] * b[k];
      for (std::size_t k = 0; k < s.size(); ++k) vs += theta[os + k] * s[k];
      g.base[i] = vb;
      g.strategic[i] = vs;
    }
    return g;
  }
};

inline void add_market(ChoiceSample& s, std::int64_t id, const Covariates& c, double y1, double y2) {
  if (c.x.size() != s.spec.x_dim && s.spec.kind == ModelKind::Linear)
    throw ValidationError("covariate dimension does not match the model");
  s.market_id.push_back(id);
  std::vector<double> b, st;
  for (int i = 0; i < 2; ++i) {
    s.spec.features(i, c.x, c.z(i), b, st);
    s.base[i].push_back(b);
    s.strategic[i].push_back(st);
  }
  s.y[0].push_back(y1);
  s.y[1].push_back(y2);
  s.covariates.push_back(c);
}

inline ChoiceSample make_sample(const MarketDataset& data, const ModelSpec& spec) {
  data.validate();
  spec.validate();
  ChoiceSample s;
  s.spec = spec;
  for (const auto& r : data.rows) add_market(s, r.market_id, r.covariates(), r.y1, r.y2);
  return s;
}

}  // namespace rigame
