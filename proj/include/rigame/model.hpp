#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "rigame/errors.hpp"

namespace rigame {

enum class PriorFamily { Normal, Uniform };

// Prior belief over a player's scalar payoff shock.
// Normal: param1 = mean, param2 = variance. Uniform: param1 = lower, param2 = upper.
struct PriorSpec {
  PriorFamily family = PriorFamily::Normal;
  double param1 = 0.0;
  double param2 = 1.0;

  static PriorSpec normal(double mean, double variance) {
    PriorSpec p{PriorFamily::Normal, mean, variance};
    p.validate();
    return p;
  }
  static PriorSpec uniform(double lower, double upper) {
    PriorSpec p{PriorFamily::Uniform, lower, upper};
    p.validate();
    return p;
  }

  void validate() const {
    if (!std::isfinite(param1) || !std::isfinite(param2))
      throw ValidationError("prior parameters must be finite");
    if (family == PriorFamily::Normal && !(param2 > 0.0))
      throw ValidationError("normal prior needs a positive variance");
    if (family == PriorFamily::Uniform && !(param2 > param1))
      throw ValidationError("uniform prior needs upper > lower");
  }

  double mean() const {
    return family == PriorFamily::Normal ? param1 : 0.5 * (param1 + param2);
  }
  double sd() const {
    return family == PriorFamily::Normal ? std::sqrt(param2)
                                         : (param2 - param1) / std::sqrt(12.0);
  }

  double cdf(double e) const {
    if (family == PriorFamily::Normal)
      return 0.5 * std::erfc(-(e - param1) / (sd() * std::sqrt(2.0)));
    if (e <= param1) return 0.0;
    if (e >= param2) return 1.0;
    return (e - param1) / (param2 - param1);
  }

  double density(double e) const {
    if (family == PriorFamily::Normal) {
      const double s = sd();
      const double u = (e - param1) / s;
      return std::exp(-0.5 * u * u) / (s * std::sqrt(2.0 * M_PI));
    }
    return (e < param1 || e > param2) ? 0.0 : 1.0 / (param2 - param1);
  }

  // u must lie in (0, 1).
  double quantile(double u) const {
    if (family == PriorFamily::Normal)
      return boost::math::quantile(boost::math::normal_distribution<double>(param1, sd()), u);
    return param1 + u * (param2 - param1);
  }

  // The same family with its spread multiplied by c about zero; used to
  // express the joint rescaling of payoffs, shocks and information cost.
  PriorSpec scaled(double c) const {
    if (family == PriorFamily::Normal) return normal(c * param1, c * c * param2);
    return uniform(c * param1, c * param2);
  }

  bool operator==(const PriorSpec&) const = default;
};

inline const char* to_string(PriorFamily f) {
  return f == PriorFamily::Normal ? "normal" : "uniform";
}

enum class PayoffBasis {
  // base = [const, x_1..x_K, z]; strategic = [const] or [const, x_1..x_K, z]
  Linear,
  // base = [c_0..c_d] and strategic = [d_0..d_e] as polynomials in z only
  Polynomial,
};

// One player's payoff from choosing action 1: pi(x, z) + delta(x, z) * 1(rival plays 1).
struct PayoffModel {
  PayoffBasis basis = PayoffBasis::Linear;
  std::vector<double> base;
  std::vector<double> strategic;

  static PayoffModel linear(std::vector<double> base, std::vector<double> strategic) {
    return {PayoffBasis::Linear, std::move(base), std::move(strategic)};
  }
  static PayoffModel polynomial(std::vector<double> base, std::vector<double> strategic) {
    return {PayoffBasis::Polynomial, std::move(base), std::move(strategic)};
  }

  void validate(std::size_t x_dim) const {
    for (double c : base)
      if (!std::isfinite(c)) throw ValidationError("payoff coefficients must be finite");
    for (double c : strategic)
      if (!std::isfinite(c)) throw ValidationError("payoff coefficients must be finite");
    if (basis == PayoffBasis::Linear) {
      if (base.size() != x_dim + 2)
        throw ValidationError("linear base payoff needs " + std::to_string(x_dim + 2) +
                              " coefficients (const, x terms, z), got " +
                              std::to_string(base.size()));
      if (strategic.size() != 1 && strategic.size() != x_dim + 2)
        throw ValidationError("linear strategic effect needs 1 or " + std::to_string(x_dim + 2) +
                              " coefficients, got " + std::to_string(strategic.size()));
    } else {
      if (base.empty() || strategic.empty())
        throw ValidationError("polynomial payoff needs at least one coefficient per function");
    }
  }

  double base_payoff(std::span<const double> x, double z) const {
    return basis == PayoffBasis::Linear ? linear_index(base, x, z) : horner(base, z);
  }

  double strategic_effect(std::span<const double> x, double z) const {
    if (basis == PayoffBasis::Polynomial) return horner(strategic, z);
    if (strategic.size() == 1) return strategic[0];
    return linear_index(strategic, x, z);
  }

  bool operator==(const PayoffModel&) const = default;

 private:
  static double linear_index(const std::vector<double>& c, std::span<const double> x, double z) {
    double s = c[0];
    for (std::size_t k = 0; k < x.size(); ++k) s += c[k + 1] * x[k];
    return s + c[x.size() + 1] * z;
  }
  static double horner(const std::vector<double>& c, double z) {
    double s = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) s = s * z + *it;
    return s;
  }
};

struct Covariates {
  std::vector<double> x;
  double z1 = 0.0;
  double z2 = 0.0;

  double z(int player) const { return player == 0 ? z1 : z2; }
  bool operator==(const Covariates&) const = default;
};

struct ChoiceProbPair {
  double p1 = 0.0;
  double p2 = 0.0;

  double operator[](int player) const { return player == 0 ? p1 : p2; }
  double& operator[](int player) { return player == 0 ? p1 : p2; }
};

struct GameInstance {
  std::array<PayoffModel, 2> payoffs;
  std::array<PriorSpec, 2> priors;
  std::array<double, 2> lambda{1.0, 1.0};
  Covariates covariates;

  void validate() const {
    for (int i = 0; i < 2; ++i) {
      payoffs[i].validate(covariates.x.size());
      priors[i].validate();
      if (!(lambda[i] > 0.0) || !std::isfinite(lambda[i]))
        throw ValidationError("information cost lambda must be positive and finite");
    }
    for (double v : covariates.x)
      if (!std::isfinite(v)) throw ValidationError("covariates must be finite");
    if (!std::isfinite(covariates.z1) || !std::isfinite(covariates.z2))
      throw ValidationError("covariates must be finite");
  }

  GameInstance with_covariates(Covariates c) const {
    GameInstance g = *this;
    g.covariates = std::move(c);
    return g;
  }
};

// EU_i = pi_i(x, z) + delta_i(x, z) * p_rival
inline double expected_deterministic_payoff(const PayoffModel& model, std::span<const double> x,
                                            double z, double p_rival) {
  return model.base_payoff(x, z) + model.strategic_effect(x, z) * p_rival;
}

struct MarketRow {
  std::int64_t market_id = 0;
  int y1 = 0;
  int y2 = 0;
  std::vector<double> x;
  double z1 = 0.0;
  double z2 = 0.0;

  int y(int player) const { return player == 0 ? y1 : y2; }
  Covariates covariates() const { return {x, z1, z2}; }
};

struct MarketDataset {
  std::vector<MarketRow> rows;
  // Multiplicative factor applied to each named column at load time.
  std::map<std::string, double> column_scale;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
  std::size_t x_dim() const { return rows.empty() ? 0 : rows.front().x.size(); }

  void validate() const {
    std::unordered_set<std::int64_t> seen;
    const std::size_t k = x_dim();
    for (const auto& r : rows) {
      if ((r.y1 != 0 && r.y1 != 1) || (r.y2 != 0 && r.y2 != 1))
        throw ValidationError("market " + std::to_string(r.market_id) +
                              ": actions must be 0 or 1");
      if (!seen.insert(r.market_id).second)
        throw ValidationError("duplicate market_id " + std::to_string(r.market_id));
      if (r.x.size() != k)
        throw ValidationError("market " + std::to_string(r.market_id) +
                              ": inconsistent covariate dimension");
    }
  }
};

// Sample frequencies of the four outcomes, ordered (0,0), (1,0), (0,1), (1,1)
// with the first index for player 1.
struct OutcomeFrequencies {
  std::array<double, 4> f{};
  double f00() const { return f[0]; }
  double f10() const { return f[1]; }
  double f01() const { return f[2]; }
  double f11() const { return f[3]; }
};

inline OutcomeFrequencies summarize_outcomes(const MarketDataset& data) {
  if (data.empty()) throw ValidationError("cannot summarize an empty dataset");
  std::array<std::size_t, 4> counts{};
  for (const auto& r : data.rows) ++counts[r.y1 + 2 * r.y2];
  OutcomeFrequencies out;
  const double n = static_cast<double>(data.size());
  for (int k = 0; k < 4; ++k) out.f[k] = static_cast<double>(counts[k]) / n;
  return out;
}

}  // namespace rigame
