#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rigame/equilibrium.hpp"
#include "rigame/model.hpp"
#include "rigame/parallel.hpp"
#include "rigame/rng.hpp"

namespace rigame {

enum class DgpName { ParametricMC, SemiparametricMC, Custom };
enum class SelectionRule { RequireUnique, First, Lowest, Highest, Random };

inline const char* to_string(DgpName n) {
  switch (n) {
    case DgpName::ParametricMC: return "parametric";
    case DgpName::SemiparametricMC: return "semiparametric";
    case DgpName::Custom: return "custom";
  }
  return "?";
}

inline const char* to_string(SelectionRule r) {
  switch (r) {
    case SelectionRule::RequireUnique: return "require_unique";
    case SelectionRule::First: return "first";
    case SelectionRule::Lowest: return "lowest";
    case SelectionRule::Highest: return "highest";
    case SelectionRule::Random: return "random";
  }
  return "?";
}

class MultiplicityError : public NumericalError {
 public:
  MultiplicityError(std::int64_t market, std::size_t count)
      : NumericalError("market " + std::to_string(market) + " has " + std::to_string(count) +
                       " equilibria but the selection rule requires a unique one"),
        market_(market),
        count_(count) {}
  std::int64_t market() const { return market_; }
  std::size_t count() const { return count_; }

 private:
  std::int64_t market_;
  std::size_t count_;
};

struct UniformLaw {
  double lo = 0.0;
  double hi = 1.0;
};

// Closed-form payoffs of the semiparametric design.
inline double semiparametric_base(double z) { return 3.0 - std::log1p(2.0 * z); }
inline double semiparametric_strategic(double z) { return -4.0 * std::exp(z) / (1.0 + std::exp(z)); }

struct DgpConfig {
  DgpName name = DgpName::Custom;
  std::string label = "custom";
  int markets = 1;
  std::uint64_t seed = 0;
  std::vector<UniformLaw> x_law;
  std::array<UniformLaw, 2> z_law{};
  // Payoffs, priors and lambda; covariates are ignored.
  GameInstance game_template;
  SelectionRule selection = SelectionRule::First;
  int nodes = 64;

  void validate() const {
    if (markets < 1) throw ValidationError("a panel needs at least one market");
    for (const auto& l : x_law)
      if (!(l.hi >= l.lo)) throw ValidationError("covariate bounds must satisfy hi >= lo");
    for (const auto& l : z_law)
      if (!(l.hi >= l.lo)) throw ValidationError("covariate bounds must satisfy hi >= lo");
    if (name != DgpName::SemiparametricMC) {
      GameInstance g = game_template;
      g.covariates.x.assign(x_law.size(), 0.0);
      g.validate();
    } else {
      for (int i = 0; i < 2; ++i) game_template.priors[i].validate();
    }
  }

  // Payoffs of a market at given covariates.
  ReducedGame reduced(const Covariates& c) const {
    if (name == DgpName::SemiparametricMC) {
      ReducedGame g;
      for (int i = 0; i < 2; ++i) {
        g.base[i] = semiparametric_base(c.z(i));
        g.strategic[i] = semiparametric_strategic(c.z(i));
      }
      return g;
    }
    return reduce(game_template.with_covariates(c));
  }
};

// 1.8 + 0.5 z1 - 1.3 y2 and 1.6 + 0.8 z2 - 1.3 y1, z ~ U[0, 1], prior N(0, 4).
inline DgpConfig parametric_mc_dgp(int markets, std::uint64_t seed,
                                   PriorSpec prior = PriorSpec::normal(0.0, 4.0)) {
  DgpConfig c;
  c.name = DgpName::ParametricMC;
  c.label = "parametric";
  c.markets = markets;
  c.seed = seed;
  c.z_law = {UniformLaw{0.0, 1.0}, UniformLaw{0.0, 1.0}};
  c.game_template.payoffs = {PayoffModel::linear({1.8, 0.5}, {-1.3}),
                             PayoffModel::linear({1.6, 0.8}, {-1.3})};
  c.game_template.priors = {prior, prior};
  c.selection = SelectionRule::RequireUnique;
  return c;
}

// pi(z) = 3 - log(1 + 2z), delta(z) = -4 e^z / (1 + e^z), z ~ U[0, 3], prior U[-5, 5].
inline DgpConfig semiparametric_mc_dgp(int markets, std::uint64_t seed) {
  DgpConfig c;
  c.name = DgpName::SemiparametricMC;
  c.label = "semiparametric";
  c.markets = markets;
  c.seed = seed;
  c.z_law = {UniformLaw{0.0, 3.0}, UniformLaw{0.0, 3.0}};
  const PriorSpec prior = PriorSpec::uniform(-5.0, 5.0);
  c.game_template.priors = {prior, prior};
  c.selection = SelectionRule::RequireUnique;
  return c;
}

// Synthetic entry panel shaped like a low-cost carrier against legacy
// carriers: small presence for player 1, large for player 2, a shared market
// size covariate in millions. Labeled synthetic; not calibrated to real data.
inline DgpConfig airline_like_fixture(int markets, std::uint64_t seed) {
  DgpConfig c;
  c.name = DgpName::Custom;
  c.label = "airline-like (synthetic)";
  c.markets = markets;
  c.seed = seed;
  c.x_law = {UniformLaw{0.17, 4.2}};
  c.z_law = {UniformLaw{0.0, 0.11}, UniformLaw{0.03, 0.50}};
  c.game_template.payoffs = {PayoffModel::linear({-1.08, 0.04, 16.41}, {-0.03}),
                             PayoffModel::linear({-0.70, 0.085, 2.51}, {-0.196})};
  const PriorSpec prior = PriorSpec::normal(0.0, 1.0);
  c.game_template.priors = {prior, prior};
  c.selection = SelectionRule::First;
  return c;
}

inline Covariates draw_covariates(const DgpConfig& cfg, Rng& rng) {
  Covariates c;
  c.x.reserve(cfg.x_law.size());
  for (const auto& l : cfg.x_law) c.x.push_back(rng.uniform(l.lo, l.hi));
  c.z1 = rng.uniform(cfg.z_law[0].lo, cfg.z_law[0].hi);
  c.z2 = rng.uniform(cfg.z_law[1].lo, cfg.z_law[1].hi);
  return c;
}

// Covariates of every market; market m (1-based id) uses substream (seed, m).
inline std::vector<Covariates> gen_covariates(const DgpConfig& cfg) {
  cfg.validate();
  std::vector<Covariates> out;
  out.reserve(cfg.markets);
  for (int m = 1; m <= cfg.markets; ++m) {
    Rng rng(cfg.seed, static_cast<std::uint64_t>(m));
    out.push_back(draw_covariates(cfg, rng));
  }
  return out;
}

struct SimulatedMarket {
  int y1 = 0;
  int y2 = 0;
  double eps1 = 0.0;
  double eps2 = 0.0;
  ChoiceProbPair p;
  std::size_t equilibria = 0;
};

inline const EquilibriumPoint& select_equilibrium(const EquilibriumSet& set, SelectionRule rule,
                                                  std::int64_t market_id, Rng& rng) {
  switch (rule) {
    case SelectionRule::RequireUnique:
      if (set.size() != 1) throw MultiplicityError(market_id, set.size());
      return set.points.front();
    case SelectionRule::First:
    case SelectionRule::Lowest:
      return set.points.front();  // points are sorted by p1
    case SelectionRule::Highest:
      return set.points.back();
    case SelectionRule::Random:
      return set.points[rng.index(set.size())];
  }
  return set.points.front();
}

// Solves the market's equilibrium, draws each player's shock from its prior
// and then the action from the optimal conditional choice rule.
inline SimulatedMarket simulate_market(const GameSolver& solver, const ReducedGame& game, Rng& rng,
                                       SelectionRule rule, std::int64_t market_id = 0) {
  EquilibriumOptions opt;
  opt.use_certificate = true;
  opt.diagnostics = false;
  const EquilibriumSet set = solver.find_equilibria(game, opt);
  SimulatedMarket out;
  out.equilibria = set.size();
  const double e1 = rng.draw(solver.player(0).rule().prior);
  const double e2 = rng.draw(solver.player(1).rule().prior);
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  const EquilibriumPoint& pt = select_equilibrium(set, rule, market_id, rng);
  out.p = pt.p;
  out.eps1 = e1;
  out.eps2 = e2;
  const double q1 = conditional_choice_prob(pt.p.p1, game.payoff(0, pt.p.p2),
                                            solver.player(0).lambda(), e1);
  const double q2 = conditional_choice_prob(pt.p.p2, game.payoff(1, pt.p.p1),
                                            solver.player(1).lambda(), e2);
  out.y1 = u1 < q1 ? 1 : 0;
  out.y2 = u2 < q2 ? 1 : 0;
  return out;
}

inline SimulatedMarket simulate_market(const GameInstance& game, Rng& rng,
                                       SelectionRule rule = SelectionRule::First,
                                       std::int64_t market_id = 0) {
  game.validate();
  return simulate_market(GameSolver(game), reduce(game), rng, rule, market_id);
}

inline GameSolver dgp_solver(const DgpConfig& cfg) {
  const auto& t = cfg.game_template;
  return GameSolver(ChoiceSolver(t.priors[0], t.lambda[0], cfg.nodes),
                    ChoiceSolver(t.priors[1], t.lambda[1], cfg.nodes));
}

struct Panel {
  MarketDataset data;
  std::vector<SimulatedMarket> markets;
};

inline Panel simulate_panel(const DgpConfig& cfg, int threads = 1) {
  cfg.validate();
  const GameSolver solver = dgp_solver(cfg);
  Panel panel;
  panel.data.rows.resize(cfg.markets);
  panel.markets.resize(cfg.markets);
  parallel_for(static_cast<std::size_t>(cfg.markets), threads, [&](std::size_t i) {
    const std::int64_t id = static_cast<std::int64_t>(i) + 1;
    Rng rng(cfg.seed, static_cast<std::uint64_t>(id));
    Covariates c = draw_covariates(cfg, rng);
    const SimulatedMarket sm = simulate_market(solver, cfg.reduced(c), rng, cfg.selection, id);
    panel.markets[i] = sm;
    panel.data.rows[i] = MarketRow{id, sm.y1, sm.y2, std::move(c.x), c.z1, c.z2};
  });
  return panel;
}

inline MarketDataset make_panel(const DgpConfig& cfg, int threads = 1) {
  return simulate_panel(cfg, threads).data;
}

}  // namespace rigame
