#pragma once

// Bayesian-Nash equilibria of the 2x2 game in choice-probability space.
//
// Equilibria are enumerated as roots of r(p1) = p1 - BR1(BR2(p1)) on [0, 1]:
// a sign-change scan followed by safeguarded Newton refinement. For a 2x2
// game this is exhaustive up to tangential roots.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "rigame/model.hpp"
#include "rigame/ri.hpp"

namespace rigame {

// Payoffs of one market evaluated at its covariates: v_i = base_i + strategic_i * p_j.
struct ReducedGame {
  std::array<double, 2> base{};
  std::array<double, 2> strategic{};

  double payoff(int player, double p_rival) const {
    return base[player] + strategic[player] * p_rival;
  }
};

inline ReducedGame reduce(const GameInstance& g) {
  ReducedGame r;
  for (int i = 0; i < 2; ++i) {
    const double z = g.covariates.z(i);
    r.base[i] = g.payoffs[i].base_payoff(g.covariates.x, z);
    r.strategic[i] = g.payoffs[i].strategic_effect(g.covariates.x, z);
  }
  return r;
}

using Matrix2 = std::array<std::array<double, 2>, 2>;

// Principal minors of I - grad Psi.
struct Minors {
  double m11 = 0.0;
  double m22 = 0.0;
  double det = 0.0;
};

struct UniquenessFlags {
  bool m11_positive = false;
  bool m22_positive = false;
  bool det_positive = false;

  bool all() const { return m11_positive && m22_positive && det_positive; }
};

struct EquilibriumPoint {
  ChoiceProbPair p;
  std::array<Corner, 2> corner{Corner::Interior, Corner::Interior};
  double residual = 0.0;
  Matrix2 jacobian{};
  Minors minors;
  UniquenessFlags flags;
  bool one_sided = false;  // Jacobian used a one-sided difference at a boundary
  bool diagnosed = false;

  bool at_corner() const {
    return corner[0] != Corner::Interior || corner[1] != Corner::Interior;
  }
};

struct EquilibriumSet {
  std::vector<EquilibriumPoint> points;
  // True when the contraction certificate covered all of [0, 1], so the
  // reported points are all the equilibria without relying on a scan.
  bool certified_unique = false;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

struct EquilibriumOptions {
  int grid_n = 401;
  double dedup_tol = 1e-7;
  // Skip the scan when |d1 d2| * sup G1' * sup G2' < 1 or d1 d2 <= 0, in which
  // case r is strictly increasing and has exactly one root. Otherwise the
  // certificate is applied cell by cell and only uncertified cells are scanned.
  bool use_certificate = false;
  bool diagnostics = true;
};

struct CurveRow {
  double p_rival = 0.0;
  double br1 = 0.0;
  double br2 = 0.0;
};

class GameSolver {
 public:
  GameSolver(ChoiceSolver first, ChoiceSolver second)
      : players_{std::move(first), std::move(second)},
        slope_bound_{players_[0].slope_bound(), players_[1].slope_bound()} {
    for (int i = 0; i < 2; ++i) {
      const double a = players_[i].zero_threshold(), b = players_[i].one_threshold();
      auto& t = slope_table_[i];
      t.resize(kSlopeSamples + 1);
      for (int k = 0; k <= kSlopeSamples; ++k) {
        const double v = a + (b - a) * k / kSlopeSamples;
        t[k] = (k == 0 || k == kSlopeSamples) ? 0.0 : players_[i].slope(players_[i].solve(v));
      }
      peak_[i] = static_cast<int>(std::max_element(t.begin(), t.end()) - t.begin());
    }
  }

  explicit GameSolver(const GameInstance& g, int nodes = 64)
      : GameSolver(ChoiceSolver(g.priors[0], g.lambda[0], nodes),
                   ChoiceSolver(g.priors[1], g.lambda[1], nodes)) {}

  const ChoiceSolver& player(int i) const { return players_[i]; }
  double slope_bound(int i) const { return slope_bound_[i]; }

  RiSolution best_response(const ReducedGame& g, int player, double p_rival) const {
    return players_[player].solve(g.payoff(player, p_rival));
  }

  // Psi(p): each component holds its own probability inside the integrand.
  ChoiceProbPair psi(const ReducedGame& g, ChoiceProbPair p) const {
    return {players_[0].psi(p.p1, g.payoff(0, p.p2)), players_[1].psi(p.p2, g.payoff(1, p.p1))};
  }

  double residual(const ReducedGame& g, ChoiceProbPair p) const {
    const ChoiceProbPair q = psi(g, p);
    return std::max(std::abs(p.p1 - q.p1), std::abs(p.p2 - q.p2));
  }

  // Upper bound on dp/dv for v in [lo, hi], from the sampled slopes of the
  // grid cells covering the interval with a 5% margin. Intervals near the
  // peak get the global bound.
  double slope_bound(int i, double lo, double hi) const {
    const double a = players_[i].zero_threshold(), b = players_[i].one_threshold();
    if (hi <= a || lo >= b) return 0.0;
    const double h = (b - a) / kSlopeSamples;
    const int k0 = std::max(0, static_cast<int>(std::floor((lo - a) / h)));
    const int k1 = std::min(kSlopeSamples, static_cast<int>(std::ceil((hi - a) / h)));
    if (peak_[i] >= k0 - 1 && peak_[i] <= k1 + 1) return slope_bound_[i];
    double best = 0.0;
    for (int k = k0; k <= k1; ++k) best = std::max(best, slope_table_[i][k]);
    return std::min(1.05 * best, slope_bound_[i]);
  }

  // Sufficient condition for a single equilibrium: d1 d2 <= 0, or the
  // composed best reply is a contraction over the payoffs the market can
  // reach, v_i in pi_i + d_i [0, 1].
  bool certified_unique(const ReducedGame& g) const {
    const double cross = g.strategic[0] * g.strategic[1];
    if (cross <= 0.0) return true;
    if (cross * slope_bound_[0] * slope_bound_[1] < 1.0) return true;
    double bound = cross;
    for (int i = 0; i < 2; ++i) {
      const double lo = g.base[i] + std::min(0.0, g.strategic[i]);
      const double hi = g.base[i] + std::max(0.0, g.strategic[i]);
      bound *= slope_bound(i, lo, hi);
    }
    return bound < 1.0;
  }

  EquilibriumSet find_equilibria(const ReducedGame& g, const EquilibriumOptions& opt = {}) const {
    if (opt.grid_n < 3) throw ValidationError("equilibrium scan needs at least 3 grid points");
    EquilibriumSet out;
    std::vector<double> roots;
    if (opt.use_certificate && certified_unique(g)) {
      out.certified_unique = true;
      const Eval e0 = eval(g, 0.0), e1 = eval(g, 1.0);
      if (e0.r >= 0.0) roots.push_back(0.0);
      else if (e1.r <= 0.0) roots.push_back(1.0);
      else roots.push_back(refine(g, e0, e1));
    } else if (opt.use_certificate) {
      // Cells on which r is certified increasing hold at most one root, found
      // from the endpoint signs; the remaining cells are scanned.
      const int cells = kCertificateCells;
      const int sub = std::max(2, (opt.grid_n - 1) / cells);
      std::vector<Eval> edge;
      edge.reserve(cells + 1);
      for (int k = 0; k <= cells; ++k) edge.push_back(eval(g, static_cast<double>(k) / cells));
      bool all_certified = true;
      for (int k = 0; k <= cells; ++k)
        if (edge[k].r == 0.0) roots.push_back(edge[k].x);
      for (int k = 0; k < cells; ++k) {
        const Eval& a = edge[k];
        const Eval& b = edge[k + 1];
        if (cell_increasing(g, a, b)) {
          if (a.r != 0.0 && b.r != 0.0 && (a.r < 0.0) != (b.r < 0.0)) roots.push_back(refine(g, a, b));
          continue;
        }
        all_certified = false;
        Eval prev = a;
        for (int j = 1; j <= sub; ++j) {
          const Eval e = j == sub ? b : eval(g, a.x + (b.x - a.x) * j / sub);
          if (j < sub && e.r == 0.0) roots.push_back(e.x);
          if (prev.r != 0.0 && e.r != 0.0 && (prev.r < 0.0) != (e.r < 0.0)) roots.push_back(refine(g, prev, e));
          prev = e;
        }
      }
      out.certified_unique = all_certified;
    } else {
      std::vector<Eval> grid;
      grid.reserve(opt.grid_n);
      for (int k = 0; k < opt.grid_n; ++k)
        grid.push_back(eval(g, static_cast<double>(k) / (opt.grid_n - 1)));
      for (int k = 0; k < opt.grid_n; ++k) {
        if (grid[k].r == 0.0) {
          roots.push_back(grid[k].x);
          continue;
        }
        if (k + 1 < opt.grid_n && grid[k + 1].r != 0.0 && (grid[k].r < 0.0) != (grid[k + 1].r < 0.0))
          roots.push_back(refine(g, grid[k], grid[k + 1]));
      }
    }
    std::sort(roots.begin(), roots.end());
    for (double x : roots) {
      EquilibriumPoint pt = make_point(g, x);
      if (!out.points.empty()) {
        const auto& last = out.points.back().p;
        if (std::max(std::abs(last.p1 - pt.p.p1), std::abs(last.p2 - pt.p.p2)) <= opt.dedup_tol)
          continue;
      }
      if (opt.diagnostics) diagnose(g, pt);
      out.points.push_back(pt);
    }
    if (out.points.empty())
      throw NumericalError("no equilibrium found; the composed best reply has no root on [0, 1]");
    return out;
  }

  // Central-difference Jacobian of Psi and the principal minors of I - grad Psi.
  void diagnose(const ReducedGame& g, EquilibriumPoint& pt) const {
    constexpr double h = 1e-6;
    pt.one_sided = false;
    for (int k = 0; k < 2; ++k) {
      ChoiceProbPair lo = pt.p, hi = pt.p;
      double span = 2.0 * h;
      lo[k] -= h;
      hi[k] += h;
      if (lo[k] < 0.0) {
        lo[k] = pt.p[k];
        span = h;
        pt.one_sided = true;
      } else if (hi[k] > 1.0) {
        hi[k] = pt.p[k];
        span = h;
        pt.one_sided = true;
      }
      const ChoiceProbPair fl = psi(g, lo), fh = psi(g, hi);
      pt.jacobian[0][k] = (fh.p1 - fl.p1) / span;
      pt.jacobian[1][k] = (fh.p2 - fl.p2) / span;
    }
    const auto& J = pt.jacobian;
    pt.minors.m11 = 1.0 - J[0][0];
    pt.minors.m22 = 1.0 - J[1][1];
    pt.minors.det = pt.minors.m11 * pt.minors.m22 - J[0][1] * J[1][0];
    pt.flags = {pt.minors.m11 > 0.0, pt.minors.m22 > 0.0, pt.minors.det > 0.0};
    pt.diagnosed = true;
  }

  std::vector<CurveRow> curves(const ReducedGame& g, int grid_n) const {
    if (grid_n < 2) throw ValidationError("curve grid needs at least 2 points");
    std::vector<CurveRow> rows;
    rows.reserve(grid_n);
    for (int k = 0; k < grid_n; ++k) {
      const double p = static_cast<double>(k) / (grid_n - 1);
      rows.push_back({p, best_response(g, 0, p).p, best_response(g, 1, p).p});
    }
    return rows;
  }

 private:
  struct Eval {
    double x = 0.0;
    double r = 0.0;      // x - BR1(BR2(x))
    double dr = 1.0;     // r'(x)
    double br2 = 0.0;    // BR2(x)
  };

  Eval eval(const ReducedGame& g, double x) const {
    const RiSolution s2 = best_response(g, 1, x);
    const RiSolution s1 = best_response(g, 0, s2.p);
    const double d = players_[0].slope(s1) * g.strategic[0] * players_[1].slope(s2) * g.strategic[1];
    return {x, x - s1.p, 1.0 - d, s2.p};
  }

  // r' > 0 on [a.x, b.x]: bounds both slopes over the payoffs reachable
  // within the cell. BR2 is monotone, so its range is spanned by the ends.
  bool cell_increasing(const ReducedGame& g, const Eval& a, const Eval& b) const {
    const double cross = g.strategic[0] * g.strategic[1];
    if (cross <= 0.0) return true;
    const double v2a = g.payoff(1, a.x), v2b = g.payoff(1, b.x);
    const double v1a = g.payoff(0, a.br2), v1b = g.payoff(0, b.br2);
    return cross * slope_bound(0, std::min(v1a, v1b), std::max(v1a, v1b)) *
               slope_bound(1, std::min(v2a, v2b), std::max(v2a, v2b)) <
           1.0;
  }

  double refine(const ReducedGame& g, Eval a, Eval b) const {
    if (a.x > b.x) std::swap(a, b);
    const bool increasing = a.r < 0.0;
    double lo = a.x, hi = b.x;
    double x = a.x - a.r * (b.x - a.x) / (b.r - a.r);
    if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
      const Eval e = eval(g, x);
      if (e.r == 0.0) return x;
      if ((e.r < 0.0) == increasing) lo = x; else hi = x;
      double next = 0.5 * (lo + hi);
      bool newton = false;
      if (e.dr != 0.0) {
        const double cand = x - e.r / e.dr;
        if (cand > lo && cand < hi) {
          next = cand;
          newton = true;
        }
      }
      const double step = std::abs(next - x);
      x = next;
      if ((newton && step <= 1e-15) || hi - lo <= 1e-16) break;
    }
    return x;
  }

  EquilibriumPoint make_point(const ReducedGame& g, double x) const {
    const RiSolution s2 = best_response(g, 1, x);
    const RiSolution s1 = best_response(g, 0, s2.p);
    EquilibriumPoint pt;
    pt.p = {s1.p, s2.p};
    pt.corner = {s1.corner, s2.corner};
    pt.residual = residual(g, pt.p);
    if (!(pt.residual <= 1e-8))
      throw NumericalError("equilibrium candidate failed re-validation, residual " +
                           std::to_string(pt.residual));
    return pt;
  }

  static constexpr int kSlopeSamples = 400;
  static constexpr int kCertificateCells = 16;

  std::array<ChoiceSolver, 2> players_;
  std::array<double, 2> slope_bound_;
  std::array<std::vector<double>, 2> slope_table_;
  std::array<int, 2> peak_{};
};

// Free-function forms over a full GameInstance.

inline ChoiceProbPair psi_pair(ChoiceProbPair p, const GameInstance& game) {
  if (p.p1 < 0.0 || p.p1 > 1.0 || p.p2 < 0.0 || p.p2 > 1.0)
    throw ValidationError("choice probabilities must lie in [0, 1]");
  return GameSolver(game).psi(reduce(game), p);
}

// player is 0 or 1.
inline double best_response(double p_rival, int player, const GameInstance& game) {
  if (p_rival < 0.0 || p_rival > 1.0) throw ValidationError("rival probability must lie in [0, 1]");
  return GameSolver(game).best_response(reduce(game), player, p_rival).p;
}

inline EquilibriumSet find_equilibria(const GameInstance& game, int grid_n = 401) {
  game.validate();
  EquilibriumOptions opt;
  opt.grid_n = grid_n;
  return GameSolver(game).find_equilibria(reduce(game), opt);
}

inline EquilibriumPoint uniqueness_diagnostics(EquilibriumPoint point, const GameInstance& game) {
  GameSolver solver(game);
  const ReducedGame g = reduce(game);
  if (!(solver.residual(g, point.p) <= 1e-8))
    throw ValidationError("point is not an equilibrium of the game");
  solver.diagnose(g, point);
  return point;
}

inline std::vector<CurveRow> best_response_curves(const GameInstance& game, int grid_n) {
  return GameSolver(game).curves(reduce(game), grid_n);
}

}  // namespace rigame
