#pragma once

// Estimators: full-solution maximum likelihood (nested fixed point), the
// sieve variant, the two-step pseudo-likelihood, probit and private
// information baselines, payoff recovery from choice probabilities, and the
// bootstrap.

#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "rigame/ccp.hpp"
#include "rigame/config.hpp"
#include "rigame/design.hpp"
#include "rigame/equilibrium.hpp"
#include "rigame/optimize.hpp"
#include "rigame/parallel.hpp"
#include "rigame/rng.hpp"

namespace rigame {

inline constexpr double kProbClip = 1e-12;

// y log p + (1 - y) log(1 - p) with p kept at least kProbClip away from the
// value that would give log 0. Exact zero when y matches a degenerate p.
inline double bernoulli_loglik(double y, double p) {
  double ll = 0.0;
  if (y > 0.0) ll += y * std::log(std::max(p, kProbClip));
  if (y < 1.0) ll += (1.0 - y) * std::log1p(-std::min(p, 1.0 - kProbClip));
  return ll;
}

struct EstimateReport {
  std::string estimator;
  std::vector<std::string> names;
  std::vector<double> theta;
  std::array<PayoffModel, 2> payoffs;
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;
  double gtol = 0.0;
  std::optional<std::vector<double>> se;
  // Markets with several equilibria at the reported estimate.
  std::vector<std::int64_t> multiplicity_markets;
  bool ridge = false;
  bool separation = false;
  bool used_fallback = false;
  std::string message;
  double runtime_seconds = 0.0;
  json metadata = json::object();
};

inline json report_to_json(const EstimateReport& r) {
  json coef = json::array();
  for (std::size_t k = 0; k < r.theta.size(); ++k) {
    json c = {{"name", r.names[k]}, {"estimate", r.theta[k]}};
    if (r.se) c["se"] = (*r.se)[k];
    coef.push_back(c);
  }
  json j = {{"estimator", r.estimator},
            {"coefficients", coef},
            {"payoffs", {payoff_to_json(r.payoffs[0]), payoff_to_json(r.payoffs[1])}},
            {"loglik", r.loglik},
            {"converged", r.converged},
            {"iterations", r.iterations},
            {"grad_norm", r.grad_norm},
            {"gtol", r.gtol},
            {"multiplicity_markets", r.multiplicity_markets},
            {"ridge", r.ridge},
            {"separation", r.separation},
            {"derivative_free_fallback", r.used_fallback},
            {"message", r.message},
            {"runtime_seconds", r.runtime_seconds},
            {"metadata", r.metadata}};
  return j;
}

// ---------------------------------------------------------------------------
// Full-solution likelihood

struct FitOptions {
  int starts = 5;
  // Extra starts perturb the given start by jitter * N(0, 1) per coordinate.
  double jitter = 0.5;
  std::uint64_t seed = 0;
  OptimOptions optim;
  // Scan resolution for markets the contraction certificate does not cover.
  int grid_n = 101;
  bool use_certificate = true;
  // Payoff coefficients beyond this size mean the likelihood improves without
  // bound (perfect prediction through corner solutions); the fit stops there.
  double divergence_bound = 1e3;
  // First-step probabilities per market, used to pick among multiple equilibria.
  std::optional<std::vector<ChoiceProbPair>> ccp_hint;
};

struct LoglikDetail {
  double loglik = 0.0;
  std::vector<ChoiceProbPair> p;
  std::vector<std::size_t> multiple;
};

inline GameSolver sample_solver(const ModelSpec& spec) {
  return GameSolver(ChoiceSolver(spec.priors[0], spec.lambda[0], spec.nodes),
                    ChoiceSolver(spec.priors[1], spec.lambda[1], spec.nodes));
}

// Solves every market's equilibrium at theta and sums the binary
// log-likelihood over markets and players. Where a market has several
// equilibria, the one closest to the hint is used, else the most likely one.
inline LoglikDetail nfxp_loglik_detail(const ChoiceSample& s, const GameSolver& solver,
                                       const std::vector<double>& theta, const FitOptions& opt = {}) {
  LoglikDetail out;
  out.p.resize(s.size());
  EquilibriumOptions eo;
  eo.grid_n = opt.grid_n;
  eo.use_certificate = opt.use_certificate;
  eo.diagnostics = false;
  for (std::size_t m = 0; m < s.size(); ++m) {
    const ReducedGame g = s.game(theta, m);
    const EquilibriumSet set = solver.find_equilibria(g, eo);
    auto market_ll = [&](const ChoiceProbPair& p) {
      return bernoulli_loglik(s.y[0][m], p.p1) + bernoulli_loglik(s.y[1][m], p.p2);
    };
    std::size_t pick = 0;
    if (set.size() > 1) {
      out.multiple.push_back(m);
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < set.size(); ++k) {
        const auto& p = set.points[k].p;
        double score;
        if (opt.ccp_hint) {
          const auto& h = (*opt.ccp_hint)[m];
          score = -std::hypot(p.p1 - h.p1, p.p2 - h.p2);
        } else {
          score = market_ll(p);
        }
        if (score > best) {
          best = score;
          pick = k;
        }
      }
    }
    out.p[m] = set.points[pick].p;
    out.loglik += market_ll(out.p[m]);
  }
  return out;
}

inline double loglik_constrained(const std::vector<double>& theta, const MarketDataset& data,
                                 const ModelSpec& spec, const FitOptions& opt = {}) {
  const ChoiceSample s = make_sample(data, spec);
  if (theta.size() != spec.size()) throw ValidationError("parameter vector has the wrong length");
  return nfxp_loglik_detail(s, sample_solver(spec), theta, opt).loglik;
}

namespace detail {

struct FreeMap {
  std::vector<std::size_t> free;
  std::vector<double> full;

  FreeMap(const ModelSpec& spec, const std::vector<double>& start) : full(start) {
    for (std::size_t k = 0; k < spec.size(); ++k) {
      if (auto it = spec.fixed.find(k); it != spec.fixed.end()) full[k] = it->second;
      else free.push_back(k);
    }
  }
  std::vector<double> expand(const std::vector<double>& f) const {
    std::vector<double> t = full;
    for (std::size_t k = 0; k < free.size(); ++k) t[free[k]] = f[k];
    return t;
  }
  std::vector<double> restrict(const std::vector<double>& t) const {
    std::vector<double> f(free.size());
    for (std::size_t k = 0; k < free.size(); ++k) f[k] = t[free[k]];
    return f;
  }
};

// Runs the optimizer from the start and from jittered copies of it, keeping
// the best finite optimum; a converged optimum wins over a non-converged one.
inline OptimResult multistart(const Objective& f, const std::vector<double>& start, const FitOptions& opt) {
  OptimResult best;
  bool have = false;
  for (int s = 0; s < std::max(1, opt.starts); ++s) {
    std::vector<double> x0 = start;
    if (s > 0) {
      Rng rng(opt.seed, 0x5157A27ULL + static_cast<std::uint64_t>(s));
      const PriorSpec n01 = PriorSpec::normal(0.0, 1.0);
      for (double& v : x0) v += opt.jitter * rng.draw(n01);
    }
    OptimResult r;
    try {
      OptimOptions o = opt.optim;
      o.divergence_bound = std::min(o.divergence_bound, opt.divergence_bound);
      r = minimize_bfgs(f, x0, o);
    } catch (const NumericalError& e) {
      r.x = x0;
      r.message = e.what();
    }
    if (!std::isfinite(r.f)) continue;
    const bool better = !have || (r.converged && !best.converged) ||
                        (r.converged == best.converged && r.f < best.f);
    if (better) {
      best = r;
      have = true;
    }
  }
  if (!have) best.message = "all starts failed";
  return best;
}

inline EstimateReport finish_report(std::string name, const ModelSpec& spec, const std::vector<double>& theta,
                                    const OptimResult& r, std::size_t n) {
  EstimateReport rep;
  rep.estimator = std::move(name);
  rep.names = spec.names();
  rep.theta = spec.report_theta(theta);
  rep.payoffs = spec.payoffs(theta);
  rep.loglik = -r.f * static_cast<double>(n);
  rep.converged = r.converged;
  rep.iterations = r.iterations;
  rep.grad_norm = r.grad_norm;
  rep.used_fallback = r.used_fallback;
  rep.separation = r.diverged;
  rep.message = r.message;
  return rep;
}

}  // namespace detail

// Maximizes the full-solution likelihood. The objective is the mean
// log-likelihood per market, so the gradient tolerance is on that scale.
inline EstimateReport fit_nfxp(const ChoiceSample& s, const std::vector<double>& start, const FitOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  if (start.size() != s.spec.size()) throw ValidationError("start vector has the wrong length");
  if (s.size() == 0) throw ValidationError("cannot estimate on an empty sample");
  const GameSolver solver = sample_solver(s.spec);
  const detail::FreeMap map(s.spec, start);
  const double n = static_cast<double>(s.size());
  const Objective f = [&](const std::vector<double>& free) {
    try {
      return -nfxp_loglik_detail(s, solver, map.expand(free), opt).loglik / n;
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const OptimResult r = detail::multistart(f, map.restrict(map.full), opt);
  const std::vector<double> theta = r.x.empty() ? map.full : map.expand(r.x);
  EstimateReport rep = detail::finish_report(s.spec.kind == ModelKind::Sieve ? "sieve" : "nfxp", s.spec, theta, r, s.size());
  rep.gtol = opt.optim.gtol;
  if (std::isfinite(r.f)) {
    const LoglikDetail d = nfxp_loglik_detail(s, solver, theta, opt);
    rep.loglik = d.loglik;
    for (std::size_t m : d.multiple) rep.multiplicity_markets.push_back(s.market_id[m]);
  } else {
    rep.converged = false;
  }
  rep.metadata = {{"objective", "mean log-likelihood per market"},
                  {"starts", opt.starts},
                  {"probability_clip", kProbClip},
                  {"multiplicity_rule", opt.ccp_hint ? "nearest to first-step probabilities" : "highest market likelihood"},
                  {"priors", {prior_to_json(s.spec.priors[0]), prior_to_json(s.spec.priors[1])}},
                  {"lambda", s.spec.lambda}};
  rep.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

inline EstimateReport fit_nfxp(const MarketDataset& data, const ModelSpec& spec, const std::vector<double>& start,
                               const FitOptions& opt = {}) {
  return fit_nfxp(make_sample(data, spec), start, opt);
}

// Sieve values on a z grid for plotting: one row per grid point.
struct SieveCurveRow {
  double z = 0.0;
  std::array<double, 2> pi{};
  std::array<double, 2> delta{};
};

inline std::vector<SieveCurveRow> sieve_curves(const std::array<PayoffModel, 2>& m, double lo, double hi, int n) {
  std::vector<SieveCurveRow> rows;
  for (int k = 0; k < n; ++k) {
    SieveCurveRow r;
    r.z = n == 1 ? lo : lo + (hi - lo) * k / (n - 1);
    for (int i = 0; i < 2; ++i) {
      r.pi[i] = m[i].base_payoff({}, r.z);
      r.delta[i] = m[i].strategic_effect({}, r.z);
    }
    rows.push_back(r);
  }
  return rows;
}

struct SieveFit {
  EstimateReport report;
  std::vector<SieveCurveRow> curves;
};

// Polynomial sieve MLE in z. The z support defaults to the sample range.
inline SieveFit fit_sieve_mle(const MarketDataset& data, int d_pi, int d_delta,
                              PriorSpec prior = PriorSpec::uniform(-5.0, 5.0), FitOptions opt = {},
                              std::optional<std::pair<double, double>> support = std::nullopt,
                              std::optional<std::vector<double>> start = std::nullopt, int grid = 50) {
  if (d_pi < 0 || d_delta < 0) throw ValidationError("sieve degrees must be nonnegative");
  if (data.empty()) throw ValidationError("cannot estimate on an empty sample");
  double lo, hi;
  if (support) {
    std::tie(lo, hi) = *support;
  } else {
    lo = hi = data.rows.front().z1;
    for (const auto& r : data.rows) {
      lo = std::min({lo, r.z1, r.z2});
      hi = std::max({hi, r.z1, r.z2});
    }
    if (!(hi > lo)) hi = lo + 1.0;
  }
  ModelSpec spec = sieve_spec(d_pi, d_delta, lo, hi, prior);
  spec.x_dim = data.x_dim();
  const ChoiceSample s = make_sample(data, spec);
  SieveFit out;
  out.report = fit_nfxp(s, start.value_or(std::vector<double>(spec.size(), 0.0)), opt);
  out.report.estimator = "sieve";
  out.report.metadata["z_support"] = {lo, hi};
  out.report.metadata["basis"] = "Chebyshev internally, monomial coefficients reported";
  out.curves = sieve_curves(out.report.payoffs, lo, hi, grid);
  return out;
}

// ---------------------------------------------------------------------------
// Two-step pseudo-likelihood

// Player i's pseudo-probability psi_i(p_i, v_i(p_j)) with first-step p
// plugged in, under unit information cost.
inline EstimateReport fit_two_step(const ChoiceSample& s, const std::vector<ChoiceProbPair>& phat,
                                   const std::vector<double>& start, const FitOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  if (phat.size() != s.size()) throw ValidationError("one first-step probability pair per market is required");
  if (start.size() != s.spec.size()) throw ValidationError("start vector has the wrong length");
  if (s.size() == 0) throw ValidationError("cannot estimate on an empty sample");
  const detail::FreeMap map(s.spec, start);
  const double n = static_cast<double>(s.size());
  std::vector<double> theta = map.full;
  EstimateReport rep;
  rep.estimator = "two-step";
  rep.converged = true;
  rep.loglik = 0.0;
  for (int i = 0; i < 2; ++i) {
    const ChoiceSolver solver(s.spec.priors[i], 1.0, s.spec.nodes);
    const std::size_t ob = s.spec.base_offset(i), os = s.spec.strategic_offset(i);
    const std::size_t np = s.spec.player_size();
    std::vector<std::size_t> idx;
    for (std::size_t k : map.free)
      if (k >= ob && k < ob + np) idx.push_back(k);
    auto player_theta = [&](const std::vector<double>& f) {
      std::vector<double> t = theta;
      for (std::size_t k = 0; k < idx.size(); ++k) t[idx[k]] = f[k];
      return t;
    };
    auto ll = [&](const std::vector<double>& t) {
      double sum = 0.0;
      for (std::size_t m = 0; m < s.size(); ++m) {
        const auto& b = s.base[i][m];
        const auto& st = s.strategic[i][m];
        double vb = 0.0, vs = 0.0;
        for (std::size_t k = 0; k < b.size(); ++k) vb += t[ob + k] * b[k];
        for (std::size_t k = 0; k < st.size(); ++k) vs += t[os + k] * st[k];
        const double pi = std::clamp(phat[m][i], kProbClip, 1.0 - kProbClip);
        const double v = vb + vs * phat[m][1 - i];
        sum += bernoulli_loglik(s.y[i][m], solver.psi(pi, v));
      }
      return sum;
    };
    const Objective f = [&](const std::vector<double>& free) { return -ll(player_theta(free)) / n; };
    std::vector<double> x0(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) x0[k] = theta[idx[k]];
    const OptimResult r = detail::multistart(f, x0, opt);
    if (!r.x.empty() && std::isfinite(r.f)) theta = player_theta(r.x);
    rep.converged = rep.converged && r.converged;
    rep.iterations += r.iterations;
    rep.grad_norm = std::max(rep.grad_norm, r.grad_norm);
    rep.used_fallback = rep.used_fallback || r.used_fallback;
    rep.separation = rep.separation || r.diverged;
    rep.loglik += ll(theta);
    if (!r.message.empty()) rep.message += (rep.message.empty() ? "" : "; ") + ("player " + std::to_string(i + 1) + ": " + r.message);
  }
  rep.names = s.spec.names();
  rep.theta = s.spec.report_theta(theta);
  rep.payoffs = s.spec.payoffs(theta);
  rep.gtol = opt.optim.gtol;
  rep.metadata = {{"objective", "mean pseudo log-likelihood per market, each player separately"},
                  {"information_cost", "unit cost (lambda = 1) in the pseudo-probability"},
                  {"probability_clip", kProbClip},
                  {"priors", {prior_to_json(s.spec.priors[0]), prior_to_json(s.spec.priors[1])}}};
  rep.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

inline std::vector<ChoiceProbPair> predict_all(const CcpModel& ccp, const std::vector<Covariates>& covs) {
  std::vector<ChoiceProbPair> out;
  out.reserve(covs.size());
  for (const auto& c : covs) out.push_back(ccp.predict(c));
  return out;
}

inline EstimateReport fit_two_step(const MarketDataset& data, const CcpModel& ccp, const ModelSpec& spec,
                                   std::optional<std::vector<double>> start = std::nullopt, const FitOptions& opt = {}) {
  const ChoiceSample s = make_sample(data, spec);
  EstimateReport r = fit_two_step(s, predict_all(ccp, s.covariates), start.value_or(std::vector<double>(spec.size(), 0.0)), opt);
  r.metadata["first_step_degree"] = ccp.kappa;
  r.ridge = ccp.info[0].ridge || ccp.info[1].ridge;
  return r;
}

// ---------------------------------------------------------------------------
// Probit

namespace detail {

// log Phi(x), accurate in the far left tail.
inline double log_norm_cdf(double x) {
  if (x > -30.0) return std::log(0.5 * std::erfc(-x / std::sqrt(2.0)));
  const double x2 = x * x;
  return -0.5 * x2 - std::log(-x) - 0.5 * std::log(2.0 * M_PI) + std::log1p(-1.0 / x2 + 3.0 / (x2 * x2));
}

// phi(x) / Phi(x)
inline double mills(double x) {
  return std::exp(-0.5 * x * x - 0.5 * std::log(2.0 * M_PI) - log_norm_cdf(x));
}

}  // namespace detail

struct ProbitFit {
  Eigen::VectorXd beta;
  Eigen::VectorXd se;
  double loglik = 0.0;
  bool converged = false;
  bool separation = false;
  int iterations = 0;
  double grad_norm = 0.0;
};

// Probit MLE by Newton's method on the mean log-likelihood, with standard
// errors from the inverse observed information.
inline ProbitFit fit_probit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double gtol = 1e-8) {
  const Eigen::Index n = X.rows(), k = X.cols();
  ProbitFit out;
  out.beta = Eigen::VectorXd::Zero(k);
  const double ybar = y.mean();
  if (ybar <= 0.0 || ybar >= 1.0) out.separation = true;
  auto eval = [&](const Eigen::VectorXd& b, Eigen::VectorXd* g, Eigen::MatrixXd* H) {
    const Eigen::VectorXd eta = X * b;
    double ll = 0.0;
    if (g) g->setZero(k);
    if (H) H->setZero(k, k);
    for (Eigen::Index r = 0; r < n; ++r) {
      const double e = eta[r];
      const double yr = y[r];
      ll += yr * detail::log_norm_cdf(e) + (1.0 - yr) * detail::log_norm_cdf(-e);
      if (g || H) {
        const double l1 = detail::mills(e), l0 = detail::mills(-e);
        const double dg = yr * l1 - (1.0 - yr) * l0;
        const double dh = -(yr * l1 * (e + l1) + (1.0 - yr) * l0 * (l0 - e));
        if (g) *g += dg * X.row(r).transpose();
        if (H) *H += dh * X.row(r).transpose() * X.row(r);
      }
    }
    return ll;
  };
  Eigen::VectorXd g(k);
  Eigen::MatrixXd H(k, k);
  double ll = eval(out.beta, &g, &H);
  for (out.iterations = 0; out.iterations < 200; ++out.iterations) {
    out.grad_norm = (g / static_cast<double>(n)).cwiseAbs().maxCoeff();
    if (out.grad_norm <= gtol) {
      out.converged = true;
      break;
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(-H);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      out.separation = true;
      break;
    }
    const Eigen::VectorXd step = ldlt.solve(g);
    double t = 1.0, lln = ll;
    Eigen::VectorXd next;
    for (int ls = 0; ls < 50; ++ls) {
      next = out.beta + t * step;
      lln = eval(next, nullptr, nullptr);
      if (lln >= ll - 1e-12 * std::abs(ll)) break;
      t *= 0.5;
    }
    if (!(lln >= ll - 1e-12 * std::abs(ll))) break;
    out.beta = next;
    ll = eval(out.beta, &g, &H);
    if (out.beta.cwiseAbs().maxCoeff() > 1e3) {
      out.separation = true;
      break;
    }
  }
  if (out.separation) out.converged = false;
  out.loglik = ll;
  out.se = Eigen::VectorXd::Constant(k, std::numeric_limits<double>::quiet_NaN());
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(-H);
  if (lu.isInvertible()) {
    const Eigen::MatrixXd V = lu.inverse();
    for (Eigen::Index j = 0; j < k; ++j) out.se[j] = V(j, j) > 0.0 ? std::sqrt(V(j, j)) : out.se[j];
  }
  return out;
}

inline std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

// Pooled probit over player-market rows: y_i on (1, z_i, x, y_j).
inline EstimateReport fit_probit_baseline(const MarketDataset& data) {
  const auto t0 = std::chrono::steady_clock::now();
  data.validate();
  if (data.empty()) throw ValidationError("cannot estimate on an empty sample");
  const std::size_t kx = data.x_dim(), n = data.size();
  Eigen::MatrixXd X(2 * n, kx + 3);
  Eigen::VectorXd y(2 * n);
  for (std::size_t m = 0; m < n; ++m) {
    const auto& r = data.rows[m];
    for (int i = 0; i < 2; ++i) {
      const Eigen::Index row = static_cast<Eigen::Index>(2 * m + i);
      X(row, 0) = 1.0;
      X(row, 1) = i == 0 ? r.z1 : r.z2;
      for (std::size_t k = 0; k < kx; ++k) X(row, 2 + k) = r.x[k];
      X(row, 2 + kx) = i == 0 ? r.y2 : r.y1;
      y[row] = i == 0 ? r.y1 : r.y2;
    }
  }
  const ProbitFit f = fit_probit(X, y);
  EstimateReport rep;
  rep.estimator = "probit";
  rep.names = {"const", "z"};
  for (std::size_t k = 1; k <= kx; ++k) rep.names.push_back("x" + std::to_string(k));
  rep.names.push_back("rival_entry");
  rep.theta = to_std(f.beta);
  rep.se = to_std(f.se);
  rep.loglik = f.loglik;
  rep.converged = f.converged;
  rep.separation = f.separation;
  rep.iterations = f.iterations;
  rep.grad_norm = f.grad_norm;
  rep.gtol = 1e-8;
  if (f.separation) rep.message = "separation: coefficients diverge";
  std::vector<double> base{rep.theta[0]};
  base.insert(base.end(), rep.theta.begin() + 2, rep.theta.begin() + 2 + kx);
  base.push_back(rep.theta[1]);
  rep.payoffs = {PayoffModel::linear(base, {rep.theta.back()}), PayoffModel::linear(base, {rep.theta.back()})};
  rep.metadata = {{"rows", 2 * n}, {"regressors", rep.names}, {"standard_errors", "inverse observed information"}};
  rep.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

// Private-information benchmark: P_i = Phi(pi_i(x, z_i) + delta_i p_j) with
// first-step p_j, fitted as a probit per player.
inline EstimateReport fit_private_info_baseline(const MarketDataset& data, const std::vector<ChoiceProbPair>& phat) {
  const auto t0 = std::chrono::steady_clock::now();
  data.validate();
  if (data.empty()) throw ValidationError("cannot estimate on an empty sample");
  if (phat.size() != data.size()) throw ValidationError("one first-step probability pair per market is required");
  const std::size_t kx = data.x_dim(), n = data.size();
  ModelSpec spec;
  spec.x_dim = kx;
  EstimateReport rep;
  rep.estimator = "private-info";
  rep.names = spec.names();
  rep.theta.assign(spec.size(), 0.0);
  std::vector<double> se(spec.size(), 0.0);
  rep.converged = true;
  for (int i = 0; i < 2; ++i) {
    Eigen::MatrixXd X(n, kx + 3);
    Eigen::VectorXd y(n);
    for (std::size_t m = 0; m < n; ++m) {
      const auto& r = data.rows[m];
      X(m, 0) = 1.0;
      for (std::size_t k = 0; k < kx; ++k) X(m, 1 + k) = r.x[k];
      X(m, 1 + kx) = i == 0 ? r.z1 : r.z2;
      X(m, 2 + kx) = phat[m][1 - i];
      y[m] = r.y(i);
    }
    const ProbitFit f = fit_probit(X, y);
    for (Eigen::Index k = 0; k < X.cols(); ++k) {
      rep.theta[spec.base_offset(i) + k] = f.beta[k];
      se[spec.base_offset(i) + k] = f.se[k];
    }
    rep.loglik += f.loglik;
    rep.converged = rep.converged && f.converged;
    rep.separation = rep.separation || f.separation;
    rep.iterations += f.iterations;
    rep.grad_norm = std::max(rep.grad_norm, f.grad_norm);
  }
  rep.se = se;
  rep.gtol = 1e-8;
  rep.payoffs = spec.payoffs(rep.theta);
  rep.metadata = {{"prior", "standard normal"}, {"standard_errors", "inverse observed information, first step treated as known"}};
  rep.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

inline EstimateReport fit_private_info_baseline(const MarketDataset& data, const CcpModel& ccp) {
  std::vector<ChoiceProbPair> phat;
  for (const auto& r : data.rows) phat.push_back(ccp.predict(r.covariates()));
  EstimateReport rep = fit_private_info_baseline(data, phat);
  rep.metadata["first_step_degree"] = ccp.kappa;
  rep.ridge = ccp.info[0].ridge || ccp.info[1].ridge;
  return rep;
}

// ---------------------------------------------------------------------------
// Payoff recovery from choice probabilities

// (P_i, P_j) at covariates x with own shifter z_i and rival shifter z_j.
using CcpOracle = std::function<ChoiceProbPair(std::span<const double> x, double z_i, double z_j)>;

struct RecoveredPayoffs {
  double pi_hat = 0.0;
  double delta_hat = 0.0;
};

// Inverts player i's choice probability at two rival shifters and solves
//   invert(P_i(z_j_k)) = pi + delta * P_j(z_j_k),  k = 1, 2.
inline RecoveredPayoffs recover_payoffs_semiparametric(const CcpOracle& oracle, const ChoiceSolver& player,
                                                       std::span<const double> x, double z_i, double z_j_1,
                                                       double z_j_2, double rank_tol = 1e-8) {
  const ChoiceProbPair a = oracle(x, z_i, z_j_1);
  const ChoiceProbPair b = oracle(x, z_i, z_j_2);
  const double gap = a.p2 - b.p2;
  if (!(std::abs(gap) >= rank_tol))
    throw IdentificationError("rival choice probabilities at z_j = " + std::to_string(z_j_1) + " and z_j = " +
                              std::to_string(z_j_2) + " differ by " + std::to_string(std::abs(gap)) +
                              ", below the rank tolerance");
  for (const auto& pr : {a, b})
    if (!(pr.p1 > 0.0 && pr.p1 < 1.0))
      throw IdentificationError("own choice probability at a corner cannot be inverted");
  const double v1 = player.invert(a.p1), v2 = player.invert(b.p1);
  RecoveredPayoffs out;
  out.delta_hat = (v1 - v2) / gap;
  out.pi_hat = v1 - out.delta_hat * a.p2;
  return out;
}

// Oracle from a game: (P_i, P_j) at the game's unique equilibrium, with
// player i's shifter z_i and the rival's z_j. player is 0 or 1.
inline CcpOracle game_ccp_oracle(const GameInstance& game, int player, int nodes = 64) {
  auto solver = std::make_shared<GameSolver>(game, nodes);
  return [game, player, solver](std::span<const double> x, double z_i, double z_j) {
    GameInstance g = game;
    g.covariates.x.assign(x.begin(), x.end());
    g.covariates.z1 = player == 0 ? z_i : z_j;
    g.covariates.z2 = player == 0 ? z_j : z_i;
    const EquilibriumSet set = solver->find_equilibria(reduce(g));
    if (set.size() != 1) throw MultiplicityError(0, set.size());
    const auto& p = set.points.front().p;
    return ChoiceProbPair{p[player], p[1 - player]};
  };
}

// ---------------------------------------------------------------------------
// Bootstrap

using Estimator = std::function<std::optional<std::vector<double>>(const MarketDataset&)>;

struct BootstrapResult {
  std::vector<double> se;
  std::vector<std::vector<double>> replicates;
  int requested = 0;
  int dropped = 0;
};

// Resamples markets with replacement B times and refits. Replicate b draws
// from substream (seed, b + 1). Failed replicates are dropped and counted;
// more than 10% dropped is an error.
inline BootstrapResult bootstrap_se(const Estimator& estimator, const MarketDataset& data, int B,
                                    std::uint64_t seed = 0, int threads = 1) {
  if (B < 2) throw ValidationError("bootstrap needs at least 2 replicates");
  if (data.empty()) throw ValidationError("cannot bootstrap an empty sample");
  const std::size_t n = data.size();
  std::vector<std::optional<std::vector<double>>> reps(B);
  parallel_for(static_cast<std::size_t>(B), threads, [&](std::size_t b) {
    Rng rng(seed, b + 1);
    MarketDataset d;
    d.column_scale = data.column_scale;
    d.rows.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      MarketRow r = data.rows[rng.index(n)];
      r.market_id = static_cast<std::int64_t>(k) + 1;
      d.rows.push_back(std::move(r));
    }
    try {
      reps[b] = estimator(d);
    } catch (const Error&) {
      reps[b] = std::nullopt;
    }
  });
  BootstrapResult out;
  out.requested = B;
  for (auto& r : reps) {
    if (r) out.replicates.push_back(std::move(*r));
    else ++out.dropped;
  }
  if (out.dropped * 10 > B)
    throw NumericalError(std::to_string(out.dropped) + " of " + std::to_string(B) +
                         " bootstrap replicates failed, above the 10% limit");
  if (out.replicates.size() < 2) throw NumericalError("fewer than 2 bootstrap replicates succeeded");
  const std::size_t k = out.replicates.front().size();
  out.se.assign(k, 0.0);
  const double R = static_cast<double>(out.replicates.size());
  for (std::size_t j = 0; j < k; ++j) {
    // Deviations from the first replicate, so identical replicates give exactly 0.
    const double ref = out.replicates.front()[j];
    double mean = 0.0;
    for (const auto& r : out.replicates) mean += r[j] - ref;
    mean /= R;
    double ss = 0.0;
    for (const auto& r : out.replicates) ss += (r[j] - ref - mean) * (r[j] - ref - mean);
    out.se[j] = std::sqrt(ss / (R - 1.0));
  }
  return out;
}

}  // namespace rigame
