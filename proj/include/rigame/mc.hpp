#pragma once

// Monte Carlo harness: simulate a panel, estimate, repeat, summarize.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "rigame/estimate.hpp"
#include "rigame/simulate.hpp"

namespace rigame {

enum class EstimatorKind { Nfxp, Sieve, TwoStep, Probit, PrivateInfo };

inline const char* to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::Nfxp: return "nfxp";
    case EstimatorKind::Sieve: return "sieve";
    case EstimatorKind::TwoStep: return "two-step";
    case EstimatorKind::Probit: return "probit";
    case EstimatorKind::PrivateInfo: return "private-info";
  }
  return "?";
}

inline EstimatorKind parse_estimator(const std::string& s) {
  for (auto k : {EstimatorKind::Nfxp, EstimatorKind::Sieve, EstimatorKind::TwoStep, EstimatorKind::Probit,
                 EstimatorKind::PrivateInfo})
    if (s == to_string(k)) return k;
  throw ValidationError("unknown estimator '" + s + "'");
}

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::Nfxp;
  FitOptions fit;
  // Start from the true parameters (when known) instead of zeros.
  bool start_at_truth = true;
  int kappa = 3;
  int d_pi = 2;
  int d_delta = 2;
  // Prior assumed by the estimator; the DGP's prior when absent.
  std::optional<PriorSpec> prior;
  // Sieve z support; the DGP's covariate law when absent.
  std::optional<std::pair<double, double>> support;
  // Grid for sieve curves and bands.
  double band_lo = 0.2;
  double band_hi = 2.8;
  int band_n = 50;

  EstimatorConfig() { fit.starts = 1; }
};

inline json estimator_to_json(const EstimatorConfig& e) {
  json j = {{"kind", to_string(e.kind)},
            {"starts", e.fit.starts},
            {"jitter", e.fit.jitter},
            {"start_at_truth", e.start_at_truth},
            {"gtol", e.fit.optim.gtol},
            {"xtol", e.fit.optim.xtol},
            {"grid_n", e.fit.grid_n}};
  if (e.kind == EstimatorKind::TwoStep || e.kind == EstimatorKind::PrivateInfo) j["kappa"] = e.kappa;
  if (e.kind == EstimatorKind::Sieve) {
    j["d_pi"] = e.d_pi;
    j["d_delta"] = e.d_delta;
    j["band"] = {e.band_lo, e.band_hi, e.band_n};
  }
  if (e.prior) j["prior"] = prior_to_json(*e.prior);
  return j;
}

// Least-squares polynomial of a given degree through f on [lo, hi]; monomial coefficients.
template <class F>
std::vector<double> project_polynomial(F&& f, int degree, double lo, double hi, int points = 401) {
  Eigen::MatrixXd A(points, degree + 1);
  Eigen::VectorXd b(points);
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  for (int r = 0; r < points; ++r) {
    const double z = lo + (hi - lo) * r / (points - 1);
    const double t = (z - mid) / half;
    auto T = chebyshev_values(degree, t);
    for (int c = 0; c <= degree; ++c) A(r, c) = T[c];
    b[r] = f(z);
  }
  const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
  return chebyshev_to_monomial({c.data(), c.data() + c.size()}, 1.0 / half, -mid / half);
}

// Model the estimator fits, with the parameter vector the DGP implies
// (NaN where the DGP is outside the model). `truth` is in the reporting
// basis, `start` in the estimator's internal one.
struct EstimationTarget {
  ModelSpec spec;
  std::vector<double> truth;
  std::vector<double> start;
};

inline EstimationTarget estimation_target(const DgpConfig& dgp, const EstimatorConfig& est) {
  EstimationTarget t;
  const auto& g = dgp.game_template;
  const PriorSpec prior = est.prior.value_or(g.priors[0]);
  if (est.kind == EstimatorKind::Sieve) {
    const auto [lo, hi] = est.support.value_or(std::pair{dgp.z_law[0].lo, dgp.z_law[0].hi});
    t.spec = sieve_spec(est.d_pi, est.d_delta, lo, hi, prior);
    t.spec.priors = est.prior ? std::array{*est.prior, *est.prior} : g.priors;
    t.spec.x_dim = dgp.x_law.size();
    std::array<PayoffModel, 2> m;
    for (int i = 0; i < 2; ++i) {
      if (dgp.name == DgpName::SemiparametricMC) {
        m[i] = PayoffModel::polynomial(project_polynomial(semiparametric_base, est.d_pi, lo, hi),
                                       project_polynomial(semiparametric_strategic, est.d_delta, lo, hi));
      } else if (g.payoffs[i].basis == PayoffBasis::Polynomial &&
                 static_cast<int>(g.payoffs[i].base.size()) <= est.d_pi + 1 &&
                 static_cast<int>(g.payoffs[i].strategic.size()) <= est.d_delta + 1) {
        m[i] = g.payoffs[i];
      } else {
        t.truth.assign(t.spec.size(), std::numeric_limits<double>::quiet_NaN());
        return t;
      }
    }
    t.start = t.spec.theta_from(m);
    t.truth = t.spec.report_theta(t.start);
    return t;
  }
  if (est.kind == EstimatorKind::Probit) {
    t.spec.x_dim = dgp.x_law.size();
    t.truth.assign(dgp.x_law.size() + 3, std::numeric_limits<double>::quiet_NaN());
    return t;
  }
  t.spec.kind = ModelKind::Linear;
  t.spec.x_dim = dgp.x_law.size();
  t.spec.priors = est.prior ? std::array{*est.prior, *est.prior} : g.priors;
  t.spec.lambda = g.lambda;
  t.spec.nodes = dgp.nodes;
  if (dgp.name != DgpName::SemiparametricMC && g.payoffs[0].basis == PayoffBasis::Linear &&
      g.payoffs[1].basis == PayoffBasis::Linear) {
    t.spec.strategic_full = g.payoffs[0].strategic.size() > 1 || g.payoffs[1].strategic.size() > 1;
    std::array<PayoffModel, 2> m = g.payoffs;
    if (t.spec.strategic_full)
      for (auto& pm : m)
        if (pm.strategic.size() == 1) pm.strategic.resize(t.spec.x_dim + 2, 0.0);
    t.truth = t.spec.theta_from(m);
    t.start = t.truth;
  } else {
    t.truth.assign(t.spec.size(), std::numeric_limits<double>::quiet_NaN());
  }
  return t;
}

struct ReplicateResult {
  std::optional<EstimateReport> report;
  std::string error;
};

// Runs one estimator on one panel.
inline EstimateReport run_estimator(const MarketDataset& data, const EstimationTarget& target,
                                    const EstimatorConfig& est) {
  std::vector<double> start(target.spec.size(), 0.0);
  if (est.start_at_truth && target.start.size() == start.size()) start = target.start;
  switch (est.kind) {
    case EstimatorKind::Nfxp:
      return fit_nfxp(data, target.spec, start, est.fit);
    case EstimatorKind::Sieve:
      return fit_sieve_mle(data, est.d_pi, est.d_delta, target.spec.priors[0], est.fit,
                           std::pair{target.spec.z_lo, target.spec.z_hi}, start, est.band_n)
          .report;
    case EstimatorKind::TwoStep: {
      const CcpModel ccp = fit_first_step_ccp(data, est.kappa);
      return fit_two_step(data, ccp, target.spec, start, est.fit);
    }
    case EstimatorKind::Probit:
      return fit_probit_baseline(data);
    case EstimatorKind::PrivateInfo:
      return fit_private_info_baseline(data, fit_first_step_ccp(data, est.kappa));
  }
  throw ValidationError("unknown estimator");
}

struct McParamRow {
  std::string name;
  double truth = 0.0;
  double mean = 0.0;
  double median = 0.0;
  std::optional<double> sd;
  double rmse = 0.0;
  double mean_bias = 0.0;
  double median_bias = 0.0;
};

// Replicate quantiles of the fitted sieve functions on a z grid.
struct BandRow {
  int player = 1;
  std::string function;  // "pi" or "delta"
  double z = 0.0;
  double truth = 0.0;
  double mean = 0.0;
  double q05 = 0.0;
  double q95 = 0.0;
};

struct McSummary {
  std::string dgp;
  std::string estimator;
  int reps = 0;
  int markets = 0;
  int failures = 0;
  int nonconverged = 0;
  std::vector<McParamRow> rows;
  std::vector<std::vector<double>> estimates;
  std::vector<std::string> failure_messages;
  std::vector<BandRow> bands;
};

// Type-7 (linear interpolation) sample quantile.
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// sd uses the R - 1 denominator and is absent for R = 1; rmse uses R, so
// rmse^2 = sd^2 (R - 1) / R + mean_bias^2.
inline std::vector<McParamRow> summarize_estimates(const std::vector<std::string>& names,
                                                   const std::vector<double>& truth,
                                                   const std::vector<std::vector<double>>& est) {
  std::vector<McParamRow> rows;
  const double R = static_cast<double>(est.size());
  for (std::size_t k = 0; k < names.size(); ++k) {
    McParamRow row;
    row.name = names[k];
    row.truth = k < truth.size() ? truth[k] : std::numeric_limits<double>::quiet_NaN();
    std::vector<double> v;
    for (const auto& e : est) v.push_back(e[k]);
    double s = 0.0;
    for (double a : v) s += a;
    row.mean = s / R;
    row.median = quantile(v, 0.5);
    double ss = 0.0, se2 = 0.0;
    for (double a : v) {
      ss += (a - row.mean) * (a - row.mean);
      se2 += (a - row.truth) * (a - row.truth);
    }
    if (v.size() > 1) row.sd = std::sqrt(ss / (R - 1.0));
    row.rmse = std::sqrt(se2 / R);
    row.mean_bias = row.mean - row.truth;
    row.median_bias = row.median - row.truth;
    rows.push_back(row);
  }
  return rows;
}

inline std::uint64_t replicate_seed(std::uint64_t seed, int r) {
  std::uint64_t s = seed ^ (0x632BE59BD9B4E019ULL * static_cast<std::uint64_t>(r + 1));
  return splitmix64(s);
}

// R independent simulate-then-estimate replications. Replicate r simulates
// with seed replicate_seed(dgp.seed, r). A replicate fails when simulation
// or estimation throws or the estimate is not finite; more than 5% failures
// aborts the study.
inline McSummary run_mc_study(const DgpConfig& dgp, const EstimatorConfig& est, int R, int threads = 1) {
  if (R < 1) throw ValidationError("a Monte Carlo study needs at least one replication");
  dgp.validate();
  const EstimationTarget target = estimation_target(dgp, est);
  std::vector<ReplicateResult> results(R);
  parallel_for(static_cast<std::size_t>(R), threads, [&](std::size_t r) {
    DgpConfig cfg = dgp;
    cfg.seed = replicate_seed(dgp.seed, static_cast<int>(r));
    try {
      const MarketDataset data = make_panel(cfg, 1);
      EstimateReport rep = run_estimator(data, target, est);
      bool finite = true;
      for (double v : rep.theta) finite = finite && std::isfinite(v);
      if (!finite) results[r].error = "estimate is not finite";
      else results[r].report = std::move(rep);
    } catch (const Error& e) {
      results[r].error = e.what();
    }
  });
  McSummary out;
  out.dgp = dgp.label;
  out.estimator = to_string(est.kind);
  out.reps = R;
  out.markets = dgp.markets;
  std::vector<std::string> names;
  std::vector<std::array<PayoffModel, 2>> models;
  for (int r = 0; r < R; ++r) {
    if (!results[r].report) {
      ++out.failures;
      out.failure_messages.push_back("replication " + std::to_string(r) + ": " + results[r].error);
      continue;
    }
    const auto& rep = *results[r].report;
    if (!rep.converged) ++out.nonconverged;
    names = rep.names;
    out.estimates.push_back(rep.theta);
    models.push_back(rep.payoffs);
  }
  if (out.failures * 20 > R)
    throw NumericalError(std::to_string(out.failures) + " of " + std::to_string(R) +
                         " replications failed, above the 5% limit; first: " + out.failure_messages.front());
  out.rows = summarize_estimates(names, target.truth, out.estimates);
  if (est.kind == EstimatorKind::Sieve) {
    for (int i = 0; i < 2; ++i)
      for (const char* fn : {"pi", "delta"})
        for (int k = 0; k < est.band_n; ++k) {
          BandRow b;
          b.player = i + 1;
          b.function = fn;
          b.z = est.band_n == 1 ? est.band_lo : est.band_lo + (est.band_hi - est.band_lo) * k / (est.band_n - 1);
          const bool is_pi = b.function == "pi";
          if (dgp.name == DgpName::SemiparametricMC)
            b.truth = is_pi ? semiparametric_base(b.z) : semiparametric_strategic(b.z);
          else
            b.truth = is_pi ? dgp.game_template.payoffs[i].base_payoff({}, b.z)
                            : dgp.game_template.payoffs[i].strategic_effect({}, b.z);
          std::vector<double> vals;
          for (const auto& m : models)
            vals.push_back(is_pi ? m[i].base_payoff({}, b.z) : m[i].strategic_effect({}, b.z));
          double s = 0.0;
          for (double v : vals) s += v;
          b.mean = s / static_cast<double>(vals.size());
          b.q05 = quantile(vals, 0.05);
          b.q95 = quantile(vals, 0.95);
          out.bands.push_back(b);
        }
  }
  return out;
}

struct BandScore {
  double mae = 0.0;
  double coverage = 0.0;
};

// Mean absolute error of the replicate-mean curve and the share of grid
// points whose truth lies inside the 5%-95% band, for one player and function.
inline BandScore score_bands(const std::vector<BandRow>& bands, int player, const std::string& function) {
  BandScore s;
  int n = 0, inside = 0;
  for (const auto& b : bands) {
    if (b.player != player || b.function != function) continue;
    ++n;
    s.mae += std::abs(b.mean - b.truth);
    if (b.truth >= b.q05 && b.truth <= b.q95) ++inside;
  }
  if (n > 0) {
    s.mae /= n;
    s.coverage = static_cast<double>(inside) / n;
  }
  return s;
}

}  // namespace rigame
