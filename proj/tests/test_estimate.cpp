#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "rigame/ccp.hpp"
#include "rigame/estimate.hpp"
#include "rigame/info.hpp"
#include "rigame/mc.hpp"
#include "rigame/optimize.hpp"
#include "rigame/simulate.hpp"

using namespace rigame;

namespace {

ModelSpec parametric_spec(PriorSpec prior = PriorSpec::normal(0.0, 4.0)) {
  ModelSpec s;
  s.priors = {prior, prior};
  return s;
}

const std::vector<double> kTruth{1.8, 0.5, -1.3, 1.6, 0.8, -1.3};

MarketDataset one_market(int y1, int y2, double z1 = 0.0, double z2 = 0.0) {
  MarketDataset d;
  d.rows.push_back({1, y1, y2, {}, z1, z2});
  return d;
}

FitOptions tight(double gtol) {
  FitOptions o;
  o.starts = 1;
  o.optim.gtol = gtol;
  o.optim.max_iter = 2000;
  return o;
}

}  // namespace

TEST(Loglik, EvenOddsMarket) {
  // pi = 0.65 - 1.3 * 0.5 = 0 for both players at z = 0, so p = (0.5, 0.5).
  const double ll = loglik_constrained({0.65, 0.0, -1.3, 0.65, 0.0, -1.3}, one_market(1, 0), parametric_spec());
  EXPECT_NEAR(ll, -std::log(4.0), 1e-10);
}

TEST(Loglik, CornersWithNoEntryGiveZero) {
  MarketDataset d;
  for (int m = 1; m <= 20; ++m) d.rows.push_back({m, 0, 0, {}, 0.05 * m, 1.0 - 0.05 * m});
  EXPECT_EQ(loglik_constrained({-10.0, 0.0, -1.0, -10.0, 0.0, -1.0}, d, parametric_spec()), 0.0);
}

TEST(Loglik, WrongLengthIsRejected) {
  EXPECT_THROW(loglik_constrained({1.0, 2.0}, one_market(0, 0), parametric_spec()), ValidationError);
}

TEST(Loglik, TruthDominatesShiftedIntercept) {
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto data = make_panel(parametric_mc_dgp(1000, seed), 4);
    auto shifted = kTruth;
    shifted[0] += 0.5;
    if (loglik_constrained(kTruth, data, parametric_spec()) >= loglik_constrained(shifted, data, parametric_spec()))
      ++wins;
  }
  EXPECT_GT(wins, 10);
}

TEST(Nfxp, DecomposesWithoutStrategicEffect) {
  // Payoffs well inside the corner thresholds, so every market is interior.
  auto dgp = parametric_mc_dgp(400, 12);
  dgp.game_template.payoffs = {PayoffModel::linear({0.2, 0.5}, {0.0}), PayoffModel::linear({-0.3, 0.8}, {0.0})};
  const auto data = make_panel(dgp, 4);
  auto spec = parametric_spec();
  spec.fixed = {{2, 0.0}, {5, 0.0}};
  const std::vector<double> start{0.2, 0.5, 0.0, -0.3, 0.8, 0.0};
  const auto joint = fit_nfxp(data, spec, start, tight(1e-9));
  for (int i = 0; i < 2; ++i) {
    auto single = spec;
    // Hold the other player's parameters; its terms are then constant.
    for (std::size_t k = 0; k < 3; ++k) single.fixed[3 * (1 - i) + k] = start[3 * (1 - i) + k];
    const auto alone = fit_nfxp(data, single, start, tight(1e-9));
    for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(alone.theta[3 * i + k], joint.theta[3 * i + k], 1e-6) << i << k;
  }
}

TEST(Nfxp, SmallPanelIsFast) {
  const auto data = make_panel(parametric_mc_dgp(50, 3));
  const auto t0 = std::chrono::steady_clock::now();
  FitOptions o;
  o.starts = 1;
  const auto rep = fit_nfxp(data, parametric_spec(), kTruth, o);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(secs, 10.0);
  EXPECT_EQ(rep.theta.size(), 6u);
  for (double v : rep.theta) EXPECT_TRUE(std::isfinite(v));
  if (!rep.converged) EXPECT_FALSE(rep.message.empty());
}

TEST(Nfxp, UnboundedLikelihoodIsFlagged) {
  // At this size player 2's entries are predicted perfectly by corner
  // solutions as its coefficients grow, so no finite maximizer exists.
  FitOptions o;
  o.starts = 1;
  const auto rep = fit_nfxp(make_panel(parametric_mc_dgp(50, 3)), parametric_spec(), kTruth, o);
  EXPECT_TRUE(rep.separation);
  EXPECT_FALSE(rep.converged);
}

TEST(Nfxp, EquilibriumConstraintHoldsAtEstimate) {
  const auto data = make_panel(parametric_mc_dgp(300, 5), 4);
  FitOptions o;
  o.starts = 1;
  const auto rep = fit_nfxp(data, parametric_spec(), kTruth, o);
  const auto s = make_sample(data, parametric_spec());
  const GameSolver solver = sample_solver(s.spec);
  const auto d = nfxp_loglik_detail(s, solver, rep.theta, o);
  for (std::size_t m = 0; m < s.size(); ++m) EXPECT_LE(solver.residual(s.game(rep.theta, m), d.p[m]), 1e-8);
}

TEST(Nfxp, EmptySampleIsRejected) {
  EXPECT_THROW(fit_nfxp(MarketDataset{}, parametric_spec(), kTruth), ValidationError);
}

TEST(FirstStep, InterceptOnlyIsLogitOfMean) {
  const auto data = make_panel(parametric_mc_dgp(500, 4));
  const auto ccp = fit_first_step_ccp(data, 0);
  const auto f = summarize_outcomes(data);
  const double m1 = f.f10() + f.f11(), m2 = f.f01() + f.f11();
  EXPECT_NEAR(ccp.gamma[0][0], std::log(m1 / (1 - m1)), 1e-8);
  EXPECT_NEAR(ccp.gamma[1][0], std::log(m2 / (1 - m2)), 1e-8);
  const auto p = ccp.predict(data.rows[3].covariates());
  EXPECT_NEAR(p.p1, m1, 1e-9);
}

TEST(FirstStep, PredictionsStrictlyInsideUnitInterval) {
  const auto data = make_panel(airline_like_fixture(800, 2));
  const auto ccp = fit_first_step_ccp(data, 3);
  for (const auto& r : data.rows) {
    const auto p = ccp.predict(r.covariates());
    EXPECT_GT(p.p1, 0.0);
    EXPECT_LT(p.p1, 1.0);
    EXPECT_GT(p.p2, 0.0);
    EXPECT_LT(p.p2, 1.0);
  }
}

TEST(FirstStep, RecoversWellSpecifiedLogistic) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = 40000;
  std::vector<Covariates> covs;
  std::array<std::vector<double>, 2> y;
  auto truth = [](const Covariates& c, int i) {
    const double eta = i == 0 ? -0.5 + 1.5 * c.z1 - 0.8 * c.z2 : 0.3 - 1.0 * c.z1 + 0.6 * c.z2;
    return 1.0 / (1.0 + std::exp(-eta));
  };
  for (int m = 0; m < n; ++m) {
    Covariates c{{}, u(gen), u(gen)};
    for (int i = 0; i < 2; ++i) y[i].push_back(u(gen) < truth(c, i) ? 1.0 : 0.0);
    covs.push_back(c);
  }
  const auto ccp = fit_first_step_ccp(covs, y, 1);
  EXPECT_TRUE(ccp.info[0].converged);
  for (double z1 : {0.1, 0.5, 0.9})
    for (double z2 : {0.1, 0.5, 0.9}) {
      const Covariates c{{}, z1, z2};
      const auto p = ccp.predict(c);
      // Three standard errors of a fitted probability at this sample size.
      EXPECT_NEAR(p.p1, truth(c, 0), 0.03);
      EXPECT_NEAR(p.p2, truth(c, 1), 0.03);
    }
}

TEST(FirstStep, SeparationFallsBackToRidge) {
  MarketDataset d;
  for (int m = 1; m <= 40; ++m) d.rows.push_back({m, m > 20 ? 1 : 0, m % 2, {}, 0.025 * m, 0.3});
  const auto ccp = fit_first_step_ccp(d, 1);
  EXPECT_TRUE(ccp.info[0].ridge);
}

TEST(Probit, RecoversWellSpecifiedModel) {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = 8000;
  const Eigen::Vector3d beta(0.3, -0.8, 0.5);
  Eigen::MatrixXd X(n, 3);
  Eigen::VectorXd y(n);
  for (int r = 0; r < n; ++r) {
    X(r, 0) = 1.0;
    X(r, 1) = u(gen);
    X(r, 2) = u(gen) > 0.0 ? 1.0 : 0.0;
    y[r] = X.row(r).dot(beta) + nd(gen) >= 0.0 ? 1.0 : 0.0;
  }
  const auto f = fit_probit(X, y);
  EXPECT_TRUE(f.converged);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(f.beta[k], beta[k], 3.0 * f.se[k]) << k;
}

TEST(Probit, BalancedInterceptOnlyGivesEvenOdds) {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(10, 1);
  Eigen::VectorXd y(10);
  y << 1, 0, 1, 0, 1, 0, 1, 0, 1, 0;
  const auto f = fit_probit(X, y);
  EXPECT_NEAR(oracle::normal_cdf(f.beta[0]), 0.5, 1e-12);
}

TEST(Probit, AllOnesIsFlagged) {
  MarketDataset d;
  for (int m = 1; m <= 30; ++m) d.rows.push_back({m, 1, 1, {}, 0.03 * m, 0.5});
  const auto rep = fit_probit_baseline(d);
  EXPECT_TRUE(rep.separation);
  EXPECT_FALSE(rep.converged);
}

TEST(Probit, BaselineIncludesRivalAction) {
  const auto rep = fit_probit_baseline(make_panel(airline_like_fixture(300, 3)));
  EXPECT_EQ(rep.names.back(), "rival_entry");
  ASSERT_TRUE(rep.se.has_value());
}

TEST(PrivateInfo, RecoversWellSpecifiedModel) {
  std::mt19937_64 gen(6);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = 8000;
  const std::vector<double> truth{0.4, 0.7, -1.1, -0.2, 0.9, -0.6};
  MarketDataset d;
  std::vector<ChoiceProbPair> phat;
  for (int m = 0; m < n; ++m) {
    MarketRow r{m + 1, 0, 0, {}, u(gen), u(gen)};
    const ChoiceProbPair p{u(gen), u(gen)};
    r.y1 = truth[0] + truth[1] * r.z1 + truth[2] * p.p2 + nd(gen) >= 0.0;
    r.y2 = truth[3] + truth[4] * r.z2 + truth[5] * p.p1 + nd(gen) >= 0.0;
    d.rows.push_back(r);
    phat.push_back(p);
  }
  const auto rep = fit_private_info_baseline(d, phat);
  ASSERT_TRUE(rep.se.has_value());
  for (std::size_t k = 0; k < truth.size(); ++k) EXPECT_NEAR(rep.theta[k], truth[k], 3.0 * (*rep.se)[k]) << k;
}

TEST(TwoStep, OracleProbabilitiesRecoverTruthOnPopulationTargets) {
  // Expected actions at the true equilibrium make the pseudo-likelihood
  // maximized exactly at the truth.
  const auto dgp = parametric_mc_dgp(300, 9);
  const auto covs = gen_covariates(dgp);
  const auto spec = parametric_spec();
  const GameSolver solver = dgp_solver(dgp);
  ChoiceSample s;
  s.spec = spec;
  std::vector<ChoiceProbPair> phat;
  for (std::size_t m = 0; m < covs.size(); ++m) {
    const auto p = solver.find_equilibria(dgp.reduced(covs[m])).points.at(0).p;
    add_market(s, static_cast<std::int64_t>(m + 1), covs[m], p.p1, p.p2);
    phat.push_back(p);
  }
  const auto rep = fit_two_step(s, phat, std::vector<double>(6, 0.0), tight(1e-10));
  for (std::size_t k = 0; k < 6; ++k) EXPECT_NEAR(rep.theta[k], kTruth[k], 1e-4) << k;
}

TEST(Recovery, ExactProbabilitiesGiveTruth) {
  const GameInstance g = parametric_mc_dgp(1, 0).game_template;
  const ChoiceSolver player(g.priors[0], 1.0);
  const auto r = recover_payoffs_semiparametric(game_ccp_oracle(g, 0), player, {}, 0.5, 0.2, 0.8);
  EXPECT_NEAR(r.pi_hat, 2.05, 1e-6);
  EXPECT_NEAR(r.delta_hat, -1.3, 1e-6);
}

TEST(Recovery, NoStrategicEffect) {
  GameInstance g = parametric_mc_dgp(1, 0).game_template;
  g.payoffs[0].strategic = {0.0};
  const ChoiceSolver player(g.priors[0], 1.0);
  // z_i = 0 keeps player 1 off its upper corner.
  const auto r = recover_payoffs_semiparametric(game_ccp_oracle(g, 0), player, {}, 0.0, 0.2, 0.8);
  EXPECT_NEAR(r.delta_hat, 0.0, 1e-8);
  EXPECT_NEAR(r.pi_hat, 1.8, 1e-6);
}

TEST(Recovery, EqualRivalShiftersFailRank) {
  const GameInstance g = parametric_mc_dgp(1, 0).game_template;
  const ChoiceSolver player(g.priors[0], 1.0);
  try {
    recover_payoffs_semiparametric(game_ccp_oracle(g, 0), player, {}, 0.5, 0.4, 0.4);
    FAIL();
  } catch (const IdentificationError& e) {
    EXPECT_NE(std::string(e.what()).find("0.4"), std::string::npos);
  }
}

TEST(Bootstrap, SampleMeanMatchesBinomialError) {
  MarketDataset d;
  std::mt19937_64 gen(2);
  std::bernoulli_distribution b(0.3);
  for (int m = 1; m <= 1000; ++m) d.rows.push_back({m, b(gen) ? 1 : 0, 0, {}, 0.0, 0.0});
  const Estimator mean_y1 = [](const MarketDataset& x) -> std::optional<std::vector<double>> {
    double s = 0.0;
    for (const auto& r : x.rows) s += r.y1;
    return std::vector<double>{s / static_cast<double>(x.size())};
  };
  double p = 0.0;
  for (const auto& r : d.rows) p += r.y1;
  p /= 1000.0;
  const auto res = bootstrap_se(mean_y1, d, 1000, 5, 4);
  const double expected = std::sqrt(p * (1 - p) / 1000.0);
  EXPECT_NEAR(res.se[0], expected, 0.1 * expected);
  EXPECT_EQ(res.dropped, 0);
}

TEST(Bootstrap, TwoReplicatesRun) {
  const auto d = make_panel(parametric_mc_dgp(30, 1));
  const Estimator f = [](const MarketDataset& x) -> std::optional<std::vector<double>> {
    return std::vector<double>{static_cast<double>(x.rows.front().y1)};
  };
  EXPECT_EQ(bootstrap_se(f, d, 2).replicates.size(), 2u);
  EXPECT_THROW(bootstrap_se(f, d, 1), ValidationError);
}

TEST(Bootstrap, IdenticalRowsHaveNoVariance) {
  MarketDataset d;
  for (int m = 1; m <= 50; ++m) d.rows.push_back({m, 1, 0, {}, 0.4, 0.6});
  const Estimator f = [](const MarketDataset& x) -> std::optional<std::vector<double>> {
    double s = 0.0;
    for (const auto& r : x.rows) s += r.z1 + r.y1;
    return std::vector<double>{s / static_cast<double>(x.size())};
  };
  EXPECT_EQ(bootstrap_se(f, d, 20).se[0], 0.0);
}

TEST(Bootstrap, TooManyFailuresIsAnError) {
  const auto d = make_panel(parametric_mc_dgp(30, 1));
  const Estimator f = [](const MarketDataset&) -> std::optional<std::vector<double>> { return std::nullopt; };
  EXPECT_THROW(bootstrap_se(f, d, 10), NumericalError);
}

TEST(McSummary, SingleReplicationHasNoSd) {
  const auto rows = summarize_estimates({"a"}, {1.0}, {{1.5}});
  EXPECT_FALSE(rows[0].sd.has_value());
  EXPECT_DOUBLE_EQ(rows[0].rmse, 0.5);
}

TEST(McSummary, RmseIdentity) {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> nd(0.3, 1.2);
  std::vector<std::vector<double>> est;
  for (int r = 0; r < 37; ++r) est.push_back({nd(gen), nd(gen)});
  const auto rows = summarize_estimates({"a", "b"}, {0.0, 1.0}, est);
  const double R = 37.0;
  for (const auto& row : rows)
    EXPECT_NEAR(row.rmse * row.rmse, *row.sd * *row.sd * (R - 1) / R + row.mean_bias * row.mean_bias, 1e-10);
}

TEST(McSummary, QuantileIsLinearInterpolation) {
  EXPECT_DOUBLE_EQ(quantile({4.0, 1.0, 3.0, 2.0}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile({1.0, 2.0, 3.0, 4.0, 5.0}, 0.05), 1.2);
}

TEST(McStudy, SieveBandTruthIsTheDesignFunction) {
  EstimatorConfig est;
  est.kind = EstimatorKind::Sieve;
  est.d_pi = 1;
  est.d_delta = 0;
  est.prior = PriorSpec::uniform(-5.0, 5.0);
  est.support = std::pair{0.0, 3.0};
  est.fit.starts = 1;
  est.fit.optim.max_iter = 5;
  const auto s = run_mc_study(semiparametric_mc_dgp(60, 3), est, 2, 2);
  ASSERT_EQ(s.bands.size(), 200u);
  for (const auto& b : s.bands) {
    const double t = b.function == "pi" ? 3.0 - std::log1p(2.0 * b.z) : -4.0 * std::exp(b.z) / (1.0 + std::exp(b.z));
    EXPECT_NEAR(b.truth, t, 1e-12);
  }
  EXPECT_EQ(s.bands.front().z, 0.2);
  EXPECT_EQ(s.bands[49].z, 2.8);
}

TEST(McStudy, DeterministicAcrossThreads) {
  EstimatorConfig est;
  est.kind = EstimatorKind::TwoStep;
  est.kappa = 2;
  const auto a = run_mc_study(parametric_mc_dgp(150, 4), est, 3, 1);
  const auto b = run_mc_study(parametric_mc_dgp(150, 4), est, 3, 3);
  EXPECT_EQ(a.estimates, b.estimates);
}

TEST(Information, CornerMarketsAreZero) {
  MarketDataset d;
  for (int m = 1; m <= 10; ++m) d.rows.push_back({m, 0, 0, {}, 0.1 * m, 0.5});
  const std::array<PayoffModel, 2> pay{PayoffModel::linear({-8.0, 0.0}, {0.0}), PayoffModel::linear({-9.0, 0.5}, {0.0})};
  const auto prior = PriorSpec::normal(0.0, 1.0);
  const auto rep = report_acquired_information(d, pay, {prior, prior}, {1.0, 1.0});
  for (const auto& r : rep.rows) {
    EXPECT_EQ(r.clipped, 0.0);
    EXPECT_NE(r.corner, Corner::Interior);
  }
  // All values at zero land in a single bin at 0.
  for (int i = 1; i <= 2; ++i) {
    int bins = 0;
    for (const auto& h : rep.histogram)
      if (h.player == i) {
        ++bins;
        EXPECT_EQ(h.lo, 0.0);
        EXPECT_EQ(h.count, 10u);
      }
    EXPECT_EQ(bins, 1);
  }
}

TEST(Information, BoundedByChannelCapacity) {
  const auto data = make_panel(airline_like_fixture(300, 7));
  const auto& t = airline_like_fixture(1, 0).game_template;
  const auto rep = report_acquired_information(data, t.payoffs, t.priors, t.lambda);
  ASSERT_EQ(rep.rows.size(), 600u);
  for (const auto& r : rep.rows) {
    EXPECT_GE(r.raw, -1e-9);
    EXPECT_LE(r.raw, std::numbers::ln2 + 1e-12);
    EXPECT_GE(r.clipped, 0.0);
  }
  ASSERT_EQ(rep.summary.size(), 2u);
  for (const auto& s : rep.summary) {
    EXPECT_TRUE(std::isfinite(s.mean));
    EXPECT_LE(s.min, s.median);
    EXPECT_LE(s.median, s.max);
  }
}

TEST(Information, MatchesGridOracleAtInteriorMarket) {
  const auto d = one_market(1, 0, 0.5, 0.5);
  const auto& t = parametric_mc_dgp(1, 0).game_template;
  const auto rep = report_acquired_information(d, t.payoffs, t.priors, t.lambda);
  const auto& r = rep.rows.front();
  EXPECT_NEAR(r.raw, oracle::mutual_information(t.priors[0], 1.0, r.v, r.p), 1e-6);
}

TEST(Optimizer, BfgsFindsRosenbrockMinimum) {
  const Objective f = [](const std::vector<double>& x) {
    return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
  };
  OptimOptions o;
  o.gtol = 1e-8;
  o.max_iter = 5000;
  const auto r = minimize_bfgs(f, {-1.2, 1.0}, o);
  EXPECT_NEAR(r.x[0], 1.0, 1e-4);
  EXPECT_NEAR(r.x[1], 1.0, 1e-4);
}

TEST(Optimizer, NelderMeadFindsQuadraticMinimum) {
  const Objective f = [](const std::vector<double>& x) { return std::pow(x[0] - 2.0, 2) + 3.0 * std::pow(x[1] + 1.0, 2); };
  OptimOptions o;
  const auto r = nelder_mead(f, {0.0, 0.0}, o);
  EXPECT_NEAR(r.x[0], 2.0, 1e-4);
  EXPECT_NEAR(r.x[1], -1.0, 1e-4);
}

TEST(Optimizer, NonFiniteStartIsReported) {
  const Objective f = [](const std::vector<double>&) { return std::numeric_limits<double>::infinity(); };
  const auto r = minimize_bfgs(f, {0.0});
  EXPECT_FALSE(r.converged);
}
