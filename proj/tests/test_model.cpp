#include <gtest/gtest.h>

#include <cmath>

#include "rigame/model.hpp"

using namespace rigame;

namespace {

MarketRow row(std::int64_t id, int y1, int y2) { return MarketRow{id, y1, y2, {}, 0.0, 0.0}; }

}  // namespace

TEST(PriorSpec, RejectsNonPositiveVariance) {
  EXPECT_THROW(PriorSpec::normal(0.0, 0.0), ValidationError);
  EXPECT_THROW(PriorSpec::normal(0.0, -1.0), ValidationError);
}

TEST(PriorSpec, RejectsEmptyUniformSupport) {
  EXPECT_THROW(PriorSpec::uniform(1.0, 1.0), ValidationError);
  EXPECT_THROW(PriorSpec::uniform(2.0, 1.0), ValidationError);
}

TEST(PriorSpec, QuantileInvertsCdf) {
  for (const auto& p : {PriorSpec::normal(0.5, 4.0), PriorSpec::uniform(-5.0, 5.0)})
    for (double u : {0.001, 0.1, 0.5, 0.77, 0.999}) EXPECT_NEAR(p.cdf(p.quantile(u)), u, 1e-12);
}

TEST(PriorSpec, ScaledNormalMultipliesSdAndMean) {
  const auto p = PriorSpec::normal(1.0, 4.0).scaled(3.0);
  EXPECT_DOUBLE_EQ(p.mean(), 3.0);
  EXPECT_DOUBLE_EQ(p.sd(), 6.0);
}

TEST(ExpectedPayoff, LinearModelWithoutRival) {
  const auto m = PayoffModel::linear({1.8, 0.5}, {-1.3});
  EXPECT_DOUBLE_EQ(expected_deterministic_payoff(m, {}, 0.0, 0.0), 1.8);
}

TEST(ExpectedPayoff, LinearModelWithRivalCertain) {
  const auto m = PayoffModel::linear({1.8, 0.5}, {-1.3});
  EXPECT_NEAR(expected_deterministic_payoff(m, {}, 1.0, 1.0), 1.0, 1e-15);
}

TEST(ExpectedPayoff, SemiparametricCurvesAtZero) {
  // 3 - log(1 + 2z) and -4 e^z / (1 + e^z) at z = 0 are 3 and -2.
  const auto m = PayoffModel::polynomial({3.0}, {-2.0});
  EXPECT_DOUBLE_EQ(expected_deterministic_payoff(m, {}, 0.0, 0.5), 2.0);
}

TEST(ExpectedPayoff, AffineInRivalProbability) {
  const std::vector<double> x{0.3, -1.2};
  const auto m = PayoffModel::linear({0.2, 1.0, -0.5, 0.7}, {-0.4, 0.1, 0.2, -0.3});
  const double z = 0.9;
  const double slope = m.strategic_effect(x, z);
  for (double t = 0.0; t <= 1.0; t += 0.125)
    EXPECT_NEAR(expected_deterministic_payoff(m, x, z, t) - expected_deterministic_payoff(m, x, z, 0.0), t * slope,
                1e-15);
}

TEST(ExpectedPayoff, PolynomialUsesHorner) {
  const auto m = PayoffModel::polynomial({1.0, -2.0, 0.5}, {0.0, 1.0});
  // 1 - 2z + z^2/2 at z = 2 is -1; strategic is z.
  EXPECT_DOUBLE_EQ(m.base_payoff({}, 2.0), -1.0);
  EXPECT_DOUBLE_EQ(m.strategic_effect({}, 2.0), 2.0);
}

TEST(PayoffModel, LinearDimensionMismatchIsRejected) {
  EXPECT_THROW(PayoffModel::linear({1.0, 2.0}, {0.0}).validate(1), ValidationError);
  EXPECT_THROW(PayoffModel::linear({1.0, 2.0, 3.0}, {0.0, 1.0}).validate(1), ValidationError);
  EXPECT_NO_THROW(PayoffModel::linear({1.0, 2.0, 3.0}, {0.0}).validate(1));
}

TEST(GameInstance, RejectsNonPositiveLambda) {
  GameInstance g;
  g.payoffs = {PayoffModel::linear({0.0, 0.0}, {0.0}), PayoffModel::linear({0.0, 0.0}, {0.0})};
  g.priors = {PriorSpec::normal(0, 1), PriorSpec::normal(0, 1)};
  EXPECT_NO_THROW(g.validate());
  g.lambda[1] = 0.0;
  EXPECT_THROW(g.validate(), ValidationError);
}

TEST(GameInstance, RejectsNonFiniteCovariates) {
  GameInstance g;
  g.payoffs = {PayoffModel::linear({0.0, 0.0}, {0.0}), PayoffModel::linear({0.0, 0.0}, {0.0})};
  g.covariates.z1 = NAN;
  EXPECT_THROW(g.validate(), ValidationError);
}

TEST(MarketDataset, RejectsDuplicateIds) {
  MarketDataset d;
  d.rows = {row(1, 0, 0), row(1, 1, 0)};
  EXPECT_THROW(d.validate(), ValidationError);
}

TEST(MarketDataset, RejectsNonBinaryAction) {
  MarketDataset d;
  d.rows = {row(1, 2, 0)};
  EXPECT_THROW(d.validate(), ValidationError);
}

TEST(SummarizeOutcomes, OneOfEachOutcome) {
  MarketDataset d;
  d.rows = {row(1, 0, 0), row(2, 1, 0), row(3, 0, 1), row(4, 1, 1)};
  const auto f = summarize_outcomes(d);
  for (double v : f.f) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(SummarizeOutcomes, AllEntrants) {
  MarketDataset d;
  d.rows = {row(1, 1, 1), row(2, 1, 1), row(3, 1, 1)};
  const auto f = summarize_outcomes(d);
  EXPECT_EQ(f.f00(), 0.0);
  EXPECT_EQ(f.f10(), 0.0);
  EXPECT_EQ(f.f01(), 0.0);
  EXPECT_EQ(f.f11(), 1.0);
}

TEST(SummarizeOutcomes, FrequenciesSumToOne) {
  MarketDataset d;
  for (int k = 0; k < 7; ++k) d.rows.push_back(row(k, k % 2, (k / 2) % 2));
  const auto f = summarize_outcomes(d);
  EXPECT_EQ(f.f[0] + f.f[1] + f.f[2] + f.f[3], 1.0);
}

TEST(SummarizeOutcomes, EmptyDatasetIsAnError) { EXPECT_THROW(summarize_outcomes(MarketDataset{}), ValidationError); }
