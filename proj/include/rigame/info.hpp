#pragma once

// Acquired information per market and player at fitted payoffs.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "rigame/estimate.hpp"
#include "rigame/mc.hpp"

namespace rigame {

struct InfoRow {
  std::int64_t market_id = 0;
  int player = 1;
  double p = 0.0;
  double v = 0.0;
  double raw = 0.0;
  double clipped = 0.0;
  Corner corner = Corner::Interior;
};

struct InfoSummary {
  int player = 1;
  std::size_t n = 0;
  double mean = 0.0;
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
  double sd = 0.0;
  std::size_t corners = 0;
  double raw_min = 0.0;
};

struct HistogramBin {
  int player = 1;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
};

struct InformationReport {
  std::vector<InfoRow> rows;
  std::array<InfoSummary, 2> summary;
  std::vector<HistogramBin> histogram;
};

// Equal-width bins on [0, max]. All-zero values give a single bin at 0.
inline std::vector<HistogramBin> information_histogram(const std::vector<double>& values, int player, int bins = 20) {
  std::vector<HistogramBin> out;
  if (values.empty()) return out;
  const double top = *std::max_element(values.begin(), values.end());
  if (!(top > 0.0)) {
    out.push_back({player, 0.0, 0.0, values.size()});
    return out;
  }
  const double w = top / bins;
  for (int b = 0; b < bins; ++b) out.push_back({player, b * w, (b + 1) * w, 0});
  for (double v : values) {
    int b = static_cast<int>(v / w);
    b = std::clamp(b, 0, bins - 1);
    ++out[b].count;
  }
  return out;
}

// Each player's payoff uses the rival probability from `phat` when given,
// else from the equilibrium at the fitted payoffs. Raw values are
// H_b(p) - E[H_b(q)]; clipped values lie in [0, H_b(p)].
inline InformationReport report_acquired_information(const MarketDataset& data, const std::array<PayoffModel, 2>& payoffs,
                                                     const std::array<PriorSpec, 2>& priors,
                                                     const std::array<double, 2>& lambda,
                                                     const std::optional<std::vector<ChoiceProbPair>>& phat = std::nullopt,
                                                     int bins = 20, int nodes = 64) {
  data.validate();
  if (phat && phat->size() != data.size()) throw ValidationError("one probability pair per market is required");
  const GameSolver solver(ChoiceSolver(priors[0], lambda[0], nodes), ChoiceSolver(priors[1], lambda[1], nodes));
  GameInstance tmpl;
  tmpl.payoffs = payoffs;
  tmpl.priors = priors;
  tmpl.lambda = lambda;
  InformationReport out;
  std::array<std::vector<double>, 2> values;
  for (std::size_t m = 0; m < data.size(); ++m) {
    const auto& r = data.rows[m];
    const GameInstance g = tmpl.with_covariates(r.covariates());
    const ReducedGame rg = reduce(g);
    ChoiceProbPair rival;
    if (phat) {
      rival = (*phat)[m];
    } else {
      EquilibriumOptions eo;
      eo.use_certificate = true;
      eo.diagnostics = false;
      rival = solver.find_equilibria(rg, eo).points.front().p;
    }
    for (int i = 0; i < 2; ++i) {
      const RiSolution s = solver.best_response(rg, i, rival[1 - i]);
      InfoRow row;
      row.market_id = r.market_id;
      row.player = i + 1;
      row.p = s.p;
      row.v = s.v;
      row.corner = s.corner;
      row.raw = solver.player(i).information_raw(s);
      row.clipped = std::clamp(row.raw, 0.0, binary_entropy(s.p));
      values[i].push_back(row.clipped);
      out.rows.push_back(row);
    }
  }
  for (int i = 0; i < 2; ++i) {
    InfoSummary& s = out.summary[i];
    s.player = i + 1;
    const auto& v = values[i];
    s.n = v.size();
    if (v.empty()) continue;
    double sum = 0.0;
    for (double a : v) sum += a;
    s.mean = sum / static_cast<double>(v.size());
    s.median = quantile(v, 0.5);
    s.min = *std::min_element(v.begin(), v.end());
    s.max = *std::max_element(v.begin(), v.end());
    double ss = 0.0;
    for (double a : v) ss += (a - s.mean) * (a - s.mean);
    s.sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    s.raw_min = std::numeric_limits<double>::infinity();
    for (const auto& row : out.rows)
      if (row.player == i + 1) {
        s.raw_min = std::min(s.raw_min, row.raw);
        if (row.corner != Corner::Interior) ++s.corners;
      }
    auto h = information_histogram(v, i + 1, bins);
    out.histogram.insert(out.histogram.end(), h.begin(), h.end());
  }
  return out;
}

inline InformationReport report_acquired_information(const MarketDataset& data, const EstimateReport& fit,
                                                     const ModelSpec& spec,
                                                     const std::optional<CcpModel>& ccp = std::nullopt, int bins = 20) {
  std::optional<std::vector<ChoiceProbPair>> phat;
  if (ccp) {
    phat.emplace();
    for (const auto& r : data.rows) phat->push_back(ccp->predict(r.covariates()));
  }
  return report_acquired_information(data, fit.payoffs, spec.priors, spec.lambda, phat, bins, spec.nodes);
}

}  // namespace rigame
