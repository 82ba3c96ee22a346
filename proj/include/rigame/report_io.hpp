#pragma once

// CSV writers for tabular outputs and plot data.
//
//   curves        p_rival,br1,br2
//   histogram     player,bin_lo,bin_hi,count
//   sieve_bands   player,function,z,truth,mean,q05,q95
//   mc summary    parameter,true,mean,median,sd,rmse,mean_bias,median_bias
//   mc estimates  replication,<parameter names>
//   information   market_id,player,p,v,raw,clipped,corner
//   info summary  player,n,mean,median,min,max,sd,corners,raw_min
//
// Reals use the shortest representation that round-trips; missing values
// are empty fields.

#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rigame/config.hpp"
#include "rigame/dataset_io.hpp"
#include "rigame/equilibrium.hpp"
#include "rigame/info.hpp"
#include "rigame/mc.hpp"

namespace rigame {

enum class PlotKind { Curves, Histogram, SieveBands };

namespace detail {

inline std::string num(double v) {
  if (!std::isfinite(v)) return "";
  std::string s;
  append_double(s, v);
  return s;
}

inline std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

}  // namespace detail

inline std::string curves_csv(const std::vector<CurveRow>& rows) {
  std::ostringstream out;
  out << "p_rival,br1,br2\n";
  for (const auto& r : rows)
    out << detail::num(r.p_rival) << ',' << detail::num(r.br1) << ',' << detail::num(r.br2) << '\n';
  return out.str();
}

inline std::string histogram_csv(const std::vector<HistogramBin>& bins) {
  std::ostringstream out;
  out << "player,bin_lo,bin_hi,count\n";
  for (const auto& b : bins)
    out << b.player << ',' << detail::num(b.lo) << ',' << detail::num(b.hi) << ',' << b.count << '\n';
  return out.str();
}

inline std::string bands_csv(const std::vector<BandRow>& rows) {
  std::ostringstream out;
  out << "player,function,z,truth,mean,q05,q95\n";
  for (const auto& r : rows)
    out << r.player << ',' << r.function << ',' << detail::num(r.z) << ',' << detail::num(r.truth) << ','
        << detail::num(r.mean) << ',' << detail::num(r.q05) << ',' << detail::num(r.q95) << '\n';
  return out.str();
}

inline std::string mc_summary_csv(const McSummary& s) {
  std::ostringstream out;
  out << "parameter,true,mean,median,sd,rmse,mean_bias,median_bias\n";
  for (const auto& r : s.rows)
    out << r.name << ',' << detail::num(r.truth) << ',' << detail::num(r.mean) << ',' << detail::num(r.median)
        << ',' << detail::num(r.sd) << ',' << detail::num(r.rmse) << ',' << detail::num(r.mean_bias) << ','
        << detail::num(r.median_bias) << '\n';
  return out.str();
}

inline std::string mc_estimates_csv(const McSummary& s) {
  std::ostringstream out;
  out << "replication";
  for (const auto& r : s.rows) out << ',' << r.name;
  out << '\n';
  for (std::size_t k = 0; k < s.estimates.size(); ++k) {
    out << k;
    for (double v : s.estimates[k]) out << ',' << detail::num(v);
    out << '\n';
  }
  return out.str();
}

inline std::string information_csv(const InformationReport& rep) {
  std::ostringstream out;
  out << "market_id,player,p,v,raw,clipped,corner\n";
  for (const auto& r : rep.rows)
    out << r.market_id << ',' << r.player << ',' << detail::num(r.p) << ',' << detail::num(r.v) << ','
        << detail::num(r.raw) << ',' << detail::num(r.clipped) << ',' << to_string(r.corner) << '\n';
  return out.str();
}

inline std::string information_summary_csv(const InformationReport& rep) {
  std::ostringstream out;
  out << "player,n,mean,median,min,max,sd,corners,raw_min\n";
  for (const auto& s : rep.summary)
    out << s.player << ',' << s.n << ',' << detail::num(s.mean) << ',' << detail::num(s.median) << ','
        << detail::num(s.min) << ',' << detail::num(s.max) << ',' << detail::num(s.sd) << ',' << s.corners << ','
        << detail::num(s.raw_min) << '\n';
  return out.str();
}

struct PlotPayload {
  std::vector<CurveRow> curves;
  std::vector<HistogramBin> histogram;
  std::vector<BandRow> bands;
};

inline std::string emit_plot_data(PlotKind kind, const PlotPayload& payload) {
  switch (kind) {
    case PlotKind::Curves: return curves_csv(payload.curves);
    case PlotKind::Histogram: return histogram_csv(payload.histogram);
    case PlotKind::SieveBands: return bands_csv(payload.bands);
  }
  return {};
}

inline json equilibrium_to_json(const EquilibriumPoint& e) {
  json j = {{"p1", e.p.p1},
            {"p2", e.p.p2},
            {"corner", {to_string(e.corner[0]), to_string(e.corner[1])}},
            {"residual", e.residual}};
  if (e.diagnosed) {
    j["jacobian"] = e.jacobian;
    j["minors"] = {{"m11", e.minors.m11}, {"m22", e.minors.m22}, {"det", e.minors.det}};
    j["uniqueness_flags"] = {{"m11_positive", e.flags.m11_positive},
                             {"m22_positive", e.flags.m22_positive},
                             {"det_positive", e.flags.det_positive}};
    j["one_sided_jacobian"] = e.one_sided;
  }
  return j;
}

inline json equilibrium_set_to_json(const EquilibriumSet& set) {
  json pts = json::array();
  for (const auto& e : set.points) pts.push_back(equilibrium_to_json(e));
  return {{"count", set.size()}, {"certified_unique", set.certified_unique}, {"equilibria", pts}};
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << text;
  if (!out) throw ValidationError("write to '" + path + "' failed");
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace rigame
