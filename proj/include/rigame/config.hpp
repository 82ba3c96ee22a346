#pragma once

// JSON forms of game templates and simulation designs. Every schema error
// names the JSON pointer of the offending value.

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "rigame/simulate.hpp"

namespace rigame {

using json = nlohmann::json;

namespace detail {

inline const json& require(const json& j, const std::string& path, const char* key) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "/" : path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(path + "/" + key, "missing required field");
  return *it;
}

inline double as_real(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "expected a finite number");
  return v;
}

inline std::vector<double> as_reals(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(as_real(j[k], path + "/" + std::to_string(k)));
  return out;
}

inline std::int64_t as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  return j.get<std::int64_t>();
}

inline std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

template <class F>
auto rethrow_at(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const ValidationError& e) {
    throw ConfigError(path.empty() ? "/" : path, e.what());
  }
}

}  // namespace detail

inline json prior_to_json(const PriorSpec& p) {
  return {{"family", to_string(p.family)}, {"param1", p.param1}, {"param2", p.param2}};
}

inline PriorSpec prior_from_json(const json& j, const std::string& path = "") {
  const std::string fam = detail::as_string(detail::require(j, path, "family"), path + "/family");
  PriorSpec p;
  if (fam == "normal") p.family = PriorFamily::Normal;
  else if (fam == "uniform") p.family = PriorFamily::Uniform;
  else throw ConfigError(path + "/family", "expected \"normal\" or \"uniform\", got \"" + fam + "\"");
  p.param1 = detail::as_real(detail::require(j, path, "param1"), path + "/param1");
  p.param2 = detail::as_real(detail::require(j, path, "param2"), path + "/param2");
  detail::rethrow_at(path, [&] { p.validate(); return 0; });
  return p;
}

// Accepts "normal(0,4)" or "uniform(-5,5)" as a shorthand.
inline PriorSpec parse_prior(const std::string& text) {
  const auto open = text.find('('), close = text.rfind(')'), comma = text.find(',');
  if (open == std::string::npos || close != text.size() - 1 || comma == std::string::npos ||
      comma < open)
    throw ValidationError("prior '" + text + "' is not of the form family(a,b)");
  const std::string fam = text.substr(0, open);
  double a = 0.0, b = 0.0;
  try {
    a = std::stod(text.substr(open + 1, comma - open - 1));
    b = std::stod(text.substr(comma + 1, close - comma - 1));
  } catch (const std::exception&) {
    throw ValidationError("prior '" + text + "' has non-numeric parameters");
  }
  if (fam == "normal") return PriorSpec::normal(a, b);
  if (fam == "uniform") return PriorSpec::uniform(a, b);
  throw ValidationError("unknown prior family '" + fam + "'");
}

inline json payoff_to_json(const PayoffModel& m) {
  return {{"basis", m.basis == PayoffBasis::Linear ? "linear" : "polynomial"},
          {"base", m.base},
          {"strategic", m.strategic}};
}

inline PayoffModel payoff_from_json(const json& j, const std::string& path = "") {
  PayoffModel m;
  if (j.is_object() && j.contains("basis")) {
    const std::string b = detail::as_string(j["basis"], path + "/basis");
    if (b == "linear") m.basis = PayoffBasis::Linear;
    else if (b == "polynomial") m.basis = PayoffBasis::Polynomial;
    else throw ConfigError(path + "/basis", "expected \"linear\" or \"polynomial\", got \"" + b + "\"");
  }
  m.base = detail::as_reals(detail::require(j, path, "base"), path + "/base");
  m.strategic = detail::as_reals(detail::require(j, path, "strategic"), path + "/strategic");
  return m;
}

inline json covariates_to_json(const Covariates& c) {
  return {{"x", c.x}, {"z1", c.z1}, {"z2", c.z2}};
}

inline Covariates covariates_from_json(const json& j, const std::string& path) {
  Covariates c;
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  if (j.contains("x")) c.x = detail::as_reals(j["x"], path + "/x");
  c.z1 = detail::as_real(detail::require(j, path, "z1"), path + "/z1");
  c.z2 = detail::as_real(detail::require(j, path, "z2"), path + "/z2");
  return c;
}

inline json game_to_json(const GameInstance& g) {
  return {{"payoffs", {payoff_to_json(g.payoffs[0]), payoff_to_json(g.payoffs[1])}},
          {"priors", {prior_to_json(g.priors[0]), prior_to_json(g.priors[1])}},
          {"lambda", {g.lambda[0], g.lambda[1]}},
          {"covariates", covariates_to_json(g.covariates)}};
}

// `covariates` is optional; without it the game is a template. A template
// inside a DGP passes the covariate dimension of its x law as `x_dim`;
// `with_payoffs` false skips the payoff block entirely.
inline GameInstance game_from_json(const json& j, const std::string& path = "",
                                   std::optional<std::size_t> x_dim = std::nullopt, bool with_payoffs = true) {
  GameInstance g;
  if (with_payoffs) {
    const json& pay = detail::require(j, path, "payoffs");
    if (!pay.is_array() || pay.size() != 2) throw ConfigError(path + "/payoffs", "expected an array of 2 payoff models");
    for (int i = 0; i < 2; ++i) g.payoffs[i] = payoff_from_json(pay[i], path + "/payoffs/" + std::to_string(i));
  }
  const json& pri = detail::require(j, path, "priors");
  if (!pri.is_array() || pri.size() != 2) throw ConfigError(path + "/priors", "expected an array of 2 priors");
  for (int i = 0; i < 2; ++i) g.priors[i] = prior_from_json(pri[i], path + "/priors/" + std::to_string(i));
  if (j.contains("lambda")) {
    const auto l = detail::as_reals(j["lambda"], path + "/lambda");
    if (l.size() != 2) throw ConfigError(path + "/lambda", "expected 2 values");
    for (int i = 0; i < 2; ++i) {
      if (!(l[i] > 0.0)) throw ConfigError(path + "/lambda/" + std::to_string(i), "must be positive");
      g.lambda[i] = l[i];
    }
  }
  if (j.contains("covariates")) g.covariates = covariates_from_json(j["covariates"], path + "/covariates");
  if (!with_payoffs) return g;
  const std::size_t k = x_dim.value_or(g.covariates.x.size());
  for (int i = 0; i < 2; ++i) {
    const std::string p = path + "/payoffs/" + std::to_string(i);
    detail::rethrow_at(p, [&] { g.payoffs[i].validate(k); return 0; });
  }
  return g;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(0, path + ": " + e.what());
  }
}

inline GameInstance read_game(const std::string& path) { return game_from_json(read_json_file(path)); }

inline const char* selection_name(SelectionRule r) { return to_string(r); }

inline SelectionRule parse_selection(const std::string& s) {
  for (auto r : {SelectionRule::RequireUnique, SelectionRule::First, SelectionRule::Lowest,
                 SelectionRule::Highest, SelectionRule::Random})
    if (s == to_string(r)) return r;
  throw ValidationError("unknown selection rule '" + s + "'");
}

inline json dgp_to_json(const DgpConfig& c) {
  json xs = json::array();
  for (const auto& l : c.x_law) xs.push_back({l.lo, l.hi});
  json j = {{"name", to_string(c.name)},
            {"label", c.label},
            {"markets", c.markets},
            {"seed", c.seed},
            {"x_law", xs},
            {"z_law", {{c.z_law[0].lo, c.z_law[0].hi}, {c.z_law[1].lo, c.z_law[1].hi}}},
            {"selection", to_string(c.selection)},
            {"nodes", c.nodes}};
  GameInstance t = c.game_template;
  t.covariates = {};
  j["game"] = game_to_json(t);
  j["game"].erase("covariates");
  if (c.name == DgpName::SemiparametricMC) {
    j["game"].erase("payoffs");
    j["payoff_functions"] = {"3 - log(1 + 2 z)", "-4 exp(z) / (1 + exp(z))"};
  }
  return j;
}

inline DgpConfig dgp_from_json(const json& j, const std::string& path = "") {
  DgpConfig c;
  const std::string name = detail::as_string(detail::require(j, path, "name"), path + "/name");
  const int markets = j.contains("markets") ? static_cast<int>(detail::as_int(j["markets"], path + "/markets")) : 1000;
  const std::uint64_t seed = j.contains("seed") ? static_cast<std::uint64_t>(detail::as_int(j["seed"], path + "/seed")) : 0;
  if (name == "parametric") c = parametric_mc_dgp(markets, seed);
  else if (name == "semiparametric") c = semiparametric_mc_dgp(markets, seed);
  else if (name == "custom") {
    c.name = DgpName::Custom;
    c.markets = markets;
    c.seed = seed;
    detail::require(j, path, "game");
    const std::string sel_path = path + "/selection";
    const std::string sel = detail::as_string(detail::require(j, path, "selection"), sel_path);
    c.selection = detail::rethrow_at(sel_path, [&] { return parse_selection(sel); });
  } else {
    throw ConfigError(path + "/name", "expected parametric, semiparametric or custom, got \"" + name + "\"");
  }
  if (j.contains("label")) c.label = detail::as_string(j["label"], path + "/label");
  auto law = [&](const json& v, const std::string& p) {
    const auto b = detail::as_reals(v, p);
    if (b.size() != 2) throw ConfigError(p, "expected [lo, hi]");
    if (!(b[1] >= b[0])) throw ConfigError(p, "bounds must satisfy hi >= lo");
    return UniformLaw{b[0], b[1]};
  };
  if (j.contains("x_law")) {
    if (!j["x_law"].is_array()) throw ConfigError(path + "/x_law", "expected an array");
    c.x_law.clear();
    for (std::size_t k = 0; k < j["x_law"].size(); ++k)
      c.x_law.push_back(law(j["x_law"][k], path + "/x_law/" + std::to_string(k)));
  }
  if (j.contains("z_law")) {
    if (!j["z_law"].is_array() || j["z_law"].size() != 2) throw ConfigError(path + "/z_law", "expected 2 bounds");
    for (int i = 0; i < 2; ++i) c.z_law[i] = law(j["z_law"][i], path + "/z_law/" + std::to_string(i));
  }
  if (name != "custom" && j.contains("selection")) {
    const std::string sel = detail::as_string(j["selection"], path + "/selection");
    c.selection = detail::rethrow_at(path + "/selection", [&] { return parse_selection(sel); });
  }
  if (j.contains("nodes")) c.nodes = static_cast<int>(detail::as_int(j["nodes"], path + "/nodes"));
  if (name == "custom") {
    c.game_template = game_from_json(j["game"], path + "/game", c.x_law.size());
  } else if (j.contains("game")) {
    const bool semi = c.name == DgpName::SemiparametricMC;
    const GameInstance g = game_from_json(j["game"], path + "/game", c.x_law.size(), !semi);
    c.game_template.priors = g.priors;
    c.game_template.lambda = g.lambda;
    if (!semi) c.game_template.payoffs = g.payoffs;
  }
  detail::rethrow_at(path, [&] { c.validate(); return 0; });
  return c;
}

// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int k = 15; k >= 0; --k, v >>= 4) s[k] = digits[v & 0xf];
  return s;
}

// Hash of the canonical (sorted-key, compact) JSON form.
inline std::string config_hash(const json& j) { return hex64(fnv1a(j.dump())); }

}  // namespace rigame
