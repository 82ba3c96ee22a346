// rigame: solve, simulate and estimate 2x2 entry games with costly information.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rigame/rigame.hpp"

namespace fs = std::filesystem;
using namespace rigame;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sidecar written next to outputs: what ran, with which inputs, and what it produced.
class Manifest {
 public:
  Manifest(std::string command, std::vector<std::string> argv)
      : command_(std::move(command)), argv_(std::move(argv)), start_(std::chrono::steady_clock::now()) {}

  json config = json::object();
  std::vector<std::uint64_t> seeds;
  int threads = 1;

  void artifact(const std::string& path, const std::string& content, std::string description) {
    artifacts_.push_back({{"path", fs::path(path).filename().string()},
                          {"bytes", content.size()},
                          {"fnv1a64", hex64(fnv1a(content))},
                          {"description", std::move(description)}});
  }

  void write(const std::string& path) const {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json j = {{"command", command_},
              {"argv", argv_},
              {"config", config},
              {"config_hash", config_hash(config)},
              {"seeds", seeds},
              {"threads", threads},
              {"artifacts", artifacts_},
              {"wall_time_seconds", wall},
              {"tool_version", kVersion}};
    write_text(path, j.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::vector<std::string> argv_;
  std::chrono::steady_clock::time_point start_;
  json artifacts_ = json::array();
};

std::string manifest_path(const std::string& out) { return out + ".manifest.json"; }

// Writes `content` to `out` (with a manifest) or to stdout when out is empty.
void emit(const std::string& out, const std::string& content, Manifest& m, const std::string& description) {
  if (out.empty()) {
    std::cout << content;
    return;
  }
  write_text(out, content);
  m.artifact(out, content, description);
  m.write(manifest_path(out));
}

int exit_code(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e)) return 2;
  if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const ValidationError*>(&e) ||
      dynamic_cast<const ConfigError*>(&e))
    return 4;
  return 3;
}

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e)) return "usage";
  if (const auto* r = dynamic_cast<const Error*>(&e)) return r->kind();
  return "internal";
}

void report_error(const std::string& kind, const std::string& message, int code) {
  json j = {{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
  std::cerr << j.dump() << "\n";
}

std::map<std::string, double> parse_scales(const std::vector<std::string>& items) {
  std::map<std::string, double> out;
  for (const auto& s : items) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--scale expects column=factor, got '" + s + "'");
    double f = 0.0;
    try {
      std::size_t used = 0;
      f = std::stod(s.substr(eq + 1), &used);
      if (used != s.size() - eq - 1) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      throw UsageError("--scale factor in '" + s + "' is not a number");
    }
    out[s.substr(0, eq)] = f;
  }
  return out;
}

json scales_json(const std::map<std::string, double>& s) {
  json j = json::object();
  for (const auto& [k, v] : s) j[k] = v;
  return j;
}

// DGP from --dgp and/or --config, with command-line overrides applied last.
struct DgpFlags {
  std::string name;
  std::string config;
  int markets = 0;
  std::optional<std::uint64_t> seed;
  std::string prior;
  std::string selection;

  void add(CLI::App* app, int default_markets) {
    markets = default_markets;
    app->add_option("--dgp", name, "Data generating process")
        ->check(CLI::IsMember({"parametric", "semiparametric", "custom"}));
    app->add_option("--config", config, "DGP JSON file (required for --dgp custom)");
    app->add_option("--markets", markets, "Number of markets")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--seed", seed, "Root seed (default: the config's, else 0)");
    app->add_option("--dgp-prior", prior, "Prior of both players' shocks in the DGP, e.g. normal(0,1)");
    app->add_option("--selection", selection,
                    "Equilibrium selection: require_unique, first, lowest, highest, random");
  }

  DgpConfig build() const {
    DgpConfig c;
    if (!config.empty()) {
      json j = read_json_file(config);
      if (!name.empty()) j["name"] = name;
      c = dgp_from_json(j);
    } else if (name == "parametric") {
      c = parametric_mc_dgp(markets, 0);
    } else if (name == "semiparametric") {
      c = semiparametric_mc_dgp(markets, 0);
    } else if (name == "custom") {
      throw UsageError("--dgp custom needs --config");
    } else {
      throw UsageError("one of --dgp or --config is required");
    }
    c.markets = markets;
    if (seed) c.seed = *seed;
    if (!prior.empty()) c.game_template.priors.fill(parse_prior(prior));
    if (!selection.empty()) c.selection = parse_selection(selection);
    c.validate();
    return c;
  }
};

// ---------------------------------------------------------------------------

struct SolveCmd {
  std::string config, out;
  int grid = 401;

  void add(CLI::App& app, std::function<void(std::function<void(Manifest&)>)> run) {
    auto* c = app.add_subcommand("solve", "Find all equilibria of one game, with uniqueness diagnostics");
    c->add_option("--config", config, "Game JSON file")->required();
    c->add_option("--grid", grid, "Scan points on [0, 1]")->check(CLI::Range(3, 1000000))->capture_default_str();
    c->add_option("--out", out, "Output JSON (default: stdout)");
    c->callback([this, run] { run([this](Manifest& m) { exec(m); }); });
  }

  void exec(Manifest& m) const {
    const GameInstance g = read_game(config);
    m.config = {{"game", game_to_json(g)}, {"grid", grid}};
    json j = equilibrium_set_to_json(find_equilibria(g, grid));
    j["game"] = game_to_json(g);
    emit(out, j.dump(2) + "\n", m, "equilibrium set");
  }
};

struct CurvesCmd {
  std::string config, out;
  int grid = 401;

  void add(CLI::App& app, std::function<void(std::function<void(Manifest&)>)> run) {
    auto* c = app.add_subcommand("curves", "Best-response curves as CSV: p_rival,br1,br2");
    c->add_option("--config", config, "Game JSON file")->required();
    c->add_option("--grid", grid, "Rows, evenly spaced over [0, 1]")->check(CLI::Range(2, 1000000))->capture_default_str();
    c->add_option("--out", out, "Output CSV (default: stdout)");
    c->callback([this, run] { run([this](Manifest& m) { exec(m); }); });
  }

  void exec(Manifest& m) const {
    const GameInstance g = read_game(config);
    m.config = {{"game", game_to_json(g)}, {"grid", grid}};
    PlotPayload p;
    p.curves = best_response_curves(g, grid);
    emit(out, emit_plot_data(PlotKind::Curves, p), m, "best responses: p_rival,br1,br2");
  }
};

struct SimulateCmd {
  DgpFlags dgp;
  std::string out;

  void add(CLI::App& app, std::function<void(std::function<void(Manifest&)>)> run) {
    auto* c = app.add_subcommand("simulate", "Simulate a panel of markets to CSV");
    dgp.add(c, 1000);
    c->add_option("--out", out, "Output CSV")->required();
    c->callback([this, run] { run([this](Manifest& m) { exec(m); }); });
  }

  void exec(Manifest& m) const {
    const DgpConfig cfg = dgp.build();
    m.config = {{"dgp", dgp_to_json(cfg)}};
    m.seeds = {cfg.seed};
    const MarketDataset data = make_panel(cfg, m.threads);
    std::ostringstream s;
    write_dataset(data, s);
    const auto f = summarize_outcomes(data);
    m.config["outcome_frequencies"] = {{"00", f.f00()}, {"01", f.f01()}, {"10", f.f10()}, {"11", f.f11()}};
    emit(out, s.str(), m, "market panel: market_id,y1,y2,x1..xK,z1,z2");
  }
};

struct FixtureCmd {
  std::string out;
  int markets = 1000;
  std::uint64_t seed = 0;

  void add(CLI::App& app, std::function<void(std::function<void(Manifest&)>)> run) {
    auto* c = app.add_subcommand("fixture", "Write the synthetic airline-like entry panel");
    c->add_option("--markets", markets, "Number of markets")->check(CLI::PositiveNumber)->capture_default_str();
    c->add_option("--seed", seed, "Seed")->capture_default_str();
    c->add_option("--out", out, "Output CSV")->required();
    c->callback([this, run] { run([this](Manifest& m) { exec(m); }); });
  }

  void exec(Manifest& m) const {
    const DgpConfig cfg = airline_like_fixture(markets, seed);
    m.config = {{"dgp", dgp_to_json(cfg)}};
    m.seeds = {seed};
    std::ostringstream s;
    write_dataset(make_panel(cfg, m.threads), s);
    emit(out, s.str(), m, "market panel: market_id,y1,y2,x1,z1,z2");
  }
};

struct EstimatorFlags {
  std::string estimator = "nfxp";
  std::string prior;
  int kappa = 3;
  int degree = 2;
  int starts = 1;
  double gtol = 1e-5;

  void add(CLI::App* c, bool with_kind) {
    if (with_kind)
      c->add_option("--estimator", estimator, "nfxp, sieve, two-step, probit or private-info")
          ->check(CLI::IsMember({"nfxp", "sieve", "two-step", "probit", "private-info"}))
          ->capture_default_str();
    c->add_option("--prior", prior, "Prior assumed by the estimator, e.g. normal(0,4) or uniform(-5,5)");
    c->add_option("--kappa", kappa, "Total degree of the first-step series logit")
        ->check(CLI::Range(0, 10))
        ->capture_default_str();
    c->add_option("--degree", degree, "Sieve degree of both the base payoff and the strategic effect")
        ->check(CLI::Range(0, 12))
        ->capture_default_str();
    c->add_option("--gtol", gtol, "Gradient tolerance on the mean log-likelihood")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  }
};

struct McCmd {
  DgpFlags dgp;
  EstimatorFlags est;
  int reps = 20;
  bool start_zero = false;
  std::string out_dir = ".";
  std::string prefix = "mc";

  void add(CLI::App& app, std::function<void(std::function<void(Manifest&)>)> run) {
    auto* c = app.add_subcommand("mc", "Monte Carlo study: simulate R panels and fit each");
    dgp.add(c, 1000);
    est.add(c, true);
    c->add_option("--reps", reps, "Replications")->check(CLI::PositiveNumber)->capture_default_str();
    c->add_option("--starts", est.starts, "Optimizer starts per fit")->check(CLI::PositiveNumber)->capture_default_str();
    c->add_flag("--start-zero", start_zero, "Start the optimizer at zero instead of the true parameters");
    c->add_option("--out-dir", out_dir, "Directory for the summary files")->capture_default_str();
    c->add_option("--prefix", prefix, "File name prefix")->capture_default_str();
    c->callback([this, run] { run([this](Manifest& m) { exec(m); }); });
  }

  void exec(Manifest& m) const {
    DgpConfig cfg = dgp.build();
    EstimatorConfig e;
    e.kind = parse_estimator(est.estimator);
    e.kappa = est.kappa;
    e.d_pi = e.d_delta = est.degree;
    e.fit.starts = est.starts;
    e.fit.optim.gtol = est.gtol;
    e.start_at_truth = !start_zero;
    if (!est.prior.empty()) e.prior = parse_prior(est.prior);
    m.config = {{"dgp", dgp_to_json(cfg)}, {"estimator", estimator_to_json(e)}, {"reps", reps}};
    m.seeds = {cfg.seed};
    const McSummary s = run_mc_study(cfg, e, reps, m.threads);

    fs::create_directories(out_dir);
    auto put = [&](const std::string& suffix, const std::string& text, const std::string& what) {
      const std::string path = (fs::path(out_dir) / (prefix + suffix)).string();
      write_text(path, text);
      m.artifact(path, text, what);
    };
    put("_summary.csv", mc_summary_csv(s), "parameter,true,mean,median,sd,rmse,mean_bias,median_bias");
    put("_estimates.csv", mc_estimates_csv(s), "one row per successful replication");
    if (!s.bands.empty()) {
      PlotPayload p;
      p.bands = s.bands;
      put("_sieve_bands.csv", emit_plot_data(PlotKind::SieveBands, p), "player,function,z,truth,mean,q05,q95");
    }
    json meta = {{"dgp", s.dgp},
                 {"estimator", s.estimator},
                 {"reps", s.reps},
                 {"markets", s.markets},
                 {"failures", s.failures},
                 {"nonconverged", s.nonconverged},
                 {"failure_messages", s.failure_messages},
                 {"conventions",
                  {{"sd", "denominator R - 1, empty when R = 1"},
                   {"rmse", "denominator R"},
                   {"identity", "rmse^2 = sd^2 (R - 1) / R + mean_bias^2"}}}};
    put("_summary.json", meta.dump(2) + "\n", "study metadata");
    m.write((fs::path(out_dir) / (prefix + ".manifest.json")).string());
  }
};

struct EstimateCmd {
  std::string kind;
  std::string data_path, out, start_path;
  std::vector<std::string> scales;
  EstimatorFlags est;
  int bootstrap = 0;
  int starts = 5;
  std::uint64_t seed = 0;

  void add(CLI::App& app, std::function<void(std::function<void(Manifest&)>)> run) {
    auto* c = app.add_subcommand("estimate", "Fit a model to a market panel");
    c->add_option("kind", kind, "nfxp, sieve, two-step, probit or private-info")
        ->required()
        ->check(CLI::IsMember({"nfxp", "sieve", "two-step", "probit", "private-info"}));
    c->add_option("--data", data_path, "Panel CSV")->required();
    est.add(c, false);
    c->add_option("--starts", starts, "Optimizer starts (first at the two-step estimate, rest jittered)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c->add_option("--bootstrap", bootstrap, "Bootstrap replicates for standard errors (0 = none)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    c->add_option("--seed", seed, "Seed for start jitter and bootstrap resampling")->capture_default_str();
    c->add_option("--scale", scales, "Rescale a covariate column before fitting, as column=factor (repeatable)");
    c->add_option("--out", out, "Output report JSON (default: stdout)");
    c->callback([this, run] { run([this](Manifest& m) { exec(m); }); });
  }

  PriorSpec prior() const {
    if (!est.prior.empty()) return parse_prior(est.prior);
    return kind == "sieve" ? PriorSpec::uniform(-5.0, 5.0) : PriorSpec::normal(0.0, 4.0);
  }

  FitOptions fit_options(int n_starts) const {
    FitOptions o;
    o.starts = n_starts;
    o.seed = seed;
    o.optim.gtol = est.gtol;
    return o;
  }

  ModelSpec linear_model(const MarketDataset& data) const {
    GameInstance g;
    g.priors.fill(prior());
    g.covariates.x.assign(data.rows.front().x.size(), 0.0);
    return linear_spec(g);
  }

  // One fit; `start` is the internal parameter vector for likelihood fits.
  EstimateReport fit(const MarketDataset& data, const std::optional<std::vector<double>>& start, int n_starts) const {
    if (kind == "probit") return fit_probit_baseline(data);
    if (kind == "private-info") return fit_private_info_baseline(data, fit_first_step_ccp(data, est.kappa));
    if (kind == "sieve") {
      const auto f = fit_sieve_mle(data, est.degree, est.degree, prior(), fit_options(n_starts), std::nullopt, start);
      EstimateReport r = f.report;
      json curves = json::array();
      for (const auto& row : f.curves)
        curves.push_back({{"z", row.z}, {"pi1", row.pi[0]}, {"delta1", row.delta[0]}, {"pi2", row.pi[1]},
                          {"delta2", row.delta[1]}});
      r.metadata["curves"] = curves;
      return r;
    }
    const ModelSpec spec = linear_model(data);
    const CcpModel ccp = fit_first_step_ccp(data, est.kappa);
    EstimateReport two = fit_two_step(data, ccp, spec, start, fit_options(1));
    if (kind == "two-step") return two;
    FitOptions o = fit_options(n_starts);
    o.ccp_hint = predict_all(ccp, make_sample(data, spec).covariates);
    std::vector<double> s0 = start.value_or(two.theta);
    for (double& v : s0)
      if (!std::isfinite(v)) v = 0.0;
    EstimateReport r = fit_nfxp(data, spec, s0, o);
    r.metadata["start"] = start ? "given" : "two-step estimate";
    return r;
  }

  void exec(Manifest& m) const {
    const auto scale = parse_scales(scales);
    const MarketDataset data = read_dataset(data_path, scale);
    if (data.empty()) throw ValidationError("the panel has no markets");
    m.config = {{"estimator", kind},      {"data", fs::path(data_path).filename().string()},
                {"prior", prior_to_json(prior())}, {"kappa", est.kappa},
                {"degree", est.degree},   {"starts", starts},
                {"gtol", est.gtol},       {"bootstrap", bootstrap},
                {"scale", scales_json(scale)}};
    m.seeds = {seed};
    m.config["data_fnv1a64"] = hex64(fnv1a(read_text(data_path)));

    EstimateReport r = fit(data, std::nullopt, starts);
    if (bootstrap > 0) {
      // Resampled fits restart once from the full-sample estimate.
      std::optional<std::vector<double>> start;
      if (kind == "nfxp" || kind == "two-step") start = r.theta;
      const Estimator f = [this, start](const MarketDataset& d) -> std::optional<std::vector<double>> {
        const EstimateReport b = fit(d, start, 1);
        for (double v : b.theta)
          if (!std::isfinite(v)) return std::nullopt;
        return b.theta;
      };
      const BootstrapResult b = bootstrap_se(f, data, bootstrap, seed, m.threads);
      r.se = b.se;
      r.metadata["bootstrap"] = {{"requested", b.requested}, {"dropped", b.dropped}};
    }
    r.metadata["priors"] = {prior_to_json(prior()), prior_to_json(prior())};
    r.metadata["lambda"] = {1.0, 1.0};
    r.metadata["column_scale"] = scales_json(scale);
    emit(out, report_to_json(r).dump(2) + "\n", m, "estimate report");
  }
};

struct IdentifyCmd {
  std::vector<double> x;
  double zi = 0.0, zj1 = 0.0, zj2 = 0.0;
  int player = 1;
  std::string config, grid, prior = "normal(0,1)", out;
  double lambda = 1.0;

  void add(CLI::App& app, std::function<void(std::function<void(Manifest&)>)> run) {
    auto* c = app.add_subcommand("identify", "Recover (pi, delta) at one point from choice probabilities");
    c->add_option("--x", x, "Market covariates, comma separated")->delimiter(',');
    c->add_option("--zi", zi, "Own excluded shifter")->required();
    c->add_option("--zj1", zj1, "First rival shifter value")->required();
    c->add_option("--zj2", zj2, "Second rival shifter value")->required();
    c->add_option("--player", player, "Player whose payoffs are recovered")->check(CLI::Range(1, 2))->capture_default_str();
    auto* cfg = c->add_option("--config", config, "Game JSON; its equilibrium supplies the choice probabilities");
    auto* g = c->add_option("--ccp-grid", grid, "CSV with columns x1..xK,z1,z2,p1,p2");
    cfg->excludes(g);
    c->add_option("--prior", prior, "Prior of the player's shock (with --ccp-grid)")->capture_default_str();
    c->add_option("--lambda", lambda, "Information cost (with --ccp-grid)")->check(CLI::PositiveNumber)->capture_default_str();
    c->add_option("--out", out, "Output JSON (default: stdout)");
    c->callback([this, run] { run([this](Manifest& m) { exec(m); }); });
  }

  static CcpOracle grid_oracle(const std::string& path, int player) {
    std::istringstream in(read_text(path));
    std::string line;
    if (!std::getline(in, line)) throw ParseError(1, "empty CCP grid");
    const auto head = detail::split_csv(line);
    if (head.size() < 4) throw ParseError(1, "CCP grid needs columns x1..xK,z1,z2,p1,p2");
    const std::size_t k = head.size() - 4;
    for (std::size_t c = 0; c < k; ++c)
      if (head[c] != "x" + std::to_string(c + 1)) throw ParseError(1, "expected column x" + std::to_string(c + 1));
    const char* tail[] = {"z1", "z2", "p1", "p2"};
    for (std::size_t c = 0; c < 4; ++c)
      if (head[k + c] != tail[c]) throw ParseError(1, std::string("expected column ") + tail[c]);
    auto rows = std::make_shared<std::vector<std::vector<double>>>();
    std::size_t n = 1;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      const auto cells = detail::split_csv(line);
      if (cells.size() != head.size()) throw ParseError(n, "expected " + std::to_string(head.size()) + " fields");
      std::vector<double> r;
      for (std::size_t c = 0; c < cells.size(); ++c) r.push_back(detail::parse_cell<double>(cells[c], n, std::string(head[c])));
      for (int j = 0; j < 2; ++j)
        if (!(r[k + 2 + j] >= 0.0 && r[k + 2 + j] <= 1.0)) throw ValidationError("line " + std::to_string(n) + ": probability outside [0, 1]");
      rows->push_back(std::move(r));
    }
    const int i = player - 1;
    return [rows, k, i](std::span<const double> xq, double z_i, double z_j) {
      if (xq.size() != k) throw ValidationError("--x has " + std::to_string(xq.size()) + " values, grid has " + std::to_string(k));
      auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); };
      for (const auto& r : *rows) {
        bool hit = close(r[k + i], z_i) && close(r[k + 1 - i], z_j);
        for (std::size_t c = 0; c < k && hit; ++c) hit = close(r[c], xq[c]);
        if (hit) return ChoiceProbPair{r[k + 2 + i], r[k + 3 - i]};
      }
      throw ValidationError("CCP grid has no row at z_i = " + std::to_string(z_i) + ", z_j = " + std::to_string(z_j));
    };
  }

  void exec(Manifest& m) const {
    if (config.empty() == grid.empty()) throw UsageError("exactly one of --config or --ccp-grid is required");
    const int i = player - 1;
    json j = {{"player", player}, {"x", x}, {"z_i", zi}, {"z_j", {zj1, zj2}}};
    RecoveredPayoffs r;
    if (!config.empty()) {
      GameInstance g = read_game(config);
      g.covariates.x = x;
      g.validate();
      m.config = {{"game", game_to_json(g)}, {"z_i", zi}, {"z_j", {zj1, zj2}}, {"player", player}};
      const ChoiceSolver solver(g.priors[i], g.lambda[i]);
      r = recover_payoffs_semiparametric(game_ccp_oracle(g, i), solver, x, zi, zj1, zj2);
      j["truth"] = {{"pi", g.payoffs[i].base_payoff(x, zi)}, {"delta", g.payoffs[i].strategic_effect(x, zi)}};
    } else {
      const PriorSpec pr = parse_prior(prior);
      m.config = {{"ccp_grid", fs::path(grid).filename().string()},
                  {"ccp_grid_fnv1a64", hex64(fnv1a(read_text(grid)))},
                  {"prior", prior_to_json(pr)},
                  {"lambda", lambda},
                  {"z_i", zi},
                  {"z_j", {zj1, zj2}},
                  {"player", player}};
      r = recover_payoffs_semiparametric(grid_oracle(grid, player), ChoiceSolver(pr, lambda), x, zi, zj1, zj2);
    }
    j["pi_hat"] = r.pi_hat;
    j["delta_hat"] = r.delta_hat;
    emit(out, j.dump(2) + "\n", m, "recovered payoffs");
  }
};

struct InfoCmd {
  std::string data_path, report_path, prefix = "info";
  std::vector<std::string> scales;
  std::string prior;
  int kappa = 3;
  int bins = 20;
  bool at_equilibrium = false;

  void add(CLI::App& app, std::function<void(std::function<void(Manifest&)>)> run) {
    auto* c = app.add_subcommand("info", "Acquired information per market at fitted payoffs");
    c->add_option("--data", data_path, "Panel CSV")->required();
    c->add_option("--report", report_path, "Estimate report JSON with fitted payoffs")->required();
    c->add_option("--prior", prior, "Prior of both shocks (default: the report's, else normal(0,1))");
    c->add_option("--kappa", kappa, "First-step degree for rival probabilities")->check(CLI::Range(0, 10))->capture_default_str();
    c->add_flag("--equilibrium", at_equilibrium, "Use the equilibrium at fitted payoffs instead of first-step probabilities");
    c->add_option("--bins", bins, "Histogram bins")->check(CLI::PositiveNumber)->capture_default_str();
    c->add_option("--scale", scales, "Rescale a covariate column, as column=factor (repeatable)");
    c->add_option("--out-prefix", prefix, "Prefix of the output files")->capture_default_str();
    c->callback([this, run] { run([this](Manifest& m) { exec(m); }); });
  }

  void exec(Manifest& m) const {
    const json rep = read_json_file(report_path);
    const json& pay = detail::require(rep, "", "payoffs");
    if (!pay.is_array() || pay.size() != 2) throw ConfigError("/payoffs", "expected 2 payoff models");
    std::array<PayoffModel, 2> payoffs{payoff_from_json(pay[0], "/payoffs/0"), payoff_from_json(pay[1], "/payoffs/1")};
    std::array<PriorSpec, 2> priors{PriorSpec::normal(0.0, 1.0), PriorSpec::normal(0.0, 1.0)};
    std::array<double, 2> lambda{1.0, 1.0};
    if (rep.contains("metadata") && rep["metadata"].contains("priors")) {
      for (int i = 0; i < 2; ++i)
        priors[i] = prior_from_json(rep["metadata"]["priors"][i], "/metadata/priors/" + std::to_string(i));
    }
    if (rep.contains("metadata") && rep["metadata"].contains("lambda")) {
      const auto l = detail::as_reals(rep["metadata"]["lambda"], "/metadata/lambda");
      if (l.size() != 2) throw ConfigError("/metadata/lambda", "expected 2 values");
      lambda = {l[0], l[1]};
    }
    if (!prior.empty()) priors.fill(parse_prior(prior));

    auto scale = parse_scales(scales);
    if (scale.empty() && rep.contains("metadata") && rep["metadata"].contains("column_scale"))
      for (const auto& [k, v] : rep["metadata"]["column_scale"].items()) scale[k] = v.get<double>();
    const MarketDataset data = read_dataset(data_path, scale);
    for (int i = 0; i < 2; ++i) payoffs[i].validate(data.rows.empty() ? 0 : data.rows.front().x.size());

    std::optional<std::vector<ChoiceProbPair>> phat;
    if (!at_equilibrium) {
      const CcpModel ccp = fit_first_step_ccp(data, kappa);
      phat.emplace();
      for (const auto& r : data.rows) phat->push_back(ccp.predict(r.covariates()));
    }
    const InformationReport info = report_acquired_information(data, payoffs, priors, lambda, phat, bins);

    m.config = {{"data", fs::path(data_path).filename().string()},
                {"data_fnv1a64", hex64(fnv1a(read_text(data_path)))},
                {"payoffs", pay},
                {"priors", {prior_to_json(priors[0]), prior_to_json(priors[1])}},
                {"lambda", lambda},
                {"rival_probabilities", at_equilibrium ? "equilibrium" : "first step"},
                {"kappa", kappa},
                {"bins", bins},
                {"scale", scales_json(scale)}};
    auto put = [&](const std::string& suffix, const std::string& text, const std::string& what) {
      const std::string path = prefix + suffix;
      write_text(path, text);
      m.artifact(path, text, what);
    };
    put("_markets.csv", information_csv(info), "market_id,player,p,v,raw,clipped,corner");
    put("_summary.csv", information_summary_csv(info), "player,n,mean,median,min,max,sd,corners,raw_min");
    PlotPayload p;
    p.histogram = info.histogram;
    put("_histogram.csv", emit_plot_data(PlotKind::Histogram, p), "player,bin_lo,bin_hi,count");
    m.write(prefix + ".manifest.json");
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entry games with costly information acquisition: solve, simulate, estimate"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: RIGAME_THREADS, else all cores)")
      ->check(CLI::NonNegativeNumber);
  std::vector<std::string> args(argv, argv + argc);

  int code = 0;
  auto run = [&](std::function<void(Manifest&)> body) {
    Manifest m(app.get_subcommands().front()->get_name(), args);
    m.threads = resolve_threads(threads);
    try {
      body(m);
    } catch (const std::exception& e) {
      code = exit_code(e);
      report_error(error_kind(e), e.what(), code);
    }
  };

  SolveCmd solve;
  CurvesCmd curves;
  SimulateCmd simulate;
  FixtureCmd fixture;
  McCmd mc;
  EstimateCmd estimate;
  IdentifyCmd identify;
  InfoCmd info;
  solve.add(app, run);
  curves.add(app, run);
  simulate.add(app, run);
  mc.add(app, run);
  estimate.add(app, run);
  identify.add(app, run);
  info.add(app, run);
  fixture.add(app, run);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\nRun with --help for usage.\n";
    report_error("usage", e.what(), 2);
    return 2;
  }
  return code;
}
