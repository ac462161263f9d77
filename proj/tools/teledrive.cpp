// teledrive: command-line front end.
// Exit codes: 0 ok, 1 configuration or usage error, 2 run aborted (or replay mismatch).

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "teledrive/teledrive.hpp"
#include "teledrive/session/gateway.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace teledrive;
using namespace teledrive::session;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kAborted = 2;

/// A config argument is a file path or the name of a bundled config.
fs::path resolve_config(const std::string& arg) {
  if (fs::exists(arg)) return arg;
  for (const fs::path& p : {data_dir() / "configs" / arg, data_dir() / "configs" / (arg + ".json")})
    if (fs::exists(p)) return p;
  throw ConfigError("config not found: " + arg);
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> lag_threshold;
  std::optional<double> max_duration;
  std::optional<std::string> pilot;
};

SessionConfig load(const std::string& arg, const Overrides& o) {
  SessionConfig cfg = load_config(resolve_config(arg));
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.net.link.seed = *o.seed;
  }
  if (o.lag_threshold) {
    if (!(*o.lag_threshold > 0)) throw ConfigError("lag threshold must be positive");
    cfg.net.lag_threshold = *o.lag_threshold;
  }
  if (o.max_duration) {
    if (!(*o.max_duration > 0)) throw ConfigError("max duration must be positive");
    cfg.max_duration = *o.max_duration;
  }
  if (o.pilot) cfg.pilot.kind = pilot_kind_from_string(*o.pilot);
  return cfg;
}

void add_overrides(CLI::App* app, Overrides& o) {
  app->add_option("--seed", o.seed, "Override the session seed");
  app->add_option("--lag-threshold", o.lag_threshold, "Supervisor lag threshold (ms)");
  app->add_option("--max-duration", o.max_duration, "Run time limit (ms)");
  app->add_option("--pilot", o.pilot, "Pilot kind: ui, scripted, decoder");
}

std::optional<decoder::DecoderModels> models_from(const std::string& path) {
  if (path.empty()) return std::nullopt;
  try {
    return decoder::load_models(path);
  } catch (const decoder::DecodeError& e) {
    throw ConfigError(e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

// ---- simulate / rt-task ----------------------------------------------------

struct RunArgs {
  std::string config;
  std::string out;
  std::string report;
  std::string models;
  std::string save_models;
  Overrides o;
};

int run_cmd(const RunArgs& a, bool rt_only) {
  SessionConfig cfg = load(a.config, a.o);
  if (rt_only && is_driving(cfg.task)) throw ConfigError("rt-task needs simple_rt or braking_rt, got " + std::string(to_string(cfg.task)));
  if (!rt_only && !is_driving(cfg.task)) throw ConfigError("simulate runs driving tasks; use rt-task for " + std::string(to_string(cfg.task)));
  auto models = models_from(a.models);
  if (!a.save_models.empty()) {
    if (cfg.pilot.kind != PilotKind::Decoder) throw ConfigError("--save-models needs a decoder pilot");
    if (!models) models = calibrate_decoder(cfg.pilot.decoder);
    decoder::save_models(*models, a.save_models);
  }
  const RunOutcome r = run_session(cfg, std::move(models));
  if (!a.out.empty()) save_record(r.record, a.out);
  if (!a.report.empty()) write_text(a.report, r.report.dump(2) + "\n");
  std::cout << r.report.dump() << "\n";
  return r.aborted ? kAborted : kOk;
}

// ---- score -----------------------------------------------------------------

struct ScoreArgs {
  std::vector<std::string> records;
  std::string sheets;
};

InfractionCounts counts_from(const json& j) {
  InfractionCounts c;
  c.completion = j.value("completion", 1.0);
  c.collisions = j.value("collisions", 0.0);
  c.lane_deviations = j.value("lane_deviations", 0.0);
  c.signal_violations = j.value("signal_violations", 0.0);
  return c;
}

int score_cmd(const ScoreArgs& a) {
  if (a.records.empty() == a.sheets.empty()) throw ConfigError("score takes either run records or --sheets");
  if (!a.sheets.empty()) {
    // {"mode": "obstacle", "sheets": [{"evaluator": "A", "runs": [{counts}...]}]}
    const json doc = read_json(a.sheets);
    std::vector<EvaluatorSheet> sheets;
    TaskMode mode;
    try {
      mode = task_mode_from_string(doc.at("mode").get<std::string>());
      for (const auto& s : doc.at("sheets")) {
        EvaluatorSheet e{s.at("evaluator").get<std::string>(), {}, s.value("notes", "")};
        for (const auto& r : s.at("runs")) e.runs.push_back(counts_from(r));
        sheets.push_back(std::move(e));
      }
    } catch (const std::exception& e) {
      throw ConfigError(std::string("evaluator sheets: ") + e.what());
    }
    ScoreReport rep;
    try {
      rep = aggregate_evaluators(sheets, mode);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    json runs = json::array();
    for (const auto& r : rep.runs) runs.push_back({{"per_evaluator", r.per_evaluator}, {"mean", r.mean}, {"sd", r.sd}});
    std::cout << json{{"mode", to_string(rep.mode)}, {"runs", runs}}.dump() << "\n";
    return kOk;
  }
  int rc = kOk;
  for (const auto& path : a.records) {
    LoadedRecord loaded;
    try {
      loaded = load_record(path);
    } catch (const RecordError& e) {
      throw ConfigError(e.what());
    }
    const ReplayResult r = replay(loaded);
    json out{{"record", path}, {"report", r.report}, {"replay_match", r.match}, {"partial", r.partial}};
    std::cout << out.dump() << "\n";
    if (!r.match || r.partial || r.report.value("aborted", false)) rc = kAborted;
  }
  return rc;
}

// ---- stats -----------------------------------------------------------------

struct StatsArgs {
  std::string input;
  double alpha{0.05};
  std::string tail{"two"};
  bool as_json{false};
  std::optional<double> effect;
  double power{0.95};
  double dropout{0.25};
  bool no_t_correction{false};
};

std::vector<stats::SampleGroup> groups_from(const json& j) {
  std::vector<stats::SampleGroup> g;
  for (const auto& e : j.at("groups")) {
    stats::SampleGroup s{e.at("label").get<std::string>(), e.at("values").get<std::vector<double>>()};
    if (s.values.size() < 2) throw ConfigError("group '" + s.label + "' needs at least two values");
    g.push_back(std::move(s));
  }
  if (g.size() < 2) throw ConfigError("stats needs at least two groups");
  return g;
}

json metric_stats(const std::string& name, const std::vector<stats::SampleGroup>& groups, const StatsArgs& a,
                  std::ostream& text) {
  using namespace stats;
  json out{{"metric", name}};
  json desc = json::array();
  text << name << "\n";
  for (const auto& g : groups) {
    const double m = mean(g.values), sd = std::sqrt(sample_variance(g.values));
    desc.push_back({{"label", g.label}, {"n", g.values.size()}, {"mean", m}, {"sd", sd}});
    text << "  " << std::left << std::setw(16) << g.label << fixed(m, 3) << " (" << fixed(sd, 3) << ")  n=" << g.values.size()
         << "\n";
  }
  out["groups"] = desc;
  if (groups.size() == 2) {
    const Tail tail = a.tail == "left" ? Tail::Left : a.tail == "right" ? Tail::Right : Tail::Two;
    const TestResult w = welch_ttest(groups[0], groups[1], tail);
    out["welch"] = {{"t", w.statistic}, {"df", w.df1}, {"p", w.p_value}, {"tail", to_string(w.tail)}};
    text << "  Welch t(" << fixed(w.df1, 2) << ") = " << fixed(w.statistic, 4) << ", p = " << fixed(w.p_value, 6)
         << " [" << to_string(w.tail) << "]\n";
  }
  const AnovaTable t = anova_table(groups);
  out["anova"] = {{"F", t.f_test.statistic}, {"df_between", t.f_test.df1}, {"df_within", t.f_test.df2}, {"p", t.f_test.p_value}};
  text << "  ANOVA F(" << t.f_test.df1 << ", " << t.f_test.df2 << ") = " << fixed(t.f_test.statistic, 4)
       << ", p = " << fixed(t.f_test.p_value, 6) << "\n";
  const auto pw = bonferroni_pairwise(groups, a.alpha);
  json pairs = json::array();
  for (const auto& c : pw)
    pairs.push_back({{"a", c.label_i}, {"b", c.label_j}, {"diff", c.mean_difference}, {"t", c.statistic},
                     {"p_raw", c.raw_p}, {"p_adj", c.adjusted_p}, {"significant", c.significant}});
  out["pairwise"] = pairs;

  // Bonferroni-adjusted p grid.
  text << "  adjusted p\n  " << std::setw(16) << "";
  for (const auto& g : groups) text << std::setw(12) << g.label.substr(0, 11);
  text << "\n";
  for (std::size_t i = 0; i < groups.size(); ++i) {
    text << "  " << std::setw(16) << groups[i].label;
    for (std::size_t j = 0; j < groups.size(); ++j) {
      std::string cell = "-";
      for (const auto& c : pw)
        if ((c.i == i && c.j == j) || (c.i == j && c.j == i)) cell = fixed(c.adjusted_p, 4) + (c.significant ? "*" : "");
      text << std::setw(12) << cell;
    }
    text << "\n";
  }
  return out;
}

int stats_cmd(const StatsArgs& a) {
  if (!(a.alpha > 0 && a.alpha < 1)) throw ConfigError("alpha must lie in (0,1)");
  if (a.tail != "two" && a.tail != "left" && a.tail != "right") throw ConfigError("tail must be two, left or right");
  if (a.effect) {
    stats::SampleSize s;
    try {
      s = stats::power_sample_size(*a.effect, a.alpha, a.power, a.dropout, !a.no_t_correction);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    const json out{{"effect", *a.effect}, {"alpha", a.alpha}, {"power", a.power}, {"dropout", a.dropout},
                   {"n_raw", s.raw},      {"per_group", s.per_group}, {"recruit", s.recruit}};
    if (a.as_json) std::cout << out.dump() << "\n";
    else std::cout << "per group n = " << s.per_group << " (raw " << fixed(s.raw, 3) << "), recruit " << s.recruit << "\n";
    if (a.input.empty()) return kOk;
  }
  if (a.input.empty()) throw ConfigError("stats needs --input or --effect");
  // {"metrics": [{"name": "score", "groups": [{"label", "values"}]}]} or a single
  // {"name", "groups"} object.
  const json doc = read_json(a.input);
  std::vector<json> metrics;
  try {
    if (doc.contains("metrics")) for (const auto& m : doc.at("metrics")) metrics.push_back(m);
    else metrics.push_back(doc);
    json all = json::array();
    std::ostringstream text;
    for (const auto& m : metrics) all.push_back(metric_stats(m.value("name", "metric"), groups_from(m), a, text));
    if (a.as_json) std::cout << all.dump() << "\n";
    else std::cout << text.str();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("stats input: ") + e.what());
  }
  return kOk;
}

// ---- replay ----------------------------------------------------------------

int replay_cmd(const std::string& path, bool quiet) {
  LoadedRecord loaded;
  try {
    loaded = load_record(path);
  } catch (const RecordError& e) {
    throw ConfigError(e.what());
  }
  ReplayResult r;
  try {
    r = replay(loaded);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("record header: ") + e.what());
  }
  json out{{"match", r.match}, {"partial", r.partial}, {"mismatches", r.mismatches}, {"report", r.report}};
  if (!quiet) std::cout << out.dump() << "\n";
  return r.match && !r.partial ? kOk : kAborted;
}

// ---- remote ----------------------------------------------------------------

struct RemoteArgs {
  std::string config;
  std::string models;
  std::optional<std::string> host;
  std::optional<int> control_port, state_port;
  double time_scale{1.0};
  int timeout_ms{10000};
  Overrides o;
};

RemoteOptions remote_options(const RemoteArgs& a, const SessionConfig& cfg) {
  RemoteOptions r;
  r.host = a.host.value_or(cfg.net.host);
  r.control_port = a.control_port.value_or(cfg.net.control_port);
  r.state_port = a.state_port.value_or(cfg.net.state_port);
  r.time_scale = a.time_scale;
  r.connect_timeout_ms = a.timeout_ms;
  r.log = &std::cerr;
  return r;
}

int serve_vehicle_cmd(const RemoteArgs& a) {
  const SessionConfig cfg = load(a.config, a.o);
  if (!is_driving(cfg.task)) throw ConfigError("serve-vehicle needs a driving task");
  const json report = serve_vehicle(cfg, load_world_document(cfg.world), remote_options(a, cfg));
  std::cout << report.dump() << "\n";
  return report.value("aborted", false) || report.value("pilot_hung_up", false) ? kAborted : kOk;
}

int pilot_cmd(const RemoteArgs& a) {
  const SessionConfig cfg = load(a.config, a.o);
  if (!is_driving(cfg.task)) throw ConfigError("pilot needs a driving task");
  const json summary = run_pilot(cfg, load_world_document(cfg.world), models_from(a.models), remote_options(a, cfg));
  std::cout << summary.dump() << "\n";
  return kOk;
}

// ---- ui-gateway ------------------------------------------------------------

volatile std::sig_atomic_t g_interrupted = 0;

struct GatewayArgs {
  std::string config;
  std::string host{"127.0.0.1"};
  int port{8080};
  std::string web_root;
  std::string record_out;
  double time_scale{1.0};
  bool keep_open{false};
  Overrides o;
};

int gateway_cmd(const GatewayArgs& a) {
  SessionConfig cfg = load(a.config, a.o);
  if (!is_driving(cfg.task)) throw ConfigError("ui-gateway needs a driving task");
  cfg.pilot.kind = PilotKind::Ui;
  GatewayOptions opt{a.host, a.port, a.web_root, a.time_scale, a.record_out};
  GatewayServer server(cfg, load_world_document(cfg.world), opt);
  server.keep_open(a.keep_open);
  const int port = server.start();
  std::cerr << "ui-gateway: http://" << a.host << ":" << port << "/ (schema " << kGatewaySchema << ")" << std::endl;
  std::signal(SIGINT, [](int) { g_interrupted = 1; });
  std::signal(SIGTERM, [](int) { g_interrupted = 1; });
  std::thread watcher([&] {
    while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
  });
  server.wait();
  g_interrupted = 1;
  watcher.join();
  server.stop();
  const json report = server.with_session([](DrivingSession& s) { return s.report(); });
  std::cout << report.dump() << "\n";
  return report.value("aborted", false) ? kAborted : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"teledrive: BCI teledriving simulation, link and analysis tools"};
  app.require_subcommand(1);

  RunArgs sim, rt;
  auto* simulate = app.add_subcommand("simulate", "Run a driving session headless in simulated time");
  for (auto [cmd, args] : {std::pair{simulate, &sim}, std::pair{app.add_subcommand("rt-task", "Run a reaction-time task"), &rt}}) {
    cmd->add_option("-c,--config", args->config, "Config file or bundled config name")->required();
    cmd->add_option("-o,--out", args->out, "Write the run record (JSON lines)");
    cmd->add_option("--report", args->report, "Write the final report");
    cmd->add_option("--models", args->models, "Decoder models file for the decoder pilot");
    cmd->add_option("--save-models", args->save_models, "Calibrate (or load) decoder models and save them");
    add_overrides(cmd, args->o);
  }
  auto* rt_task = app.get_subcommand("rt-task");

  RemoteArgs veh_args, pilot_args;
  auto* serve = app.add_subcommand("serve-vehicle", "Run the vehicle end of the link over TCP/UDP");
  auto* pilot = app.add_subcommand("pilot", "Run the operator end of the link over TCP/UDP");
  for (auto [cmd, args] : {std::pair{serve, &veh_args}, std::pair{pilot, &pilot_args}}) {
    cmd->add_option("-c,--config", args->config, "Config file or bundled config name")->required();
    cmd->add_option("--host", args->host, "IPv4 address (default from config)");
    cmd->add_option("--control-port", args->control_port, "TCP control port");
    cmd->add_option("--state-port", args->state_port, "UDP state/clock port");
    cmd->add_option("--time-scale", args->time_scale, "Simulated ms per wall ms")->check(CLI::PositiveNumber);
    cmd->add_option("--timeout", args->timeout_ms, "Connect timeout (ms)");
    add_overrides(cmd, args->o);
  }
  pilot->add_option("--models", pilot_args.models, "Decoder models file");

  ScoreArgs score_args;
  auto* score = app.add_subcommand("score", "Score run records or aggregate evaluator sheets");
  score->add_option("records", score_args.records, "Run record files");
  score->add_option("--sheets", score_args.sheets, "Evaluator sheets (JSON)");

  StatsArgs stats_args;
  auto* stats_cmd_app = app.add_subcommand("stats", "Group statistics: Welch t, ANOVA, Bonferroni pairwise, power");
  stats_cmd_app->add_option("-i,--input", stats_args.input, "Grouped metrics (JSON)");
  stats_cmd_app->add_option("--alpha", stats_args.alpha, "Significance level");
  stats_cmd_app->add_option("--tail", stats_args.tail, "Welch tail: two, left, right");
  stats_cmd_app->add_flag("--json", stats_args.as_json, "Machine-readable output");
  stats_cmd_app->add_option("--effect", stats_args.effect, "Power analysis: standardized effect size");
  stats_cmd_app->add_option("--power", stats_args.power, "Power analysis: target power");
  stats_cmd_app->add_option("--dropout", stats_args.dropout, "Power analysis: dropout fraction");
  stats_cmd_app->add_flag("--no-t-correction", stats_args.no_t_correction, "Plain normal approximation");

  std::string replay_path;
  bool replay_quiet = false;
  auto* replay_app = app.add_subcommand("replay", "Recompute a run record and check it");
  replay_app->add_option("record", replay_path, "Run record file")->required();
  replay_app->add_flag("-q,--quiet", replay_quiet, "Exit code only");

  GatewayArgs gw;
  auto* gateway = app.add_subcommand("ui-gateway", "Serve a live session to the browser operator ui");
  gateway->add_option("-c,--config", gw.config, "Config file or bundled config name")->required();
  gateway->add_option("--host", gw.host, "Bind address");
  gateway->add_option("--port", gw.port, "HTTP port (0 = any)");
  gateway->add_option("--web-root", gw.web_root, "Static ui bundle directory");
  gateway->add_option("--record-out", gw.record_out, "Write the run record on exit");
  gateway->add_option("--time-scale", gw.time_scale, "Simulated ms per wall ms")->check(CLI::PositiveNumber);
  gateway->add_flag("--keep-open", gw.keep_open, "Keep serving after the run ends (until interrupted)");
  add_overrides(gateway, gw.o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*simulate) return run_cmd(sim, false);
    if (*rt_task) return run_cmd(rt, true);
    if (*serve) return serve_vehicle_cmd(veh_args);
    if (*pilot) return pilot_cmd(pilot_args);
    if (*score) return score_cmd(score_args);
    if (*stats_cmd_app) return stats_cmd(stats_args);
    if (*replay_app) return replay_cmd(replay_path, replay_quiet);
    if (*gateway) return gateway_cmd(gw);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const GatewayError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const link::SocketError& e) {
    std::cerr << "run aborted: " << e.what() << "\n";
    return kAborted;
  } catch (const std::exception& e) {
    std::cerr << "run aborted: " << e.what() << "\n";
    return kAborted;
  }
  return kConfigError;
}
