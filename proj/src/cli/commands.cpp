#include "skylite/cli/commands.hpp"

#include <chrono>
#include <iostream>
#include <sstream>
#include <thread>

#include "skylite/behavior/controller.hpp"
#include "skylite/core/error.hpp"
#include "skylite/curriculum/curriculum.hpp"
#include "skylite/haim/trainer.hpp"
#include "skylite/net/protocol.hpp"
#include "skylite/net/session.hpp"
#include "skylite/replay/replay.hpp"
#include "skylite/telemetry/client.hpp"
#include "skylite/telemetry/live.hpp"
#include "skylite/world/json_io.hpp"
#include "skylite/world/metrics.hpp"

namespace skylite::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace std::chrono_literals;

namespace {

ScenarioSpec scenario_from(const CliConfig& cfg) {
  const auto path = cfg.maybe("spec");
  if (!path) throw Error(ErrorCode::ConfigError, "--spec is required");
  ScenarioSpec spec = load_scenario(*path);
  if (auto seed = cfg.maybe_int("seed")) spec.seed = static_cast<std::uint64_t>(*seed);
  return spec;
}

void emit(std::ostream& out, const json& j) { out << j.dump() << std::endl; }

}  // namespace

json error_json(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return {{"error", to_string(err->code())}, {"message", e.what()}};
  return {{"error", "Internal"}, {"message", e.what()}};
}

int run_host(const CliConfig& cfg, Streams io) {
  ScenarioSpec spec = scenario_from(cfg);
  const fs::path spec_dir = fs::path(cfg.get("spec")).parent_path();
  const Tick ticks = cfg.maybe_int("ticks").value_or(spec.max_ticks);

  telemetry::LiveConfig lc;
  lc.host.bind_address = cfg.get("bind");
  lc.host.control_port = cfg.get_port("control_port");
  lc.host.telemetry_port = cfg.get_port("telemetry_port");
  lc.host.deadline = std::chrono::milliseconds(cfg.get_int("deadline_ms"));
  lc.host.join_timeout = std::chrono::milliseconds(cfg.get_int("join_timeout_ms"));
  lc.host.wait_clients = static_cast<int>(cfg.get_int("wait_clients"));
  lc.serve_gateway = !cfg.get_bool("headless");
  lc.gateway.bind_address = cfg.get("bind");
  lc.gateway.port = cfg.get_port("gateway_port");
  lc.runs_dir = cfg.maybe("out").value_or("runs");
  lc.run_id = cfg.get("run_id");
  lc.token = cfg.get("token");
  lc.config_echo = cfg.to_json();
  lc.resolve_scenario = [spec_dir](const std::string& name) -> std::optional<ScenarioSpec> {
    if (!telemetry::valid_run_id(name)) return std::nullopt;
    const fs::path p = spec_dir / (name + ".json");
    if (!fs::exists(p)) return std::nullopt;
    return load_scenario(p);
  };

  telemetry::LiveHost host(std::move(spec), lc);
  host.start();
  emit(io.out, {{"event", "listening"},
                {"control_port", host.session().control_port()},
                {"telemetry_port", host.session().telemetry_port()},
                {"gateway_port", host.gateway_port()},
                {"run_file", host.run_file().string()}});
  host.wait_for_clients();
  const auto t0 = std::chrono::steady_clock::now();
  const telemetry::RunSummary s = host.run(ticks, std::chrono::milliseconds(cfg.get_int("pace_ms")));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  host.close();
  emit(io.out, {{"event", "finished"},
                {"ticks", s.ticks},
                {"final_digest", telemetry::digest_hex(s.final_digest)},
                {"run_file", s.run_file.string()},
                {"events", s.events},
                {"ticks_per_second", secs > 0 ? static_cast<double>(s.ticks) / secs : 0.0}});
  return 0;
}

json parse_human_line(const std::string& line, const std::string& token) {
  std::istringstream in(line);
  std::string word;
  in >> word;
  auto agent = [&] {
    AgentId id = 0;
    if (!(in >> id)) throw Error(ErrorCode::ParseError, "expected an agent id in '" + line + "'");
    return id;
  };
  json j;
  if (!word.empty() && word[0] == '{') {
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, e.what());
    }
  } else if (word == "start") {
    j = {{"kind", "takeover_start"}, {"agent_id", agent()}};
  } else if (word == "end") {
    j = {{"kind", "takeover_end"}, {"agent_id", agent()}};
  } else if (word == "input") {
    const AgentId id = agent();
    double delta = 0.0;
    if (!(in >> delta)) throw Error(ErrorCode::ParseError, "expected accel_delta in '" + line + "'");
    std::string intent = "keep";
    in >> intent;
    j = {{"kind", "control_input"}, {"agent_id", id}, {"accel_delta", delta}, {"lane_intent", intent}};
  } else if (word == "pause" || word == "resume") {
    j = {{"kind", word}};
  } else if (word == "load") {
    std::string name;
    in >> name;
    j = {{"kind", "load_scenario"}, {"name", name}};
  } else {
    throw Error(ErrorCode::ParseError, "unknown command '" + word + "'");
  }
  j["v"] = telemetry::kSchemaVersion;
  if (!j.contains("token")) j["token"] = token;
  return j;
}

namespace {

// Relays typed commands to the gateway; the human seat without a browser.
int run_human(const CliConfig& cfg, Streams io) {
  telemetry::GatewayClient gw(cfg.get("host"), cfg.get_port("gateway_port"),
                              "/ws?kinds=takeover_begin,takeover_end,desync,scenario_loaded");
  int rejected = 0, ref = 0;
  std::string line;
  while (std::getline(io.in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    if (line.rfind("wait ", 0) == 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(std::stoll(line.substr(5))));
      continue;
    }
    json cmd;
    try {
      cmd = parse_human_line(line, cfg.get("token"));
    } catch (const Error& e) {
      emit(io.err, error_json(e));
      ++rejected;
      continue;
    }
    cmd["ref"] = ++ref;
    gw.send(cmd);
    const auto reply = gw.recv_until(
        [&](const json& j) {
          if (j.value("kind", "") != "ack" && j.value("kind", "") != "error") {
            emit(io.out, j);  // a stream event arriving before the reply
            return false;
          }
          return j.value("ref", 0) == ref;
        },
        10s);
    if (!reply) throw Error(ErrorCode::ChannelClosed, "no reply from gateway");
    emit(reply->at("kind") == "ack" ? io.out : io.err, *reply);
    rejected += reply->at("kind") == "error";
  }
  gw.close();
  return rejected ? 3 : 0;
}

}  // namespace

int run_join(const CliConfig& cfg, Streams io) {
  const std::string role = cfg.get("role");
  if (role == "human") return run_human(cfg, io);
  if (role != "behavior" && role != "policy")
    throw Error(ErrorCode::ConfigError, "role must be behavior, policy or human");

  net::ClientConfig cc;
  cc.host = cfg.get("host");
  cc.control_port = cfg.get_port("control_port");
  cc.telemetry_port = cfg.get_port("telemetry_port");
  cc.name = cfg.get("name");
  net::ClientSession client(cc);
  std::unique_ptr<Controller> ctl;
  if (role == "policy") {
    if (auto p = cfg.maybe("policy")) ctl = std::make_unique<haim::PolicyController>(haim::load_theta(*p));
    else ctl = std::make_unique<IdmController>(ActionSource::Policy);
    client.set_controllers([&ctl](const InitialAgent&) { return ctl.get(); });
  }
  std::uint64_t commits = 0;
  client.set_commit_handler([&](const net::TickCommit&, const WorldState&) { ++commits; });
  client.connect();
  const net::ClientExit exit = client.run();
  json out = {{"event", "finished"},
              {"client_id", client.client_id()},
              {"agents", client.agents()},
              {"exit", net::to_string(exit.reason)},
              {"tick", exit.tick},
              {"commits", commits},
              {"final_digest", telemetry::digest_hex(net::state_digest(client.world()))}};
  emit(io.out, out);
  switch (exit.reason) {
    case net::ClientExitReason::Bye: return 0;
    case net::ClientExitReason::Desync: throw Error(ErrorCode::Desync, exit.detail);
    default: throw Error(ErrorCode::ChannelClosed, std::string(net::to_string(exit.reason)) + ": " + exit.detail);
  }
}

namespace {

// A person at the dashboard as the mentor: takeovers and control inputs
// arrive through the gateway; episodes run at wall-clock speed.
struct LiveMentor {
  telemetry::EventBus bus;
  telemetry::ControlDesk desk;
  telemetry::Gateway gateway;
  std::chrono::steady_clock::time_point next = std::chrono::steady_clock::now();

  LiveMentor(const CliConfig& cfg)
      : desk(cfg.get("token")),
        gateway(bus, desk, {cfg.get("bind"), cfg.get_port("gateway_port"), cfg.maybe("out").value_or("runs")}) {
    gateway.start();
  }

  std::optional<ActionCommand> operator()(const WorldState& w, AgentId ego, const ScenarioSpec& spec) {
    if (w.tick == 0) {
      bus.publish(telemetry::EventKind::ScenarioLoaded, 0, {{"name", spec.name}, {"scenario", to_json(spec)}});
      std::vector<AgentId> ids;
      for (const AgentState& a : w.agents) ids.push_back(a.agent_id);
      desk.set_agents(ids);
    }
    for (const auto& c : desk.drain().takeovers)
      bus.publish(c.begin ? telemetry::EventKind::TakeoverBegin : telemetry::EventKind::TakeoverEnd, w.tick,
                  {{"agent_id", c.agent_id}});
    for (const AgentState& a : w.agents)
      bus.publish(telemetry::EventKind::AgentState, w.tick, telemetry::agent_state_payload(w, a, spec));
    next += std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(spec.dt));
    std::this_thread::sleep_until(next);
    return desk.human_action(idm_action(w, ego, spec, ActionSource::Policy));
  }
};

}  // namespace

int run_train(const CliConfig& cfg, Streams io) {
  ScenarioSpec spec;
  haim::TrainOptions opt;
  if (cfg.maybe("spec")) {
    spec = scenario_from(cfg);
  } else {
    spec = haim::toy_two_vehicle_scenario();
    opt.disturbance = haim::toy_disturbance();
  }
  opt.cfg.episodes = static_cast<int>(cfg.get_int("episodes"));
  opt.seed = static_cast<std::uint64_t>(cfg.maybe_int("seed").value_or(0));

  const std::string mentor_kind = cfg.get("mentor");
  std::shared_ptr<LiveMentor> live;
  haim::Mentor mentor;
  if (mentor_kind == "guardian") {
    mentor = haim::guardian_mentor(opt.cfg.mentor_ttc);
  } else if (mentor_kind == "live") {
    live = std::make_shared<LiveMentor>(cfg);
    emit(io.out, {{"event", "listening"}, {"gateway_port", live->gateway.port()}});
    mentor = [live](const WorldState& w, AgentId ego, const ScenarioSpec& s) { return (*live)(w, ego, s); };
  } else {
    throw Error(ErrorCode::ConfigError, "mentor must be guardian or live");
  }
  opt.on_episode = [&](const haim::EpisodeLog& e) { emit(io.err, haim::to_json(e)); };
  const haim::TrainResult r = haim::train(spec, mentor, opt);

  const fs::path out = cfg.maybe("out").value_or("theta.json");
  haim::save_theta(r.theta, out);
  json episodes = json::array();
  for (const auto& e : r.log) episodes.push_back(haim::to_json(e));
  fs::path log_path = out;
  log_path.replace_extension(".log.json");
  write_json_file({{"config", cfg.to_json()}, {"episodes", episodes}, {"preference_pairs", r.pairs.size()}}, log_path);

  const std::size_t n = r.log.size(), tenth = std::max<std::size_t>(1, n / 10);
  auto mean_iv = [&](std::size_t from) {
    double s = 0;
    for (std::size_t i = from; i < from + tenth && i < n; ++i) s += r.log[i].interventions;
    return s / static_cast<double>(tenth);
  };
  int late_collisions = 0;
  for (std::size_t i = n - tenth; i < n; ++i) late_collisions += r.log[i].collisions;
  emit(io.out, {{"event", "finished"},
                {"episodes", n},
                {"theta", out.string()},
                {"log", log_path.string()},
                {"interventions_first_10pct", n ? mean_iv(0) : 0.0},
                {"interventions_last_10pct", n ? mean_iv(n - tenth) : 0.0},
                {"collisions_last_10pct", late_collisions}});
  return 0;
}

int run_curriculum(const CliConfig& cfg, const std::string& failure_log, Streams io) {
  const auto events = telemetry::load_run(failure_log);
  const telemetry::ReproductionReport rep = telemetry::reproduce(events, true);
  if (!rep.spec) throw Error(ErrorCode::EmptyTrace, "run log has no scenario");
  if (!rep.mismatched_ticks.empty())
    throw Error(ErrorCode::Desync, "run log does not reproduce at tick " + std::to_string(rep.mismatched_ticks.front()));
  const ScenarioSpec& base = *rep.spec;
  const MetricsReport metrics = episode_metrics(rep.trace, base);
  const curriculum::InsightTag insight = curriculum::derive_insight(rep.trace, metrics, base);

  curriculum::Family family = curriculum::family_for(insight.kind);
  std::vector<curriculum::BVCandidate> grid;
  if (auto g = cfg.maybe("grid")) {
    const json j = read_json_file(*g);
    if (j.contains("family")) family = curriculum::family_from_string(j.at("family").get<std::string>());
    if (j.contains("candidates")) {
      const AgentId id = curriculum::free_agent_id(base);
      for (const auto& c : j.at("candidates")) {
        curriculum::CandidateParams p;
        p.trigger_gap = c.at("trigger_gap").get<double>();
        p.lateral_offset = c.value("lateral_offset", 0.0);
        p.decel = c.at("decel").get<double>();
        p.start_tick = c.at("start_tick").get<Tick>();
        grid.push_back(curriculum::realize(family, p, base, id));
      }
    }
  }
  if (grid.empty()) grid = curriculum::make_grid(family, base);

  const curriculum::ControllerRolloutEngine engine;
  const auto result = curriculum::optimize(grid, insight, engine, base, static_cast<int>(cfg.get_int("rollouts")),
                                           static_cast<std::uint64_t>(cfg.maybe_int("seed").value_or(0)),
                                           static_cast<unsigned>(cfg.get_int("threads")));
  const ScenarioSpec emitted = curriculum::emit_scenario(base, result.winner);
  const fs::path out = cfg.maybe("out").value_or("curriculum");
  curriculum::write_batch(out, emitted, insight, grid, result);
  emit(io.out, {{"event", "finished"},
                {"insight", curriculum::to_string(insight.kind)},
                {"note", insight.note},
                {"family", curriculum::to_string(family)},
                {"candidates", grid.size()},
                {"winner_index", result.index},
                {"winner_score", result.scores[result.index].to_json()},
                {"scenario", (out / (emitted.name + ".json")).string()}});
  return 0;
}

int run_replay(const CliConfig& cfg, const std::string& log_path, Streams io) {
  const replay::TrajectoryLog log = replay::ingest(log_path);
  LaneGraph graph;
  std::string map_id;
  if (auto dir = cfg.maybe("graph_dir")) {
    const auto graphs = replay::load_graph_dir(*dir);
    map_id = replay::match_map(log, graphs);
    for (const auto& [id, g] : graphs)
      if (id == map_id) graph = g;
  } else if (auto spec = cfg.maybe("spec")) {
    graph = load_scenario(*spec).graph;
    map_id = graph.name();
  } else {
    throw Error(ErrorCode::ConfigError, "replay needs --graph-dir or --spec");
  }
  const replay::Resampled r = replay::resample(log, cfg.get_double("dt"));
  const replay::ReplayResult rep = replay::replay(r, graph, fs::path(log_path).stem().string());
  const replay::FidelityReport f = replay::fidelity(rep, r);
  json out = {{"event", "finished"}, {"map", map_id}, {"ticks", rep.trace.size()}, {"fidelity", f.to_json()}};
  if (auto o = cfg.maybe("out")) {
    save_scenario(rep.spec, *o);
    out["scenario"] = *o;
  }
  emit(io.out, out);
  return 0;
}

int run_metrics(const CliConfig&, const std::string& run_file, Streams io) {
  const auto events = telemetry::load_run(run_file);
  std::size_t takeovers = 0, human = 0, desyncs = 0;
  for (const auto& e : events) {
    takeovers += e.kind == telemetry::EventKind::TakeoverBegin;
    desyncs += e.kind == telemetry::EventKind::Desync;
    if (e.kind == telemetry::EventKind::TickCommit)
      for (const auto& a : e.payload.at("actions")) human += a.value("source", "") == "human";
  }
  const auto rep = telemetry::reproduce(events, true);
  json out = {{"event", "finished"},
              {"events", events.size()},
              {"first_seq", events.front().seq},
              {"last_seq", events.back().seq},
              {"seq_gapless", telemetry::seq_gaps(events).empty()},
              {"takeovers", takeovers},
              {"human_actions", human},
              {"uncovered_human_actions", telemetry::uncovered_human_actions(events).size()},
              {"desyncs", desyncs},
              {"reproduction", {{"ticks_checked", rep.ticks_checked}, {"ok", rep.ok()}}}};
  if (rep.spec && rep.trace.size() > 1) {
    try {
      out["episode"] = episode_metrics(rep.trace, *rep.spec).to_json();
    } catch (const Error& e) {
      out["episode"] = error_json(e);
    }
  }
  emit(io.out, out);
  return 0;
}

}  // namespace skylite::cli
