#include "skylite/telemetry/live.hpp"

#include <cmath>
#include <ctime>
#include <thread>

#include "skylite/core/error.hpp"
#include "skylite/world/json_io.hpp"
#include "skylite/world/safety.hpp"
#include "skylite/world/step.hpp"

namespace skylite::telemetry {

namespace {

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

std::string default_run_id() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "run-%Y%m%d-%H%M%S", &tm);
  return buf;
}

std::vector<AgentId> agent_ids(const WorldState& w) {
  std::vector<AgentId> ids;
  for (const AgentState& a : w.agents) ids.push_back(a.agent_id);
  return ids;
}

}  // namespace

nlohmann::json agent_state_payload(const WorldState& w, const AgentState& a, const ScenarioSpec& spec) {
  const Point2 p = agent_position(a, spec.graph);
  double ttc = kInfiniteTtc;
  try {
    ttc = leading_ttc(w, a.agent_id, spec.graph);
  } catch (const Error&) {
  }
  bool collided = false;
  for (const auto& [lo, hi] : w.collisions_this_tick) collided = collided || lo == a.agent_id || hi == a.agent_id;
  return {{"agent_id", a.agent_id}, {"kind", to_string(a.kind)}, {"x", p.x},  {"y", p.y},
          {"heading", a.heading},   {"lane", a.lane_id},         {"s", a.s},  {"d", a.d},
          {"v", a.v},               {"a", a.a},                  {"ttc", finite_or_null(ttc)},
          {"collided", collided}};
}

struct LiveHost::Impl {
  Impl(ScenarioSpec s, LiveConfig c)
      : cfg(std::move(c)), session(std::move(s), cfg.host), desk(cfg.token), recorder(cfg.runs_dir) {
    cfg.gateway.runs_dir = cfg.runs_dir;
    if (cfg.run_id.empty()) cfg.run_id = default_run_id();
  }

  void publish_scenario() {
    const ScenarioSpec& spec = session.spec();
    bus.publish(EventKind::ScenarioLoaded, session.world().tick,
                {{"name", spec.name}, {"scenario", to_json(spec)}, {"config", cfg.config_echo}});
    desk.set_agents(agent_ids(session.world()));
    publish_states();
  }

  void publish_states() {
    if (!cfg.agent_state_events) return;
    const WorldState& w = session.world();
    for (const AgentState& a : w.agents) bus.publish(EventKind::AgentState, w.tick, agent_state_payload(w, a, session.spec()));
  }

  void publish_metric() {
    const WorldState& w = session.world();
    const ScenarioSpec& spec = session.spec();
    double min_ttc = kInfiniteTtc, speed = 0.0;
    for (const AgentState& a : w.agents) {
      speed += a.v;
      try {
        min_ttc = std::min(min_ttc, leading_ttc(w, a.agent_id, spec.graph));
      } catch (const Error&) {
      }
    }
    bus.publish(EventKind::Metric, w.tick,
                {{"min_ttc", finite_or_null(min_ttc)},
                 {"mean_speed", w.agents.empty() ? 0.0 : speed / static_cast<double>(w.agents.size())},
                 {"collisions", collisions},
                 {"human_actions", human_actions},
                 {"clients", session.live_clients()}});
  }

  void apply(const DrainResult& d) {
    const Tick t = session.world().tick;
    for (const TakeoverChange& c : d.takeovers)
      bus.publish(c.begin ? EventKind::TakeoverBegin : EventKind::TakeoverEnd, t, {{"agent_id", c.agent_id}});
    if (d.load_scenario) {
      std::optional<ScenarioSpec> next;
      if (cfg.resolve_scenario) next = cfg.resolve_scenario(*d.load_scenario);
      if (!next) {
        bus.publish(EventKind::Metric, t, {{"error", "unknown scenario " + *d.load_scenario}});
        return;
      }
      session.load_scenario(std::move(*next));
      publish_scenario();
    }
  }

  LiveConfig cfg;
  net::HostSession session;
  EventBus bus;
  ControlDesk desk;
  RunRecorder recorder;
  std::unique_ptr<Gateway> gateway;
  std::uint64_t collisions = 0;
  std::uint64_t human_actions = 0;
};

LiveHost::LiveHost(ScenarioSpec spec, LiveConfig cfg) : impl_(std::make_unique<Impl>(std::move(spec), std::move(cfg))) {
  Impl& m = *impl_;
  m.session.set_action_override(
      [&m](const WorldState&, const ActionCommand& base) { return m.desk.human_action(base); });
  m.session.set_event_handler([&m](const net::SessionEvent& e) {
    if (e.kind == "desync")
      m.bus.publish(EventKind::Desync, e.tick, {{"client_id", e.client_id}, {"detail", e.detail}});
  });
  if (m.cfg.resolve_scenario)
    m.desk.set_scenario_check([&m](const std::string& n) { return m.cfg.resolve_scenario(n).has_value(); });
  m.bus.add_sink([&m](const TelemetryEvent& e) { m.recorder.record(e); });
}

LiveHost::~LiveHost() {
  try {
    close("host shutting down");
  } catch (...) {
  }
}

void LiveHost::start() {
  Impl& m = *impl_;
  m.recorder.begin(m.cfg.run_id, {{"scenario", m.session.spec().name}, {"config", m.cfg.config_echo}});
  m.session.start();
  if (m.cfg.serve_gateway) {
    m.gateway = std::make_unique<Gateway>(m.bus, m.desk, m.cfg.gateway);
    m.gateway->start();
  }
  m.publish_scenario();
}

void LiveHost::wait_for_clients() { impl_->session.wait_for_clients(); }

std::optional<net::TickCommit> LiveHost::tick() {
  Impl& m = *impl_;
  m.apply(m.desk.drain());
  if (m.desk.paused()) {
    m.session.poll();
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    return std::nullopt;
  }
  const net::TickCommit c = m.session.advance();
  nlohmann::json acts = nlohmann::json::array();
  for (const ActionCommand& a : c.actions) {
    acts.push_back(to_json(a));
    if (a.source == ActionSource::Human) ++m.human_actions;
  }
  m.collisions += m.session.world().collisions_this_tick.size();
  m.bus.publish(EventKind::TickCommit, c.tick, {{"actions", acts}, {"digest", digest_hex(c.digest)}});
  m.publish_states();
  if (m.cfg.metric_interval > 0 && m.session.world().tick % m.cfg.metric_interval == 0) m.publish_metric();
  return c;
}

RunSummary LiveHost::run(Tick ticks, std::chrono::milliseconds pace) {
  RunSummary s;
  auto next = std::chrono::steady_clock::now();
  while (s.ticks < ticks) {
    if (auto c = tick()) {
      ++s.ticks;
      s.final_digest = c->digest;
      if (pace.count() > 0) {
        next += pace;
        std::this_thread::sleep_until(next);
      }
    }
  }
  s.run_file = run_file();
  s.events = impl_->bus.last_seq();
  return s;
}

void LiveHost::close(const std::string& reason) {
  Impl& m = *impl_;
  if (m.gateway) m.gateway->stop();
  m.session.close(reason);
  m.recorder.end();
}

EventBus& LiveHost::bus() { return impl_->bus; }
ControlDesk& LiveHost::desk() { return impl_->desk; }
net::HostSession& LiveHost::session() { return impl_->session; }
std::uint16_t LiveHost::gateway_port() const { return impl_->gateway ? impl_->gateway->port() : 0; }
std::filesystem::path LiveHost::run_file() const { return run_path(impl_->cfg.runs_dir, impl_->cfg.run_id); }

}  // namespace skylite::telemetry
