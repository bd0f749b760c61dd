#include <cmath>
#include <limits>
#include <thread>

#include "link.hpp"
#include "skylite/net/session.hpp"
#include "skylite/world/step.hpp"

namespace skylite::net {

using namespace detail;

std::string_view to_string(ClientExitReason r) {
  switch (r) {
    case ClientExitReason::Bye: return "bye";
    case ClientExitReason::Desync: return "desync";
    case ClientExitReason::ChannelClosed: return "channel_closed";
    case ClientExitReason::Timeout: return "timeout";
    case ClientExitReason::Stopped: return "stopped";
  }
  return "?";
}

struct ClientSession::Impl {
  ClientConfig cfg;
  asio::io_context io;
  std::shared_ptr<Link> control;
  std::shared_ptr<Link> telemetry;
  std::uint32_t id = 0;
  std::vector<AgentId> agents;
  ScenarioSpec spec;
  WorldState world;
  ControllerLookup lookup;
  std::function<void(const TickCommit&, const WorldState&)> on_commit;

  explicit Impl(ClientConfig c) : cfg(std::move(c)) {}

  std::shared_ptr<Link> dial(std::uint16_t port) {
    tcp::resolver resolver(io);
    const auto deadline = std::chrono::steady_clock::now() + cfg.connect_timeout;
    std::string last_error;
    while (std::chrono::steady_clock::now() < deadline) {
      boost::system::error_code ec;
      const auto eps = resolver.resolve(cfg.host, std::to_string(port), ec);
      if (!ec) {
        tcp::socket sock(io);
        asio::connect(sock, eps, ec);
        if (!ec) {
          auto link = std::make_shared<Link>(std::move(sock));
          link->start();
          return link;
        }
      }
      last_error = ec.message();
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    throw Error(ErrorCode::ChannelClosed,
                "cannot reach " + cfg.host + ":" + std::to_string(port) + ": " + last_error);
  }

  Message expect(Link& link, const char* what) {
    const auto deadline = std::chrono::steady_clock::now() + cfg.connect_timeout;
    pump_until(io, deadline, [&] { return link.has_message() || link.closed(); });
    if (!link.has_message()) {
      if (link.closed()) throw Error(ErrorCode::ChannelClosed, std::string("waiting for ") + what + ": " + link.close_reason());
      throw Error(ErrorCode::ChannelClosed, std::string("timed out waiting for ") + what);
    }
    Message m = link.pop();
    if (auto* b = std::get_if<Bye>(&m.body)) {
      const bool version = b->reason.rfind("VersionMismatch", 0) == 0;
      throw Error(version ? ErrorCode::VersionMismatch : ErrorCode::ChannelClosed, "host said bye: " + b->reason);
    }
    return m;
  }

  void submit() {
    for (AgentId aid : agents) {
      const InitialAgent* ia = spec.find_agent(aid);
      if (!ia || !world.find(aid)) continue;
      Controller* ctl = lookup ? lookup(*ia) : nullptr;
      control->send(InputSubmit{world.tick, local_action(world, *ia, spec, ctl)});
    }
  }

  ClientExit halt(ClientExitReason r, std::string detail) {
    flush(io, {control, telemetry}, std::chrono::milliseconds(500));
    control->close(detail);
    if (telemetry) telemetry->close(detail);
    return ClientExit{r, world.tick, std::move(detail)};
  }
};

ClientSession::ClientSession(ClientConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}
ClientSession::~ClientSession() = default;

void ClientSession::connect() {
  Impl& s = *impl_;
  s.control = s.dial(s.cfg.control_port);
  s.control->send(Hello{kProtocolVersion, s.cfg.name});
  Message m = s.expect(*s.control, "Welcome");
  auto* w = std::get_if<Welcome>(&m.body);
  if (!w) throw Error(ErrorCode::MalformedFrame, "expected Welcome, got " + std::string(tag_name(tag_of(m.body))));
  s.id = w->client_id;
  s.agents = w->agent_ids;
  m = s.expect(*s.control, "LoadScenario");
  auto* ls = std::get_if<LoadScenario>(&m.body);
  if (!ls) throw Error(ErrorCode::MalformedFrame, "expected LoadScenario, got " + std::string(tag_name(tag_of(m.body))));
  s.spec = std::move(ls->spec);

  s.telemetry = s.dial(s.cfg.telemetry_port);
  s.telemetry->send(Hello{kProtocolVersion, "telemetry/" + std::to_string(s.id)});
  m = s.expect(*s.telemetry, "Snapshot");
  auto* snap = std::get_if<Snapshot>(&m.body);
  if (!snap) throw Error(ErrorCode::MalformedFrame, "expected Snapshot, got " + std::string(tag_name(tag_of(m.body))));
  s.world = std::move(snap->world);
  s.control->send(Heartbeat{s.world.tick});
  s.submit();
  pump_ready(s.io);
}

ClientExit ClientSession::run(std::optional<std::uint64_t> max_commits) {
  Impl& s = *impl_;
  std::uint64_t commits = 0;
  for (;;) {
    const auto deadline = std::chrono::steady_clock::now() + s.cfg.idle_timeout;
    const bool ready = pump_until(s.io, deadline, [&] {
      return s.control->has_message() || s.telemetry->has_message() || s.control->closed();
    });
    if (!ready) return s.halt(ClientExitReason::Timeout, "no traffic from host");

    while (s.telemetry->has_message()) {
      Message m = s.telemetry->pop();
      if (auto* snap = std::get_if<Snapshot>(&m.body)) {
        s.world = std::move(snap->world);
        s.submit();
      }
    }
    while (s.control->has_message()) {
      Message m = s.control->pop();
      if (auto* c = std::get_if<TickCommit>(&m.body)) {
        if (c->tick < s.world.tick) continue;  // predates our snapshot
        if (c->tick > s.world.tick) {
          const Tick t = c->tick;
          s.control->send(Desync{t, c->digest, state_digest(s.world)});
          return s.halt(ClientExitReason::Desync, "commit for tick " + std::to_string(t) + " while at " +
                                                      std::to_string(s.world.tick));
        }
        try {
          s.world = step(s.world, c->actions, step_context(s.spec));
        } catch (const Error& e) {
          s.control->send(Desync{c->tick, c->digest, 0});
          return s.halt(ClientExitReason::Desync, std::string("commit rejected: ") + e.what());
        }
        if (s.cfg.corrupt_at_tick && *s.cfg.corrupt_at_tick == c->tick && !s.world.agents.empty()) {
          double& v = s.world.agents.front().v;
          v = std::nextafter(v, std::numeric_limits<double>::infinity());
        }
        const std::uint64_t got = state_digest(s.world);
        if (got != c->digest) {
          s.control->send(Desync{c->tick, c->digest, got});
          return s.halt(ClientExitReason::Desync, "digest mismatch at tick " + std::to_string(c->tick));
        }
        if (s.on_commit) s.on_commit(*c, s.world);
        ++commits;
        if (max_commits && commits >= *max_commits) return s.halt(ClientExitReason::Stopped, "commit limit");
        if (s.cfg.heartbeat_interval > 0 && s.world.tick % s.cfg.heartbeat_interval == 0)
          s.control->send(Heartbeat{s.world.tick});
        s.submit();
      } else if (auto* w = std::get_if<Welcome>(&m.body)) {
        s.id = w->client_id;
        s.agents = w->agent_ids;
      } else if (auto* ls = std::get_if<LoadScenario>(&m.body)) {
        s.spec = std::move(ls->spec);
        s.world = initial_world(s.spec);
      } else if (auto* snap = std::get_if<Snapshot>(&m.body)) {
        s.world = std::move(snap->world);
        s.control->send(Heartbeat{s.world.tick});
        s.submit();
      } else if (auto* b = std::get_if<Bye>(&m.body)) {
        return s.halt(ClientExitReason::Bye, b->reason);
      }
    }
    if (!s.control->has_message() && s.control->closed())
      return ClientExit{ClientExitReason::ChannelClosed, s.world.tick, s.control->close_reason()};
    pump_ready(s.io);
  }
}

void ClientSession::set_controllers(ControllerLookup lookup) { impl_->lookup = std::move(lookup); }
void ClientSession::set_commit_handler(std::function<void(const TickCommit&, const WorldState&)> h) {
  impl_->on_commit = std::move(h);
}

std::uint32_t ClientSession::client_id() const { return impl_->id; }
const std::vector<AgentId>& ClientSession::agents() const { return impl_->agents; }
const WorldState& ClientSession::world() const { return impl_->world; }
const ScenarioSpec& ClientSession::spec() const { return impl_->spec; }

}  // namespace skylite::net
