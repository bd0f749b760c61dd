#include <algorithm>
#include <cmath>
#include <set>

#include "link.hpp"
#include "skylite/net/session.hpp"
#include "skylite/world/step.hpp"

namespace skylite::net {

using namespace detail;

struct HostSession::Impl {
  struct Client {
    std::uint32_t id = 0;
    std::string name;
    std::shared_ptr<Link> control;
    std::shared_ptr<Link> telemetry;
    std::vector<AgentId> agents;
    bool active = false;
    bool lost = false;
    Tick last_heartbeat = 0;
  };
  struct Pending {
    std::shared_ptr<Link> link;
    bool telemetry = false;
  };

  ScenarioSpec spec;
  HostConfig cfg;
  WorldState world;
  asio::io_context io;
  tcp::acceptor control_acc{io};
  tcp::acceptor telemetry_acc{io};
  std::vector<Pending> pending;
  std::map<std::uint32_t, Client> clients;
  std::uint32_t next_client_id = 1;
  std::map<AgentId, ActionCommand> inputs;  // for world.tick
  ControllerLookup lookup;
  HostSession::ActionOverride action_override;
  std::function<void(const SessionEvent&)> on_event;
  bool closed = false;

  Impl(ScenarioSpec s, HostConfig c) : spec(std::move(s)), cfg(std::move(c)) { world = initial_world(spec); }

  void emit(std::string kind, std::uint32_t client, std::string detail) {
    if (on_event) on_event(SessionEvent{std::move(kind), client, world.tick, std::move(detail)});
  }

  void open(tcp::acceptor& acc, std::uint16_t port) {
    const tcp::endpoint ep(asio::ip::make_address(cfg.bind_address), port);
    acc.open(ep.protocol());
    acc.set_option(tcp::acceptor::reuse_address(true));
    acc.bind(ep);
    acc.listen();
  }

  void accept_on(tcp::acceptor& acc, bool telemetry) {
    acc.async_accept([this, &acc, telemetry](boost::system::error_code ec, tcp::socket sock) {
      if (ec) return;  // acceptor closed
      auto link = std::make_shared<Link>(std::move(sock));
      link->start();
      pending.push_back({link, telemetry});
      accept_on(acc, telemetry);
    });
  }

  std::vector<AgentId> agents_for_slot(int slot) const {
    std::vector<AgentId> out;
    for (const InitialAgent& a : spec.initial_agents)
      if (a.behavior.slot == slot) out.push_back(a.state.agent_id);
    std::sort(out.begin(), out.end());
    return out;
  }

  int expected_clients() const {
    if (cfg.wait_clients >= 0) return cfg.wait_clients;
    std::set<int> slots;
    for (const InitialAgent& a : spec.initial_agents)
      if (a.behavior.slot > 0) slots.insert(a.behavior.slot);
    return static_cast<int>(slots.size());
  }

  void lose(Client& c, const std::string& why) {
    if (c.lost) return;
    c.lost = true;
    c.active = false;
    if (c.control) c.control->close(why);
    if (c.telemetry) c.telemetry->close(why);
    for (AgentId id : c.agents) inputs.erase(id);
    emit("client_lost", c.id, why);
  }

  void on_pending_hello(Pending& p, const Hello& h) {
    if (h.protocol_version != kProtocolVersion) {
      p.link->send(Bye{"VersionMismatch: host speaks protocol " + std::to_string(kProtocolVersion)});
      return;
    }
    if (!p.telemetry) {
      Client c;
      c.id = next_client_id++;
      c.name = h.client_name;
      c.control = p.link;
      c.agents = agents_for_slot(static_cast<int>(c.id));
      c.control->send(Welcome{c.id, c.agents});
      c.control->send(LoadScenario{spec});
      clients.emplace(c.id, std::move(c));
      return;
    }
    const std::string prefix = "telemetry/";
    std::uint32_t id = 0;
    if (h.client_name.rfind(prefix, 0) == 0) {
      try {
        id = static_cast<std::uint32_t>(std::stoul(h.client_name.substr(prefix.size())));
      } catch (const std::exception&) {
        id = 0;
      }
    }
    auto it = clients.find(id);
    if (it == clients.end() || it->second.lost || it->second.telemetry) {
      p.link->send(Bye{"unknown client for telemetry channel"});
      return;
    }
    Client& c = it->second;
    c.telemetry = p.link;
    c.telemetry->send(Snapshot{world});
    c.active = true;
    c.last_heartbeat = world.tick;
    emit("client_joined", c.id, c.name);
  }

  void on_input(Client& c, const InputSubmit& in) {
    const ActionCommand& a = in.action;
    std::string why;
    if (in.tick != world.tick || a.tick != world.tick) {
      why = "stale tick " + std::to_string(in.tick);
    } else if (std::find(c.agents.begin(), c.agents.end(), a.agent_id) == c.agents.end()) {
      why = "agent " + std::to_string(a.agent_id) + " not assigned";
    } else if (!std::isfinite(a.accel)) {
      why = "non-finite accel";
    } else if (inputs.count(a.agent_id)) {
      why = "duplicate input for agent " + std::to_string(a.agent_id);
    }
    if (!why.empty()) {
      emit("input_rejected", c.id, why);
      return;
    }
    inputs.emplace(a.agent_id, a);
  }

  void on_client_message(Client& c, Message m) {
    if (auto* in = std::get_if<InputSubmit>(&m.body)) {
      if (c.active) on_input(c, *in);
    } else if (std::get_if<Heartbeat>(&m.body)) {
      c.last_heartbeat = world.tick;
    } else if (auto* d = std::get_if<Desync>(&m.body)) {
      emit("desync", c.id,
           "tick " + std::to_string(d->tick) + " expected " + std::to_string(d->expected_digest) +
               " got " + std::to_string(d->got_digest));
      lose(c, "desync");
    } else if (auto* b = std::get_if<Bye>(&m.body)) {
      lose(c, "bye: " + b->reason);
    } else if (std::get_if<SnapshotRequest>(&m.body)) {
      (c.telemetry ? c.telemetry : c.control)->send(Snapshot{world});
    }
  }

  void process() {
    for (std::size_t i = 0; i < pending.size();) {
      Pending& p = pending[i];
      bool done = p.link->closed();
      if (!done && p.link->has_message()) {
        Message m = p.link->pop();
        if (auto* h = std::get_if<Hello>(&m.body)) on_pending_hello(p, *h);
        else p.link->send(Bye{"expected Hello"});
        done = true;
      }
      if (done) {
        pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(i));
      } else {
        ++i;
      }
    }
    for (auto& [id, c] : clients) {
      if (c.lost) continue;
      while (!c.lost && c.control->has_message()) on_client_message(c, c.control->pop());
      while (!c.lost && c.telemetry && c.telemetry->has_message()) on_client_message(c, c.telemetry->pop());
      if (c.lost) continue;
      if (c.control->closed()) {
        lose(c, "control channel closed: " + c.control->close_reason());
      } else if (c.telemetry && c.telemetry->closed()) {
        lose(c, "telemetry channel closed: " + c.telemetry->close_reason());
      } else if (c.active && world.tick - c.last_heartbeat > cfg.heartbeat_interval * cfg.missed_heartbeats) {
        lose(c, "heartbeat expired");
      }
    }
  }

  bool inputs_complete() const {
    for (const auto& [id, c] : clients) {
      if (!c.active || c.lost) continue;
      for (AgentId a : c.agents)
        if (world.find(a) && !inputs.count(a)) return false;
    }
    return true;
  }

  const Client* owner(AgentId agent) const {
    for (const auto& [id, c] : clients)
      if (c.active && !c.lost && std::find(c.agents.begin(), c.agents.end(), agent) != c.agents.end())
        return &c;
    return nullptr;
  }

  TickCommit advance() {
    const auto deadline = std::chrono::steady_clock::now() + cfg.deadline;
    pump_ready(io);
    pump_until(io, deadline, [&] {
      process();
      return inputs_complete();
    });

    TickCommit commit;
    commit.tick = world.tick;
    commit.actions.reserve(world.agents.size());
    for (const AgentState& a : world.agents) {
      const InitialAgent* ia = spec.find_agent(a.agent_id);
      if (auto it = inputs.find(a.agent_id); it != inputs.end()) {
        commit.actions.push_back(it->second);
      } else if (const Client* c = owner(a.agent_id)) {
        emit("fallback", c->id, "no input for agent " + std::to_string(a.agent_id));
        commit.actions.push_back(fallback_action(world, a.agent_id, spec));
      } else if (ia && ia->behavior.slot == 0) {
        Controller* ctl = lookup ? lookup(*ia) : nullptr;
        commit.actions.push_back(local_action(world, *ia, spec, ctl));
      } else {
        commit.actions.push_back(fallback_action(world, a.agent_id, spec));
      }
      if (action_override)
        if (auto o = action_override(world, commit.actions.back())) commit.actions.back() = *o;
    }
    world = step(world, commit.actions, step_context(spec));
    commit.digest = state_digest(world);
    inputs.clear();
    for (auto& [id, c] : clients)
      if (c.active && !c.lost) c.control->send(commit);
    pump_ready(io);
    return commit;
  }
};

HostSession::HostSession(ScenarioSpec spec, HostConfig cfg)
    : impl_(std::make_unique<Impl>(std::move(spec), std::move(cfg))) {}

HostSession::~HostSession() {
  if (impl_ && !impl_->closed) {
    try {
      close("host shutting down");
    } catch (...) {
    }
  }
}

void HostSession::start() {
  try {
    impl_->open(impl_->control_acc, impl_->cfg.control_port);
    impl_->open(impl_->telemetry_acc, impl_->cfg.telemetry_port);
  } catch (const boost::system::system_error& e) {
    throw Error(ErrorCode::ChannelClosed, std::string("cannot listen: ") + e.what());
  }
  impl_->accept_on(impl_->control_acc, false);
  impl_->accept_on(impl_->telemetry_acc, true);
}

std::uint16_t HostSession::control_port() const { return impl_->control_acc.local_endpoint().port(); }
std::uint16_t HostSession::telemetry_port() const { return impl_->telemetry_acc.local_endpoint().port(); }

void HostSession::wait_for_clients() {
  wait_for_clients(static_cast<std::size_t>(impl_->expected_clients()));
}

void HostSession::wait_for_clients(std::size_t want) {
  const auto deadline = std::chrono::steady_clock::now() + impl_->cfg.join_timeout;
  const bool ok = pump_until(impl_->io, deadline, [&] {
    impl_->process();
    return live_clients() >= want;
  });
  if (!ok)
    throw Error(ErrorCode::ChannelClosed, "timed out waiting for " + std::to_string(want) + " client(s); " +
                                              std::to_string(live_clients()) + " joined");
}

TickCommit HostSession::advance() { return impl_->advance(); }

void HostSession::poll() {
  pump_ready(impl_->io);
  impl_->process();
}

void HostSession::load_scenario(ScenarioSpec spec) {
  spec.validate();
  impl_->spec = std::move(spec);
  impl_->world = initial_world(impl_->spec);
  impl_->inputs.clear();
  for (auto& [id, c] : impl_->clients) {
    if (c.lost) continue;
    c.agents = impl_->agents_for_slot(static_cast<int>(c.id));
    c.control->send(Welcome{c.id, c.agents});
    c.control->send(LoadScenario{impl_->spec});
    if (c.active) {
      c.control->send(Snapshot{impl_->world});
      c.last_heartbeat = 0;
    }
  }
  pump_ready(impl_->io);
}

void HostSession::close(const std::string& reason) {
  if (impl_->closed) return;
  impl_->closed = true;
  std::vector<std::shared_ptr<Link>> links;
  for (auto& [id, c] : impl_->clients) {
    if (c.lost) continue;
    c.control->send(Bye{reason});
    links.push_back(c.control);
    if (c.telemetry) links.push_back(c.telemetry);
  }
  flush(impl_->io, links, std::chrono::milliseconds(1000));
  for (auto& l : links) l->close(reason);
  for (auto& p : impl_->pending) p.link->close(reason);
  boost::system::error_code ec;
  impl_->control_acc.close(ec);
  impl_->telemetry_acc.close(ec);
  pump_ready(impl_->io);
}

void HostSession::set_controllers(ControllerLookup lookup) { impl_->lookup = std::move(lookup); }
void HostSession::set_action_override(ActionOverride fn) { impl_->action_override = std::move(fn); }
void HostSession::set_event_handler(std::function<void(const SessionEvent&)> h) { impl_->on_event = std::move(h); }

const WorldState& HostSession::world() const { return impl_->world; }
const ScenarioSpec& HostSession::spec() const { return impl_->spec; }

std::size_t HostSession::live_clients() const {
  std::size_t n = 0;
  for (const auto& [id, c] : impl_->clients)
    if (c.active && !c.lost) ++n;
  return n;
}

}  // namespace skylite::net
