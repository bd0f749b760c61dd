#include <gtest/gtest.h>

#include <atomic>
#include <future>
#include <mutex>
#include <thread>

#include "../support/fixtures.hpp"
#include "skylite/behavior/controller.hpp"
#include "skylite/core/error.hpp"
#include "skylite/net/session.hpp"
#include "skylite/world/step.hpp"

using namespace skylite;
using namespace skylite::net;
using namespace skylite::testing;
using namespace std::chrono_literals;

namespace {

ScenarioSpec slotted_scenario(Tick ticks = 200) {
  return two_lane_scenario({make_agent(1, 0, 0.0, 22.0), make_agent(2, 0, 40.0, 18.0, AgentKind::RuleBased,
                                                                      ControllerKind::Behavior, 1),
                            make_agent(3, 1, 20.0, 25.0, AgentKind::RuleBased, ControllerKind::Behavior, 2),
                            make_agent(4, 1, 90.0, 12.0)},
                           ticks);
}

HostConfig test_host(int wait_clients = -1, std::chrono::milliseconds deadline = 5000ms) {
  HostConfig cfg;
  cfg.control_port = 0;
  cfg.telemetry_port = 0;
  cfg.deadline = deadline;
  cfg.wait_clients = wait_clients;
  cfg.join_timeout = 10000ms;
  return cfg;
}

ClientConfig test_client(const HostSession& host, std::string name) {
  ClientConfig cfg;
  cfg.control_port = host.control_port();
  cfg.telemetry_port = host.telemetry_port();
  cfg.name = std::move(name);
  cfg.idle_timeout = 10000ms;
  return cfg;
}

// behavior model that records what it submitted
class Recording final : public Controller {
 public:
  ActionCommand act(const WorldState& w, AgentId id, const ScenarioSpec& spec) override {
    ActionCommand a = behavior_action(w, id, spec);
    std::lock_guard lock(mu);
    sent.push_back(a);
    return a;
  }
  std::mutex mu;
  std::vector<ActionCommand> sent;
};

struct ClientRun {
  std::vector<std::uint64_t> digests;  // per commit, local recomputation
  std::vector<Tick> ticks;
  ClientExit exit;
  std::vector<AgentId> agents;
};

std::future<ClientRun> launch(ClientConfig cfg, Controller* ctl = nullptr) {
  return std::async(std::launch::async, [cfg, ctl] {
    ClientRun out;
    ClientSession c(cfg);
    if (ctl) c.set_controllers([ctl](const InitialAgent&) { return ctl; });
    c.set_commit_handler([&](const TickCommit& commit, const WorldState& w) {
      out.digests.push_back(state_digest(w));
      out.ticks.push_back(commit.tick);
    });
    c.connect();
    out.agents = c.agents();
    out.exit = c.run();
    return out;
  });
}

std::vector<std::uint64_t> single_process(const ScenarioSpec& spec, Tick ticks) {
  WorldState w = initial_world(spec);
  std::vector<std::uint64_t> out;
  for (Tick t = 0; t < ticks; ++t) {
    std::vector<ActionCommand> acts;
    for (const AgentState& a : w.agents) acts.push_back(behavior_action(w, a.agent_id, spec));
    w = step(w, acts, step_context(spec));
    out.push_back(state_digest(w));
  }
  return out;
}

}  // namespace

TEST(Session, NoClientsCommitsEveryTickImmediately) {
  auto spec = two_lane_scenario({make_agent(1, 0, 0.0, 22.0), make_agent(2, 0, 40.0, 18.0)});
  HostSession host(spec, test_host(0));
  host.start();
  host.wait_for_clients();
  const auto expect = single_process(spec, 100);
  const auto t0 = std::chrono::steady_clock::now();
  for (Tick t = 0; t < 100; ++t) {
    const TickCommit c = host.advance();
    ASSERT_EQ(c.tick, t);
    ASSERT_EQ(c.digest, expect[static_cast<std::size_t>(t)]);
    ASSERT_EQ(c.actions.size(), 2u);
  }
  EXPECT_LT(std::chrono::steady_clock::now() - t0, 2s);
}

TEST(Session, TwoClientsStayInLockstepWithSingleProcess) {
  const auto spec = slotted_scenario();
  HostSession host(spec, test_host());
  host.start();
  Recording rec1, rec2;
  auto c1 = launch(test_client(host, "one"), &rec1);
  host.wait_for_clients(1);  // register in a fixed order so slots are deterministic
  auto c2 = launch(test_client(host, "two"), &rec2);
  host.wait_for_clients();
  ASSERT_EQ(host.live_clients(), 2u);

  std::vector<TickCommit> commits;
  for (Tick t = 0; t < 200; ++t) commits.push_back(host.advance());
  host.close("done");
  const ClientRun r1 = c1.get();
  const ClientRun r2 = c2.get();

  EXPECT_EQ(r1.exit.reason, ClientExitReason::Bye);
  EXPECT_EQ(r2.exit.reason, ClientExitReason::Bye);
  EXPECT_EQ(r1.agents, std::vector<AgentId>{2});
  EXPECT_EQ(r2.agents, std::vector<AgentId>{3});

  const auto expect = single_process(spec, 200);
  std::vector<std::uint64_t> host_digests;
  for (const TickCommit& c : commits) host_digests.push_back(c.digest);
  EXPECT_EQ(host_digests, expect);
  EXPECT_EQ(r1.digests, expect);
  EXPECT_EQ(r2.digests, expect);

  // submitted actions appear verbatim in the commit for their tick
  for (Recording* rec : {&rec1, &rec2}) {
    for (const ActionCommand& a : rec->sent) {
      if (a.tick >= 200) continue;
      const TickCommit& c = commits[static_cast<std::size_t>(a.tick)];
      auto it = std::find_if(c.actions.begin(), c.actions.end(),
                             [&](const ActionCommand& x) { return x.agent_id == a.agent_id; });
      ASSERT_NE(it, c.actions.end());
      EXPECT_EQ(*it, a);
    }
  }
  for (const TickCommit& c : commits)
    for (const ActionCommand& a : c.actions) EXPECT_NE(a.source, ActionSource::Fallback);
}

TEST(Session, SilentClientFallsBackToIdm) {
  const auto spec = slotted_scenario();
  auto cfg = test_host(1, 30ms);
  HostSession host(spec, cfg);
  std::vector<SessionEvent> events;
  host.set_event_handler([&](const SessionEvent& e) { events.push_back(e); });
  host.start();
  // connects, submits tick 0, then never reads again
  ClientSession silent(test_client(host, "silent"));
  std::thread t([&] { silent.connect(); });
  host.wait_for_clients();
  t.join();

  WorldState before = host.world();
  for (Tick k = 0; k < 80; ++k) {
    const TickCommit c = host.advance();
    const ActionCommand& a2 = c.actions[1];
    ASSERT_EQ(a2.agent_id, 2);
    if (k == 0) {
      EXPECT_EQ(a2.source, ActionSource::BehaviorModel);
    } else {
      EXPECT_EQ(a2.source, ActionSource::Fallback);
      EXPECT_EQ(a2, fallback_action(before, 2, spec));
    }
    before = host.world();
  }
  const bool lost = std::any_of(events.begin(), events.end(),
                                [](const SessionEvent& e) { return e.kind == "client_lost" && e.client_id == 1; });
  EXPECT_TRUE(lost);
  EXPECT_EQ(host.live_clients(), 0u);
}

TEST(Session, CorruptedClientReportsDesyncAndHalts) {
  const auto spec = slotted_scenario();
  HostSession host(spec, test_host(1));
  std::vector<SessionEvent> events;
  host.set_event_handler([&](const SessionEvent& e) { events.push_back(e); });
  host.start();
  auto cfg = test_client(host, "faulty");
  cfg.corrupt_at_tick = 10;
  auto fut = launch(cfg);
  host.wait_for_clients();
  for (Tick t = 0; t < 30; ++t) host.advance();
  const ClientRun r = fut.get();
  EXPECT_EQ(r.exit.reason, ClientExitReason::Desync);
  EXPECT_EQ(r.exit.tick, 11);  // halted right after applying commit 10
  EXPECT_EQ(r.digests.size(), 10u);
  const bool seen = std::any_of(events.begin(), events.end(), [](const SessionEvent& e) { return e.kind == "desync"; });
  EXPECT_TRUE(seen);
  EXPECT_EQ(host.live_clients(), 0u);
}

TEST(Session, MidSessionJoinResumesFromSnapshot) {
  const auto spec = slotted_scenario(300);
  HostSession host(spec, test_host(1));
  host.start();
  auto c1 = launch(test_client(host, "early"));
  host.wait_for_clients();
  std::vector<TickCommit> commits;
  for (Tick t = 0; t < 50; ++t) commits.push_back(host.advance());

  std::atomic<bool> joined{false};
  auto c2 = std::async(std::launch::async, [&] {
    ClientRun out;
    ClientSession c(test_client(host, "late"));
    c.set_commit_handler([&](const TickCommit& commit, const WorldState& w) {
      out.digests.push_back(state_digest(w));
      out.ticks.push_back(commit.tick);
    });
    c.connect();
    out.agents = c.agents();
    joined = true;
    out.exit = c.run();
    return out;
  });
  while (host.live_clients() < 2) host.poll();
  const Tick join_tick = host.world().tick;
  for (Tick t = 0; t < 100; ++t) commits.push_back(host.advance());
  host.close("done");
  const ClientRun late = c2.get();
  c1.get();

  ASSERT_TRUE(joined);
  EXPECT_EQ(late.agents, std::vector<AgentId>{3});
  ASSERT_FALSE(late.ticks.empty());
  EXPECT_EQ(late.ticks.front(), join_tick);
  for (std::size_t i = 0; i < late.ticks.size(); ++i) {
    const auto& c = commits[static_cast<std::size_t>(late.ticks[i])];
    EXPECT_EQ(late.digests[i], c.digest);
    if (i > 0) {
      EXPECT_EQ(late.ticks[i], late.ticks[i - 1] + 1);
    }
  }
  // agent 3 was on fallback before the join and client-driven after it
  for (const TickCommit& c : commits) {
    const ActionCommand& a3 = c.actions[2];
    if (c.tick < join_tick) EXPECT_EQ(a3.source, ActionSource::Fallback);
    else EXPECT_EQ(a3.source, ActionSource::BehaviorModel);
  }
}

TEST(Session, ScenarioReloadResetsClients) {
  const auto spec = slotted_scenario();
  HostSession host(spec, test_host(2));
  host.start();
  auto c1 = launch(test_client(host, "one"));
  host.wait_for_clients(1);
  auto c2 = launch(test_client(host, "two"));
  host.wait_for_clients();
  for (Tick t = 0; t < 20; ++t) host.advance();
  auto other = slotted_scenario();
  other.initial_agents[0].state.v = 5.0;
  host.load_scenario(other);
  EXPECT_EQ(host.world().tick, 0);
  std::vector<std::uint64_t> got;
  for (Tick t = 0; t < 40; ++t) got.push_back(host.advance().digest);
  host.close("done");
  const ClientRun r1 = c1.get(), r2 = c2.get();
  EXPECT_EQ(got, single_process(other, 40));
  ASSERT_GE(r1.digests.size(), 40u);
  EXPECT_EQ(std::vector<std::uint64_t>(r1.digests.end() - 40, r1.digests.end()), got);
  EXPECT_EQ(std::vector<std::uint64_t>(r2.digests.end() - 40, r2.digests.end()), got);
  for (const auto* r : {&r1, &r2}) EXPECT_EQ(r->exit.reason, ClientExitReason::Bye);
}

TEST(Session, ClientWithoutHostFailsToConnect) {
  ClientConfig cfg;
  cfg.control_port = 1;  // nothing listens here
  cfg.connect_timeout = 200ms;
  ClientSession c(cfg);
  try {
    c.connect();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ChannelClosed);
  }
}
