#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "../support/fixtures.hpp"
#include "skylite/behavior/controller.hpp"
#include "skylite/core/detmath.hpp"
#include "skylite/core/error.hpp"
#include "skylite/world/json_io.hpp"
#include "skylite/world/metrics.hpp"
#include "skylite/world/safety.hpp"
#include "skylite/world/step.hpp"

using namespace skylite;
using namespace skylite::testing;

namespace {

ActionCommand act(AgentId id, Tick t, double accel, LaneIntent intent = LaneIntent::Keep) {
  return {id, t, accel, intent, ActionSource::BehaviorModel};
}

}  // namespace

TEST(DetMath, AtanMatchesLibmClosely) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (int i = 0; i < 20000; ++i) {
    const double y = u(rng), x = u(rng);
    EXPECT_NEAR(det::atan2(y, x), std::atan2(y, x), 2e-15);
  }
  EXPECT_EQ(det::atan2(0.0, 1.0), 0.0);
  EXPECT_NEAR(det::atan2(1.0, 0.0), M_PI / 2, 1e-16);
  EXPECT_NEAR(det::atan2(0.0, -1.0), M_PI, 1e-15);
}

TEST(DetMath, SinCosMatchLibmClosely) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int i = 0; i < 20000; ++i) {
    const double a = u(rng);
    const det::SinCos sc = det::sincos(a);
    EXPECT_NEAR(sc.sin, std::sin(a), 4e-15);
    EXPECT_NEAR(sc.cos, std::cos(a), 4e-15);
  }
}

TEST(LaneGraph, RejectsBrokenInvariants) {
  Lane short_lane;
  short_lane.id = 0;
  short_lane.centerline = {{0, 0}};
  EXPECT_THROW(LaneGraph("g", {short_lane}, {}), Error);

  Lane dup = straight_lane(0, {0, 0}, {0, 0});
  EXPECT_THROW(LaneGraph("g", {dup}, {}), Error);

  Lane a = straight_lane(0, {0, 0}, {10, 0});
  Lane b = straight_lane(1, {0, 3.5}, {10, 3.5});
  a.left_neighbor = 1;  // b lacks right_neighbor = 0
  EXPECT_THROW(LaneGraph("g", {a, b}, {}), Error);

  Lane c = straight_lane(0, {0, 0}, {10, 0});
  EXPECT_THROW(LaneGraph("g", {c}, {{0, 5}}), Error);
}

TEST(LaneGraph, ProjectionInvertsPosition) {
  Lane bent;
  bent.id = 0;
  bent.centerline = {{0, 0}, {50, 0}, {80, 40}};
  LaneGraph g("bent", {bent}, {});
  EXPECT_DOUBLE_EQ(g.length(0), 100.0);
  for (double s : {0.0, 10.0, 49.0, 60.0, 99.0}) {
    const Point2 p = g.position(0, s, 0.7);
    const LaneProjection pr = g.project(0, p);
    EXPECT_NEAR(pr.s, s, 1e-9);
    EXPECT_NEAR(pr.d, 0.7, 1e-9);
  }
}

TEST(Step, ConstantVelocity) {
  auto spec = one_lane_scenario({make_agent(1, 0, 0.0, 10.0)});
  WorldState w = initial_world(spec);
  std::vector<ActionCommand> acts{act(1, 0, 0.0)};
  WorldState n = step(w, acts, step_context(spec));
  EXPECT_EQ(n.tick, 1);
  EXPECT_DOUBLE_EQ(n.agents[0].s, 0.5);
  EXPECT_DOUBLE_EQ(n.agents[0].v, 10.0);
  EXPECT_EQ(n.sim_time, 1 * 0.05);
}

TEST(Step, RestIsFixedPoint) {
  auto spec = one_lane_scenario({make_agent(1, 0, 10.0, 0.0), make_agent(2, 0, 40.0, 0.0)});
  WorldState w = initial_world(spec);
  WorldState n = step(w, constant_actions(w, 0.0), step_context(spec));
  EXPECT_EQ(n.tick, w.tick + 1);
  EXPECT_EQ(n.agents, w.agents);
  EXPECT_EQ(n.collisions_this_tick, w.collisions_this_tick);
}

TEST(Step, StopsExactlyWhereSpeedReachesZero) {
  auto spec = one_lane_scenario({make_agent(1, 0, 0.0, 0.2)});
  WorldState w = initial_world(spec);
  std::vector<ActionCommand> acts{act(1, 0, -8.0)};
  WorldState n = step(w, acts, step_context(spec));
  EXPECT_EQ(n.agents[0].v, 0.0);
  EXPECT_DOUBLE_EQ(n.agents[0].s, 0.2 * 0.2 / 16.0);
}

TEST(Step, ClampsAcceleration) {
  auto spec = one_lane_scenario({make_agent(1, 0, 0.0, 10.0)});
  WorldState w = initial_world(spec);
  std::vector<ActionCommand> acts{act(1, 0, 50.0)};
  WorldState n = step(w, acts, step_context(spec));
  EXPECT_DOUBLE_EQ(n.agents[0].a, 4.0);
  EXPECT_DOUBLE_EQ(n.agents[0].v, 10.2);
}

TEST(Step, ErrorPaths) {
  auto spec = one_lane_scenario({make_agent(1, 0, 0.0, 10.0), make_agent(2, 0, 50.0, 10.0)});
  WorldState w = initial_world(spec);
  auto ctx = step_context(spec);
  auto code_of = [&](std::vector<ActionCommand> acts) {
    try {
      step(w, acts, ctx);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoError;
  };
  EXPECT_EQ(code_of({act(1, 0, 0.0)}), ErrorCode::MissingAction);
  EXPECT_EQ(code_of({act(1, 0, 0.0), act(2, 0, 0.0), act(9, 0, 0.0)}), ErrorCode::UnknownAgent);
  EXPECT_EQ(code_of({act(1, 0, NAN), act(2, 0, 0.0)}), ErrorCode::NonFiniteInput);
  EXPECT_EQ(code_of({act(1, 0, 0.0), act(1, 0, 0.0)}), ErrorCode::MissingAction);
  EXPECT_EQ(code_of({act(1, 3, 0.0), act(2, 0, 0.0)}), ErrorCode::MissingAction);
}

// Independent re-integration of the two-vehicle closing run: follower at 15 m/s
// 60 m behind a 15 m/s leader; leader brakes at -3 from tick 100, follower at
// -2 from tick 110.
TEST(Step, TwoVehicleClosingMatchesReintegration) {
  auto spec = one_lane_scenario({make_agent(1, 0, 0.0, 15.0), make_agent(2, 0, 60.0, 15.0)});
  WorldState w = initial_world(spec);
  auto ctx = step_context(spec);
  for (Tick t = 0; t < 200; ++t) {
    std::vector<ActionCommand> acts{act(1, t, t >= 110 ? -2.0 : 0.0), act(2, t, t >= 100 ? -3.0 : 0.0)};
    w = step(w, acts, ctx);
  }

  struct Car { double s, v; };
  auto advance = [](Car c, double a, double dt) {
    const double v_end = c.v + a * dt;
    if (v_end < 0.0) return Car{c.s + c.v * c.v / (-2.0 * a), 0.0};
    return Car{c.s + c.v * dt + 0.5 * a * dt * dt, v_end};
  };
  Car f{0.0, 15.0}, l{60.0, 15.0};
  for (int t = 0; t < 200; ++t) {
    f = advance(f, t >= 110 ? -2.0 : 0.0, 0.05);
    l = advance(l, t >= 100 ? -3.0 : 0.0, 0.05);
  }
  const double oracle_gap = l.s - f.s - 4.5;
  const double gap = w.find(2)->s - w.find(1)->s - 4.5;
  EXPECT_NEAR(gap, oracle_gap, 1e-9);
  // frozen value from the re-integration above
  EXPECT_NEAR(gap, 38.25, 1e-6);
}

TEST(Step, DeterministicAcrossRuns) {
  auto spec = two_lane_scenario({make_agent(1, 0, 0.0, 20.0), make_agent(2, 0, 30.0, 18.0),
                                 make_agent(3, 1, 10.0, 22.0), make_agent(4, 1, 60.0, 10.0)});
  auto run = [&] {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-6.0, 3.0);
    std::uniform_int_distribution<int> lane(0, 20);
    WorldState w = initial_world(spec);
    std::vector<WorldState> trace{w};
    for (Tick t = 0; t < 300; ++t) {
      std::vector<ActionCommand> acts;
      for (const AgentState& a : w.agents) {
        const int r = lane(rng);
        acts.push_back(act(a.agent_id, t, u(rng), r == 0 ? LaneIntent::Left : r == 1 ? LaneIntent::Right : LaneIntent::Keep));
      }
      w = step(w, acts, step_context(spec));
      trace.push_back(w);
    }
    return trace;
  };
  const auto a = run();
  const auto b = run();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a[i], b[i]) << "tick " << i;
  for (const WorldState& w : a) {
    ASSERT_EQ(w.agents.size(), 4u);
    for (const AgentState& ag : w.agents) {
      EXPECT_GE(ag.v, 0.0);
      EXPECT_TRUE(std::isfinite(ag.s) && std::isfinite(ag.d));
      EXPECT_LE(std::fabs(ag.d), spec.graph.lane(ag.lane_id).width);
      EXPECT_GE(ag.s, 0.0);
      EXPECT_LE(ag.s, spec.graph.length(ag.lane_id));
    }
    for (auto [x, y] : w.collisions_this_tick) EXPECT_LT(x, y);
  }
}

TEST(Step, LaneChangeCompletesAfterDuration) {
  auto spec = two_lane_scenario({make_agent(1, 0, 0.0, 10.0)});
  WorldState w = initial_world(spec);
  auto ctx = step_context(spec);
  w = step(w, std::vector<ActionCommand>{act(1, 0, 0.0, LaneIntent::Left)}, ctx);
  EXPECT_EQ(w.agents[0].lane_change, LaneChange::ToLeft);
  double last_progress = w.agents[0].lane_change_progress;
  double last_d = w.agents[0].d;
  int ticks = 1;
  while (w.agents[0].lane_change != LaneChange::None) {
    w = step(w, std::vector<ActionCommand>{act(1, w.tick, 0.0)}, ctx);
    ++ticks;
    if (w.agents[0].lane_change != LaneChange::None) {
      EXPECT_GT(w.agents[0].lane_change_progress, last_progress);
      EXPECT_GT(w.agents[0].d, last_d);
      last_progress = w.agents[0].lane_change_progress;
      last_d = w.agents[0].d;
    }
  }
  EXPECT_EQ(ticks, 60);
  EXPECT_EQ(w.agents[0].lane_id, 1);
  EXPECT_NEAR(w.agents[0].d, 0.0, 1e-9);
}

TEST(Step, LaneChangeWithoutNeighborIsIgnored) {
  auto spec = one_lane_scenario({make_agent(1, 0, 0.0, 10.0)});
  WorldState w = initial_world(spec);
  w = step(w, std::vector<ActionCommand>{act(1, 0, 0.0, LaneIntent::Left)}, step_context(spec));
  EXPECT_EQ(w.agents[0].lane_change, LaneChange::None);
  EXPECT_EQ(w.agents[0].d, 0.0);
}

TEST(Step, CrossesIntoSuccessorLane) {
  ScenarioSpec spec;
  spec.graph = LaneGraph("chain", {straight_lane(0, {0, 0}, {100, 0}), straight_lane(1, {100, 0}, {300, 0})}, {{0, 1}});
  spec.initial_agents = {make_agent(1, 0, 99.8, 10.0)};
  WorldState w = initial_world(spec);
  w = step(w, std::vector<ActionCommand>{act(1, 0, 0.0)}, step_context(spec));
  EXPECT_EQ(w.agents[0].lane_id, 1);
  EXPECT_NEAR(w.agents[0].s, 0.3, 1e-12);
}

TEST(Step, RectangleOverlapDetectsCollision) {
  auto spec = one_lane_scenario({make_agent(1, 0, 10.0, 10.0), make_agent(2, 0, 14.0, 0.0)});
  WorldState w = initial_world(spec);
  w = step(w, constant_actions(w, 0.0), step_context(spec));
  ASSERT_EQ(w.collisions_this_tick.size(), 1u);
  EXPECT_EQ(w.collisions_this_tick[0], (std::pair<AgentId, AgentId>{1, 2}));

  auto apart = two_lane_scenario({make_agent(1, 0, 10.0, 0.0), make_agent(2, 1, 10.0, 0.0)});
  WorldState w2 = initial_world(apart);
  w2 = step(w2, constant_actions(w2, 0.0), step_context(apart));
  EXPECT_TRUE(w2.collisions_this_tick.empty());
}

TEST(TimeToCollision, WorkedExamples) {
  LaneGraph g = straight_road("g", 1, 1000.0);
  AgentState ego, lead;
  ego.agent_id = 1; ego.s = 0.0; ego.v = 20.0;
  lead.agent_id = 2; lead.s = 44.5; lead.v = 10.0;  // bumper gap 40 m
  EXPECT_DOUBLE_EQ(time_to_collision(ego, lead, g), 4.0);

  lead.v = 25.0;
  EXPECT_EQ(time_to_collision(ego, lead, g), kInfiniteTtc);
  lead.v = 20.0;
  EXPECT_EQ(time_to_collision(ego, lead, g), kInfiniteTtc);

  lead.v = 10.0;
  lead.s = 4.5;  // touching
  EXPECT_EQ(time_to_collision(ego, lead, g), 0.0);
  lead.s = 2.0;  // overlapping, still closing
  EXPECT_EQ(time_to_collision(ego, lead, g), 0.0);
}

TEST(TimeToCollision, UnrelatedLanesRejected) {
  LaneGraph g("two", {straight_lane(0, {0, 0}, {100, 0}), straight_lane(1, {0, 50}, {100, 50})}, {});
  AgentState a, b;
  a.agent_id = 1; a.lane_id = 0;
  b.agent_id = 2; b.lane_id = 1;
  try {
    time_to_collision(a, b, g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotLongitudinallyComparable);
  }
}

TEST(TimeToCollision, DecreasesByDtPerTickAtConstantSpeed) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> speed(5.0, 30.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double v_ego = speed(rng);
    const double v_lead = v_ego - 0.5 - 4.0 * std::generate_canonical<double, 53>(rng);
    auto spec = one_lane_scenario({make_agent(1, 0, 0.0, v_ego), make_agent(2, 0, 150.0, v_lead)});
    WorldState w = initial_world(spec);
    auto ctx = step_context(spec);
    double prev = time_to_collision(*w.find(1), *w.find(2), spec.graph);
    for (int t = 0; t < 40; ++t) {
      w = step(w, constant_actions(w, 0.0), ctx);
      const double ttc = time_to_collision(*w.find(1), *w.find(2), spec.graph);
      ASSERT_NEAR(prev - ttc, spec.dt, 1e-12);
      prev = ttc;
    }
  }
}

TEST(Metrics, StationaryAgentFails) {
  auto spec = one_lane_scenario({make_agent(1, 0, 0.0, 0.0)});
  std::vector<WorldState> trace{initial_world(spec)};
  for (int t = 0; t < 10; ++t) trace.push_back(step(trace.back(), constant_actions(trace.back(), 0.0), step_context(spec)));
  const MetricsReport r = episode_metrics(trace, spec);
  EXPECT_FALSE(r.success);
  EXPECT_EQ(r.collision_count, 0u);
  EXPECT_EQ(r.route_completion, 0.0);
}

TEST(Metrics, StraightRunCompletesRoute) {
  auto spec = one_lane_scenario({make_agent(1, 0, 0.0, 20.0)});
  spec.termination.route_completion_s = 100.0;
  std::vector<WorldState> trace{initial_world(spec)};
  for (int t = 0; t < 120; ++t) trace.push_back(step(trace.back(), constant_actions(trace.back(), 0.0), step_context(spec)));
  const MetricsReport r = episode_metrics(trace, spec);
  EXPECT_TRUE(r.success);
  EXPECT_EQ(r.route_completion, 1.0);
  EXPECT_NEAR(r.traveled_distance, 120.0, 1e-9);
  EXPECT_NEAR(r.average_speed, 20.0, 1e-12);
}

TEST(Metrics, EmptyTraceRejected) {
  auto spec = one_lane_scenario({make_agent(1, 0, 0.0, 0.0)});
  try {
    episode_metrics({}, spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyTrace);
  }
}

TEST(ScenarioJson, RoundTrip) {
  auto spec = two_lane_scenario({make_agent(1, 0, 5.0, 20.0, AgentKind::PolicyDriven, ControllerKind::Policy, 1),
                                 make_agent(2, 1, 30.0, 18.0)});
  spec.scripts[2] = {{0, 1, 30.0, 0.0, 18.0, 0.0}, {1, 1, 30.9, 0.0, 18.0, 0.0}};
  spec.initial_agents[1].behavior.controller = ControllerKind::Script;
  spec.ego_id = 1;
  const json j = to_json(spec);
  const ScenarioSpec back = scenario_from_json(json::parse(j.dump()));
  EXPECT_EQ(back, spec);
}

TEST(ScenarioJson, InvalidSpecsRejected) {
  auto spec = one_lane_scenario({make_agent(1, 0, 0.0, 10.0), make_agent(1, 0, 20.0, 10.0)});
  EXPECT_THROW(spec.validate(), Error);
  auto spec2 = one_lane_scenario({make_agent(1, 0, 0.0, 10.0)});
  spec2.dt = 0.0;
  EXPECT_THROW(spec2.validate(), Error);
}

TEST(LaneGraph, CrossingLanesAreFoundBothWays) {
  const LaneGraph g("x", {straight_lane(0, {0, 0}, {400, 0}), straight_lane(5, {150, -100}, {150, 100})}, {});
  const auto c = g.crossing(0, 5);
  ASSERT_TRUE(c);
  EXPECT_DOUBLE_EQ(c->first, 150.0);
  EXPECT_DOUBLE_EQ(c->second, 100.0);
  EXPECT_EQ(g.crossing(5, 0), (std::optional<std::pair<double, double>>{{100.0, 150.0}}));
  EXPECT_FALSE(straight_road("r", 2, 100.0).crosses(0, 1));
}

TEST(Step, CollisionOnCrossingLanesIsDetected) {
  const LaneGraph g("x", {straight_lane(0, {0, 0}, {400, 0}), straight_lane(5, {150, -100}, {150, 100})}, {});
  AgentState a, b;
  a.agent_id = 1;
  a.lane_id = 0;
  a.s = 150.0;
  b.agent_id = 2;
  b.lane_id = 5;
  b.s = 100.0;
  b.heading = 1.5707963267948966;
  EXPECT_EQ(detect_collisions({a, b}, g), (std::vector<std::pair<AgentId, AgentId>>{{1, 2}}));
}

TEST(Episode, RunnerMatchesManualStepping) {
  auto spec = two_lane_scenario(
      {make_agent(1, 0, 0.0, 22.0), make_agent(2, 0, 40.0, 15.0), make_agent(3, 1, 10.0, 25.0)}, 120);
  const auto trace = run_episode(spec);
  ASSERT_EQ(trace.size(), 121u);
  WorldState w = initial_world(spec);
  for (Tick t = 0; t < 120; ++t) {
    std::vector<ActionCommand> acts;
    for (const AgentState& a : w.agents) acts.push_back(behavior_action(w, a.agent_id, spec));
    w = step(w, acts, step_context(spec));
    ASSERT_EQ(w, trace[static_cast<std::size_t>(t + 1)]);
  }
}
