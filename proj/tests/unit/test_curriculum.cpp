#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "skylite/core/detmath.hpp"
#include "skylite/core/error.hpp"
#include "skylite/curriculum/curriculum.hpp"
#include "skylite/world/json_io.hpp"
#include "skylite/world/safety.hpp"
#include "skylite/world/step.hpp"

using namespace skylite;
using namespace skylite::curriculum;
using skylite::testing::make_agent;
using skylite::testing::one_lane_scenario;
using skylite::testing::two_lane_scenario;

namespace {

// constant acceleration, with an optional one-shot lane intent and brake onset
class Fixed final : public Controller {
 public:
  Fixed(double accel, LaneIntent intent = LaneIntent::Keep, Tick intent_at = -1, Tick brake_at = -1,
        double brake = 0.0)
      : accel_(accel), intent_(intent), intent_at_(intent_at), brake_at_(brake_at), brake_(brake) {}
  ActionCommand act(const WorldState& w, AgentId id, const ScenarioSpec&) override {
    const double a = brake_at_ >= 0 && w.tick >= brake_at_ ? brake_ : accel_;
    return {id, w.tick, a, w.tick == intent_at_ ? intent_ : LaneIntent::Keep, ActionSource::Policy};
  }

 private:
  double accel_;
  LaneIntent intent_;
  Tick intent_at_, brake_at_;
  double brake_;
};

struct Case {
  ScenarioSpec spec;
  std::map<AgentId, std::shared_ptr<Controller>> ctl;
};

std::vector<WorldState> run(const Case& c) {
  EpisodeOptions opt;
  opt.stop_at_collision = true;
  return run_episode(
      c.spec,
      [&](const InitialAgent& ia) -> Controller* {
        auto it = c.ctl.find(ia.state.agent_id);
        return it == c.ctl.end() ? nullptr : it->second.get();
      },
      opt);
}

InsightKind classify(const Case& c) {
  const auto trace = run(c);
  return derive_insight(trace, episode_metrics(trace, c.spec), c.spec).kind;
}

std::vector<BVCandidate> crossing_collisions() {
  const ScenarioSpec base = crossing_base_scenario();
  const ControllerRolloutEngine engine;
  std::vector<BVCandidate> hits;
  for (const BVCandidate& c : make_grid(Family::CrossPath, base)) {
    const auto trace = engine.rollout(emit_scenario(base, c), 0);
    for (auto [a, b] : trace.back().collisions_this_tick)
      if (a == 1 || b == 1) hits.push_back(c);
  }
  return hits;
}

}  // namespace

TEST(Insight, RearEndBehindBrakingLeader) {
  Case c{one_lane_scenario({make_agent(1, 0, 0.0, 20.0), make_agent(2, 0, 40.0, 20.0)}, 300), {}};
  c.spec.ego_id = 1;
  c.ctl[1] = std::make_shared<Fixed>(0.0);
  c.ctl[2] = std::make_shared<Fixed>(-6.0);
  const auto trace = run(c);
  const InsightTag tag = derive_insight(trace, episode_metrics(trace, c.spec), c.spec);
  EXPECT_EQ(tag.kind, InsightKind::LateBrakingAtIntersection);
  EXPECT_NE(tag.note.find("leader braking"), std::string::npos);
}

TEST(Insight, CleanTraceHasNoFailure) {
  Case c{one_lane_scenario({make_agent(1, 0, 0.0, 20.0), make_agent(2, 0, 80.0, 20.0)}, 200), {}};
  c.spec.ego_id = 1;
  const auto trace = run(c);
  try {
    derive_insight(trace, episode_metrics(trace, c.spec), c.spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoFailureInTrace);
  }
}

TEST(Insight, HandLabeledCorpus) {
  std::vector<std::pair<Case, InsightKind>> corpus;
  auto add = [&](ScenarioSpec spec, std::map<AgentId, std::shared_ptr<Controller>> ctl, InsightKind label) {
    spec.ego_id = 1;
    corpus.push_back({Case{std::move(spec), std::move(ctl)}, label});
  };
  using K = InsightKind;
  // 1-3: rear conflicts in one lane
  add(one_lane_scenario({make_agent(1, 0, 0.0, 20.0), make_agent(2, 0, 40.0, 20.0)}, 300),
      {{1, std::make_shared<Fixed>(0.0)}, {2, std::make_shared<Fixed>(-6.0)}}, K::LateBrakingAtIntersection);
  add(one_lane_scenario({make_agent(1, 0, 0.0, 25.0), make_agent(2, 0, 60.0, 5.0)}, 300),
      {{1, std::make_shared<Fixed>(0.0)}, {2, std::make_shared<Fixed>(0.0)}}, K::LateBrakingAtIntersection);
  add(one_lane_scenario({make_agent(1, 0, 0.0, 20.0), make_agent(2, 0, 40.0, 20.0)}, 300),
      {{1, std::make_shared<Fixed>(0.0, LaneIntent::Keep, -1, 60, -8.0)}, {2, std::make_shared<Fixed>(-4.0)}},
      K::LateBrakingAtIntersection);
  // 4: scripted cut-in close ahead of a cruising ego
  {
    ScenarioSpec base = two_lane_scenario({make_agent(1, 0, 50.0, 20.0)}, 300);
    base.ego_id = 1;
    const BVCandidate bv = realize(Family::CutIn, {2.0, 0.0, 6.0, 10}, base, 2);
    add(emit_scenario(base, bv), {{1, std::make_shared<Fixed>(0.0)}}, K::TailgatingUnderCutin);
  }
  // 5: a slower car changes into the ego lane right ahead
  add(two_lane_scenario({make_agent(1, 0, 0.0, 22.0), make_agent(2, 1, 15.0, 15.0)}, 300),
      {{1, std::make_shared<Fixed>(0.0)}, {2, std::make_shared<Fixed>(0.0, LaneIntent::Right, 5)}},
      K::TailgatingUnderCutin);
  // 6: ego changes into a lane with a slow car ahead
  add(two_lane_scenario({make_agent(1, 0, 0.0, 20.0), make_agent(2, 1, 30.0, 10.0)}, 300),
      {{1, std::make_shared<Fixed>(0.0, LaneIntent::Left, 5)}, {2, std::make_shared<Fixed>(0.0)}},
      K::UnsafeMergeResponse);
  // 7: ego changes in front of a fast follower
  add(two_lane_scenario({make_agent(1, 0, 30.0, 15.0), make_agent(2, 1, 10.0, 30.0)}, 300),
      {{1, std::make_shared<Fixed>(0.0, LaneIntent::Left, 2)}, {2, std::make_shared<Fixed>(0.0)}},
      K::UnsafeMergeResponse);
  // 8-9: crossing traffic the ego does not yield to
  {
    const auto hits = crossing_collisions();
    ASSERT_GE(hits.size(), 2u);
    for (int i = 0; i < 2; ++i)
      add(emit_scenario(crossing_base_scenario(), hits[static_cast<std::size_t>(i)]),
          {{1, std::make_shared<IdmController>()}}, K::FailureToYield);
  }
  // 10: merge completed well before running into a braking leader
  add(two_lane_scenario({make_agent(1, 0, 0.0, 20.0), make_agent(2, 1, 75.0, 20.0)}, 400),
      {{1, std::make_shared<Fixed>(0.0, LaneIntent::Left, 0)}, {2, std::make_shared<Fixed>(0.0, LaneIntent::Keep, -1, 50, -8.0)}},
      K::LateBrakingAtIntersection);

  ASSERT_EQ(corpus.size(), 10u);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    try {
      EXPECT_EQ(classify(corpus[i].first), corpus[i].second) << "trace " << i + 1;
    } catch (const Error& e) {
      ADD_FAILURE() << "trace " << i + 1 << ": " << e.what();
    }
  }
}

TEST(Realize, GeometryRequirements) {
  const ScenarioSpec one = one_lane_scenario({make_agent(1, 0, 0.0, 20.0)}, 100);
  EXPECT_THROW(realize(Family::CutIn, {}, one, 2), Error);
  EXPECT_THROW(realize(Family::CrossPath, {}, one, 2), Error);
  try {
    realize(Family::LeadBrake, {}, one, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SpecConflict);
  }
  const BVCandidate c = realize(Family::LeadBrake, {20.0, 0.0, 4.0, 10}, one, 2);
  EXPECT_EQ(c.trajectory.size(), 101u);
  EXPECT_TRUE(feasible(c, one));
  EXPECT_DOUBLE_EQ(c.trajectory[0].s, 0.0 + 20.0 + 4.5);
}

TEST(Score, InfeasibleCandidateScoresZero) {
  const ScenarioSpec base = crossing_base_scenario();
  const BVCandidate c = realize(Family::LeadBrake, {25.0, 0.0, 12.0, 40}, base, 3);
  EXPECT_FALSE(feasible(c, base));
  const CandidateScore s =
      score_candidate(c, {InsightKind::LateBrakingAtIntersection, ""}, ControllerRolloutEngine{}, base, 5);
  EXPECT_EQ(s.prior, 0.0);
  EXPECT_EQ(s.total, 0.0);
  EXPECT_THROW(emit_scenario(base, c), Error);
}

TEST(Score, SingleCompletedRolloutHasFullLikelihood) {
  const ScenarioSpec base = crossing_base_scenario();
  const BVCandidate c = realize(Family::LeadBrake, {40.0, 0.0, 3.0, 40}, base, 3);
  const CandidateScore s =
      score_candidate(c, {InsightKind::LateBrakingAtIntersection, ""}, ControllerRolloutEngine{}, base, 1);
  ASSERT_EQ(s.outcomes.size(), 1u);
  EXPECT_TRUE(s.outcomes[0].completed);
  EXPECT_EQ(s.response_likelihood, 1.0);
  EXPECT_EQ(s.total, s.prior * s.response_likelihood * s.alignment);
}


TEST(Score, FactorByFactorOracle) {
  const ScenarioSpec base = crossing_base_scenario();
  const ControllerRolloutEngine engine;
  for (const auto& [family, kind] : {std::pair{Family::LeadBrake, InsightKind::LateBrakingAtIntersection},
                                     std::pair{Family::CutIn, InsightKind::TailgatingUnderCutin},
                                     std::pair{Family::CrossPath, InsightKind::FailureToYield}}) {
    const BVCandidate c = make_grid(family, base)[16];
    const CandidateScore s = score_candidate(c, {kind, ""}, engine, base, 2);
    const oracle::Factors o = oracle::score(c, kind, base, 2);
    EXPECT_EQ(s.prior, o.prior) << to_string(family);
    EXPECT_EQ(s.response_likelihood, o.likelihood) << to_string(family);
    EXPECT_EQ(s.alignment, o.alignment) << to_string(family);
    EXPECT_EQ(s.total, o.total) << to_string(family);
    EXPECT_GT(s.total, 0.0) << to_string(family);
  }
}

TEST(Optimize, MatchesExhaustiveEnumerationOnFullGrid) {
  const ScenarioSpec base = crossing_base_scenario();
  const ControllerRolloutEngine engine;
  for (InsightKind kind : {InsightKind::LateBrakingAtIntersection, InsightKind::TailgatingUnderCutin,
                           InsightKind::FailureToYield}) {
    const auto grid = make_grid(family_for(kind), base);
    ASSERT_EQ(grid.size(), 27u);
    const OptimizeResult r = optimize(grid, {kind, ""}, engine, base, 2);
    std::size_t best = 0;
    double best_total = -1.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const oracle::Factors o = oracle::score(grid[i], kind, base, 2);
      ASSERT_EQ(r.scores[i].prior, o.prior) << i;
      ASSERT_EQ(r.scores[i].response_likelihood, o.likelihood) << i;
      ASSERT_EQ(r.scores[i].alignment, o.alignment) << i;
      ASSERT_EQ(r.scores[i].total, o.total) << i;
      if (o.total > best_total) {
        best_total = o.total;
        best = i;
      }
    }
    EXPECT_EQ(r.index, best) << to_string(kind);
    for (const CandidateScore& s : r.scores) EXPECT_GE(r.scores[r.index].total, s.total);
  }
}

TEST(Optimize, EdgeCasesAndDeterminism) {
  const ScenarioSpec base = crossing_base_scenario();
  const ControllerRolloutEngine engine(nullptr, 0.8);
  const InsightTag tag{InsightKind::LateBrakingAtIntersection, ""};
  EXPECT_THROW(optimize(std::span<const BVCandidate>{}, tag, engine, base), Error);

  const auto lead = make_grid(Family::LeadBrake, base);
  const auto cut = make_grid(Family::CutIn, base);
  const std::vector<BVCandidate> single{lead[5]};
  EXPECT_EQ(optimize(single, tag, engine, base).index, 0u);

  // only the lead_brake member can align with late braking
  const std::vector<BVCandidate> mixed{cut[0], cut[10], lead[7], cut[20]};
  const OptimizeResult m = optimize(mixed, tag, engine, base);
  EXPECT_EQ(m.index, 2u);
  for (std::size_t i : {0u, 1u, 3u}) EXPECT_EQ(m.scores[i].alignment, 0.0);

  // ties go to the lowest index
  const std::vector<BVCandidate> dup{lead[3], lead[3]};
  EXPECT_EQ(optimize(dup, tag, engine, base).index, 0u);

  const OptimizeResult one = optimize(lead, tag, engine, base, 5, 9, 1);
  const OptimizeResult many = optimize(lead, tag, engine, base, 5, 9, 8);
  EXPECT_EQ(one.index, many.index);
  for (std::size_t i = 0; i < lead.size(); ++i) EXPECT_EQ(one.scores[i].total, many.scores[i].total);

  std::vector<BVCandidate> rev(lead.rbegin(), lead.rend());
  const OptimizeResult back = optimize(rev, tag, engine, base, 5, 9);
  EXPECT_EQ(back.scores[back.index].total, one.scores[one.index].total);
}

TEST(Emit, RoundTripAndExactReplay) {
  const ScenarioSpec base = crossing_base_scenario();
  for (Family f : {Family::LeadBrake, Family::CutIn, Family::CrossPath}) {
    const BVCandidate c = make_grid(f, base)[13];
    const ScenarioSpec spec = emit_scenario(base, c);
    EXPECT_EQ(scenario_from_json(to_json(spec)), spec);
    const auto dir = std::filesystem::temp_directory_path() / "skylite_emit_test";
    save_scenario(spec, dir / "s.json");
    EXPECT_EQ(load_scenario(dir / "s.json"), spec);
    std::filesystem::remove_all(dir);

    // the rollout stops at a collision, so compare the ticks it covers
    const auto trace = ControllerRolloutEngine{}.rollout(spec, 0);
    for (const WorldState& w : trace) {
      const AgentState& b = *w.find(c.agent_id);
      const ScriptSample& y = c.trajectory[static_cast<std::size_t>(w.tick)];
      ASSERT_EQ(b.lane_id, y.lane_id);
      ASSERT_EQ(b.s, y.s);
      ASSERT_EQ(b.d, y.d);
      ASSERT_EQ(b.v, y.v);
      ASSERT_EQ(b.heading, y.heading);
    }
  }
  const BVCandidate c = make_grid(Family::LeadBrake, base)[0];
  ScenarioSpec taken = base;
  InitialAgent clash = base.initial_agents[0];
  clash.state.agent_id = c.agent_id;
  clash.state.lane_id = 1;
  clash.state.s = 500.0;
  taken.initial_agents.push_back(clash);
  try {
    emit_scenario(taken, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SpecConflict);
  }
}

TEST(Emit, CutInChangesLaneAtStartTick) {
  const ScenarioSpec base = crossing_base_scenario();
  const BVCandidate c = realize(Family::CutIn, {40.0, 0.0, 3.0, 80}, base, 3);
  const auto trace = ControllerRolloutEngine{}.rollout(emit_scenario(base, c), 0);
  ASSERT_GT(trace.size(), 150u);
  for (Tick t = 0; t <= 80; ++t) {
    ASSERT_EQ(trace[static_cast<std::size_t>(t)].find(3)->d, 0.0);
    ASSERT_EQ(trace[static_cast<std::size_t>(t)].find(3)->lane_id, 1);
  }
  EXPECT_LT(trace[81].find(3)->d, 0.0);
  EXPECT_EQ(trace[139].find(3)->lane_id, 1);
  EXPECT_EQ(trace[140].find(3)->lane_id, 0);
}

TEST(Batch, ManifestListsEveryCandidate) {
  const ScenarioSpec base = crossing_base_scenario();
  const InsightTag tag{InsightKind::FailureToYield, "test"};
  const auto grid = make_grid(Family::CrossPath, base);
  const OptimizeResult r = optimize(grid, tag, ControllerRolloutEngine{}, base, 1);
  const ScenarioSpec emitted = emit_scenario(base, r.winner);
  const auto dir = std::filesystem::temp_directory_path() / "skylite_batch_test";
  write_batch(dir, emitted, tag, grid, r);
  const auto m = read_json_file(dir / "manifest.json");
  EXPECT_EQ(m["candidates"].size(), 27u);
  EXPECT_EQ(m["winner_index"].get<std::size_t>(), r.index);
  EXPECT_EQ(m["insight"]["tag"], "failure_to_yield");
  EXPECT_EQ(load_scenario(dir / m["scenario"].get<std::string>()), emitted);
  std::filesystem::remove_all(dir);
}
