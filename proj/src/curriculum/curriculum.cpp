#include "skylite/curriculum/curriculum.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "skylite/core/detmath.hpp"
#include "skylite/core/error.hpp"
#include "skylite/world/json_io.hpp"
#include "skylite/world/lane_graph.hpp"
#include "skylite/world/safety.hpp"
#include "skylite/world/step.hpp"

namespace skylite::curriculum {

namespace {

double clamp01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

const InitialAgent& ego_agent(const ScenarioSpec& spec) {
  const InitialAgent* ia = spec.find_agent(spec.resolved_ego());
  if (!ia) throw Error(ErrorCode::InvalidScenario, "scenario has no ego");
  return *ia;
}

bool in_collision(const WorldState& w, AgentId id, AgentId* partner = nullptr) {
  for (auto [a, b] : w.collisions_this_tick) {
    if (a == id || b == id) {
      if (partner) *partner = a == id ? b : a;
      return true;
    }
  }
  return false;
}

// Integrates a longitudinal command with the world's own kinematics, the
// command itself ramping toward `target(tick, v)` at kProfileJerk.
template <class Target>
void integrate(std::vector<double>& s, std::vector<double>& v, double s0, double v0, std::size_t n, double dt,
               Target target) {
  s.assign(n, 0.0);
  v.assign(n, 0.0);
  s[0] = s0;
  v[0] = v0;
  double cmd = 0.0;
  const double max_step = kProfileJerk * dt;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double want = target(static_cast<Tick>(i), v[i]);
    cmd += std::clamp(want - cmd, -max_step, max_step);
    double v1 = v[i] + cmd * dt;
    double ds;
    if (v1 < 0.0) {
      ds = -(v[i] * v[i]) / (2.0 * cmd);
      v1 = 0.0;
    } else {
      ds = v[i] * dt + 0.5 * cmd * dt * dt;
    }
    s[i + 1] = s[i] + ds;
    v[i + 1] = v1;
  }
}

double lane_heading(const LaneGraph& g, LaneId lane, double s) {
  const double len = g.length(lane);
  const LanePose p = g.pose(lane, std::clamp(s, 0.0, len));
  return det::atan2(p.ty, p.tx);
}

}  // namespace

std::string_view to_string(InsightKind k) {
  switch (k) {
    case InsightKind::LateBrakingAtIntersection: return "late_braking_at_intersection";
    case InsightKind::UnsafeMergeResponse: return "unsafe_merge_response";
    case InsightKind::TailgatingUnderCutin: return "tailgating_under_cutin";
    case InsightKind::FailureToYield: return "failure_to_yield";
  }
  return "?";
}

InsightKind insight_kind_from_string(std::string_view s) {
  for (auto k : {InsightKind::LateBrakingAtIntersection, InsightKind::UnsafeMergeResponse,
                 InsightKind::TailgatingUnderCutin, InsightKind::FailureToYield})
    if (to_string(k) == s) return k;
  throw Error(ErrorCode::ConfigError, "unknown insight tag '" + std::string(s) + "'");
}

std::string_view to_string(Family f) {
  switch (f) {
    case Family::CutIn: return "cut_in";
    case Family::LeadBrake: return "lead_brake";
    case Family::CrossPath: return "cross_path";
  }
  return "?";
}

Family family_from_string(std::string_view s) {
  for (auto f : {Family::CutIn, Family::LeadBrake, Family::CrossPath})
    if (to_string(f) == s) return f;
  throw Error(ErrorCode::ConfigError, "unknown candidate family '" + std::string(s) + "'");
}

Family family_for(InsightKind insight) {
  switch (insight) {
    case InsightKind::LateBrakingAtIntersection: return Family::LeadBrake;
    case InsightKind::UnsafeMergeResponse:
    case InsightKind::TailgatingUnderCutin: return Family::CutIn;
    case InsightKind::FailureToYield: return Family::CrossPath;
  }
  return Family::LeadBrake;
}

InsightTag derive_insight(std::span<const WorldState> trace, const MetricsReport& metrics,
                          const ScenarioSpec& spec) {
  if (metrics.collision_count == 0 && metrics.safety_violation_count == 0)
    throw Error(ErrorCode::NoFailureInTrace, "episode has no collision or safety violation");
  const AgentId ego = spec.resolved_ego();
  const LaneGraph& g = spec.graph;

  std::size_t f = trace.size();
  AgentId partner = -1;
  bool collision = false;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (in_collision(trace[i], ego, &partner)) {
      f = i;
      collision = true;
      break;
    }
    const AgentState* e = trace[i].find(ego);
    if (e && leading_ttc(trace[i], ego, g) < kSafetyViolationTtc) {
      if (auto l = find_leader(trace[i], *e, g)) partner = trace[i].agents[l->index].agent_id;
      f = i;
      break;
    }
  }
  if (f == trace.size()) throw Error(ErrorCode::NoFailureInTrace, "no failing tick in trace");

  const WorldState& wf = trace[f];
  const AgentState& e = *wf.find(ego);
  const AgentState* p = partner >= 0 ? wf.find(partner) : nullptr;
  const std::string what = (collision ? "collision with agent " : "TTC under 1 s behind agent ") +
                           std::to_string(partner) + " at tick " + std::to_string(wf.tick);

  if (p && g.crosses(e.lane_id, p->lane_id))
    return {InsightKind::FailureToYield, what + ", crossing lane " + std::to_string(p->lane_id)};

  const std::size_t from = f > static_cast<std::size_t>(kCauseWindowTicks) ? f - kCauseWindowTicks : 0;
  if (p) {
    for (std::size_t i = from; i <= f; ++i) {
      const AgentState* q = trace[i].find(partner);
      const AgentState* me = trace[i].find(ego);
      if (!q || !me) continue;
      const bool entering = q->lane_id != me->lane_id && (encroached_lane(*q, g) == me->lane_id ||
                                                          (q->lane_change != LaneChange::None &&
                                                           g.neighbor(q->lane_id, q->lane_change) == me->lane_id));
      if (entering || q->lane_id != p->lane_id)
        return {InsightKind::TailgatingUnderCutin, what + ", after a cut-in"};
    }
  }
  for (std::size_t i = from; i <= f; ++i) {
    const AgentState* me = trace[i].find(ego);
    if (me && (me->lane_change != LaneChange::None || me->lane_id != e.lane_id))
      return {InsightKind::UnsafeMergeResponse, what + ", during an ego lane change"};
  }
  bool braking = false;
  if (p) {
    for (std::size_t i = from; i <= f; ++i) {
      const AgentState* q = trace[i].find(partner);
      if (q && q->a <= -1.0) braking = true;
    }
  }
  return {InsightKind::LateBrakingAtIntersection, what + (braking ? ", leader braking" : ", leader not braking")};
}

AgentId free_agent_id(const ScenarioSpec& spec) {
  AgentId hi = 0;
  for (const InitialAgent& ia : spec.initial_agents) hi = std::max(hi, ia.state.agent_id);
  return hi + 1;
}

BVCandidate realize(Family family, const CandidateParams& params, const ScenarioSpec& base, AgentId agent_id) {
  if (base.find_agent(agent_id))
    throw Error(ErrorCode::SpecConflict, "agent id " + std::to_string(agent_id) + " already in scenario");
  const AgentState& ego = ego_agent(base).state;
  const LaneGraph& g = base.graph;
  const std::size_t n = static_cast<std::size_t>(base.max_ticks) + 1;
  const double dt = base.dt;
  constexpr double kLength = 4.5;

  BVCandidate c;
  c.family = family;
  c.params = params;
  c.agent_id = agent_id;
  c.trajectory.resize(n);
  std::vector<double> s, v;

  switch (family) {
    case Family::LeadBrake: {
      integrate(s, v, ego.s + params.trigger_gap + 0.5 * (ego.length + kLength), ego.v, n, dt,
                [&](Tick t, double) { return t >= params.start_tick ? -params.decel : 0.0; });
      for (std::size_t i = 0; i < n; ++i)
        c.trajectory[i] = {static_cast<Tick>(i), ego.lane_id, s[i], params.lateral_offset, v[i],
                           lane_heading(g, ego.lane_id, s[i])};
      break;
    }
    case Family::CutIn: {
      const Lane& el = g.lane(ego.lane_id);
      const std::optional<LaneId> src = el.left_neighbor ? el.left_neighbor : el.right_neighbor;
      if (!src) throw Error(ErrorCode::InfeasibleCandidate, "cut_in needs a lane beside the ego");
      const double sign = el.left_neighbor ? -1.0 : 1.0;  // toward the ego lane
      const double offset = 0.5 * (g.lane(*src).width + el.width);
      const Tick change = static_cast<Tick>(std::lround(kLaneChangeDuration / dt));
      const Tick done = params.start_tick + change;
      // brakes once half way across, when its body is already in the ego lane
      const Tick brake_start = params.start_tick + change / 2;
      const Tick brake_end = brake_start + static_cast<Tick>(std::lround(kCutInBrakeSeconds / dt));
      integrate(s, v, ego.s + params.trigger_gap + 0.5 * (ego.length + kLength), ego.v, n, dt,
                [&](Tick t, double) { return t >= brake_start && t < brake_end ? -params.decel : 0.0; });
      const double lat_rate = sign * offset / kLaneChangeDuration;
      for (std::size_t i = 0; i < n; ++i) {
        const Tick t = static_cast<Tick>(i);
        ScriptSample& smp = c.trajectory[i];
        smp.tick = t;
        smp.v = v[i];
        if (t <= params.start_tick) {
          smp = {t, *src, s[i], 0.0, v[i], lane_heading(g, *src, s[i])};
        } else if (t < done) {
          const double progress = static_cast<double>(t - params.start_tick) / static_cast<double>(change);
          const LanePose pose = g.pose(*src, std::clamp(s[i], 0.0, g.length(*src)));
          const double hx = v[i] * pose.tx - lat_rate * pose.ty;
          const double hy = v[i] * pose.ty + lat_rate * pose.tx;
          smp = {t, *src, s[i], sign * offset * progress, v[i],
                 v[i] < 0.1 ? det::atan2(pose.ty, pose.tx) : det::atan2(hy, hx)};
        } else {
          const LaneProjection pr = g.project(ego.lane_id, g.position(*src, s[i], sign * offset));
          smp = {t, ego.lane_id, pr.s, params.lateral_offset, v[i], lane_heading(g, ego.lane_id, pr.s)};
        }
      }
      break;
    }
    case Family::CrossPath: {
      std::optional<std::pair<double, double>> hit;
      LaneId lane = 0;
      for (const Lane& l : g.lanes()) {
        if ((hit = g.crossing(ego.lane_id, l.id))) {
          lane = l.id;
          break;
        }
      }
      if (!hit) throw Error(ErrorCode::InfeasibleCandidate, "cross_path needs a lane crossing the ego lane");
      integrate(s, v, hit->second - params.trigger_gap, 0.0, n, dt, [&](Tick t, double vel) {
        return t >= params.start_tick && vel < kCrossPathTopSpeed ? params.decel : 0.0;
      });
      for (std::size_t i = 0; i < n; ++i)
        c.trajectory[i] = {static_cast<Tick>(i), lane, s[i], params.lateral_offset, v[i], lane_heading(g, lane, s[i])};
      break;
    }
  }
  return c;
}

bool feasible(const BVCandidate& c, const ScenarioSpec& spec) {
  const auto& tr = c.trajectory;
  if (tr.empty()) return false;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const ScriptSample& p = tr[i];
    if (!std::isfinite(p.s) || !std::isfinite(p.v) || !std::isfinite(p.d) || !std::isfinite(p.heading)) return false;
    if (p.v < 0.0 || !spec.graph.has_lane(p.lane_id)) return false;
    if (p.s < 0.0 || p.s > spec.graph.length(p.lane_id)) return false;
    if (i > 0 && std::fabs(p.v - tr[i - 1].v) / spec.dt > kMaxBvAccel + 1e-9) return false;
  }
  return true;
}

double smoothness(std::span<const ScriptSample> tr, double dt) {
  if (tr.size() < 3) return 1.0;
  double total = 0.0;
  for (std::size_t i = 0; i + 2 < tr.size(); ++i) {
    const double a0 = (tr[i + 1].v - tr[i].v) / dt;
    const double a1 = (tr[i + 2].v - tr[i + 1].v) / dt;
    total += std::fabs(a1 - a0) / dt;
  }
  const double mean = total / static_cast<double>(tr.size() - 2);
  return std::max(0.0, 1.0 - mean / kJerkNorm);
}

ScenarioSpec emit_scenario(const ScenarioSpec& base, const BVCandidate& winner) {
  if (base.find_agent(winner.agent_id))
    throw Error(ErrorCode::SpecConflict, "agent id " + std::to_string(winner.agent_id) + " already in scenario");
  if (!feasible(winner, base)) throw Error(ErrorCode::InfeasibleCandidate, "candidate trajectory is infeasible");
  if (winner.trajectory.size() < static_cast<std::size_t>(base.max_ticks) + 1)
    throw Error(ErrorCode::InfeasibleCandidate, "candidate trajectory shorter than the episode");
  ScenarioSpec out = base;
  out.name = base.name + "_" + std::string(to_string(winner.family));
  if (!out.ego_id) out.ego_id = base.resolved_ego();
  const ScriptSample& p0 = winner.trajectory.front();
  InitialAgent ia;
  ia.state.agent_id = winner.agent_id;
  ia.state.kind = AgentKind::ScriptedReplay;
  ia.state.lane_id = p0.lane_id;
  ia.state.s = p0.s;
  ia.state.d = p0.d;
  ia.state.v = p0.v;
  ia.state.heading = p0.heading;
  ia.behavior = {ControllerKind::Script, 0};
  out.initial_agents.push_back(ia);
  std::sort(out.initial_agents.begin(), out.initial_agents.end(),
            [](const InitialAgent& a, const InitialAgent& b) { return a.state.agent_id < b.state.agent_id; });
  out.scripts[winner.agent_id] = winner.trajectory;
  out.validate();
  return out;
}

ControllerRolloutEngine::ControllerRolloutEngine(Factory ego_factory, double speed_jitter)
    : factory_(std::move(ego_factory)), jitter_(speed_jitter) {}

std::vector<WorldState> ControllerRolloutEngine::rollout(const ScenarioSpec& spec, std::uint64_t seed) const {
  ScenarioSpec run = spec;
  const AgentId ego = run.resolved_ego();
  if (jitter_ > 0.0) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    z ^= z >> 31;
    const double u = static_cast<double>(z >> 11) * 0x1.0p-53;
    for (InitialAgent& ia : run.initial_agents)
      if (ia.state.agent_id == ego) ia.state.v = std::max(0.0, ia.state.v + jitter_ * (2.0 * u - 1.0));
  }
  std::unique_ptr<Controller> ctl = factory_ ? factory_() : std::make_unique<IdmController>();
  const ControllerLookup lookup = [&](const InitialAgent& ia) { return ia.state.agent_id == ego ? ctl.get() : nullptr; };
  EpisodeOptions opt;
  opt.stop_at_collision = true;
  return run_episode(run, lookup, opt);
}

nlohmann::json RolloutOutcome::to_json() const {
  nlohmann::json j{{"completed", completed},
                   {"collided", collided},
                   {"min_ttc", std::isfinite(min_ttc) ? nlohmann::json(min_ttc) : nlohmann::json(nullptr)},
                   {"min_distance", std::isfinite(min_distance) ? nlohmann::json(min_distance) : nlohmann::json(nullptr)},
                   {"yielded", yielded}};
  j["braking_onset"] = braking_onset ? nlohmann::json(*braking_onset) : nlohmann::json(nullptr);
  return j;
}

RolloutOutcome summarize_rollout(std::span<const WorldState> trace, const ScenarioSpec& spec, const BVCandidate& c) {
  const AgentId ego = spec.resolved_ego();
  const Tick start = c.params.start_tick;
  const Tick end = std::min(start + kInteractionTicks, spec.max_ticks);

  RolloutOutcome o;
  o.min_ttc = std::numeric_limits<double>::infinity();
  o.min_distance = std::numeric_limits<double>::infinity();
  double v_ref = -1.0;
  for (const WorldState& w : trace) {
    if (w.tick > end) break;
    if (in_collision(w, ego)) o.collided = true;
    if (w.tick < start) continue;
    const AgentState* e = w.find(ego);
    const AgentState* b = w.find(c.agent_id);
    if (!e) continue;
    if (w.tick == start) v_ref = e->v;
    o.min_ttc = std::min(o.min_ttc, leading_ttc(w, ego, spec.graph));
    if (b) {
      const Point2 pe = agent_position(*e, spec.graph);
      const Point2 pb = agent_position(*b, spec.graph);
      o.min_distance = std::min(o.min_distance, det::hypot(pe.x - pb.x, pe.y - pb.y));
    }
    if (v_ref > 0.0 && e->v < 0.5 * v_ref) o.yielded = true;
    if (!o.braking_onset && w.tick > start && e->a <= kBrakeOnsetAccel)
      o.braking_onset = static_cast<double>(w.tick - start) * spec.dt;
  }
  o.completed = !o.collided && !trace.empty() && trace.back().tick >= end;
  return o;
}

double alignment(InsightKind insight, Family family, const RolloutOutcome& o) {
  if (family_for(insight) != family) return 0.0;
  const double critical = clamp01((4.0 - o.min_ttc) / 3.0);
  const double close = clamp01((20.0 - o.min_distance) / 15.0);
  const double late = o.braking_onset ? clamp01(*o.braking_onset / 2.0) : 1.0;
  switch (insight) {
    case InsightKind::LateBrakingAtIntersection: return 0.5 * critical + 0.5 * late;
    case InsightKind::TailgatingUnderCutin: return critical;
    case InsightKind::UnsafeMergeResponse: return 0.5 * critical + 0.5 * late;
    case InsightKind::FailureToYield: return 0.5 * close + 0.5 * (o.yielded ? 0.0 : 1.0);
  }
  return 0.0;
}

nlohmann::json CandidateScore::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const RolloutOutcome& o : outcomes) out.push_back(o.to_json());
  return {{"prior", prior},
          {"response_likelihood", response_likelihood},
          {"alignment", alignment},
          {"total", total},
          {"rollouts", out}};
}

CandidateScore score_candidate(const BVCandidate& c, const InsightTag& insight, const RolloutEngine& engine,
                               const ScenarioSpec& base, int k, std::uint64_t seed) {
  if (k < 1) throw Error(ErrorCode::ConfigError, "rollout count must be >= 1");
  CandidateScore sc;
  if (!feasible(c, base)) return sc;
  sc.prior = smoothness(c.trajectory, base.dt);
  const ScenarioSpec spec = emit_scenario(base, c);
  int completed = 0;
  double align = 0.0;
  for (int i = 0; i < k; ++i) {
    const auto trace = engine.rollout(spec, seed + static_cast<std::uint64_t>(i));
    RolloutOutcome o = summarize_rollout(trace, spec, c);
    completed += o.completed ? 1 : 0;
    align += alignment(insight.kind, c.family, o);
    sc.outcomes.push_back(std::move(o));
  }
  sc.response_likelihood = static_cast<double>(completed) / static_cast<double>(k);
  sc.alignment = align / static_cast<double>(k);
  sc.total = sc.prior * sc.response_likelihood * sc.alignment;
  return sc;
}

OptimizeResult optimize(std::span<const BVCandidate> grid, const InsightTag& insight, const RolloutEngine& engine,
                        const ScenarioSpec& base, int k, std::uint64_t seed, unsigned threads) {
  if (grid.empty()) throw Error(ErrorCode::EmptyGrid, "candidate grid is empty");
  OptimizeResult r;
  r.scores.resize(grid.size());
  std::vector<std::exception_ptr> errors(grid.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < grid.size();) {
      try {
        r.scores[i] = score_candidate(grid[i], insight, engine, base, k, seed);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, grid.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (std::size_t i = 1; i < grid.size(); ++i)
    if (r.scores[i].total > r.scores[r.index].total) r.index = i;
  r.winner = grid[r.index];
  return r;
}

std::vector<BVCandidate> make_grid(Family family, const ScenarioSpec& base) {
  const AgentId id = free_agent_id(base);
  const double gaps[] = {15.0, 25.0, 40.0};
  const double decels[] = {3.0, 5.0, 7.0};
  std::vector<BVCandidate> grid;
  if (family != Family::CrossPath) {
    for (double gap : gaps)
      for (double decel : decels)
        for (Tick start : {Tick{40}, Tick{80}, Tick{120}}) grid.push_back(realize(family, {gap, 0.0, decel, start}, base, id));
    return grid;
  }
  // time the launch around the ego's arrival at the conflict point
  const AgentState& ego = ego_agent(base).state;
  std::optional<std::pair<double, double>> hit;
  for (const Lane& l : base.graph.lanes())
    if ((hit = base.graph.crossing(ego.lane_id, l.id))) break;
  if (!hit) throw Error(ErrorCode::InfeasibleCandidate, "cross_path needs a lane crossing the ego lane");
  const double arrival = ego.v > 0.0 ? (hit->first - ego.s) / ego.v : 0.0;
  for (double gap : gaps)
    for (double accel : decels)
      for (double shift : {-1.0, 0.0, 1.0}) {
        const double launch = arrival - std::sqrt(2.0 * gap / accel) + shift;
        const Tick start = std::max<Tick>(0, static_cast<Tick>(std::lround(launch / base.dt)));
        grid.push_back(realize(family, {gap, 0.0, accel, start}, base, id));
      }
  return grid;
}

void write_batch(const std::filesystem::path& dir, const ScenarioSpec& emitted, const InsightTag& insight,
                 std::span<const BVCandidate> grid, const OptimizeResult& result) {
  std::filesystem::create_directories(dir);
  const std::string file = emitted.name + ".json";
  save_scenario(emitted, dir / file);
  nlohmann::json cands = nlohmann::json::array();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const CandidateParams& p = grid[i].params;
    nlohmann::json c = result.scores[i].to_json();
    c["index"] = i;
    c["family"] = to_string(grid[i].family);
    c["params"] = {{"trigger_gap", p.trigger_gap},
                   {"lateral_offset", p.lateral_offset},
                   {"decel", p.decel},
                   {"start_tick", p.start_tick}};
    cands.push_back(std::move(c));
  }
  write_json_file({{"insight", {{"tag", to_string(insight.kind)}, {"note", insight.note}}},
                   {"winner_index", result.index},
                   {"scenario", file},
                   {"candidates", cands}},
                  dir / "manifest.json");
}

ScenarioSpec crossing_base_scenario() {
  std::vector<Lane> lanes = {straight_lane(0, {0, 0}, {1000, 0}, 3.5, 20.0), straight_lane(1, {0, 3.5}, {1000, 3.5}, 3.5, 20.0),
                             straight_lane(10, {300, -400}, {300, 400})};
  lanes[0].left_neighbor = 1;
  lanes[1].right_neighbor = 0;
  ScenarioSpec spec;
  spec.name = "crossing_base";
  spec.graph = LaneGraph("crossing", std::move(lanes), {});
  spec.max_ticks = 300;
  spec.seed = 5;
  spec.ego_id = 1;
  InitialAgent ego;
  ego.state.agent_id = 1;
  ego.state.kind = AgentKind::PolicyDriven;
  ego.state.lane_id = 0;
  ego.state.s = 50.0;
  ego.state.v = 20.0;
  ego.behavior = {ControllerKind::Behavior, 0};
  InitialAgent other;
  other.state.agent_id = 2;
  other.state.lane_id = 1;
  other.state.s = 0.0;
  other.state.v = 18.0;
  other.behavior = {ControllerKind::Behavior, 0};
  spec.initial_agents = {ego, other};
  spec.termination.route_completion_s = 400.0;
  spec.validate();
  return spec;
}

}  // namespace skylite::curriculum
