#include "skylite/haim/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <random>

#include "skylite/core/error.hpp"
#include "skylite/world/json_io.hpp"
#include "skylite/world/metrics.hpp"
#include "skylite/world/safety.hpp"
#include "skylite/world/step.hpp"

namespace skylite::haim {

namespace {

using json = nlohmann::json;

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1p-53; }
double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * unit(rng); }

std::size_t sample(std::span<const double> p, std::mt19937_64& rng) {
  const double u = unit(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  // rounding left a sliver above the cumulative sum: last action with mass
  for (std::size_t i = p.size(); i-- > 0;)
    if (p[i] > 0.0) return i;
  return 0;
}

struct Window {
  Tick begin, end;
  double accel;
};

std::vector<Window> brake_schedule(const LeadDisturbance& d, double dt, std::mt19937_64& rng) {
  std::vector<Window> out;
  for (int i = 0; i < d.events; ++i) {
    const Tick begin = d.earliest + static_cast<Tick>(unit(rng) * static_cast<double>(d.latest - d.earliest + 1));
    const Tick len = static_cast<Tick>(std::llround(uniform(rng, d.duration_min, d.duration_max) / dt));
    out.push_back({begin, begin + len, uniform(rng, d.brake_min, d.brake_max)});
  }
  return out;
}

double lead_accel(const AgentState& a, const LeadDisturbance& d, const std::vector<Window>& sched, Tick t) {
  for (const Window& w : sched)
    if (t >= w.begin && t < w.end) return w.accel;
  return std::clamp(0.5 * (d.cruise_speed - a.v), -2.0, 1.5);
}

double expected(std::span<const double> pi, const CriticSet& c, std::size_t s, double (CriticSet::*q)(std::size_t, std::size_t) const) {
  double v = 0.0;
  for (std::size_t a = 0; a < pi.size(); ++a) v += pi[a] * (c.*q)(s, a);
  return v;
}

// follower deceleration beyond the comfortable limit
double disturbance_cost(const WorldState& w, const AgentState& ego, const ScenarioSpec& spec) {
  auto f = find_follower(w, ego, ego.lane_id, spec.graph, spec.behavior.leader_horizon);
  if (!f) return 0.0;
  const double a = w.agents[f->index].a;
  return std::max(0.0, -a - spec.behavior.idm.b);
}

SegmentStep segment_step(const WorldState& w, AgentId ego, const ActionCommand& cmd, const ScenarioSpec& spec) {
  const AgentState& a = *w.find(ego);
  return {w.tick, a.s, a.v, cmd.accel, cmd.source, leading_ttc(w, ego, spec.graph, spec.behavior.leader_horizon)};
}

json segment_json(const std::vector<SegmentStep>& seg) {
  json out = json::array();
  for (const SegmentStep& s : seg)
    out.push_back({{"tick", s.tick}, {"s", s.s}, {"v", s.v}, {"accel", s.accel},
                   {"source", std::string(to_string(s.source))},
                   {"ttc", std::isinf(s.ttc) ? json(nullptr) : json(s.ttc)}});
  return out;
}

}  // namespace

Mentor guardian_mentor(double ttc_threshold) {
  return [ttc_threshold](const WorldState& w, AgentId ego, const ScenarioSpec& spec) {
    return guardian_policy(observe(w, ego, spec), spec.behavior.idm, ttc_threshold, spec.limits);
  };
}

Mentor absent_mentor() {
  return [](const WorldState&, AgentId, const ScenarioSpec&) { return std::optional<ActionCommand>{}; };
}

std::span<const double> Theta::row(std::size_t state) const {
  const std::size_t n = actions.size();
  if ((state + 1) * n > table.size())
    throw Error(ErrorCode::MissingCriticEntry, "policy table has no state " + std::to_string(state));
  return std::span<const double>(table).subspan(state * n, n);
}

std::size_t Theta::greedy(std::size_t state) const {
  const auto r = row(state);
  return static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
}

Theta uniform_theta(const StateGrid& grid, const DiscreteActionSet& actions) {
  Theta t{grid, actions, std::vector<double>(grid.size() * actions.size(), 1.0 / static_cast<double>(actions.size()))};
  return t;
}

Theta theta_from_critics(const CriticSet& critics, const LearningConfig& cfg, const DiscreteActionSet& actions) {
  Theta t{cfg.grid, actions, {}};
  t.table.reserve(critics.states() * critics.actions());
  for (std::size_t s = 0; s < critics.states(); ++s) {
    const Distribution p = optimal_policy(s, critics, cfg);
    t.table.insert(t.table.end(), p.begin(), p.end());
  }
  return t;
}

void save_theta(const Theta& theta, const std::filesystem::path& path) {
  std::filesystem::path bin = path;
  bin.replace_extension(".bin");
  json actions = json::array();
  for (const DiscreteAction& a : theta.actions.actions)
    actions.push_back({{"accel", a.accel}, {"intent", std::string(to_string(a.intent))}});
  const json header = {{"format", "skylite-theta"},
                       {"version", 1},
                       {"data", bin.filename().string()},
                       {"dtype", "f64le"},
                       {"shape", {theta.grid.size(), theta.actions.size()}},
                       {"state_index", "(gap_bin * speed_bins + speed_bin) * ttc_bins + ttc_bin"},
                       {"bins",
                        {{"gap_edges", theta.grid.gap_edges},
                         {"speed_edges", theta.grid.speed_edges},
                         {"ttc_edges", theta.grid.ttc_edges}}},
                       {"actions", actions}};
  write_json_file(header, path);
  std::ofstream out(bin, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + bin.string());
  std::vector<unsigned char> bytes;
  bytes.reserve(theta.table.size() * 8);
  for (double d : theta.table) {
    const auto u = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<unsigned char>(u >> (8 * i)));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + bin.string());
}

Theta load_theta(const std::filesystem::path& path) {
  const json h = read_json_file(path);
  Theta t;
  try {
    if (h.at("format") != "skylite-theta") throw Error(ErrorCode::ParseError, "not a theta header");
    t.grid.gap_edges = h.at("bins").at("gap_edges").get<std::vector<double>>();
    t.grid.speed_edges = h.at("bins").at("speed_edges").get<std::vector<double>>();
    t.grid.ttc_edges = h.at("bins").at("ttc_edges").get<std::vector<double>>();
    for (const json& a : h.at("actions"))
      t.actions.actions.push_back({a.at("accel").get<double>(), lane_intent_from_string(a.at("intent").get<std::string>())});
    const std::filesystem::path bin = path.parent_path() / h.at("data").get<std::string>();
    std::ifstream in(bin, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + bin.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::size_t n = t.grid.size() * t.actions.size();
    if (bytes.size() != n * 8)
      throw Error(ErrorCode::ParseError, "theta table holds " + std::to_string(bytes.size()) + " bytes, header implies " +
                                             std::to_string(n * 8));
    t.table.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t u = 0;
      for (int k = 0; k < 8; ++k) u |= static_cast<std::uint64_t>(bytes[i * 8 + static_cast<std::size_t>(k)]) << (8 * k);
      t.table[i] = std::bit_cast<double>(u);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("theta header: ") + e.what());
  }
  return t;
}

json to_json(const PreferencePair& p) {
  return {{"episode", p.episode},
          {"takeover_tick", p.takeover_tick},
          {"label", p.post_preferred ? "post" : "pre"},
          {"pre", segment_json(p.pre)},
          {"post", segment_json(p.post)}};
}

json to_json(const EpisodeLog& e) {
  return {{"episode", e.episode},
          {"ticks", e.ticks},
          {"interventions", e.interventions},
          {"takeover_events", e.takeover_events},
          {"collisions", e.collisions},
          {"safety_violation", e.safety_violations},
          {"success", e.success},
          {"route_completion", e.route_completion},
          {"disturbance_rate", e.disturbance_rate},
          {"average_speed", e.average_speed},
          {"min_ttc", std::isinf(e.min_ttc) ? json(nullptr) : json(e.min_ttc)},
          {"rejected_mass", e.rejected_mass},
          {"samples", e.samples}};
}

TrainResult train(const ScenarioSpec& spec, const Mentor& mentor, const TrainOptions& opt) {
  const LearningConfig& cfg = opt.cfg;
  cfg.validate();
  spec.validate();
  const AgentId ego = spec.resolved_ego();
  const DiscreteActionSet actions = make_action_set(cfg.accel_levels, spec.limits);
  const StepContext ctx = step_context(spec);

  TrainResult res;
  res.critics = CriticSet(cfg.grid.size(), actions.size());
  res.theta = uniform_theta(cfg.grid, actions);
  CriticSet& Q = res.critics;
  std::uint64_t samples = 0;

  for (int ep = 0; ep < cfg.episodes; ++ep) {
    std::mt19937_64 rng(opt.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(ep));
    std::vector<Window> sched;
    if (opt.disturbance) sched = brake_schedule(*opt.disturbance, spec.dt, rng);

    WorldState w = initial_world(spec);
    std::vector<WorldState> trace{w};
    std::vector<SegmentStep> steps;
    std::vector<Tick> takeover_starts;
    EpisodeLog log;
    log.episode = ep;
    bool mentor_was_active = false;
    double f_sum = 0.0;
    int active_steps = 0;

    for (Tick t = 0; t < spec.max_ticks; ++t) {
      const Observation o = observe_ego(w, ego, spec);
      const std::size_t s = cfg.grid.index(o.gap, o.speed, o.ttc);
      const auto pi = res.theta.row(s);
      std::optional<ActionCommand> h = mentor(w, ego, spec);
      if (h) {
        h->agent_id = ego;
        h->tick = w.tick;
        h->source = ActionSource::Human;
      }
      const MixedPolicyContext mctx = build_context(pi, actions, h.has_value(), h, cfg.eta);
      const std::size_t a_av = sample(pi, rng);
      const bool intervened = h && mctx.I[a_av] == 1;
      if (h) {
        f_sum += mctx.F;
        ++active_steps;
        if (!mentor_was_active) takeover_starts.push_back(w.tick);
      }
      mentor_was_active = h.has_value();

      ActionCommand ego_cmd = intervened ? *h
                                         : ActionCommand{ego, w.tick, actions.actions[a_av].accel,
                                                         actions.actions[a_av].intent, ActionSource::Policy};
      if (intervened) ++log.interventions;
      steps.push_back(segment_step(w, ego, ego_cmd, spec));

      std::vector<ActionCommand> cmds;
      cmds.reserve(w.agents.size());
      for (const AgentState& a : w.agents) {
        if (a.agent_id == ego) {
          cmds.push_back(ego_cmd);
        } else if (opt.disturbance && a.agent_id == opt.disturbance->agent) {
          cmds.push_back({a.agent_id, w.tick, lead_accel(a, *opt.disturbance, sched, w.tick), LaneIntent::Keep,
                          ActionSource::BehaviorModel});
        } else {
          cmds.push_back(behavior_action(w, a.agent_id, spec));
        }
      }
      WorldState next = step(w, cmds, ctx);
      ++samples;

      const AgentState& ego_next = *next.find(ego);
      const bool crashed = std::any_of(next.collisions_this_tick.begin(), next.collisions_this_tick.end(),
                                       [&](auto p) { return p.first == ego || p.second == ego; });
      const double c_ex = intervened ? cfg.ex_cost : 0.0;
      const double c_im = disturbance_cost(next, ego_next, spec);
      double v_ex = 0.0, v_im = 0.0, v_hat = 0.0;
      if (!crashed) {
        const Observation o2 = observe_ego(next, ego, spec);
        const std::size_t s2 = cfg.grid.index(o2.gap, o2.speed, o2.ttc);
        const auto pi2 = res.theta.row(s2);
        v_ex = expected(pi2, Q, s2, &CriticSet::q_ex);
        v_im = expected(pi2, Q, s2, &CriticSet::q_im);
        v_hat = expected(pi2, Q, s2, &CriticSet::q_hat);
      }
      const double lr = cfg.learning_rate, g = cfg.discount;
      Q.q_ex(s, a_av) += lr * (c_ex + g * v_ex - Q.q_ex(s, a_av));
      Q.q_im(s, a_av) += lr * (c_im + g * v_im - Q.q_im(s, a_av));
      if (intervened) {
        const std::size_t a_h = actions.nearest(h->accel, h->lane_intent);
        Q.q_hat(s, a_h) += lr * (1.0 - Q.q_hat(s, a_h));
        Q.q_hat(s, a_av) += lr * (-1.0 - Q.q_hat(s, a_av));
      } else {
        Q.q_hat(s, a_av) += lr * (g * v_hat - Q.q_hat(s, a_av));
      }

      w = std::move(next);
      trace.push_back(w);
      if (crashed && spec.termination.collision_ends_episode) break;
      if (ego_next.odometer >= spec.termination.route_completion_s) break;
    }

    Q.require_finite();
    res.theta = theta_from_critics(Q, cfg, actions);

    const MetricsReport m = episode_metrics(trace, spec);
    log.ticks = w.tick;
    log.takeover_events = static_cast<int>(takeover_starts.size());
    log.collisions = m.collision_count;
    log.safety_violations = m.safety_violation_count;
    log.success = m.success;
    log.route_completion = m.route_completion;
    log.disturbance_rate = m.disturbance_rate;
    log.average_speed = m.average_speed;
    log.min_ttc = m.min_ttc;
    log.rejected_mass = active_steps ? f_sum / active_steps : 0.0;
    log.samples = samples;

    for (Tick b : takeover_starts) {
      PreferencePair p;
      p.episode = ep;
      p.takeover_tick = b;
      for (const SegmentStep& st : steps) {
        if (st.tick >= b - opt.pair_window && st.tick <= b) p.pre.push_back(st);
        if (st.tick >= b && st.tick <= b + opt.pair_window) p.post.push_back(st);
      }
      res.pairs.push_back(std::move(p));
    }
    res.log.push_back(log);
    if (opt.on_episode) opt.on_episode(log);
  }
  return res;
}

ScenarioSpec toy_two_vehicle_scenario() {
  ScenarioSpec spec;
  spec.name = "toy_two_vehicle";
  spec.graph = straight_road("toy_straight", 1, 3000.0);
  InitialAgent ego;
  ego.state.agent_id = 1;
  ego.state.kind = AgentKind::PolicyDriven;
  ego.state.s = 20.0;
  ego.state.v = 25.0;
  ego.behavior = {ControllerKind::Policy, 0};
  InitialAgent lead;
  lead.state.agent_id = 2;
  lead.state.s = 60.0;
  lead.state.v = 15.0;
  spec.initial_agents = {ego, lead};
  spec.ego_id = 1;
  spec.max_ticks = 400;
  spec.termination.route_completion_s = 250.0;
  spec.seed = 1;
  return spec;
}

LeadDisturbance toy_disturbance() {
  LeadDisturbance d;
  d.cruise_speed = 15.0;
  return d;
}

ActionCommand PolicyController::act(const WorldState& world, AgentId agent, const ScenarioSpec& spec) {
  const Observation o = observe_ego(world, agent, spec);
  const std::size_t s = theta_.grid.index(o.gap, o.speed, o.ttc);
  const DiscreteAction& a = theta_.actions.actions.at(theta_.greedy(s));
  return {agent, world.tick, a.accel, a.intent, ActionSource::Policy};
}

}  // namespace skylite::haim
