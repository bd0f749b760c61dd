#include "skylite/replay/replay.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "skylite/behavior/controller.hpp"
#include "skylite/core/detmath.hpp"
#include "skylite/core/error.hpp"
#include "skylite/world/json_io.hpp"
#include "skylite/world/step.hpp"

namespace skylite::replay {

namespace {

constexpr const char* kHeader = "t,agent_id,x,y,heading,speed";

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
}

double wrap(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
T parse_field(std::string_view f, std::size_t line, const char* name) {
  T v{};
  const auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc() || p != f.data() + f.size()) parse_error(line, std::string("bad ") + name + " '" + std::string(f) + "'");
  return v;
}

}  // namespace

std::vector<TrajectoryRecord> TrajectoryLog::agent(AgentId id) const {
  std::vector<TrajectoryRecord> out;
  for (const auto& r : records)
    if (r.agent_id == id) out.push_back(r);
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
  return out;
}

std::vector<AgentId> TrajectoryLog::agent_ids() const {
  std::set<AgentId> ids;
  for (const auto& r : records) ids.insert(r.agent_id);
  return {ids.begin(), ids.end()};
}

void validate(const TrajectoryLog& log) {
  std::map<AgentId, double> last;
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    const TrajectoryRecord& r = log.records[i];
    if (!std::isfinite(r.t) || !std::isfinite(r.x) || !std::isfinite(r.y) || !std::isfinite(r.heading) ||
        !std::isfinite(r.speed))
      throw Error(ErrorCode::ParseError, "record " + std::to_string(i + 1) + ": non-finite value");
    auto it = last.find(r.agent_id);
    if (it != last.end() && !(r.t > it->second))
      throw Error(ErrorCode::NonMonotoneTime, "agent " + std::to_string(r.agent_id) + ": time " + fmt(r.t) +
                                                  " does not follow " + fmt(it->second));
    last[r.agent_id] = r.t;
  }
}

TrajectoryLog parse_csv(const std::string& text) {
  TrajectoryLog log;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header) {
      if (n == 1 && line.rfind("# ", 0) == 0) {
        log.source_meta = line.substr(2);
        continue;
      }
      if (line != kHeader) parse_error(n, std::string("expected header '") + kHeader + "'");
      header = true;
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos; rest.remove_prefix(pos + 1))
      f.push_back(rest.substr(0, pos));
    f.push_back(rest);
    if (f.size() != 6) parse_error(n, "expected 6 fields, got " + std::to_string(f.size()));
    TrajectoryRecord r;
    r.t = parse_field<double>(f[0], n, "t");
    r.agent_id = parse_field<AgentId>(f[1], n, "agent_id");
    r.x = parse_field<double>(f[2], n, "x");
    r.y = parse_field<double>(f[3], n, "y");
    r.heading = parse_field<double>(f[4], n, "heading");
    r.speed = parse_field<double>(f[5], n, "speed");
    for (double v : {r.t, r.x, r.y, r.heading, r.speed})
      if (!std::isfinite(v)) parse_error(n, "non-finite value");
    log.records.push_back(r);
  }
  if (!header) parse_error(n + 1, "missing header");
  validate(log);
  return log;
}

TrajectoryLog parse_json(const nlohmann::json& j) {
  TrajectoryLog log;
  try {
    log.source_meta = j.value("source_meta", std::string{});
    std::size_t i = 0;
    for (const auto& r : j.at("records")) {
      ++i;
      auto num = [&](const char* k) {
        if (!r.at(k).is_number()) throw Error(ErrorCode::ParseError, "record " + std::to_string(i) + ": " + k + " is not a number");
        return r.at(k).get<double>();
      };
      log.records.push_back({num("t"), r.at("agent_id").get<AgentId>(), num("x"), num("y"), num("heading"), num("speed")});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("trajectory json: ") + e.what());
  }
  validate(log);
  return log;
}

std::string to_csv(const TrajectoryLog& log) {
  std::string out;
  if (!log.source_meta.empty()) out += "# " + log.source_meta + "\n";
  out += kHeader;
  out += "\n";
  for (const auto& r : log.records)
    out += fmt(r.t) + "," + std::to_string(r.agent_id) + "," + fmt(r.x) + "," + fmt(r.y) + "," + fmt(r.heading) + "," +
           fmt(r.speed) + "\n";
  return out;
}

nlohmann::json to_json(const TrajectoryLog& log) {
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& r : log.records)
    recs.push_back({{"t", r.t}, {"agent_id", r.agent_id}, {"x", r.x}, {"y", r.y}, {"heading", r.heading}, {"speed", r.speed}});
  return {{"source_meta", log.source_meta}, {"records", recs}};
}

TrajectoryLog ingest(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  if (path.extension() == ".json") {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
    return parse_json(j);
  }
  return parse_csv(ss.str());
}

void export_log(const TrajectoryLog& log, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  if (path.extension() == ".json")
    f << to_json(log).dump(1) << "\n";
  else
    f << to_csv(log);
}

PoseSample interpolate(const std::vector<TrajectoryRecord>& rs, double t) {
  if (rs.empty()) throw Error(ErrorCode::ConfigError, "no records to interpolate");
  auto knot = [](const TrajectoryRecord& r) { return PoseSample{r.x, r.y, r.heading, r.speed}; };
  if (t <= rs.front().t) return knot(rs.front());
  if (t >= rs.back().t) return knot(rs.back());
  const auto hi = std::upper_bound(rs.begin(), rs.end(), t, [](double v, const auto& r) { return v < r.t; });
  const TrajectoryRecord& a = *(hi - 1);
  const TrajectoryRecord& b = *hi;
  const double u = (t - a.t) / (b.t - a.t);
  return {a.x + u * (b.x - a.x), a.y + u * (b.y - a.y), wrap(a.heading + u * wrap(b.heading - a.heading)),
          a.speed + u * (b.speed - a.speed)};
}

Resampled resample(const TrajectoryLog& log, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::ConfigError, "dt must be > 0");
  Resampled out;
  out.dt = dt;
  for (AgentId id : log.agent_ids()) {
    const auto rs = log.agent(id);
    const double t0 = rs.front().t, t1 = rs.back().t;
    if (t1 - t0 < dt) throw Error(ErrorCode::ConfigError, "agent " + std::to_string(id) + " spans less than dt");
    // grid ticks inside [t0, t1], allowing for rounding in t / dt
    const Tick k0 = static_cast<Tick>(std::ceil(t0 / dt - 1e-9));
    const Tick k1 = static_cast<Tick>(std::floor(t1 / dt + 1e-9));
    Track tr;
    tr.first_tick = k0;
    for (Tick k = k0; k <= k1; ++k) tr.samples.push_back(interpolate(rs, static_cast<double>(k) * dt));
    out.tracks[id] = std::move(tr);
  }
  return out;
}

ReplayResult replay(const Resampled& src, const LaneGraph& graph, const std::string& name) {
  if (src.tracks.empty()) throw Error(ErrorCode::EmptyTrace, "nothing to replay");
  Tick lo = src.tracks.begin()->second.first_tick, hi = lo;
  for (const auto& [id, tr] : src.tracks) {
    lo = std::min(lo, tr.first_tick);
    hi = std::max(hi, tr.last_tick());
  }
  ReplayResult r;
  r.tick_offset = lo;
  ScenarioSpec& spec = r.spec;
  spec.name = name;
  spec.graph = graph;
  spec.dt = src.dt;
  spec.max_ticks = hi - lo;
  spec.termination.collision_ends_episode = false;
  for (const auto& [id, tr] : src.tracks) {
    std::vector<ScriptSample> script;
    for (Tick k = lo; k <= hi; ++k) {
      const Tick idx = std::clamp(k, tr.first_tick, tr.last_tick()) - tr.first_tick;
      const PoseSample& p = tr.samples[static_cast<std::size_t>(idx)];
      const LaneProjection pr = graph.project(Point2{p.x, p.y});
      if (pr.residual > kOffMapResidual)
        throw Error(ErrorCode::OffMapPoint, "agent " + std::to_string(id) + " at tick " + std::to_string(k) + " is " +
                                                std::to_string(pr.residual) + " m from the nearest lane");
      script.push_back({k - lo, pr.lane_id, pr.s, pr.d, std::max(0.0, p.speed), p.heading});
    }
    InitialAgent ia;
    ia.state.agent_id = id;
    ia.state.kind = AgentKind::ScriptedReplay;
    ia.state.lane_id = script[0].lane_id;
    ia.state.s = script[0].s;
    ia.state.d = script[0].d;
    ia.state.v = script[0].v;
    ia.state.heading = script[0].heading;
    ia.behavior = {ControllerKind::Script, 0};
    spec.initial_agents.push_back(ia);
    spec.scripts[id] = std::move(script);
  }
  spec.validate();
  r.trace = run_episode(spec);
  return r;
}

FidelityReport fidelity(const ReplayResult& rep, const Resampled& ref) {
  FidelityReport out;
  double total = 0.0;
  for (const auto& [id, tr] : ref.tracks) {
    AgentFidelity af;
    af.agent_id = id;
    double err = 0.0, sq = 0.0;
    for (Tick k = tr.first_tick; k <= tr.last_tick(); ++k) {
      const Tick i = k - rep.tick_offset;
      if (i < 0 || i >= static_cast<Tick>(rep.trace.size())) continue;
      const AgentState* a = rep.trace[static_cast<std::size_t>(i)].find(id);
      if (!a) continue;
      const PoseSample& p = tr.samples[static_cast<std::size_t>(k - tr.first_tick)];
      const Point2 q = agent_position(*a, rep.spec.graph);
      const double e = det::hypot(q.x - p.x, q.y - p.y);
      err += e;
      af.max_error = std::max(af.max_error, e);
      sq += (a->v - p.speed) * (a->v - p.speed);
      ++af.samples;
    }
    if (af.samples == 0) throw Error(ErrorCode::EmptyTrace, "agent " + std::to_string(id) + " never overlaps the replay");
    af.mean_error = err / static_cast<double>(af.samples);
    af.speed_rms = std::sqrt(sq / static_cast<double>(af.samples));
    total += std::exp(-af.mean_error / 1.0);
    out.agents.push_back(af);
  }
  out.score = out.agents.empty() ? 0.0 : total / static_cast<double>(out.agents.size());
  return out;
}

nlohmann::json FidelityReport::to_json() const {
  nlohmann::json a = nlohmann::json::array();
  for (const AgentFidelity& f : agents)
    a.push_back({{"agent_id", f.agent_id},
                 {"samples", f.samples},
                 {"mean_error", f.mean_error},
                 {"max_error", f.max_error},
                 {"speed_rms", f.speed_rms}});
  return {{"score", score}, {"agents", a}};
}

double mean_residual(const TrajectoryLog& log, const LaneGraph& graph) {
  if (log.records.empty()) throw Error(ErrorCode::EmptyTrace, "empty trajectory log");
  double sum = 0.0;
  for (const auto& r : log.records) sum += graph.project(Point2{r.x, r.y}).residual;
  return sum / static_cast<double>(log.records.size());
}

std::string match_map(const TrajectoryLog& log, const std::vector<std::pair<std::string, LaneGraph>>& graphs) {
  if (graphs.empty()) throw Error(ErrorCode::NoPlausibleMap, "no lane graphs available");
  std::vector<std::pair<std::string, const LaneGraph*>> sorted;
  for (const auto& [id, g] : graphs) sorted.emplace_back(id, &g);
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  const std::string* best = nullptr;
  double best_res = kOffMapResidual;
  for (const auto& [id, g] : sorted) {
    const double res = mean_residual(log, *g);
    if (res < best_res || (!best && res <= kOffMapResidual)) {
      best = &id;
      best_res = res;
    }
  }
  if (!best) throw Error(ErrorCode::NoPlausibleMap, "every lane graph is more than 5 m from the log on average");
  return *best;
}

std::vector<std::pair<std::string, LaneGraph>> load_graph_dir(const std::filesystem::path& dir) {
  std::vector<std::pair<std::string, LaneGraph>> out;
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::IoError, dir.string() + " is not a directory");
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.path().extension() == ".json") out.emplace_back(e.path().stem().string(), load_lane_graph(e.path()));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

}  // namespace skylite::replay
