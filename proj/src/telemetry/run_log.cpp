#include "skylite/telemetry/run_log.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "skylite/core/error.hpp"
#include "skylite/net/protocol.hpp"
#include "skylite/world/json_io.hpp"
#include "skylite/world/step.hpp"

namespace skylite::telemetry {

namespace fs = std::filesystem;

bool valid_run_id(std::string_view id) {
  if (id.empty() || id.size() > 128 || id.front() == '.') return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-' ||
           c == '.';
  });
}

fs::path run_path(const fs::path& dir, const std::string& id) { return dir / (id + ".jsonl"); }

nlohmann::json list_runs(const fs::path& dir) {
  const fs::path p = dir / "index.json";
  if (!fs::exists(p)) return nlohmann::json::array();
  return read_json_file(p);
}

RunRecorder::RunRecorder(fs::path dir) : dir_(std::move(dir)) {}

RunRecorder::~RunRecorder() {
  try {
    end();
  } catch (...) {
  }
}

void RunRecorder::begin(const std::string& run_id, nlohmann::json meta) {
  if (!valid_run_id(run_id)) throw Error(ErrorCode::ConfigError, "invalid run id '" + run_id + "'");
  end();
  std::lock_guard lock(mu_);
  std::error_code ec;
  fs::create_directories(dir_, ec);
  out_.open(run_path(dir_, run_id), std::ios::binary | std::ios::trunc);
  if (!out_) throw Error(ErrorCode::IoError, "cannot write " + run_path(dir_, run_id).string());
  id_ = run_id;
  entry_ = {{"id", run_id}, {"file", run_id + ".jsonl"}, {"status", "running"}, {"events", 0},
            {"first_seq", nullptr}, {"last_seq", nullptr}, {"last_tick", nullptr}, {"meta", std::move(meta)}};
  write_index();
}

void RunRecorder::record(const TelemetryEvent& e) {
  std::lock_guard lock(mu_);
  if (!out_.is_open()) return;
  out_ << to_json(e).dump() << '\n';
  out_.flush();
  if (entry_["first_seq"].is_null()) entry_["first_seq"] = e.seq;
  entry_["last_seq"] = e.seq;
  entry_["last_tick"] = e.tick;
  entry_["events"] = entry_["events"].get<std::uint64_t>() + 1;
}

void RunRecorder::end() {
  std::lock_guard lock(mu_);
  if (!out_.is_open()) return;
  out_.close();
  entry_["status"] = "complete";
  write_index();
  id_.clear();
}

bool RunRecorder::active() const {
  std::lock_guard lock(mu_);
  return out_.is_open();
}

fs::path RunRecorder::path() const {
  std::lock_guard lock(mu_);
  return id_.empty() ? fs::path{} : run_path(dir_, id_);
}

void RunRecorder::write_index() {
  nlohmann::json idx = list_runs(dir_);
  if (!idx.is_array()) idx = nlohmann::json::array();
  auto it = std::find_if(idx.begin(), idx.end(), [&](const nlohmann::json& e) { return e.value("id", "") == id_; });
  if (it != idx.end()) *it = entry_;
  else idx.push_back(entry_);
  const fs::path tmp = dir_ / "index.json.tmp";
  write_json_file(idx, tmp);
  fs::rename(tmp, dir_ / "index.json");
}

PartialRun load_run_partial(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  PartialRun out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const bool terminated = !in.eof();
    try {
      if (!terminated) throw Error(ErrorCode::ParseError, "truncated line (no newline)");
      out.events.push_back(event_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      out.corrupt_line = n;
      out.error = e.what();
      return out;
    }
  }
  if (n == 0) {
    out.corrupt_line = 1;
    out.error = "empty run log";
  }
  return out;
}

std::vector<TelemetryEvent> load_run(const fs::path& path) {
  PartialRun r = load_run_partial(path);
  if (r.corrupt_line)
    throw Error(ErrorCode::CorruptLine, "line " + std::to_string(*r.corrupt_line) + ": " + r.error);
  return std::move(r.events);
}

std::string digest_hex(std::uint64_t d) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(d));
  return buf;
}

std::uint64_t parse_digest(const std::string& hex) {
  if (hex.size() != 16 || hex.find_first_not_of("0123456789abcdef") != std::string::npos)
    throw Error(ErrorCode::ParseError, "bad digest '" + hex + "'");
  return std::stoull(hex, nullptr, 16);
}

std::vector<std::pair<std::uint64_t, std::uint64_t>> seq_gaps(const std::vector<TelemetryEvent>& events) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
  for (std::size_t i = 1; i < events.size(); ++i)
    if (events[i].seq != events[i - 1].seq + 1) out.emplace_back(events[i - 1].seq, events[i].seq);
  return out;
}

std::vector<HumanActionViolation> uncovered_human_actions(const std::vector<TelemetryEvent>& events) {
  std::map<AgentId, Tick> open;  // agent -> begin tick
  std::vector<HumanActionViolation> out;
  for (const TelemetryEvent& e : events) {
    switch (e.kind) {
      case EventKind::TakeoverBegin: open[e.payload.at("agent_id").get<AgentId>()] = e.tick; break;
      case EventKind::TakeoverEnd: open.erase(e.payload.at("agent_id").get<AgentId>()); break;
      case EventKind::ScenarioLoaded: open.clear(); break;
      case EventKind::TickCommit:
        for (const auto& a : e.payload.at("actions")) {
          const ActionCommand act = action_from_json(a);
          if (act.source != ActionSource::Human) continue;
          auto it = open.find(act.agent_id);
          if (it == open.end() || act.tick < it->second) out.push_back({act.tick, act.agent_id});
        }
        break;
      default: break;
    }
  }
  return out;
}

ReproductionReport reproduce(const std::vector<TelemetryEvent>& events, bool keep_trace) {
  ReproductionReport rep;
  std::optional<ScenarioSpec>& spec = rep.spec;
  WorldState world;
  for (const TelemetryEvent& e : events) {
    if (e.kind == EventKind::ScenarioLoaded) {
      spec = scenario_from_json(e.payload.at("scenario"));
      world = initial_world(*spec);
      rep.trace.clear();
      if (keep_trace) rep.trace.push_back(world);
      continue;
    }
    if (e.kind != EventKind::TickCommit) continue;
    const std::uint64_t logged = parse_digest(e.payload.at("digest").get<std::string>());
    rep.logged.push_back(logged);
    ++rep.ticks_checked;
    if (!spec || world.tick != e.tick) {
      rep.recomputed.push_back(0);
      rep.mismatched_ticks.push_back(e.tick);
      continue;
    }
    std::vector<ActionCommand> actions;
    for (const auto& a : e.payload.at("actions")) actions.push_back(action_from_json(a));
    world = step(world, actions, step_context(*spec));
    if (keep_trace) rep.trace.push_back(world);
    const std::uint64_t got = net::state_digest(world);
    rep.recomputed.push_back(got);
    if (got != logged) rep.mismatched_ticks.push_back(e.tick);
  }
  return rep;
}

}  // namespace skylite::telemetry
