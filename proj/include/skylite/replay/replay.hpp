#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "skylite/world/lane_graph.hpp"
#include "skylite/world/scenario.hpp"
#include "skylite/world/types.hpp"

namespace skylite::replay {

struct TrajectoryRecord {
  double t = 0.0;  // s
  AgentId agent_id = 0;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // rad
  double speed = 0.0;    // m/s

  bool operator==(const TrajectoryRecord&) const = default;
};

struct TrajectoryLog {
  std::vector<TrajectoryRecord> records;  // file order
  std::string source_meta;

  bool operator==(const TrajectoryLog&) const = default;

  /// Records of one agent in time order.
  std::vector<TrajectoryRecord> agent(AgentId id) const;
  std::vector<AgentId> agent_ids() const;
};

/// CSV: optional "# <meta>" first line, then the header t,agent_id,x,y,heading,speed.
/// JSON: {"source_meta": ..., "records": [{"t", "agent_id", "x", "y", "heading", "speed"}]}.
/// Throws ParseError (with the line or record number), NonMonotoneTime, IoError.
TrajectoryLog parse_csv(const std::string& text);
TrajectoryLog parse_json(const nlohmann::json& j);
std::string to_csv(const TrajectoryLog& log);
nlohmann::json to_json(const TrajectoryLog& log);

/// Picks the format from the extension (.json, else CSV).
TrajectoryLog ingest(const std::filesystem::path& path);
void export_log(const TrajectoryLog& log, const std::filesystem::path& path);

/// Throws ParseError on non-finite values and NonMonotoneTime.
void validate(const TrajectoryLog& log);

struct PoseSample {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double speed = 0.0;
};

/// One agent on the tick grid t = tick * dt.
struct Track {
  Tick first_tick = 0;
  std::vector<PoseSample> samples;

  Tick last_tick() const { return first_tick + static_cast<Tick>(samples.size()) - 1; }
};

struct Resampled {
  double dt = 0.05;
  std::map<AgentId, Track> tracks;
};

/// Linear in x, y and speed; heading the short way round the circle.
/// Knots reproduce their values exactly. `records` must be time ordered.
PoseSample interpolate(const std::vector<TrajectoryRecord>& records, double t);

/// Throws ConfigError when an agent spans less than dt.
Resampled resample(const TrajectoryLog& log, double dt);

inline constexpr double kOffMapResidual = 5.0;  // m

struct ReplayResult {
  ScenarioSpec spec;               // every agent scripted
  std::vector<WorldState> trace;   // tick 0 is the earliest resampled tick
  Tick tick_offset = 0;            // resampled tick of trace tick 0
};

/// Maps every resampled pose onto its nearest lane and replays the agents as
/// scripts. Agents are held at their first/last pose outside their own span.
/// Throws OffMapPoint.
ReplayResult replay(const Resampled& src, const LaneGraph& graph, const std::string& name = "replay");

struct AgentFidelity {
  AgentId agent_id = 0;
  std::size_t samples = 0;
  double mean_error = 0.0;  // m
  double max_error = 0.0;   // m
  double speed_rms = 0.0;   // m/s
};

struct FidelityReport {
  std::vector<AgentFidelity> agents;
  double score = 0.0;  // mean over agents of exp(-mean_error / 1 m)

  nlohmann::json to_json() const;
};

/// Compares each agent over its own span in `reference`.
FidelityReport fidelity(const ReplayResult& replayed, const Resampled& reference);

/// Mean projection residual of every record, per graph.
double mean_residual(const TrajectoryLog& log, const LaneGraph& graph);

/// Graph with the lowest mean residual, ties to the smaller id; a graph whose
/// mean residual exceeds kOffMapResidual is not a candidate. Throws NoPlausibleMap.
std::string match_map(const TrajectoryLog& log, const std::vector<std::pair<std::string, LaneGraph>>& graphs);

/// Every *.json lane graph in `dir`, keyed by file stem.
std::vector<std::pair<std::string, LaneGraph>> load_graph_dir(const std::filesystem::path& dir);

}  // namespace skylite::replay
