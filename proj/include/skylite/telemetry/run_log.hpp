#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "skylite/telemetry/events.hpp"
#include "skylite/world/scenario.hpp"

namespace skylite::telemetry {

/// Append-only JSON-lines file per run plus index.json in the same directory.
class RunRecorder {
 public:
  explicit RunRecorder(std::filesystem::path dir);
  ~RunRecorder();

  /// Starts <dir>/<id>.jsonl; `meta` lands in the index entry. Throws IoError, ConfigError.
  void begin(const std::string& run_id, nlohmann::json meta = nlohmann::json::object());
  /// Appends one line and flushes it.
  void record(const TelemetryEvent& e);
  void end();

  bool active() const;
  std::filesystem::path path() const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  void write_index();

  std::filesystem::path dir_;
  mutable std::mutex mu_;
  std::ofstream out_;
  std::string id_;
  nlohmann::json entry_;
};

/// Run ids double as file names: [A-Za-z0-9_.-]+, not starting with '.'.
bool valid_run_id(std::string_view id);
std::filesystem::path run_path(const std::filesystem::path& dir, const std::string& id);
/// Contents of index.json, or an empty array.
nlohmann::json list_runs(const std::filesystem::path& dir);

struct PartialRun {
  std::vector<TelemetryEvent> events;  // everything before the first bad line
  std::optional<std::size_t> corrupt_line;  // 1-based
  std::string error;
};

PartialRun load_run_partial(const std::filesystem::path& path);
/// Throws CorruptLine ("line N: ...") or IoError. An empty file is corrupt at line 1.
std::vector<TelemetryEvent> load_run(const std::filesystem::path& path);

std::string digest_hex(std::uint64_t d);
std::uint64_t parse_digest(const std::string& hex);  // throws ParseError

/// Seq numbers that break the +1 chain, as (previous, found).
std::vector<std::pair<std::uint64_t, std::uint64_t>> seq_gaps(const std::vector<TelemetryEvent>& events);

struct HumanActionViolation {
  Tick tick = 0;
  AgentId agent_id = 0;
};

/// Every source=human action in a tick_commit must fall inside [begin, end)
/// of a takeover window for its agent.
std::vector<HumanActionViolation> uncovered_human_actions(const std::vector<TelemetryEvent>& events);

struct ReproductionReport {
  std::size_t ticks_checked = 0;
  std::vector<Tick> mismatched_ticks;
  std::vector<std::uint64_t> logged;      // digest sequence as logged
  std::vector<std::uint64_t> recomputed;  // and as re-simulated
  std::optional<ScenarioSpec> spec;       // last segment's scenario
  std::vector<WorldState> trace;          // last segment, from its initial world; kept on request

  bool ok() const { return ticks_checked > 0 && mismatched_ticks.empty(); }
};

/// Re-simulates each scenario_loaded segment from its scenario and the logged
/// actions, comparing every tick_commit digest.
ReproductionReport reproduce(const std::vector<TelemetryEvent>& events, bool keep_trace = false);

}  // namespace skylite::telemetry
