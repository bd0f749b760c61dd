#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "skylite/cli/config.hpp"

namespace skylite::cli {

struct Streams {
  std::ostream& out;
  std::ostream& err;
  std::istream& in;
};

/// Each returns the process exit code; library errors propagate as Error.
int run_host(const CliConfig& cfg, Streams io);
int run_join(const CliConfig& cfg, Streams io);
int run_train(const CliConfig& cfg, Streams io);
int run_curriculum(const CliConfig& cfg, const std::string& failure_log, Streams io);
int run_replay(const CliConfig& cfg, const std::string& log_path, Streams io);
int run_metrics(const CliConfig& cfg, const std::string& run_file, Streams io);

/// {"error": <code>, "message": ...} for standard error.
nlohmann::json error_json(const std::exception& e);

/// "start 1", "end 1", "input 1 -2 [left|right|keep]", "pause", "resume",
/// "load <name>", or a raw JSON command. Throws ParseError. (The relay also
/// understands "wait <ms>", which pauses reading.)
nlohmann::json parse_human_line(const std::string& line, const std::string& token);

}  // namespace skylite::cli
