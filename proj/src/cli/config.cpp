#include "skylite/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "skylite/core/error.hpp"

namespace skylite::cli {

const std::vector<KeySpec>& known_keys() {
  static const std::vector<KeySpec> keys = {
      {"spec", "", "scenario JSON"},
      {"seed", "", "overrides the scenario seed"},
      {"ticks", "", "ticks to run (default: scenario max_ticks)"},
      {"host", "127.0.0.1", "host address (env SKYLITE_HOST)"},
      {"token", "", "shared gateway token (env SKYLITE_TOKEN)"},
      {"bind", "127.0.0.1", "listen address for host and gateway"},
      {"control_port", "7700", "lockstep control port"},
      {"telemetry_port", "7701", "lockstep snapshot port"},
      {"gateway_port", "7702", "HTTP/WebSocket gateway port"},
      {"deadline_ms", "50", "per-tick input deadline"},
      {"join_timeout_ms", "30000", "how long host waits for clients"},
      {"wait_clients", "-1", "clients to wait for (-1: one per slot)"},
      {"headless", "false", "host without the gateway"},
      {"pace_ms", "0", "wall-clock spacing between ticks"},
      {"run_id", "", "run log name (default: run-<utc time>)"},
      {"out", "", "output path (runs dir, theta file, batch dir)"},
      {"role", "behavior", "join role: behavior | policy | human"},
      {"policy", "", "theta file for --role policy"},
      {"name", "client", "client name"},
      {"mentor", "guardian", "train mentor: guardian | live"},
      {"episodes", "300", "training episodes"},
      {"grid", "", "curriculum grid JSON"},
      {"rollouts", "5", "rollouts per curriculum candidate"},
      {"threads", "0", "worker threads (0: hardware)"},
      {"graph_dir", "", "lane graphs for replay map matching"},
      {"dt", "0.05", "replay resampling step, s"},
  };
  return keys;
}

std::string flag_name(const std::string& key) {
  std::string f = key;
  std::replace(f.begin(), f.end(), '_', '-');
  return "--" + f;
}

std::string_view to_string(Source s) {
  switch (s) {
    case Source::Default: return "default";
    case Source::File: return "file";
    case Source::Env: return "env";
    case Source::Flag: return "flag";
  }
  return "?";
}

namespace {
bool known(const std::string& key) {
  const auto& k = known_keys();
  return std::any_of(k.begin(), k.end(), [&](const KeySpec& s) { return s.key == key; });
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}
}  // namespace

CliConfig CliConfig::merge(const Values& flags, const Values& env, const Values& file) {
  CliConfig c;
  for (const KeySpec& k : known_keys()) c.values_[k.key] = {k.default_value, Source::Default};
  auto layer = [&](const Values& v, Source src, const char* what) {
    for (const auto& [key, value] : v) {
      if (!known(key)) throw Error(ErrorCode::ConfigError, std::string("unknown ") + what + " key '" + key + "'");
      c.values_[key] = {value, src};
    }
  };
  layer(file, Source::File, "config");
  layer(env, Source::Env, "environment");
  layer(flags, Source::Flag, "flag");
  return c;
}

const std::string& CliConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorCode::ConfigError, "unknown key '" + key + "'");
  return it->second.first;
}

std::optional<std::string> CliConfig::maybe(const std::string& key) const {
  const std::string& v = get(key);
  if (v.empty()) return std::nullopt;
  return v;
}

long long CliConfig::get_int(const std::string& key) const {
  const std::string& v = get(key);
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size())
    throw Error(ErrorCode::ConfigError, key + " must be an integer, got '" + v + "'");
  return out;
}

std::optional<long long> CliConfig::maybe_int(const std::string& key) const {
  if (get(key).empty()) return std::nullopt;
  return get_int(key);
}

double CliConfig::get_double(const std::string& key) const {
  const std::string& v = get(key);
  double out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size())
    throw Error(ErrorCode::ConfigError, key + " must be a number, got '" + v + "'");
  return out;
}

bool CliConfig::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no" || v.empty()) return false;
  throw Error(ErrorCode::ConfigError, key + " must be true or false, got '" + v + "'");
}

std::uint16_t CliConfig::get_port(const std::string& key) const {
  const long long p = get_int(key);
  if (p < 0 || p > 65535) throw Error(ErrorCode::ConfigError, key + " out of range");
  return static_cast<std::uint16_t>(p);
}

Source CliConfig::source(const std::string& key) const {
  get(key);
  return values_.at(key).second;
}

nlohmann::json CliConfig::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, v] : values_) {
    const bool secret = key == "token" && !v.first.empty();
    j[key] = {{"value", secret ? "<redacted>" : v.first}, {"source", to_string(v.second)}};
  }
  return j;
}

Values parse_config_text(const std::string& text) {
  Values out;
  std::istringstream in(text);
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::ConfigError, "config line " + std::to_string(n) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    if (!known(key))
      throw Error(ErrorCode::ConfigError, "config line " + std::to_string(n) + ": unknown key '" + key + "'");
    out[key] = trim(t.substr(eq + 1));
  }
  return out;
}

Values read_config_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot open config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

Values env_values(const std::function<const char*(const char*)>& getenv_fn) {
  Values v;
  if (const char* h = getenv_fn("SKYLITE_HOST"); h && *h) v["host"] = h;
  if (const char* t = getenv_fn("SKYLITE_TOKEN"); t && *t) v["token"] = t;
  return v;
}

}  // namespace skylite::cli
