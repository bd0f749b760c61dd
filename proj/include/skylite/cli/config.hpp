#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace skylite::cli {

struct KeySpec {
  std::string key;  // config-file spelling; the flag is --key with '_' -> '-'
  std::string default_value;
  std::string help;
};

/// Every configurable key. Anything else is a ConfigError.
const std::vector<KeySpec>& known_keys();
std::string flag_name(const std::string& key);

enum class Source { Default, File, Env, Flag };
std::string_view to_string(Source s);

using Values = std::map<std::string, std::string>;

/// Merged settings: flags > env > file > defaults.
class CliConfig {
 public:
  /// Throws ConfigError on unknown keys.
  static CliConfig merge(const Values& flags, const Values& env, const Values& file);

  const std::string& get(const std::string& key) const;
  /// Empty values read as absent.
  std::optional<std::string> maybe(const std::string& key) const;
  long long get_int(const std::string& key) const;  // throws ConfigError
  std::optional<long long> maybe_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::uint16_t get_port(const std::string& key) const;
  Source source(const std::string& key) const;

  /// The effective config with its sources; the token is redacted.
  nlohmann::json to_json() const;

 private:
  std::map<std::string, std::pair<std::string, Source>> values_;
};

/// `key = value` lines; blank lines and '#' comments ignored. Throws
/// ConfigError naming the line for malformed lines and unknown keys.
Values parse_config_text(const std::string& text);
Values read_config_file(const std::filesystem::path& path);

/// SKYLITE_HOST -> host, SKYLITE_TOKEN -> token.
Values env_values(const std::function<const char*(const char*)>& getenv_fn);

}  // namespace skylite::cli
