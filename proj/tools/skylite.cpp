// skylite: host, join, train, curriculum, replay, metrics.
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "skylite/cli/commands.hpp"
#include "skylite/cli/config.hpp"
#include "skylite/core/error.hpp"

using namespace skylite;
using namespace skylite::cli;

namespace {

struct Sub {
  explicit Sub(CLI::App* a) : app(a) {}
  CLI::App* app;
  std::map<std::string, CLI::Option*> opts;
  std::map<std::string, std::string> vals;
  std::map<std::string, bool> flags;
};

const KeySpec& spec_of(const std::string& key) {
  for (const KeySpec& k : known_keys())
    if (k.key == key) return k;
  throw std::logic_error("no key " + key);
}

void add_keys(Sub& s, std::initializer_list<const char*> keys) {
  for (const char* key : keys) {
    const KeySpec& k = spec_of(key);
    if (k.key == "headless") {
      s.opts[k.key] = s.app->add_flag(flag_name(k.key), s.flags[k.key], k.help);
    } else {
      const std::string help = k.help + (k.default_value.empty() ? "" : " [" + k.default_value + "]");
      s.opts[k.key] = s.app->add_option(flag_name(k.key), s.vals[k.key], help);
    }
  }
}

Values given(const Sub& s) {
  Values v;
  for (const auto& [key, opt] : s.opts) {
    if (opt->count() == 0) continue;
    v[key] = s.flags.count(key) ? (s.flags.at(key) ? "true" : "false") : s.vals.at(key);
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"skylite: distributed multi-agent traffic simulation"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_file;
  app.add_option("--config", config_file, "key = value config file (flags > env > file > defaults)");

  Sub host{app.add_subcommand("host", "run the authoritative simulation, gateway and run log")};
  add_keys(host, {"spec", "seed", "ticks", "bind", "control_port", "telemetry_port", "gateway_port", "deadline_ms",
                  "join_timeout_ms", "wait_clients", "headless", "pace_ms", "run_id", "out", "token"});
  Sub join{app.add_subcommand("join", "join a host as a lockstep client, or relay human commands to its gateway")};
  add_keys(join, {"host", "control_port", "telemetry_port", "gateway_port", "role", "policy", "name", "token"});
  Sub train{app.add_subcommand("train", "mentored tabular training; writes the policy table")};
  add_keys(train, {"spec", "seed", "episodes", "mentor", "out", "bind", "gateway_port", "token"});
  Sub cur{app.add_subcommand("curriculum", "derive a failure insight from a run log and emit a challenge scenario")};
  std::string failure_log;
  cur.app->add_option("failure_log", failure_log, "run log (.jsonl) containing the failure")->required();
  add_keys(cur, {"grid", "out", "rollouts", "seed", "threads"});
  Sub rep{app.add_subcommand("replay", "replay a trajectory log on its best-matching map and score fidelity")};
  std::string traj;
  rep.app->add_option("log", traj, "trajectory log (.csv or .json)")->required();
  add_keys(rep, {"graph_dir", "spec", "dt", "out"});
  Sub met{app.add_subcommand("metrics", "summarize and re-verify a run log")};
  std::string run_file;
  met.app->add_option("run", run_file, "run log (.jsonl)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << nlohmann::json{{"error", "UsageError"}, {"message", e.what()}}.dump() << std::endl;
    return 1;
  }

  Streams io{std::cout, std::cerr, std::cin};
  try {
    Sub* active = nullptr;
    for (Sub* s : {&host, &join, &train, &cur, &rep, &met})
      if (s->app->parsed()) active = s;
    const Values file = config_file.empty() ? Values{} : read_config_file(config_file);
    const CliConfig cfg = CliConfig::merge(given(*active), env_values(&std::getenv), file);
    if (active == &host) return run_host(cfg, io);
    if (active == &join) return run_join(cfg, io);
    if (active == &train) return run_train(cfg, io);
    if (active == &cur) return run_curriculum(cfg, failure_log, io);
    if (active == &rep) return run_replay(cfg, traj, io);
    return run_metrics(cfg, run_file, io);
  } catch (const std::exception& e) {
    std::cerr << error_json(e).dump() << std::endl;
    return 2;
  }
}
