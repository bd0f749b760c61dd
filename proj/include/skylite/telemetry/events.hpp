#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "skylite/world/types.hpp"

namespace skylite::telemetry {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::size_t kSubscriberBacklog = 10000;

/// tick_commit carries the tick's committed actions and resulting digest so a
/// run log can be re-simulated.
enum class EventKind { AgentState, TakeoverBegin, TakeoverEnd, Metric, ScenarioLoaded, Desync, TickCommit };

std::string_view to_string(EventKind k);
EventKind event_kind_from_string(std::string_view s);  // throws ParseError

struct TelemetryEvent {
  std::uint64_t seq = 0;
  Tick tick = 0;
  EventKind kind = EventKind::Metric;
  nlohmann::json payload = nlohmann::json::object();

  bool operator==(const TelemetryEvent&) const = default;
};

/// {"v":1,"seq":..,"tick":..,"kind":"..","payload":{..}}
nlohmann::json to_json(const TelemetryEvent& e);
TelemetryEvent event_from_json(const nlohmann::json& j);  // throws ParseError

/// Empty set: every kind.
using EventFilter = std::set<EventKind>;
EventFilter parse_filter(std::string_view csv);  // "metric,agent_state"

/// One subscriber's bounded queue. When a publish would exceed the backlog the
/// queue is dropped and the subscription is marked overflowed; publishers never wait.
class Subscription {
 public:
  explicit Subscription(EventFilter filter, std::size_t backlog = kSubscriberBacklog);

  /// Next event, or nullopt on timeout or after close(). Throws BacklogExceeded
  /// once the subscriber has fallen behind.
  std::optional<TelemetryEvent> next(std::chrono::milliseconds timeout);
  /// Non-blocking variant of next().
  std::optional<TelemetryEvent> try_next();

  bool overflowed() const;
  bool closed() const;
  void close();
  std::size_t pending() const;

  /// Called (without locks held) after each accepted event or overflow.
  void set_notify(std::function<void()> fn);

 private:
  friend class EventBus;
  bool offer(const TelemetryEvent& e);  // false once overflowed or closed

  EventFilter filter_;
  std::size_t backlog_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<TelemetryEvent> queue_;
  bool overflowed_ = false;
  bool closed_ = false;
  std::function<void()> notify_;
};

/// Assigns gapless seq numbers and fans events out. Sinks run synchronously in
/// seq order under the bus lock (the run recorder); subscriptions are buffered.
class EventBus {
 public:
  using Sink = std::function<void(const TelemetryEvent&)>;

  TelemetryEvent publish(EventKind kind, Tick tick, nlohmann::json payload);

  std::shared_ptr<Subscription> subscribe(EventFilter filter = {}, std::size_t backlog = kSubscriberBacklog);
  void unsubscribe(const std::shared_ptr<Subscription>& sub);

  void add_sink(Sink sink);
  void clear_sinks();

  /// The next event will carry seq 1.
  void reset_seq();
  std::uint64_t last_seq() const;
  std::size_t subscribers() const;

 private:
  mutable std::mutex mu_;
  std::uint64_t seq_ = 0;
  std::vector<std::shared_ptr<Subscription>> subs_;
  std::vector<Sink> sinks_;
};

}  // namespace skylite::telemetry
