#include "skylite/telemetry/events.hpp"

#include <algorithm>
#include <array>

#include "skylite/core/error.hpp"

namespace skylite::telemetry {

namespace {
constexpr std::array<std::pair<EventKind, std::string_view>, 7> kNames{{
    {EventKind::AgentState, "agent_state"},
    {EventKind::TakeoverBegin, "takeover_begin"},
    {EventKind::TakeoverEnd, "takeover_end"},
    {EventKind::Metric, "metric"},
    {EventKind::ScenarioLoaded, "scenario_loaded"},
    {EventKind::Desync, "desync"},
    {EventKind::TickCommit, "tick_commit"},
}};
}  // namespace

std::string_view to_string(EventKind k) {
  for (const auto& [kind, name] : kNames)
    if (kind == k) return name;
  return "?";
}

EventKind event_kind_from_string(std::string_view s) {
  for (const auto& [kind, name] : kNames)
    if (name == s) return kind;
  throw Error(ErrorCode::ParseError, "unknown event kind '" + std::string(s) + "'");
}

nlohmann::json to_json(const TelemetryEvent& e) {
  return {{"v", kSchemaVersion}, {"seq", e.seq}, {"tick", e.tick}, {"kind", to_string(e.kind)}, {"payload", e.payload}};
}

TelemetryEvent event_from_json(const nlohmann::json& j) {
  try {
    if (j.at("v").get<int>() != kSchemaVersion)
      throw Error(ErrorCode::ParseError, "unsupported event schema v" + j.at("v").dump());
    TelemetryEvent e;
    e.seq = j.at("seq").get<std::uint64_t>();
    e.tick = j.at("tick").get<Tick>();
    e.kind = event_kind_from_string(j.at("kind").get<std::string>());
    e.payload = j.at("payload");
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::ParseError, std::string("event: ") + ex.what());
  }
}

EventFilter parse_filter(std::string_view csv) {
  EventFilter f;
  while (!csv.empty()) {
    const auto comma = csv.find(',');
    const auto item = csv.substr(0, comma);
    if (!item.empty()) f.insert(event_kind_from_string(item));
    if (comma == std::string_view::npos) break;
    csv.remove_prefix(comma + 1);
  }
  return f;
}

Subscription::Subscription(EventFilter filter, std::size_t backlog) : filter_(std::move(filter)), backlog_(backlog) {}

bool Subscription::offer(const TelemetryEvent& e) {
  std::function<void()> notify;
  {
    std::lock_guard lock(mu_);
    if (overflowed_ || closed_) return false;
    if (!filter_.empty() && !filter_.count(e.kind)) return true;
    if (queue_.size() >= backlog_) {
      overflowed_ = true;
      queue_.clear();
    } else {
      queue_.push_back(e);
    }
    notify = notify_;
  }
  cv_.notify_all();
  if (notify) notify();
  return true;
}

std::optional<TelemetryEvent> Subscription::next(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] { return overflowed_ || closed_ || !queue_.empty(); });
  if (overflowed_)
    throw Error(ErrorCode::BacklogExceeded, "subscriber fell " + std::to_string(backlog_) + " events behind");
  if (queue_.empty()) return std::nullopt;
  TelemetryEvent e = std::move(queue_.front());
  queue_.pop_front();
  return e;
}

std::optional<TelemetryEvent> Subscription::try_next() { return next(std::chrono::milliseconds(0)); }

bool Subscription::overflowed() const {
  std::lock_guard lock(mu_);
  return overflowed_;
}

bool Subscription::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

void Subscription::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

std::size_t Subscription::pending() const {
  std::lock_guard lock(mu_);
  return queue_.size();
}

void Subscription::set_notify(std::function<void()> fn) {
  std::lock_guard lock(mu_);
  notify_ = std::move(fn);
}

TelemetryEvent EventBus::publish(EventKind kind, Tick tick, nlohmann::json payload) {
  std::lock_guard lock(mu_);
  TelemetryEvent e{++seq_, tick, kind, std::move(payload)};
  for (const Sink& s : sinks_) s(e);
  // overflowed or closed subscriptions are dropped here
  std::erase_if(subs_, [&](const std::shared_ptr<Subscription>& s) { return !s->offer(e); });
  return e;
}

std::shared_ptr<Subscription> EventBus::subscribe(EventFilter filter, std::size_t backlog) {
  auto sub = std::make_shared<Subscription>(std::move(filter), backlog);
  std::lock_guard lock(mu_);
  subs_.push_back(sub);
  return sub;
}

void EventBus::unsubscribe(const std::shared_ptr<Subscription>& sub) {
  sub->close();
  std::lock_guard lock(mu_);
  std::erase(subs_, sub);
}

void EventBus::add_sink(Sink sink) {
  std::lock_guard lock(mu_);
  sinks_.push_back(std::move(sink));
}

void EventBus::clear_sinks() {
  std::lock_guard lock(mu_);
  sinks_.clear();
}

void EventBus::reset_seq() {
  std::lock_guard lock(mu_);
  seq_ = 0;
}

std::uint64_t EventBus::last_seq() const {
  std::lock_guard lock(mu_);
  return seq_;
}

std::size_t EventBus::subscribers() const {
  std::lock_guard lock(mu_);
  return subs_.size();
}

}  // namespace skylite::telemetry
