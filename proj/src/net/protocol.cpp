#include "skylite/net/protocol.hpp"

#include <bit>
#include <cstring>

#include "skylite/core/error.hpp"
#include "skylite/world/json_io.hpp"

namespace skylite::net {

namespace {

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::uint32_t count(std::size_t min_item_bytes) {
    const std::uint32_t n = u32();
    if (min_item_bytes && n > remaining() / min_item_bytes)
      throw Error(ErrorCode::MalformedFrame, "element count exceeds frame");
    return n;
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw Error(ErrorCode::MalformedFrame, "body shorter than its fields");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

template <typename E>
E checked_enum(std::uint8_t v, std::uint8_t max, const char* what) {
  if (v > max) throw Error(ErrorCode::MalformedFrame, std::string("bad ") + what + " value");
  return static_cast<E>(v);
}

void put_action(Writer& w, const ActionCommand& a) {
  w.i32(a.agent_id);
  w.i64(a.tick);
  w.f64(a.accel);
  w.u8(static_cast<std::uint8_t>(a.lane_intent));
  w.u8(static_cast<std::uint8_t>(a.source));
}

constexpr std::size_t kActionBytes = 4 + 8 + 8 + 1 + 1;

ActionCommand get_action(Reader& r) {
  ActionCommand a;
  a.agent_id = r.i32();
  a.tick = r.i64();
  a.accel = r.f64();
  a.lane_intent = checked_enum<LaneIntent>(r.u8(), 2, "lane intent");
  a.source = checked_enum<ActionSource>(r.u8(), 3, "action source");
  return a;
}

void put_world(Writer& w, const WorldState& ws) {
  w.i64(ws.tick);
  w.f64(ws.sim_time);
  w.u64(ws.rng_counter);
  w.u32(static_cast<std::uint32_t>(ws.agents.size()));
  for (const AgentState& a : ws.agents) {
    w.i32(a.agent_id);
    w.u8(static_cast<std::uint8_t>(a.kind));
    w.i32(a.lane_id);
    w.f64(a.s);
    w.f64(a.d);
    w.f64(a.v);
    w.f64(a.a);
    w.f64(a.heading);
    w.f64(a.length);
    w.f64(a.width);
    w.u8(static_cast<std::uint8_t>(a.lane_change));
    w.f64(a.lane_change_progress);
    w.f64(a.odometer);
  }
  w.u32(static_cast<std::uint32_t>(ws.collisions_this_tick.size()));
  for (auto [lo, hi] : ws.collisions_this_tick) {
    w.i32(lo);
    w.i32(hi);
  }
}

constexpr std::size_t kAgentBytes = 4 + 1 + 4 + 8 * 7 + 1 + 8 * 2;

WorldState get_world(Reader& r) {
  WorldState ws;
  ws.tick = r.i64();
  ws.sim_time = r.f64();
  ws.rng_counter = r.u64();
  const std::uint32_t n = r.count(kAgentBytes);
  ws.agents.resize(n);
  for (AgentState& a : ws.agents) {
    a.agent_id = r.i32();
    a.kind = checked_enum<AgentKind>(r.u8(), 3, "agent kind");
    a.lane_id = r.i32();
    a.s = r.f64();
    a.d = r.f64();
    a.v = r.f64();
    a.a = r.f64();
    a.heading = r.f64();
    a.length = r.f64();
    a.width = r.f64();
    a.lane_change = checked_enum<LaneChange>(r.u8(), 2, "lane change");
    a.lane_change_progress = r.f64();
    a.odometer = r.f64();
  }
  const std::uint32_t m = r.count(8);
  ws.collisions_this_tick.resize(m);
  for (auto& [lo, hi] : ws.collisions_this_tick) {
    lo = r.i32();
    hi = r.i32();
  }
  return ws;
}

struct BodyWriter {
  Writer& w;
  void operator()(const Hello& m) {
    w.u16(m.protocol_version);
    w.str(m.client_name);
  }
  void operator()(const Welcome& m) {
    w.u32(m.client_id);
    w.u32(static_cast<std::uint32_t>(m.agent_ids.size()));
    for (AgentId id : m.agent_ids) w.i32(id);
  }
  void operator()(const LoadScenario& m) { w.str(to_json(m.spec).dump()); }
  void operator()(const InputSubmit& m) {
    w.i64(m.tick);
    put_action(w, m.action);
  }
  void operator()(const TickCommit& m) {
    w.i64(m.tick);
    w.u32(static_cast<std::uint32_t>(m.actions.size()));
    for (const ActionCommand& a : m.actions) put_action(w, a);
    w.u64(m.digest);
  }
  void operator()(const SnapshotRequest& m) { w.i64(m.tick); }
  void operator()(const Snapshot& m) { put_world(w, m.world); }
  void operator()(const Heartbeat& m) { w.i64(m.tick); }
  void operator()(const Desync& m) {
    w.i64(m.tick);
    w.u64(m.expected_digest);
    w.u64(m.got_digest);
  }
  void operator()(const Bye& m) { w.str(m.reason); }
};

Payload read_body(Tag tag, Reader& r) {
  switch (tag) {
    case Tag::Hello: {
      Hello m;
      m.protocol_version = r.u16();
      m.client_name = r.str();
      return m;
    }
    case Tag::Welcome: {
      Welcome m;
      m.client_id = r.u32();
      const std::uint32_t n = r.count(4);
      m.agent_ids.resize(n);
      for (AgentId& id : m.agent_ids) id = r.i32();
      return m;
    }
    case Tag::LoadScenario: {
      const std::string text = r.str();
      try {
        return LoadScenario{scenario_from_json(nlohmann::json::parse(text))};
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedFrame, std::string("scenario payload: ") + e.what());
      }
    }
    case Tag::InputSubmit: {
      InputSubmit m;
      m.tick = r.i64();
      m.action = get_action(r);
      return m;
    }
    case Tag::TickCommit: {
      TickCommit m;
      m.tick = r.i64();
      const std::uint32_t n = r.count(kActionBytes);
      m.actions.reserve(n);
      for (std::uint32_t i = 0; i < n; ++i) m.actions.push_back(get_action(r));
      m.digest = r.u64();
      return m;
    }
    case Tag::SnapshotRequest:
      return SnapshotRequest{r.i64()};
    case Tag::Snapshot:
      return Snapshot{get_world(r)};
    case Tag::Heartbeat:
      return Heartbeat{r.i64()};
    case Tag::Desync: {
      Desync m;
      m.tick = r.i64();
      m.expected_digest = r.u64();
      m.got_digest = r.u64();
      return m;
    }
    case Tag::Bye:
      return Bye{r.str()};
  }
  throw Error(ErrorCode::UnknownTag, "unknown message tag " + std::to_string(static_cast<int>(tag)));
}

std::uint32_t frame_length(std::span<const std::uint8_t> b) {
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

}  // namespace

Tag tag_of(const Payload& p) { return static_cast<Tag>(p.index() + 1); }

std::string_view tag_name(Tag t) {
  switch (t) {
    case Tag::Hello: return "Hello";
    case Tag::Welcome: return "Welcome";
    case Tag::LoadScenario: return "LoadScenario";
    case Tag::InputSubmit: return "InputSubmit";
    case Tag::TickCommit: return "TickCommit";
    case Tag::SnapshotRequest: return "SnapshotRequest";
    case Tag::Snapshot: return "Snapshot";
    case Tag::Heartbeat: return "Heartbeat";
    case Tag::Desync: return "Desync";
    case Tag::Bye: return "Bye";
  }
  return "?";
}

std::vector<std::uint8_t> encode(const Message& m) {
  std::vector<std::uint8_t> out(4, 0);
  Writer w(out);
  w.u8(kProtocolVersion);
  w.u8(static_cast<std::uint8_t>(tag_of(m.body)));
  w.u64(m.seq);
  std::visit(BodyWriter{w}, m.body);
  const std::size_t len = out.size() - 4;
  if (len > kMaxFrameBytes) throw Error(ErrorCode::MalformedFrame, "frame exceeds size limit");
  for (int i = 0; i < 4; ++i) out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(len >> (8 * i));
  return out;
}

Message decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw Error(ErrorCode::TruncatedFrame, "frame shorter than its length prefix");
  const std::uint32_t len = frame_length(bytes);
  if (len > kMaxFrameBytes) throw Error(ErrorCode::MalformedFrame, "frame exceeds size limit");
  if (len < kHeaderBytes - 4) throw Error(ErrorCode::MalformedFrame, "frame shorter than its header");
  if (bytes.size() < 4 + static_cast<std::size_t>(len))
    throw Error(ErrorCode::TruncatedFrame, "frame cut at " + std::to_string(bytes.size()) + " of " +
                                               std::to_string(4 + static_cast<std::size_t>(len)) + " bytes");
  if (bytes.size() > 4 + static_cast<std::size_t>(len))
    throw Error(ErrorCode::MalformedFrame, "trailing bytes after frame");
  Reader r(bytes.subspan(4));
  const std::uint8_t version = r.u8();
  if (version != kProtocolVersion)
    throw Error(ErrorCode::VersionMismatch, "frame version " + std::to_string(version));
  const std::uint8_t tag = r.u8();
  if (tag < 1 || tag > 10) throw Error(ErrorCode::UnknownTag, "unknown message tag " + std::to_string(tag));
  Message m;
  m.seq = r.u64();
  m.body = read_body(static_cast<Tag>(tag), r);
  if (r.remaining() != 0) throw Error(ErrorCode::MalformedFrame, "body longer than its fields");
  return m;
}

void append_world(std::vector<std::uint8_t>& out, const WorldState& w) {
  Writer wr(out);
  put_world(wr, w);
}

std::vector<std::uint8_t> encode_world(const WorldState& w) {
  std::vector<std::uint8_t> out;
  out.reserve(24 + w.agents.size() * kAgentBytes);
  append_world(out, w);
  return out;
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t state_digest(const WorldState& w) { return fnv1a64(encode_world(w)); }

void FrameDecoder::feed(std::span<const std::uint8_t> bytes) {
  if (pos_ > 0 && pos_ == buf_.size()) {
    buf_.clear();
    pos_ = 0;
  }
  buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

std::optional<Message> FrameDecoder::next() {
  const std::size_t avail = buf_.size() - pos_;
  if (avail < 4) return std::nullopt;
  const std::span<const std::uint8_t> view(buf_.data() + pos_, avail);
  const std::uint32_t len = frame_length(view);
  if (len > kMaxFrameBytes) throw Error(ErrorCode::MalformedFrame, "frame exceeds size limit");
  const std::size_t total = 4 + static_cast<std::size_t>(len);
  if (avail < total) return std::nullopt;
  Message m = decode(view.first(total));
  pos_ += total;
  if (pos_ > (1u << 16) && pos_ * 2 > buf_.size()) {
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos_));
    pos_ = 0;
  }
  return m;
}

void SequenceGuard::check(std::uint64_t seq) {
  if (seen_ && seq <= last_)
    throw Error(ErrorCode::OutOfOrderFrame,
                "sequence " + std::to_string(seq) + " after " + std::to_string(last_));
  seen_ = true;
  last_ = seq;
}

}  // namespace skylite::net
