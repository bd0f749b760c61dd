#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "skylite/world/scenario.hpp"
#include "skylite/world/types.hpp"

namespace skylite::net {

inline constexpr std::uint8_t kProtocolVersion = 1;
inline constexpr std::uint32_t kMaxFrameBytes = 64u << 20;
inline constexpr std::size_t kHeaderBytes = 4 + 1 + 1 + 8;  // length, version, tag, seq

enum class Tag : std::uint8_t {
  Hello = 1,
  Welcome = 2,
  LoadScenario = 3,
  InputSubmit = 4,
  TickCommit = 5,
  SnapshotRequest = 6,
  Snapshot = 7,
  Heartbeat = 8,
  Desync = 9,
  Bye = 10,
};

struct Hello {
  std::uint16_t protocol_version = kProtocolVersion;
  std::string client_name;
  bool operator==(const Hello&) const = default;
};

struct Welcome {
  std::uint32_t client_id = 0;
  std::vector<AgentId> agent_ids;
  bool operator==(const Welcome&) const = default;
};

struct LoadScenario {
  ScenarioSpec spec;
  bool operator==(const LoadScenario&) const = default;
};

struct InputSubmit {
  Tick tick = 0;
  ActionCommand action;
  bool operator==(const InputSubmit&) const = default;
};

/// Actions applied at `tick`; `digest` is of the resulting world (tick + 1).
struct TickCommit {
  Tick tick = 0;
  std::vector<ActionCommand> actions;
  std::uint64_t digest = 0;
  bool operator==(const TickCommit&) const = default;
};

struct SnapshotRequest {
  Tick tick = 0;
  bool operator==(const SnapshotRequest&) const = default;
};

struct Snapshot {
  WorldState world;
  bool operator==(const Snapshot&) const = default;
};

struct Heartbeat {
  Tick tick = 0;
  bool operator==(const Heartbeat&) const = default;
};

struct Desync {
  Tick tick = 0;
  std::uint64_t expected_digest = 0;
  std::uint64_t got_digest = 0;
  bool operator==(const Desync&) const = default;
};

struct Bye {
  std::string reason;
  bool operator==(const Bye&) const = default;
};

// alternative index + 1 == wire tag
using Payload = std::variant<Hello, Welcome, LoadScenario, InputSubmit, TickCommit, SnapshotRequest,
                             Snapshot, Heartbeat, Desync, Bye>;

struct Message {
  std::uint64_t seq = 0;
  Payload body;
  bool operator==(const Message&) const = default;
};

Tag tag_of(const Payload& p);
std::string_view tag_name(Tag t);

std::vector<std::uint8_t> encode(const Message& m);

/// Decodes exactly one complete frame. Throws TruncatedFrame when `bytes` is
/// shorter than the frame, MalformedFrame when it is longer or the body does
/// not parse, UnknownTag, VersionMismatch.
Message decode(std::span<const std::uint8_t> bytes);

/// Canonical little-endian encoding used on the wire and for digests.
void append_world(std::vector<std::uint8_t>& out, const WorldState& w);
std::vector<std::uint8_t> encode_world(const WorldState& w);

/// FNV-1a 64 over encode_world(w).
std::uint64_t state_digest(const WorldState& w);
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

/// Reassembles frames from an arbitrary byte stream. Complete frames are
/// surfaced in order; a partial frame stays buffered.
class FrameDecoder {
 public:
  void feed(std::span<const std::uint8_t> bytes);
  std::optional<Message> next();
  std::size_t buffered() const { return buf_.size() - pos_; }

 private:
  std::vector<std::uint8_t> buf_;
  std::size_t pos_ = 0;
};

/// Enforces strictly increasing per-sender sequence numbers.
class SequenceGuard {
 public:
  void check(std::uint64_t seq);  // throws OutOfOrderFrame
  std::uint64_t last() const { return last_; }

 private:
  std::uint64_t last_ = 0;
  bool seen_ = false;
};

}  // namespace skylite::net
