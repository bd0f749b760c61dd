#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace skylite {

enum class ErrorCode {
  // world-core
  MissingAction,
  UnknownAgent,
  NonFiniteInput,
  NotLongitudinallyComparable,
  EmptyTrace,
  InvalidGraph,
  InvalidScenario,
  // behavior-models
  NonPositiveGap,
  // sync-net
  TruncatedFrame,
  UnknownTag,
  VersionMismatch,
  MalformedFrame,
  OutOfOrderFrame,
  ClientLost,
  ChannelClosed,
  Desync,
  // haim-loop
  UnnormalizedPolicy,
  MissingCriticEntry,
  DivergedValues,
  // reward-lab
  DimensionMismatch,
  ProviderFailure,
  // curriculum-gen
  NoFailureInTrace,
  InfeasibleCandidate,
  EmptyGrid,
  SpecConflict,
  // replay-io
  ParseError,
  NonMonotoneTime,
  OffMapPoint,
  NoPlausibleMap,
  // telemetry-gateway
  BacklogExceeded,
  NotInTakeover,
  BadToken,
  CorruptLine,
  // cli
  ConfigError,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingAction: return "MissingAction";
    case ErrorCode::UnknownAgent: return "UnknownAgent";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::NotLongitudinallyComparable: return "NotLongitudinallyComparable";
    case ErrorCode::EmptyTrace: return "EmptyTrace";
    case ErrorCode::InvalidGraph: return "InvalidGraph";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
    case ErrorCode::NonPositiveGap: return "NonPositiveGap";
    case ErrorCode::TruncatedFrame: return "TruncatedFrame";
    case ErrorCode::UnknownTag: return "UnknownTag";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::MalformedFrame: return "MalformedFrame";
    case ErrorCode::OutOfOrderFrame: return "OutOfOrderFrame";
    case ErrorCode::ClientLost: return "ClientLost";
    case ErrorCode::ChannelClosed: return "ChannelClosed";
    case ErrorCode::Desync: return "Desync";
    case ErrorCode::UnnormalizedPolicy: return "UnnormalizedPolicy";
    case ErrorCode::MissingCriticEntry: return "MissingCriticEntry";
    case ErrorCode::DivergedValues: return "DivergedValues";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ProviderFailure: return "ProviderFailure";
    case ErrorCode::NoFailureInTrace: return "NoFailureInTrace";
    case ErrorCode::InfeasibleCandidate: return "InfeasibleCandidate";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::SpecConflict: return "SpecConflict";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NonMonotoneTime: return "NonMonotoneTime";
    case ErrorCode::OffMapPoint: return "OffMapPoint";
    case ErrorCode::NoPlausibleMap: return "NoPlausibleMap";
    case ErrorCode::BacklogExceeded: return "BacklogExceeded";
    case ErrorCode::NotInTakeover: return "NotInTakeover";
    case ErrorCode::BadToken: return "BadToken";
    case ErrorCode::CorruptLine: return "CorruptLine";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every recoverable failure in the library is reported as an Error carrying
/// a machine-readable code; the CLI turns it into a JSON object on stderr.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace skylite
