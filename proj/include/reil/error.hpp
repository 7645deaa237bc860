#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace reil {

enum class ErrorCode {
  EmptyEpisode,
  FlagsUnset,
  InvalidGamma,
  InvalidCapacity,
  ParseError,
  IoError,
  ShapeError,
  InvalidSlope,
  EmptySequence,
  SeqTooLong,
  InvalidTau,
  DanglingSuccessor,
  EmptyBatch,
  NoSupervisorData,
  MissingTfLabels,
  EmptyDataset,
  NonfiniteState,
  TooShort,
  LengthMismatch,
  InvalidWindow,
  ConfigError,
  TopologyMismatch,
  Protocol,
  Busy,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyEpisode: return "EMPTY_EPISODE";
    case ErrorCode::FlagsUnset: return "FLAGS_UNSET";
    case ErrorCode::InvalidGamma: return "INVALID_GAMMA";
    case ErrorCode::InvalidCapacity: return "INVALID_CAPACITY";
    case ErrorCode::ParseError: return "PARSE_ERROR";
    case ErrorCode::IoError: return "IO_ERROR";
    case ErrorCode::ShapeError: return "SHAPE_ERROR";
    case ErrorCode::InvalidSlope: return "INVALID_SLOPE";
    case ErrorCode::EmptySequence: return "EMPTY_SEQUENCE";
    case ErrorCode::SeqTooLong: return "SEQ_TOO_LONG";
    case ErrorCode::InvalidTau: return "INVALID_TAU";
    case ErrorCode::DanglingSuccessor: return "DANGLING_SUCCESSOR";
    case ErrorCode::EmptyBatch: return "EMPTY_BATCH";
    case ErrorCode::NoSupervisorData: return "NO_SUPERVISOR_DATA";
    case ErrorCode::MissingTfLabels: return "MISSING_TF_LABELS";
    case ErrorCode::EmptyDataset: return "EMPTY_DATASET";
    case ErrorCode::NonfiniteState: return "NONFINITE_STATE";
    case ErrorCode::TooShort: return "TOO_SHORT";
    case ErrorCode::LengthMismatch: return "LENGTH_MISMATCH";
    case ErrorCode::InvalidWindow: return "INVALID_WINDOW";
    case ErrorCode::ConfigError: return "CONFIG_ERROR";
    case ErrorCode::TopologyMismatch: return "TOPOLOGY_MISMATCH";
    case ErrorCode::Protocol: return "PROTOCOL";
    case ErrorCode::Busy: return "BUSY";
  }
  return "UNKNOWN";
}

/// Exception carrying a machine-checkable error code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace reil
