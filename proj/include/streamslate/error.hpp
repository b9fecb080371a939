// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace streamslate {

// Every failure mode the library reports, across all modules.
enum class Errc {
  // core
  EmptySegments,
  NonPositiveDuration,
  TimelineOutOfRange,
  InvalidToken,
  InvalidBeam,
  // stability
  EmptyCollection,
  // engine
  InvalidConfig,
  Overrun,
  PushAfterFinish,
  DecoderViolation,
  InvalidState,
  // decoders
  MissingTimeline,
  MissingScriptEntry,
  PeerExited,
  ProtocolError,
  Timeout,
  // metrics
  ZeroLength,
  EmptyHypothesis,
  LengthMismatch,
  // harness
  ParseError,
  DuplicateId,
  EmptyGrid,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace streamslate
