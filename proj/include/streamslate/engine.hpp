// SPDX-License-Identifier: Apache-2.0
//
// The streaming policy state machine: chunk accumulation, incremental
// re-decoding with a forced committed prefix, stable-prefix commitment,
// EOS suppression, initial wait and final flush.
#pragma once

#include <cstdint>
#include <string>

#include "streamslate/core.hpp"
#include "streamslate/decoders.hpp"
#include "streamslate/stability.hpp"

namespace streamslate {

enum class Strategy { Hold, LA, SP };

std::string strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);  // "hold" | "la" | "sp"

struct EngineConfig {
  Strategy strategy = Strategy::LA;
  int n = 2;                          // hold: n >= 0, la: n >= 2, sp: n >= 1
  std::int64_t chunk_ms = 1000;       // a chunk triggers as soon as unread audio
                                      // REACHES this value (non-strict comparison)
  std::int64_t initial_wait_ms = 0;   // enlarges only the first trigger threshold
  int beam_size = 4;

  void validate() const;              // throws InvalidConfig
  int history_window() const;         // beams the strategy needs to see
};

// Removes a trailing EOS token if present.
Hypothesis strip_eos(Hypothesis h);

struct FinalResult {
  TokenSeq prediction;
  std::vector<std::int64_t> delays_ms;
};

// Drives one utterance. A chunk is consumed whenever unread audio reaches
// the trigger threshold: max(chunk_ms, initial_wait_ms) for the first chunk,
// chunk_ms afterwards; the final chunk may be shorter once the source has
// ended. Single-threaded; distinct sessions are independent.
class Session {
 public:
  Session(EngineConfig cfg, const Utterance& utterance, Decoder& decoder);

  // Registers `ms` more milliseconds of arrived audio.
  // Throws Overrun past total_ms, PushAfterFinish once the source ended.
  void push_audio(std::int64_t ms);

  // One policy decision: consume a chunk and re-decode when enough audio is
  // buffered (or the source ended with audio pending), commit the newly
  // stable tokens and return WRITE; otherwise return READ.
  AgentAction step();

  // One last decode over the full input; commits the remaining best
  // hypothesis (EOS stripped) at delay total_ms. Requires source_finished.
  FinalResult finalize();

  std::int64_t total_ms() const { return total_ms_; }
  std::int64_t read_ms() const { return read_ms_; }
  std::int64_t unread_ms() const { return unread_ms_; }
  std::int64_t arrived_ms() const { return read_ms_ + unread_ms_; }
  bool source_finished() const { return source_finished_; }
  bool is_finalized() const { return finalized_; }
  int chunk_index() const { return history_.current_chunk(); }
  int decode_count() const { return decode_count_; }
  const CommitLog& commits() const { return commits_; }
  const Utterance& utterance() const { return utterance_; }

 private:
  std::int64_t current_threshold() const;
  Beam decode_at(std::int64_t prefix_ms);  // forced = commit log; validates the contract
  TokenSeq commit_extension(const TokenSeq& stable) const;

  EngineConfig cfg_;
  const Utterance& utterance_;
  Decoder& decoder_;
  std::int64_t total_ms_ = 0;
  std::int64_t read_ms_ = 0;
  std::int64_t unread_ms_ = 0;
  bool source_finished_ = false;
  bool finalized_ = false;
  int decode_count_ = 0;
  DecodeHistory history_;
  CommitLog commits_;
};

}  // namespace streamslate
