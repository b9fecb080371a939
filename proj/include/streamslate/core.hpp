// SPDX-License-Identifier: Apache-2.0
//
// Domain types shared by every module. Values are immutable after
// construction apart from CommitLog, which is append-only.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "streamslate/error.hpp"

namespace streamslate {

// One unit of target output. `text` is opaque to the library; the harness
// decides tokenization. The EOS sentinel carries is_eos = true.
struct Token {
  std::string text;
  bool is_eos = false;

  friend bool operator==(const Token& a, const Token& b) {
    return a.text == b.text && a.is_eos == b.is_eos;
  }
};

using TokenSeq = std::vector<Token>;

// Canonical surface form of the EOS sentinel on wire formats.
inline constexpr const char* kEosText = "</s>";

inline Token eos_token() { return Token{kEosText, true}; }

std::vector<std::string> token_texts(const TokenSeq& tokens);
TokenSeq tokens_from_texts(const std::vector<std::string>& texts);

// True when the two sequences agree on token text (EOS flags ignored).
bool same_texts(const TokenSeq& a, const TokenSeq& b);

// True when `prefix` matches the head of `seq` token-text-wise.
bool starts_with_texts(const TokenSeq& seq, const TokenSeq& prefix);

struct TimelineEntry {
  std::int64_t reveal_ms = 0;
  Token token;
};

// A timed source segment sequence plus the reference translation. The
// optional timeline drives the simulated decoder only; real decoders never
// see it.
struct Utterance {
  std::string id;
  std::vector<std::int64_t> segments_ms;
  TokenSeq reference;  // no EOS
  std::optional<std::vector<TimelineEntry>> timeline;

  std::int64_t total_ms() const;
};

// Checks all Utterance invariants and returns the value unchanged.
// Throws EmptySegments, NonPositiveDuration or TimelineOutOfRange.
Utterance validate_utterance(Utterance u);

struct Hypothesis {
  TokenSeq tokens;
  double score = 0.0;  // higher is better
};

// Strict ordering used everywhere a beam is ranked: score descending,
// ties broken by lexicographic token text.
bool beam_order(const Hypothesis& a, const Hypothesis& b);

// Ranked, non-empty set of hypotheses from one decode call. The constructor
// normalizes ordering and validates per-hypothesis EOS placement.
class Beam {
 public:
  explicit Beam(std::vector<Hypothesis> items);

  const std::vector<Hypothesis>& items() const { return items_; }
  const Hypothesis& best() const { return items_.front(); }
  std::size_t size() const { return items_.size(); }

  friend bool operator==(const Beam& a, const Beam& b);

 private:
  std::vector<Hypothesis> items_;
};

struct CommitEntry {
  Token token;
  std::int64_t delay_ms = 0;  // audio read when committed
  int chunk_index = 0;

  friend bool operator==(const CommitEntry& a, const CommitEntry& b) {
    return a.token == b.token && a.delay_ms == b.delay_ms && a.chunk_index == b.chunk_index;
  }
};

// Append-only record of committed tokens. Entries are never mutated or
// removed; delay and chunk index must be non-decreasing.
class CommitLog {
 public:
  void append(Token token, std::int64_t delay_ms, int chunk_index);

  const std::vector<CommitEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  TokenSeq tokens() const;
  std::vector<std::int64_t> delays() const;

  friend bool operator==(const CommitLog& a, const CommitLog& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::vector<CommitEntry> entries_;
};

enum class ActionKind { Read, Write };

struct AgentAction {
  ActionKind kind = ActionKind::Read;
  TokenSeq payload;  // non-empty iff kind == Write

  static AgentAction read() { return AgentAction{ActionKind::Read, {}}; }
  static AgentAction write(TokenSeq tokens);
};

// ── Run report shapes ───────────────────────────────────────────────────────

struct UtteranceRecord {
  std::string id;
  std::vector<std::string> prediction;
  std::vector<std::int64_t> delays_ms;
  int pre_flush_commits = 0;
};

struct CorpusMetrics {
  double bleu = 0.0;
  double al_ms = 0.0;
  double al_corrected_ms = 0.0;
  double ap = 0.0;
  double dal_ms = 0.0;
  double commit_error_rate = 0.0;
};

struct ConfigEcho {
  std::string strategy;
  int n = 0;
  std::int64_t chunk_ms = 0;
  std::int64_t initial_wait_ms = 0;
  int beam = 0;
  std::uint64_t seed = 0;
};

struct RunReport {
  ConfigEcho config;
  std::vector<UtteranceRecord> utterances;
  CorpusMetrics corpus;
};

}  // namespace streamslate
