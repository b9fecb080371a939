// SPDX-License-Identifier: Apache-2.0
#include "streamslate/core.hpp"

#include <algorithm>
#include <numeric>

namespace streamslate {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::EmptySegments: return "EmptySegments";
    case Errc::NonPositiveDuration: return "NonPositiveDuration";
    case Errc::TimelineOutOfRange: return "TimelineOutOfRange";
    case Errc::InvalidToken: return "InvalidToken";
    case Errc::InvalidBeam: return "InvalidBeam";
    case Errc::EmptyCollection: return "EmptyCollection";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::Overrun: return "Overrun";
    case Errc::PushAfterFinish: return "PushAfterFinish";
    case Errc::DecoderViolation: return "DecoderViolation";
    case Errc::InvalidState: return "InvalidState";
    case Errc::MissingTimeline: return "MissingTimeline";
    case Errc::MissingScriptEntry: return "MissingScriptEntry";
    case Errc::PeerExited: return "PeerExited";
    case Errc::ProtocolError: return "ProtocolError";
    case Errc::Timeout: return "Timeout";
    case Errc::ZeroLength: return "ZeroLength";
    case Errc::EmptyHypothesis: return "EmptyHypothesis";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::ParseError: return "ParseError";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::EmptyGrid: return "EmptyGrid";
  }
  return "UnknownError";
}

std::vector<std::string> token_texts(const TokenSeq& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const Token& t : tokens) out.push_back(t.text);
  return out;
}

TokenSeq tokens_from_texts(const std::vector<std::string>& texts) {
  TokenSeq out;
  out.reserve(texts.size());
  for (const std::string& s : texts) out.push_back(Token{s, false});
  return out;
}

bool same_texts(const TokenSeq& a, const TokenSeq& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].text != b[i].text) return false;
  }
  return true;
}

bool starts_with_texts(const TokenSeq& seq, const TokenSeq& prefix) {
  if (prefix.size() > seq.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (seq[i].text != prefix[i].text) return false;
  }
  return true;
}

std::int64_t Utterance::total_ms() const {
  return std::accumulate(segments_ms.begin(), segments_ms.end(), std::int64_t{0});
}

Utterance validate_utterance(Utterance u) {
  if (u.segments_ms.empty()) raise(Errc::EmptySegments, "utterance '" + u.id + "' has no segments");
  for (std::int64_t t : u.segments_ms) {
    if (t <= 0) {
      raise(Errc::NonPositiveDuration,
            "utterance '" + u.id + "' has segment duration " + std::to_string(t));
    }
  }
  const std::int64_t total = u.total_ms();
  if (u.timeline) {
    std::int64_t prev = 0;
    for (const TimelineEntry& e : *u.timeline) {
      if (e.reveal_ms < prev || e.reveal_ms > total) {
        raise(Errc::TimelineOutOfRange,
              "utterance '" + u.id + "' reveal " + std::to_string(e.reveal_ms) +
                  " outside [" + std::to_string(prev) + ", " + std::to_string(total) + "]");
      }
      if (e.token.text.empty()) {
        raise(Errc::InvalidToken, "utterance '" + u.id + "' has an empty timeline token");
      }
      prev = e.reveal_ms;
    }
  }
  for (const Token& t : u.reference) {
    if (t.text.empty()) raise(Errc::InvalidToken, "utterance '" + u.id + "' has an empty reference token");
  }
  return u;
}

bool beam_order(const Hypothesis& a, const Hypothesis& b) {
  if (a.score != b.score) return a.score > b.score;
  return std::lexicographical_compare(
      a.tokens.begin(), a.tokens.end(), b.tokens.begin(), b.tokens.end(),
      [](const Token& x, const Token& y) { return x.text < y.text; });
}

namespace {

void validate_hypothesis(const Hypothesis& h) {
  for (std::size_t i = 0; i < h.tokens.size(); ++i) {
    const Token& t = h.tokens[i];
    if (t.text.empty()) raise(Errc::InvalidToken, "empty token text in hypothesis");
    if (t.is_eos && i + 1 != h.tokens.size()) {
      raise(Errc::InvalidBeam, "EOS token not in final position");
    }
  }
}

}  // namespace

Beam::Beam(std::vector<Hypothesis> items) : items_(std::move(items)) {
  if (items_.empty()) raise(Errc::InvalidBeam, "beam has no hypotheses");
  for (const Hypothesis& h : items_) validate_hypothesis(h);
  std::stable_sort(items_.begin(), items_.end(), beam_order);
}

bool operator==(const Beam& a, const Beam& b) {
  if (a.items_.size() != b.items_.size()) return false;
  for (std::size_t i = 0; i < a.items_.size(); ++i) {
    if (a.items_[i].score != b.items_[i].score || !(a.items_[i].tokens == b.items_[i].tokens)) {
      return false;
    }
  }
  return true;
}

void CommitLog::append(Token token, std::int64_t delay_ms, int chunk_index) {
  if (token.text.empty()) raise(Errc::InvalidToken, "cannot commit an empty token");
  if (!entries_.empty()) {
    const CommitEntry& last = entries_.back();
    if (delay_ms < last.delay_ms) {
      raise(Errc::InvalidState, "commit delay " + std::to_string(delay_ms) +
                                    " decreases below " + std::to_string(last.delay_ms));
    }
    if (chunk_index < last.chunk_index) {
      raise(Errc::InvalidState, "commit chunk index decreases");
    }
  }
  entries_.push_back(CommitEntry{std::move(token), delay_ms, chunk_index});
}

TokenSeq CommitLog::tokens() const {
  TokenSeq out;
  out.reserve(entries_.size());
  for (const CommitEntry& e : entries_) out.push_back(e.token);
  return out;
}

std::vector<std::int64_t> CommitLog::delays() const {
  std::vector<std::int64_t> out;
  out.reserve(entries_.size());
  for (const CommitEntry& e : entries_) out.push_back(e.delay_ms);
  return out;
}

AgentAction AgentAction::write(TokenSeq tokens) {
  if (tokens.empty()) raise(Errc::InvalidState, "WRITE action with empty payload");
  return AgentAction{ActionKind::Write, std::move(tokens)};
}

}  // namespace streamslate
