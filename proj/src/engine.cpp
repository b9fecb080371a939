// SPDX-License-Identifier: Apache-2.0
#include "streamslate/engine.hpp"

#include <algorithm>

namespace streamslate {

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Hold: return "hold";
    case Strategy::LA: return "la";
    case Strategy::SP: return "sp";
  }
  return "?";
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "hold") return Strategy::Hold;
  if (name == "la") return Strategy::LA;
  if (name == "sp") return Strategy::SP;
  raise(Errc::InvalidConfig, "unknown strategy '" + name + "'");
}

void EngineConfig::validate() const {
  if (chunk_ms <= 0) raise(Errc::InvalidConfig, "chunk_ms must be positive");
  if (initial_wait_ms < 0) raise(Errc::InvalidConfig, "initial_wait_ms must be non-negative");
  if (beam_size < 1) raise(Errc::InvalidConfig, "beam size must be at least 1");
  switch (strategy) {
    case Strategy::Hold:
      if (n < 0) raise(Errc::InvalidConfig, "hold-n requires n >= 0");
      break;
    case Strategy::LA:
      if (n < 2) raise(Errc::InvalidConfig, "la-n requires n >= 2");
      break;
    case Strategy::SP:
      if (n < 1) raise(Errc::InvalidConfig, "sp-n requires n >= 1");
      break;
  }
}

int EngineConfig::history_window() const {
  return strategy == Strategy::Hold ? 1 : n;
}

Hypothesis strip_eos(Hypothesis h) {
  if (!h.tokens.empty() && h.tokens.back().is_eos) h.tokens.pop_back();
  return h;
}

Session::Session(EngineConfig cfg, const Utterance& utterance, Decoder& decoder)
    : cfg_(cfg),
      utterance_(utterance),
      decoder_(decoder),
      history_(cfg.history_window()) {
  cfg_.validate();
  total_ms_ = utterance_.total_ms();
  if (total_ms_ <= 0) raise(Errc::NonPositiveDuration, "utterance has no audio");
}

void Session::push_audio(std::int64_t ms) {
  if (finalized_ || source_finished_) {
    raise(Errc::PushAfterFinish, "utterance '" + utterance_.id + "': source already finished");
  }
  if (ms <= 0) raise(Errc::NonPositiveDuration, "push of " + std::to_string(ms) + " ms");
  if (arrived_ms() + ms > total_ms_) {
    raise(Errc::Overrun, "utterance '" + utterance_.id + "': " + std::to_string(arrived_ms() + ms) +
                             " ms pushed exceeds total " + std::to_string(total_ms_));
  }
  unread_ms_ += ms;
  if (arrived_ms() == total_ms_) source_finished_ = true;
}

std::int64_t Session::current_threshold() const {
  return history_.current_chunk() == 0 ? std::max(cfg_.chunk_ms, cfg_.initial_wait_ms)
                                       : cfg_.chunk_ms;
}

Beam Session::decode_at(std::int64_t prefix_ms) {
  const DecodeRequest req{utterance_.id, prefix_ms, commits_.tokens(), cfg_.beam_size};
  Beam beam = decoder_.decode(req);
  ++decode_count_;
  for (const Hypothesis& h : beam.items()) {
    if (!starts_with_texts(h.tokens, req.forced)) {
      raise(Errc::DecoderViolation,
            "utterance '" + utterance_.id + "': hypothesis does not extend the committed prefix");
    }
  }
  return beam;
}

TokenSeq Session::commit_extension(const TokenSeq& stable) const {
  const std::size_t committed = commits_.size();
  if (stable.size() <= committed) return {};
  return TokenSeq(stable.begin() + committed, stable.end());
}

AgentAction Session::step() {
  if (finalized_) raise(Errc::InvalidState, "step after finalize");

  const std::int64_t threshold = current_threshold();
  std::int64_t consume = 0;
  if (unread_ms_ >= threshold) {
    consume = threshold;
  } else if (source_finished_ && unread_ms_ > 0) {
    consume = unread_ms_;  // short final chunk
  } else {
    return AgentAction::read();
  }

  read_ms_ += consume;
  unread_ms_ -= consume;

  // EOS is suppressed during streaming: strip it from every hypothesis
  // before stability detection.
  Beam beam = decode_at(read_ms_);
  std::vector<Hypothesis> stripped;
  stripped.reserve(beam.size());
  for (const Hypothesis& h : beam.items()) stripped.push_back(strip_eos(h));
  history_.append(Beam(std::move(stripped)));

  TokenSeq stable;
  switch (cfg_.strategy) {
    case Strategy::Hold: stable = hold_n(history_.latest(), cfg_.n); break;
    case Strategy::LA: stable = la_n(history_, cfg_.n); break;
    case Strategy::SP: stable = sp_n(history_, cfg_.n); break;
  }

  TokenSeq fresh = commit_extension(stable);
  if (fresh.empty()) return AgentAction::read();
  for (const Token& t : fresh) commits_.append(t, read_ms_, history_.current_chunk());
  return AgentAction::write(std::move(fresh));
}

FinalResult Session::finalize() {
  if (finalized_) raise(Errc::InvalidState, "finalize called twice");
  if (!source_finished_) raise(Errc::InvalidState, "finalize before the source finished");

  const Hypothesis best = strip_eos(decode_at(total_ms_).best());
  const int flush_chunk = history_.current_chunk() + 1;
  for (const Token& t : commit_extension(best.tokens)) {
    commits_.append(t, total_ms_, flush_chunk);
  }
  read_ms_ = total_ms_;
  unread_ms_ = 0;
  finalized_ = true;
  return FinalResult{commits_.tokens(), commits_.delays()};
}

}  // namespace streamslate
