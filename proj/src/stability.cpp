// SPDX-License-Identifier: Apache-2.0
#include "streamslate/stability.hpp"

#include <algorithm>

namespace streamslate {

DecodeHistory::DecodeHistory(int capacity) : capacity_(capacity) {}

void DecodeHistory::append(Beam beam) {
  beams_.push_back(std::move(beam));
  ++next_chunk_;
  if (capacity_ > 0) {
    while (static_cast<int>(beams_.size()) > capacity_) beams_.pop_front();
  }
}

const Beam& DecodeHistory::latest() const {
  if (beams_.empty()) raise(Errc::EmptyCollection, "decode history is empty");
  return beams_.back();
}

std::vector<const Beam*> DecodeHistory::last(int n) const {
  const int take = std::min<int>(n, static_cast<int>(beams_.size()));
  std::vector<const Beam*> out;
  out.reserve(take);
  for (int i = static_cast<int>(beams_.size()) - take; i < static_cast<int>(beams_.size()); ++i) {
    out.push_back(&beams_[i]);
  }
  return out;
}

namespace {

TokenSeq without_eos(const TokenSeq& tokens) {
  TokenSeq out;
  out.reserve(tokens.size());
  for (const Token& t : tokens) {
    if (!t.is_eos) out.push_back(t);
  }
  return out;
}

// Beams needed for the window of the last n chunks; throws when the history
// was constructed with too small a retention capacity.
std::vector<const Beam*> window_checked(const DecodeHistory& history, int n) {
  if (history.empty()) raise(Errc::EmptyCollection, "decode history is empty");
  std::vector<const Beam*> window = history.last(n);
  if (static_cast<int>(window.size()) < n) {
    raise(Errc::InvalidState, "history retains fewer than " + std::to_string(n) + " beams");
  }
  return window;
}

}  // namespace

TokenSeq lcp(const std::vector<TokenSeq>& seqs) {
  if (seqs.empty()) raise(Errc::EmptyCollection, "lcp of zero sequences");
  std::size_t limit = seqs.front().size();
  for (const TokenSeq& s : seqs) limit = std::min(limit, s.size());

  std::size_t len = 0;
  for (; len < limit; ++len) {
    const std::string& text = seqs.front()[len].text;
    bool all_match = true;
    for (std::size_t k = 1; k < seqs.size(); ++k) {
      if (seqs[k][len].text != text) {
        all_match = false;
        break;
      }
    }
    if (!all_match) break;
  }
  return TokenSeq(seqs.front().begin(), seqs.front().begin() + len);
}

TokenSeq hold_n(const Beam& beam, int n) {
  if (n < 0) raise(Errc::InvalidConfig, "hold-n requires n >= 0");
  TokenSeq best = without_eos(beam.best().tokens);
  const std::size_t keep = best.size() > static_cast<std::size_t>(n) ? best.size() - n : 0;
  best.resize(keep);
  return best;
}

TokenSeq la_n(const DecodeHistory& history, int n) {
  if (n < 2) raise(Errc::InvalidConfig, "la-n requires n >= 2");
  if (history.empty()) raise(Errc::EmptyCollection, "decode history is empty");
  if (history.current_chunk() < n) return {};

  std::vector<TokenSeq> bests;
  bests.reserve(n);
  for (const Beam* b : window_checked(history, n)) bests.push_back(without_eos(b->best().tokens));
  return lcp(bests);
}

TokenSeq sp_n(const DecodeHistory& history, int n) {
  if (n < 1) raise(Errc::InvalidConfig, "sp-n requires n >= 1");
  if (history.empty()) raise(Errc::EmptyCollection, "decode history is empty");
  if (history.current_chunk() < n) return {};

  std::vector<TokenSeq> all;
  for (const Beam* b : window_checked(history, n)) {
    for (const Hypothesis& h : b->items()) all.push_back(without_eos(h.tokens));
  }
  return lcp(all);
}

}  // namespace streamslate
