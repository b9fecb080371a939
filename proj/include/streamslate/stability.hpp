// SPDX-License-Identifier: Apache-2.0
//
// Stable-prefix selection over decode history: hold-n, local agreement
// (LA-n) and shared prefix (SP-n). All functions are pure; token equality
// is text-only and EOS tokens are stripped before comparison.
#pragma once

#include <deque>
#include <vector>

#include "streamslate/core.hpp"

namespace streamslate {

// Per-chunk beams, indices contiguous ascending from 1. A positive
// `capacity` bounds retention to the most recent beams; the logical chunk
// counter keeps advancing regardless.
class DecodeHistory {
 public:
  explicit DecodeHistory(int capacity = 0);  // capacity <= 0: unbounded

  void append(Beam beam);

  bool empty() const { return beams_.empty(); }
  int current_chunk() const { return next_chunk_ - 1; }
  const Beam& latest() const;

  // Up to the `n` most recent beams, oldest first.
  std::vector<const Beam*> last(int n) const;

 private:
  std::deque<Beam> beams_;
  int next_chunk_ = 1;
  int capacity_ = 0;
};

// Longest common prefix of the given sequences, compared by token text.
// Throws EmptyCollection when `seqs` is empty.
TokenSeq lcp(const std::vector<TokenSeq>& seqs);

// First max(0, |best| - n) tokens of the beam's best hypothesis.
TokenSeq hold_n(const Beam& beam, int n);

// LCP of the best hypotheses of the last n chunks; empty while the current
// chunk index is below n. Requires n >= 2.
TokenSeq la_n(const DecodeHistory& history, int n);

// LCP over every hypothesis of every beam in the last n chunks; empty while
// the current chunk index is below n. Requires n >= 1.
TokenSeq sp_n(const DecodeHistory& history, int n);

}  // namespace streamslate
