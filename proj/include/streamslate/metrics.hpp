// SPDX-License-Identifier: Apache-2.0
//
// Quality and latency metrics: corpus BLEU, AP, DAL, average lagging in its
// classic and corrected forms, and the commit-error-rate diagnostic. Pure
// functions; time stays in integer milliseconds, results in double.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "streamslate/error.hpp"

namespace streamslate {

// Delays aligned to hypothesis tokens. hyp_len is delays_ms.size();
// ref_len is the reference token count.
struct LatencyInput {
  std::vector<std::int64_t> delays_ms;
  std::int64_t total_ms = 0;
  int ref_len = 0;

  int hyp_len() const { return static_cast<int>(delays_ms.size()); }
  void validate() const;  // EmptyHypothesis / ZeroLength / LengthMismatch
};

// Ideal-policy delays d*_i = (i-1) * total_ms / len for i = 1..count.
// Classic average lagging uses len = ref_len, the corrected form
// len = max(hyp_len, ref_len).
std::vector<double> ideal_delays(std::int64_t total_ms, int len, int count);

// Mean excess of actual delays over the ideal policy up to the first
// full-read token. When no delay equals total_ms (imported external logs),
// the cutoff falls back to the hypothesis length.
double average_lagging(const LatencyInput& in, bool corrected);

// (sum of delays) / (hyp_len * total_ms), in (0, 1].
double average_proportion(const LatencyInput& in);

// Monotone-delay variant: d'_i = max(d_i, d'_{i-1} + r) with r =
// total_ms / ref_len; returns mean of d'_i - (i-1) * r.
double dal(const LatencyInput& in);

struct BleuResult {
  double score = 0.0;                    // [0, 100]
  std::array<double, 4> precisions{};    // modified n-gram precisions
  double brevity_penalty = 1.0;
  std::int64_t hyp_len = 0;
  std::int64_t ref_len = 0;
};

// Corpus BLEU-4: geometric mean of modified n-gram precisions with
// exponential brevity penalty, no smoothing. Tokens are opaque atoms.
BleuResult bleu_detail(const std::vector<std::vector<std::string>>& hyps,
                       const std::vector<std::vector<std::string>>& refs);
double bleu(const std::vector<std::vector<std::string>>& hyps,
            const std::vector<std::vector<std::string>>& refs);

// Fraction of pre-flush committed tokens that differ positionally from the
// final truth; 0.0 when nothing was committed before the flush.
double commit_error_rate(const std::vector<std::string>& pre_flush_commits,
                         const std::vector<std::string>& final_truth);

}  // namespace streamslate
