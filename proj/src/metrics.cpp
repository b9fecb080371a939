// SPDX-License-Identifier: Apache-2.0
#include "streamslate/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace streamslate {

void LatencyInput::validate() const {
  if (delays_ms.empty()) raise(Errc::EmptyHypothesis, "no delays");
  if (total_ms <= 0) raise(Errc::NonPositiveDuration, "total_ms must be positive");
  std::int64_t prev = 0;
  for (std::int64_t d : delays_ms) {
    if (d <= 0 || d > total_ms) {
      raise(Errc::LengthMismatch,
            "delay " + std::to_string(d) + " outside (0, " + std::to_string(total_ms) + "]");
    }
    if (d < prev) raise(Errc::LengthMismatch, "delays decrease");
    prev = d;
  }
}

std::vector<double> ideal_delays(std::int64_t total_ms, int len, int count) {
  if (len <= 0) raise(Errc::ZeroLength, "ideal delays need a positive length");
  if (total_ms <= 0) raise(Errc::NonPositiveDuration, "total_ms must be positive");
  std::vector<double> out;
  out.reserve(count);
  for (int i = 1; i <= count; ++i) {
    out.push_back(static_cast<double>(i - 1) * static_cast<double>(total_ms) / len);
  }
  return out;
}

namespace {

// First index (1-based) whose delay equals the full source duration;
// hypothesis length when absent.
int full_read_cutoff(const LatencyInput& in) {
  for (std::size_t i = 0; i < in.delays_ms.size(); ++i) {
    if (in.delays_ms[i] == in.total_ms) return static_cast<int>(i) + 1;
  }
  return in.hyp_len();
}

}  // namespace

double average_lagging(const LatencyInput& in, bool corrected) {
  in.validate();
  const int len = corrected ? std::max(in.hyp_len(), in.ref_len) : in.ref_len;
  const std::vector<double> ideal = ideal_delays(in.total_ms, len, in.hyp_len());
  const int cutoff = full_read_cutoff(in);
  double sum = 0.0;
  for (int i = 0; i < cutoff; ++i) {
    sum += static_cast<double>(in.delays_ms[i]) - ideal[i];
  }
  return sum / cutoff;
}

double average_proportion(const LatencyInput& in) {
  in.validate();
  double sum = 0.0;
  for (std::int64_t d : in.delays_ms) sum += static_cast<double>(d);
  return sum / (static_cast<double>(in.hyp_len()) * static_cast<double>(in.total_ms));
}

double dal(const LatencyInput& in) {
  in.validate();
  if (in.ref_len <= 0) raise(Errc::ZeroLength, "dal needs a positive reference length");
  const double r = static_cast<double>(in.total_ms) / in.ref_len;
  double prev = 0.0;
  double sum = 0.0;
  for (int i = 0; i < in.hyp_len(); ++i) {
    const double di = static_cast<double>(in.delays_ms[i]);
    const double adjusted = i == 0 ? di : std::max(di, prev + r);
    sum += adjusted - i * r;
    prev = adjusted;
  }
  return sum / in.hyp_len();
}

namespace {

using Ngram = std::vector<std::string>;

std::map<Ngram, int> ngram_counts(const std::vector<std::string>& tokens, int n) {
  std::map<Ngram, int> counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[Ngram(tokens.begin() + i, tokens.begin() + i + n)];
  }
  return counts;
}

}  // namespace

BleuResult bleu_detail(const std::vector<std::vector<std::string>>& hyps,
                       const std::vector<std::vector<std::string>>& refs) {
  if (hyps.size() != refs.size() || hyps.empty()) {
    raise(Errc::LengthMismatch, "bleu needs equally many hypotheses and references (>= 1)");
  }

  std::array<std::int64_t, 4> matched{};
  std::array<std::int64_t, 4> attempted{};
  BleuResult result;
  for (std::size_t pair = 0; pair < hyps.size(); ++pair) {
    const auto& hyp = hyps[pair];
    const auto& ref = refs[pair];
    result.hyp_len += static_cast<std::int64_t>(hyp.size());
    result.ref_len += static_cast<std::int64_t>(ref.size());
    for (int n = 1; n <= 4; ++n) {
      const auto ref_counts = ngram_counts(ref, n);
      for (const auto& [gram, count] : ngram_counts(hyp, n)) {
        const auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) matched[n - 1] += std::min(count, it->second);
      }
      attempted[n - 1] += std::max<std::int64_t>(0, static_cast<std::int64_t>(hyp.size()) - n + 1);
    }
  }

  for (int n = 0; n < 4; ++n) {
    result.precisions[n] =
        attempted[n] > 0 ? static_cast<double>(matched[n]) / attempted[n] : 0.0;
  }
  if (result.hyp_len == 0) {
    result.brevity_penalty = 0.0;
    result.score = 0.0;
    return result;
  }
  result.brevity_penalty =
      result.hyp_len >= result.ref_len
          ? 1.0
          : std::exp(1.0 - static_cast<double>(result.ref_len) / result.hyp_len);

  const double min_precision =
      *std::min_element(result.precisions.begin(), result.precisions.end());
  if (min_precision <= 0.0) {
    result.score = 0.0;
    return result;
  }
  double log_sum = 0.0;
  for (double p : result.precisions) log_sum += std::log(p);
  result.score = 100.0 * result.brevity_penalty * std::exp(log_sum / 4.0);
  return result;
}

double bleu(const std::vector<std::vector<std::string>>& hyps,
            const std::vector<std::vector<std::string>>& refs) {
  return bleu_detail(hyps, refs).score;
}

double commit_error_rate(const std::vector<std::string>& pre_flush_commits,
                         const std::vector<std::string>& final_truth) {
  if (pre_flush_commits.empty()) return 0.0;
  std::size_t errors = 0;
  for (std::size_t i = 0; i < pre_flush_commits.size(); ++i) {
    if (i >= final_truth.size() || pre_flush_commits[i] != final_truth[i]) ++errors;
  }
  return static_cast<double>(errors) / pre_flush_commits.size();
}

}  // namespace streamslate
