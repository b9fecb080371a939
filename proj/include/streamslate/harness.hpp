// SPDX-License-Identifier: Apache-2.0
//
// Dataset ingestion, experiment runner, parameter sweeps, report/CSV
// emission and external-log scoring.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "streamslate/core.hpp"
#include "streamslate/decoders.hpp"
#include "streamslate/engine.hpp"

namespace streamslate {

enum class TokenizerKind { Whitespace, Character };

TokenizerKind tokenizer_from_name(const std::string& name);  // "ws" | "char"

// Whitespace mode splits on ASCII whitespace; character mode yields one
// token per non-whitespace UTF-8 code point (for target scripts without
// spaces).
std::vector<std::string> tokenize(const std::string& text, TokenizerKind kind);

struct Dataset {
  std::vector<Utterance> utterances;

  const Utterance* find(const std::string& id) const;
};

// Manifest format: one utterance record per line,
//   {"id": "...", "segments_ms": [...], "reference": "...", "timeline": [[ms, "tok"], ...]?}
// The reference string is tokenized with `kind`; timeline tokens are taken
// as-is. Throws ParseError (with line number) and DuplicateId.
Dataset load_dataset(const std::string& path, TokenizerKind kind);
Dataset parse_dataset(std::istream& in, TokenizerKind kind);
void write_dataset_jsonl(const Dataset& ds, std::ostream& out);

// The bundled synthetic dataset: `count` utterances of 2-8 s with token
// timelines; reference equals the timeline surface.
Dataset make_bundled_dataset(std::uint64_t seed = 7, int count = 20);

struct RunOptions {
  std::int64_t arrival_ms = 100;  // audio arrival increment; must be <= chunk_ms
  std::uint64_t seed = 0;         // echoed into the report
};

// Evaluates every utterance: drives a Session by pushing audio in fixed
// arrival increments and stepping until the source is finished, then
// finalizes. Corpus metrics are BLEU over all pairs and unweighted means of
// the per-utterance latency metrics; utterances are processed in id order.
RunReport run(const EngineConfig& cfg, const Dataset& ds, Decoder& decoder,
              const RunOptions& opts);

// Report serialization with fixed 4-decimal metric formatting
// (byte-identical across repeated runs).
std::string report_to_json(const RunReport& report);

// CommitLog <-> JSON (round-trip identity).
std::string commit_log_to_json(const CommitLog& log);
CommitLog commit_log_from_json(const std::string& text);

struct SweepGrid {
  std::vector<Strategy> strategies;
  std::vector<int> ns;
  std::vector<std::int64_t> chunk_ms;
  std::vector<std::int64_t> initial_wait_ms;
  std::vector<int> beams;
};

inline constexpr const char* kSweepCsvHeader =
    "strategy,n,chunk_ms,initial_wait_ms,beam,bleu,al_ms,al_corrected_ms,ap,dal_ms,"
    "commit_error_rate";

// One CSV row per grid point, rows sorted by (strategy, n, chunk_ms,
// initial_wait_ms, beam). Throws EmptyGrid; invalid combinations surface
// their config validation error.
std::string sweep(const SweepGrid& grid, const Dataset& ds, Decoder& decoder,
                  const RunOptions& opts);

// ── External-log scoring ────────────────────────────────────────────────────

struct ScoredLine {
  int line_no = 0;
  int hyp_len = 0;
  int ref_len = 0;
  double al_ms = 0.0;
  double al_corrected_ms = 0.0;
  double ap = 0.0;
  double dal_ms = 0.0;
  bool negative_al = false;  // classic AL < 0; reported with hyp_len - ref_len
};

struct LogScore {
  std::vector<ScoredLine> lines;
  CorpusMetrics corpus;  // commit_error_rate unused (0)
};

// Scores line records {"reference": "...", "prediction": "...",
// "delays_ms": [...], "total_ms": N | "segments_ms": [...]}.
// An optional "wall_ms" field is accepted and ignored.
LogScore score_logs(std::istream& in, TokenizerKind kind);
LogScore score_logs_file(const std::string& path, TokenizerKind kind);
std::string log_score_to_json(const LogScore& score);

}  // namespace streamslate
