// SPDX-License-Identifier: Apache-2.0
#include "streamslate/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <tuple>

#include "json.hpp"

#include "streamslate/metrics.hpp"

namespace streamslate {

using nlohmann::json;

// ── Tokenizers ──────────────────────────────────────────────────────────────

TokenizerKind tokenizer_from_name(const std::string& name) {
  if (name == "ws") return TokenizerKind::Whitespace;
  if (name == "char") return TokenizerKind::Character;
  raise(Errc::InvalidConfig, "unknown tokenizer '" + name + "'");
}

namespace {

bool is_space_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::size_t utf8_len(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xe) return 3;
  if ((lead >> 3) == 0x1e) return 4;
  return 1;  // stray continuation byte; treat as one unit
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text, TokenizerKind kind) {
  std::vector<std::string> out;
  if (kind == TokenizerKind::Whitespace) {
    std::string cur;
    for (unsigned char c : text) {
      if (is_space_byte(c)) {
        if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
      } else {
        cur.push_back(static_cast<char>(c));
      }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
  }
  // one token per non-whitespace UTF-8 code point
  for (std::size_t i = 0; i < text.size();) {
    const unsigned char lead = static_cast<unsigned char>(text[i]);
    if (is_space_byte(lead)) {
      ++i;
      continue;
    }
    const std::size_t len = std::min(utf8_len(lead), text.size() - i);
    out.push_back(text.substr(i, len));
    i += len;
  }
  return out;
}

// ── Dataset ─────────────────────────────────────────────────────────────────

const Utterance* Dataset::find(const std::string& id) const {
  for (const Utterance& u : utterances) {
    if (u.id == id) return &u;
  }
  return nullptr;
}

Dataset parse_dataset(std::istream& in, TokenizerKind kind) {
  Dataset ds;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j.contains("segments_ms") ||
        !j.contains("reference")) {
      raise(Errc::ParseError, "manifest line " + std::to_string(line_no) + " is malformed");
    }
    try {
      Utterance u;
      u.id = j["id"].get<std::string>();
      u.segments_ms = j["segments_ms"].get<std::vector<std::int64_t>>();
      u.reference = tokens_from_texts(tokenize(j["reference"].get<std::string>(), kind));
      if (j.contains("timeline")) {
        std::vector<TimelineEntry> timeline;
        for (const json& e : j["timeline"]) {
          if (!e.is_array() || e.size() != 2) {
            raise(Errc::ParseError, "timeline entries must be [ms, \"token\"] pairs");
          }
          timeline.push_back(
              TimelineEntry{e[0].get<std::int64_t>(), Token{e[1].get<std::string>(), false}});
        }
        u.timeline = std::move(timeline);
      }
      if (ds.find(u.id) != nullptr) {
        raise(Errc::DuplicateId, "duplicate utterance id '" + u.id + "'");
      }
      ds.utterances.push_back(validate_utterance(std::move(u)));
    } catch (const Error& e) {
      if (e.code() == Errc::DuplicateId) throw;
      throw Error(e.code(), "manifest line " + std::to_string(line_no) + ": " + e.what());
    } catch (const json::exception& e) {
      raise(Errc::ParseError, "manifest line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return ds;
}

Dataset load_dataset(const std::string& path, TokenizerKind kind) {
  std::ifstream in(path);
  if (!in) raise(Errc::ParseError, "cannot open dataset '" + path + "'");
  return parse_dataset(in, kind);
}

void write_dataset_jsonl(const Dataset& ds, std::ostream& out) {
  for (const Utterance& u : ds.utterances) {
    json j;
    j["id"] = u.id;
    j["segments_ms"] = u.segments_ms;
    std::string ref;
    for (std::size_t i = 0; i < u.reference.size(); ++i) {
      if (i > 0) ref += ' ';
      ref += u.reference[i].text;
    }
    j["reference"] = ref;
    if (u.timeline) {
      json timeline = json::array();
      for (const TimelineEntry& e : *u.timeline) {
        timeline.push_back(json::array({e.reveal_ms, e.token.text}));
      }
      j["timeline"] = std::move(timeline);
    }
    out << j.dump() << "\n";
  }
}

// ── Bundled synthetic dataset ───────────────────────────────────────────────

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdull;
  x ^= x >> 33;
  return x;
}

std::vector<std::string> pseudo_vocab(std::uint64_t seed, int size) {
  static const char* kConsonants = "bdfgklmnprstvz";
  static const char* kVowels = "aeiou";
  std::mt19937_64 rng(mix(seed, 0x70c4b));
  std::vector<std::string> vocab;
  while (static_cast<int>(vocab.size()) < size) {
    std::string word;
    for (int s = 0; s < 2; ++s) {
      word.push_back(kConsonants[rng() % 14]);
      word.push_back(kVowels[rng() % 5]);
    }
    if (std::find(vocab.begin(), vocab.end(), word) == vocab.end()) vocab.push_back(word);
  }
  return vocab;
}

}  // namespace

Dataset make_bundled_dataset(std::uint64_t seed, int count) {
  if (count < 1) raise(Errc::InvalidConfig, "dataset needs at least one utterance");
  const std::vector<std::string> vocab = pseudo_vocab(seed, 40);

  Dataset ds;
  for (int i = 1; i <= count; ++i) {
    std::mt19937_64 rng(mix(seed, static_cast<std::uint64_t>(i)));
    Utterance u;
    char id[16];
    std::snprintf(id, sizeof(id), "utt%02d", i);
    u.id = id;

    const std::int64_t total = 2000 + static_cast<std::int64_t>(rng() % 6001);
    const int num_segments = 1 + static_cast<int>(rng() % 3);
    std::int64_t remaining = total;
    for (int s = 0; s < num_segments - 1; ++s) {
      const std::int64_t slack = remaining - (num_segments - 1 - s);
      const std::int64_t seg = 1 + static_cast<std::int64_t>(rng() % slack);
      u.segments_ms.push_back(seg);
      remaining -= seg;
    }
    u.segments_ms.push_back(remaining);

    // one token roughly every 325 ms, paced across the utterance
    const int num_tokens = std::max<int>(3, static_cast<int>(total / 325) + static_cast<int>(rng() % 3) - 1);
    std::vector<TimelineEntry> timeline;
    std::int64_t prev = 0;
    for (int t = 1; t <= num_tokens; ++t) {
      std::int64_t reveal = total * t / (num_tokens + 1);
      reveal += static_cast<std::int64_t>(rng() % 161) - 80;
      reveal = std::clamp<std::int64_t>(reveal, std::max<std::int64_t>(prev, 1), total);
      const Token token{vocab[rng() % vocab.size()], false};
      timeline.push_back(TimelineEntry{reveal, token});
      u.reference.push_back(token);
      prev = reveal;
    }
    u.timeline = std::move(timeline);
    ds.utterances.push_back(validate_utterance(std::move(u)));
  }
  return ds;
}

// ── Runner ──────────────────────────────────────────────────────────────────

namespace {

struct UtteranceOutcome {
  UtteranceRecord record;
  double al_ms = 0.0;
  double al_corrected_ms = 0.0;
  double ap = 0.0;
  double dal_ms = 0.0;
  int commit_errors = 0;
};

UtteranceOutcome evaluate_utterance(const EngineConfig& cfg, const Utterance& u,
                                    Decoder& decoder, const RunOptions& opts) {
  Session session(cfg, u, decoder);
  while (!session.source_finished()) {
    session.push_audio(std::min(opts.arrival_ms, session.total_ms() - session.arrived_ms()));
    if (session.source_finished()) break;
    session.step();
  }
  const std::vector<std::string> pre_flush = token_texts(session.commits().tokens());
  const FinalResult fin = session.finalize();

  // Ground truth for the commit-error diagnostic: the unconstrained decode
  // over the full input.
  const Beam truth_beam =
      decoder.decode(DecodeRequest{u.id, session.total_ms(), {}, cfg.beam_size});
  const std::vector<std::string> truth =
      token_texts(strip_eos(truth_beam.best()).tokens);

  UtteranceOutcome out;
  out.record.id = u.id;
  out.record.prediction = token_texts(fin.prediction);
  out.record.delays_ms = fin.delays_ms;
  out.record.pre_flush_commits = static_cast<int>(pre_flush.size());
  for (std::size_t i = 0; i < pre_flush.size(); ++i) {
    if (i >= truth.size() || pre_flush[i] != truth[i]) ++out.commit_errors;
  }

  const LatencyInput latency{fin.delays_ms, session.total_ms(),
                             static_cast<int>(u.reference.size())};
  out.al_ms = average_lagging(latency, false);
  out.al_corrected_ms = average_lagging(latency, true);
  out.ap = average_proportion(latency);
  out.dal_ms = dal(latency);
  return out;
}

}  // namespace

RunReport run(const EngineConfig& cfg, const Dataset& ds, Decoder& decoder,
              const RunOptions& opts) {
  cfg.validate();
  if (opts.arrival_ms <= 0) raise(Errc::InvalidConfig, "arrival_ms must be positive");
  if (opts.arrival_ms > cfg.chunk_ms) {
    raise(Errc::InvalidConfig, "arrival granularity must not exceed the chunk size");
  }
  if (ds.utterances.empty()) raise(Errc::EmptyCollection, "dataset is empty");

  std::vector<const Utterance*> ordered;
  ordered.reserve(ds.utterances.size());
  for (const Utterance& u : ds.utterances) ordered.push_back(&u);
  std::sort(ordered.begin(), ordered.end(),
            [](const Utterance* a, const Utterance* b) { return a->id < b->id; });

  RunReport report;
  report.config = ConfigEcho{strategy_name(cfg.strategy), cfg.n,        cfg.chunk_ms,
                             cfg.initial_wait_ms,         cfg.beam_size, opts.seed};

  std::vector<std::vector<std::string>> hyps;
  std::vector<std::vector<std::string>> refs;
  double al_sum = 0.0, alc_sum = 0.0, ap_sum = 0.0, dal_sum = 0.0;
  std::int64_t commits_total = 0, errors_total = 0;

  for (const Utterance* u : ordered) {
    UtteranceOutcome outcome;
    try {
      outcome = evaluate_utterance(cfg, *u, decoder, opts);
    } catch (const Error& e) {
      throw Error(e.code(), "utterance '" + u->id + "': " + e.what());
    }
    al_sum += outcome.al_ms;
    alc_sum += outcome.al_corrected_ms;
    ap_sum += outcome.ap;
    dal_sum += outcome.dal_ms;
    commits_total += outcome.record.pre_flush_commits;
    errors_total += outcome.commit_errors;
    hyps.push_back(outcome.record.prediction);
    refs.push_back(token_texts(u->reference));
    report.utterances.push_back(std::move(outcome.record));
  }

  const double n = static_cast<double>(ordered.size());
  report.corpus.bleu = bleu(hyps, refs);
  report.corpus.al_ms = al_sum / n;
  report.corpus.al_corrected_ms = alc_sum / n;
  report.corpus.ap = ap_sum / n;
  report.corpus.dal_ms = dal_sum / n;
  report.corpus.commit_error_rate =
      commits_total > 0 ? static_cast<double>(errors_total) / commits_total : 0.0;

  for (const UtteranceRecord& r : report.utterances) {
    if (r.prediction.size() != r.delays_ms.size()) {
      raise(Errc::LengthMismatch, "record for '" + r.id + "' has mismatched delays");
    }
  }
  for (double v : {report.corpus.bleu, report.corpus.al_ms, report.corpus.al_corrected_ms,
                   report.corpus.ap, report.corpus.dal_ms, report.corpus.commit_error_rate}) {
    if (!std::isfinite(v)) raise(Errc::InvalidState, "non-finite corpus metric");
  }
  return report;
}

// ── Serialization ───────────────────────────────────────────────────────────

namespace {

std::string fmt4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string jstr(const std::string& s) { return json(s).dump(); }

std::string jstr_array(const std::vector<std::string>& items) {
  std::string out = "[";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ", ";
    out += jstr(items[i]);
  }
  return out + "]";
}

std::string jint_array(const std::vector<std::int64_t>& items) {
  std::string out = "[";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(items[i]);
  }
  return out + "]";
}

}  // namespace

std::string report_to_json(const RunReport& report) {
  std::ostringstream os;
  os << "{\n";
  os << "  \"config\": {\"strategy\": " << jstr(report.config.strategy)
     << ", \"n\": " << report.config.n << ", \"chunk_ms\": " << report.config.chunk_ms
     << ", \"initial_wait_ms\": " << report.config.initial_wait_ms
     << ", \"beam\": " << report.config.beam << ", \"seed\": " << report.config.seed << "},\n";
  os << "  \"utterances\": [";
  for (std::size_t i = 0; i < report.utterances.size(); ++i) {
    const UtteranceRecord& r = report.utterances[i];
    os << (i == 0 ? "\n" : ",\n");
    os << "    {\"id\": " << jstr(r.id) << ", \"prediction\": " << jstr_array(r.prediction)
       << ", \"delays_ms\": " << jint_array(r.delays_ms)
       << ", \"pre_flush_commits\": " << r.pre_flush_commits << "}";
  }
  os << "\n  ],\n";
  const CorpusMetrics& c = report.corpus;
  os << "  \"corpus\": {\"bleu\": " << fmt4(c.bleu) << ", \"al_ms\": " << fmt4(c.al_ms)
     << ", \"al_corrected_ms\": " << fmt4(c.al_corrected_ms) << ", \"ap\": " << fmt4(c.ap)
     << ", \"dal_ms\": " << fmt4(c.dal_ms)
     << ", \"commit_error_rate\": " << fmt4(c.commit_error_rate) << "}\n";
  os << "}\n";
  return os.str();
}

std::string commit_log_to_json(const CommitLog& log) {
  json entries = json::array();
  for (const CommitEntry& e : log.entries()) {
    entries.push_back(json{{"text", e.token.text},
                           {"eos", e.token.is_eos},
                           {"delay_ms", e.delay_ms},
                           {"chunk_index", e.chunk_index}});
  }
  return json{{"entries", std::move(entries)}}.dump();
}

CommitLog commit_log_from_json(const std::string& text) {
  const json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("entries")) {
    raise(Errc::ParseError, "malformed commit log");
  }
  CommitLog log;
  for (const json& e : j["entries"]) {
    log.append(Token{e["text"].get<std::string>(), e.value("eos", false)},
               e["delay_ms"].get<std::int64_t>(), e["chunk_index"].get<int>());
  }
  return log;
}

// ── Sweep ───────────────────────────────────────────────────────────────────

std::string sweep(const SweepGrid& grid, const Dataset& ds, Decoder& decoder,
                  const RunOptions& opts) {
  if (grid.strategies.empty() || grid.ns.empty() || grid.chunk_ms.empty() ||
      grid.initial_wait_ms.empty() || grid.beams.empty()) {
    raise(Errc::EmptyGrid, "every sweep dimension needs at least one value");
  }

  std::vector<EngineConfig> configs;
  for (Strategy s : grid.strategies)
    for (int n : grid.ns)
      for (std::int64_t chunk : grid.chunk_ms)
        for (std::int64_t wait : grid.initial_wait_ms)
          for (int beam : grid.beams) configs.push_back(EngineConfig{s, n, chunk, wait, beam});
  for (const EngineConfig& cfg : configs) cfg.validate();

  std::sort(configs.begin(), configs.end(), [](const EngineConfig& a, const EngineConfig& b) {
    return std::tuple(strategy_name(a.strategy), a.n, a.chunk_ms, a.initial_wait_ms, a.beam_size) <
           std::tuple(strategy_name(b.strategy), b.n, b.chunk_ms, b.initial_wait_ms, b.beam_size);
  });

  std::ostringstream os;
  os << kSweepCsvHeader << "\n";
  for (const EngineConfig& cfg : configs) {
    const RunReport report = run(cfg, ds, decoder, opts);
    const CorpusMetrics& c = report.corpus;
    os << strategy_name(cfg.strategy) << "," << cfg.n << "," << cfg.chunk_ms << ","
       << cfg.initial_wait_ms << "," << cfg.beam_size << "," << fmt4(c.bleu) << ","
       << fmt4(c.al_ms) << "," << fmt4(c.al_corrected_ms) << "," << fmt4(c.ap) << ","
       << fmt4(c.dal_ms) << "," << fmt4(c.commit_error_rate) << "\n";
  }
  return os.str();
}

// ── External-log scoring ────────────────────────────────────────────────────

LogScore score_logs(std::istream& in, TokenizerKind kind) {
  LogScore score;
  std::vector<std::vector<std::string>> hyps;
  std::vector<std::vector<std::string>> refs;
  double al_sum = 0.0, alc_sum = 0.0, ap_sum = 0.0, dal_sum = 0.0;

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("reference") ||
        !j.contains("prediction") || !j.contains("delays_ms") ||
        (!j.contains("total_ms") && !j.contains("segments_ms"))) {
      raise(Errc::ParseError, "log line " + std::to_string(line_no) + " is malformed");
    }
    try {
      const auto hyp = tokenize(j["prediction"].get<std::string>(), kind);
      const auto ref = tokenize(j["reference"].get<std::string>(), kind);
      const auto delays = j["delays_ms"].get<std::vector<std::int64_t>>();
      std::int64_t total = 0;
      if (j.contains("total_ms")) {
        total = j["total_ms"].get<std::int64_t>();
      } else {
        for (std::int64_t seg : j["segments_ms"].get<std::vector<std::int64_t>>()) total += seg;
      }
      if (delays.size() != hyp.size()) {
        raise(Errc::LengthMismatch, std::to_string(delays.size()) + " delays for " +
                                        std::to_string(hyp.size()) + " prediction tokens");
      }

      const LatencyInput latency{delays, total, static_cast<int>(ref.size())};
      ScoredLine sl;
      sl.line_no = line_no;
      sl.hyp_len = static_cast<int>(hyp.size());
      sl.ref_len = static_cast<int>(ref.size());
      sl.al_ms = average_lagging(latency, false);
      sl.al_corrected_ms = average_lagging(latency, true);
      sl.ap = average_proportion(latency);
      sl.dal_ms = dal(latency);
      sl.negative_al = sl.al_ms < 0.0;
      al_sum += sl.al_ms;
      alc_sum += sl.al_corrected_ms;
      ap_sum += sl.ap;
      dal_sum += sl.dal_ms;
      score.lines.push_back(sl);
      hyps.push_back(hyp);
      refs.push_back(ref);
    } catch (const Error& e) {
      throw Error(e.code(), "log line " + std::to_string(line_no) + ": " + e.what());
    } catch (const json::exception& e) {
      raise(Errc::ParseError, "log line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (score.lines.empty()) raise(Errc::ParseError, "log file contains no records");

  const double n = static_cast<double>(score.lines.size());
  score.corpus.bleu = bleu(hyps, refs);
  score.corpus.al_ms = al_sum / n;
  score.corpus.al_corrected_ms = alc_sum / n;
  score.corpus.ap = ap_sum / n;
  score.corpus.dal_ms = dal_sum / n;
  return score;
}

LogScore score_logs_file(const std::string& path, TokenizerKind kind) {
  std::ifstream in(path);
  if (!in) raise(Errc::ParseError, "cannot open log file '" + path + "'");
  return score_logs(in, kind);
}

std::string log_score_to_json(const LogScore& score) {
  std::ostringstream os;
  os << "{\n  \"lines\": [";
  for (std::size_t i = 0; i < score.lines.size(); ++i) {
    const ScoredLine& l = score.lines[i];
    os << (i == 0 ? "\n" : ",\n");
    os << "    {\"line\": " << l.line_no << ", \"hyp_len\": " << l.hyp_len
       << ", \"ref_len\": " << l.ref_len << ", \"al_ms\": " << fmt4(l.al_ms)
       << ", \"al_corrected_ms\": " << fmt4(l.al_corrected_ms) << ", \"ap\": " << fmt4(l.ap)
       << ", \"dal_ms\": " << fmt4(l.dal_ms)
       << ", \"negative_al\": " << (l.negative_al ? "true" : "false")
       << ", \"hyp_minus_ref\": " << (l.hyp_len - l.ref_len) << "}";
  }
  os << "\n  ],\n";
  const CorpusMetrics& c = score.corpus;
  os << "  \"corpus\": {\"bleu\": " << fmt4(c.bleu) << ", \"al_ms\": " << fmt4(c.al_ms)
     << ", \"al_corrected_ms\": " << fmt4(c.al_corrected_ms) << ", \"ap\": " << fmt4(c.ap)
     << ", \"dal_ms\": " << fmt4(c.dal_ms) << "}\n";
  os << "}\n";
  return os.str();
}

}  // namespace streamslate
