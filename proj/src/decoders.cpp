// SPDX-License-Identifier: Apache-2.0
#include "streamslate/decoders.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"

namespace streamslate {

using nlohmann::json;

// ── Simulated decoder ───────────────────────────────────────────────────────

namespace {

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t guess_key(std::uint64_t seed, const std::string& id, std::int64_t prefix_ms,
                        int item) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  h = fnv1a(h, &seed, sizeof(seed));
  h = fnv1a(h, id.data(), id.size());
  h = fnv1a(h, &prefix_ms, sizeof(prefix_ms));
  h = fnv1a(h, &item, sizeof(item));
  return h;
}

// Unstable tail drawn from a generator keyed by (seed, utterance, visible
// audio, beam item) so tails differ between distinct prefixes.
TokenSeq guess_tail(const SimDecoderConfig& cfg, const std::string& id, std::int64_t prefix_ms,
                    int item, int count) {
  std::mt19937_64 rng(guess_key(cfg.seed, id, prefix_ms, item));
  TokenSeq out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    out.push_back(Token{"⟨g:" + std::to_string(rng() % 1000000) + "⟩", false});
  }
  return out;
}

// Forced prefix wins positionally; the ideal continuation fills the rest.
TokenSeq overlay_forced(const TokenSeq& forced, const TokenSeq& ideal) {
  TokenSeq out = forced;
  for (std::size_t i = forced.size(); i < ideal.size(); ++i) out.push_back(ideal[i]);
  return out;
}

}  // namespace

Beam sim_decode(const SimDecoderConfig& cfg, const Utterance& u, const DecodeRequest& req) {
  if (cfg.tail_len < 0 || cfg.beam_jitter < 0) {
    raise(Errc::InvalidConfig, "tail_len and beam_jitter must be non-negative");
  }
  if (!u.timeline) raise(Errc::MissingTimeline, "utterance '" + u.id + "' has no timeline");
  const std::int64_t total = u.total_ms();
  if (req.audio_prefix_ms <= 0 || req.audio_prefix_ms > total) {
    raise(Errc::InvalidState, "audio prefix " + std::to_string(req.audio_prefix_ms) +
                                  " outside (0, " + std::to_string(total) + "]");
  }

  TokenSeq truth;
  for (const TimelineEntry& e : *u.timeline) {
    if (e.reveal_ms <= req.audio_prefix_ms) truth.push_back(e.token);
  }
  const bool all_revealed = truth.size() == u.timeline->size();
  const int tail_count = req.audio_prefix_ms < total ? cfg.tail_len : 0;
  const bool emit_eos = all_revealed && tail_count == 0;

  TokenSeq ideal = truth;
  {
    TokenSeq tail = guess_tail(cfg, u.id, req.audio_prefix_ms, 0, tail_count);
    ideal.insert(ideal.end(), tail.begin(), tail.end());
  }
  TokenSeq best = overlay_forced(req.forced, ideal);
  if (emit_eos) best.push_back(eos_token());

  std::vector<Hypothesis> items;
  items.push_back(Hypothesis{std::move(best), 0.0});

  const int alternates = tail_count > 0 ? std::min(cfg.beam_jitter, req.beam_size - 1) : 0;
  for (int j = 1; j <= alternates; ++j) {
    TokenSeq alt = truth;
    TokenSeq tail = guess_tail(cfg, u.id, req.audio_prefix_ms, j, tail_count);
    alt.insert(alt.end(), tail.begin(), tail.end());
    items.push_back(Hypothesis{overlay_forced(req.forced, alt), -static_cast<double>(j)});
  }
  return Beam(std::move(items));
}

SimDecoder::SimDecoder(SimDecoderConfig cfg, const std::vector<Utterance>& utterances)
    : cfg_(cfg) {
  for (const Utterance& u : utterances) by_id_[u.id] = &u;
}

Beam SimDecoder::decode(const DecodeRequest& req) {
  const auto it = by_id_.find(req.utterance_id);
  if (it == by_id_.end()) {
    raise(Errc::MissingTimeline, "unknown utterance '" + req.utterance_id + "'");
  }
  return sim_decode(cfg_, *it->second, req);
}

// ── Wire format ─────────────────────────────────────────────────────────────

namespace {

json hypothesis_to_json(const Hypothesis& h) {
  json tokens = json::array();
  bool eos = false;
  for (const Token& t : h.tokens) {
    if (t.is_eos) {
      eos = true;
    } else {
      tokens.push_back(t.text);
    }
  }
  return json{{"tokens", std::move(tokens)}, {"score", h.score}, {"eos", eos}};
}

Hypothesis hypothesis_from_json(const json& j) {
  if (!j.is_object() || !j.contains("tokens") || !j["tokens"].is_array() ||
      !j.contains("score") || !j["score"].is_number()) {
    raise(Errc::ProtocolError, "malformed hypothesis record");
  }
  Hypothesis h;
  for (const json& t : j["tokens"]) {
    if (!t.is_string()) raise(Errc::ProtocolError, "hypothesis token is not a string");
    h.tokens.push_back(Token{t.get<std::string>(), false});
  }
  if (j.value("eos", false)) h.tokens.push_back(eos_token());
  h.score = j["score"].get<double>();
  return h;
}

json beam_to_json(const Beam& beam) {
  json arr = json::array();
  for (const Hypothesis& h : beam.items()) arr.push_back(hypothesis_to_json(h));
  return arr;
}

Beam beam_from_json(const json& arr) {
  if (!arr.is_array() || arr.empty()) raise(Errc::ProtocolError, "beams must be a non-empty array");
  std::vector<Hypothesis> items;
  for (const json& h : arr) items.push_back(hypothesis_from_json(h));
  return Beam(std::move(items));
}

}  // namespace

std::string request_to_line(const DecodeRequest& req) {
  json forced = json::array();
  for (const Token& t : req.forced) forced.push_back(t.text);
  const json j{{"type", "decode"},
               {"id", req.utterance_id},
               {"prefix_ms", req.audio_prefix_ms},
               {"forced", std::move(forced)},
               {"beam", req.beam_size}};
  return j.dump();
}

DecodeRequest request_from_line(const std::string& line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object() || j.value("type", "") != "decode" ||
      !j.contains("id") || !j.contains("prefix_ms") || !j.contains("forced") ||
      !j.contains("beam")) {
    raise(Errc::ProtocolError, "malformed decode request: " + line);
  }
  DecodeRequest req;
  req.utterance_id = j["id"].get<std::string>();
  req.audio_prefix_ms = j["prefix_ms"].get<std::int64_t>();
  for (const json& t : j["forced"]) req.forced.push_back(Token{t.get<std::string>(), false});
  req.beam_size = j["beam"].get<int>();
  return req;
}

std::string beams_to_wire(const Beam& beam) {
  return json{{"beams", beam_to_json(beam)}}.dump();
}

Beam beams_from_wire(const std::string& json_text) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    raise(Errc::ProtocolError, "response is not a JSON object: " + json_text);
  }
  if (j.contains("error")) {
    raise(Errc::ProtocolError, "peer error: " + j["error"].dump());
  }
  if (!j.contains("beams")) raise(Errc::ProtocolError, "response missing \"beams\" field");
  return beam_from_json(j["beams"]);
}

// ── Scripted replay ─────────────────────────────────────────────────────────

void Script::add(const std::string& id, std::int64_t prefix_ms, const Beam& beam) {
  const auto key = std::make_pair(id, prefix_ms);
  const auto it = entries_.find(key);
  if (it != entries_.end()) {
    if (!(it->second == beam)) {
      raise(Errc::ProtocolError, "conflicting script entry for (" + id + ", " +
                                     std::to_string(prefix_ms) + ")");
    }
    return;
  }
  entries_.emplace(key, beam);
}

const Beam* Script::find(const std::string& id, std::int64_t prefix_ms) const {
  const auto it = entries_.find(std::make_pair(id, prefix_ms));
  return it == entries_.end() ? nullptr : &it->second;
}

Script Script::parse_jsonl(std::istream& in) {
  Script script;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j.contains("prefix_ms") ||
        !j.contains("beams")) {
      raise(Errc::ParseError, "script line " + std::to_string(line_no) + " is malformed");
    }
    script.add(j["id"].get<std::string>(), j["prefix_ms"].get<std::int64_t>(),
               beam_from_json(j["beams"]));
  }
  return script;
}

Script Script::load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::ParseError, "cannot open script file '" + path + "'");
  return parse_jsonl(in);
}

void Script::write_jsonl(std::ostream& out) const {
  for (const auto& [key, beam] : entries_) {
    const json j{{"id", key.first}, {"prefix_ms", key.second}, {"beams", beam_to_json(beam)}};
    out << j.dump() << "\n";
  }
}

void Script::save_jsonl(const std::string& path) const {
  std::ofstream out(path);
  if (!out) raise(Errc::ParseError, "cannot write script file '" + path + "'");
  write_jsonl(out);
}

Beam scripted_decode(const Script& script, const DecodeRequest& req) {
  const Beam* beam = script.find(req.utterance_id, req.audio_prefix_ms);
  if (beam == nullptr) {
    raise(Errc::MissingScriptEntry, "no script entry for (" + req.utterance_id + ", " +
                                        std::to_string(req.audio_prefix_ms) + ")");
  }
  return *beam;
}

Beam RecordingDecoder::decode(const DecodeRequest& req) {
  Beam beam = inner_.decode(req);
  out_.add(req.utterance_id, req.audio_prefix_ms, beam);
  return beam;
}

}  // namespace streamslate
