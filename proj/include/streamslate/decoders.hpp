// SPDX-License-Identifier: Apache-2.0
//
// The incremental-decoder contract plus three implementations: a
// deterministic timeline simulator, scripted fixture replay, and a
// line-delimited-JSON subprocess bridge for external decoders.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "streamslate/core.hpp"

namespace streamslate {

struct DecodeRequest {
  std::string utterance_id;
  std::int64_t audio_prefix_ms = 0;  // milliseconds of source visible
  TokenSeq forced;                   // committed tokens the beam must extend
  int beam_size = 1;
};

// Contract all decoders satisfy: 1..B hypotheses, each beginning with
// exactly req.forced, sorted per Beam invariants. Deterministic given
// (seed/script, request).
class Decoder {
 public:
  virtual ~Decoder() = default;
  virtual Beam decode(const DecodeRequest& req) = 0;
};

// ── Simulated decoder ───────────────────────────────────────────────────────

struct SimDecoderConfig {
  int tail_len = 0;        // unstable guess tokens appended to the truth prefix
  std::uint64_t seed = 0;
  int beam_jitter = 0;     // perturbed-tail alternates per beam
};

// Pure form of the simulator: best hypothesis is the timeline prefix revealed
// by audio_prefix_ms plus `tail_len` keyed pseudo-random guess tokens; other
// beam items perturb only the tail. The forced prefix overrides conflicting
// truth tokens positionally. Requires u.timeline.
Beam sim_decode(const SimDecoderConfig& cfg, const Utterance& u, const DecodeRequest& req);

class SimDecoder : public Decoder {
 public:
  SimDecoder(SimDecoderConfig cfg, const std::vector<Utterance>& utterances);

  Beam decode(const DecodeRequest& req) override;

 private:
  SimDecoderConfig cfg_;
  std::map<std::string, const Utterance*> by_id_;
};

// ── Scripted replay ─────────────────────────────────────────────────────────

// Recorded beams keyed by (utterance id, audio_prefix_ms). Stored as JSON
// Lines, one decode record per line:
//   {"id": "...", "prefix_ms": N, "beams": [{"tokens": [...], "score": S, "eos": B}, ...]}
class Script {
 public:
  // Adds an entry; re-adding the same key with a different beam throws
  // ProtocolError (the script format cannot represent it).
  void add(const std::string& id, std::int64_t prefix_ms, const Beam& beam);
  const Beam* find(const std::string& id, std::int64_t prefix_ms) const;
  std::size_t size() const { return entries_.size(); }

  static Script load_jsonl(const std::string& path);
  static Script parse_jsonl(std::istream& in);
  void save_jsonl(const std::string& path) const;
  void write_jsonl(std::ostream& out) const;

 private:
  std::map<std::pair<std::string, std::int64_t>, Beam> entries_;
};

// Returns the recorded beam for (req.utterance_id, req.audio_prefix_ms)
// verbatim; MissingScriptEntry when absent. Forced-prefix conformance is
// checked upstream by the engine.
Beam scripted_decode(const Script& script, const DecodeRequest& req);

class ScriptedDecoder : public Decoder {
 public:
  explicit ScriptedDecoder(Script script) : script_(std::move(script)) {}

  Beam decode(const DecodeRequest& req) override { return scripted_decode(script_, req); }
  const Script& script() const { return script_; }

 private:
  Script script_;
};

// Pass-through decoder that records every (request, beam) pair into a
// Script, e.g. to capture a live run for later replay.
class RecordingDecoder : public Decoder {
 public:
  RecordingDecoder(Decoder& inner, Script& out) : inner_(inner), out_(out) {}

  Beam decode(const DecodeRequest& req) override;

 private:
  Decoder& inner_;
  Script& out_;
};

// ── Subprocess bridge ───────────────────────────────────────────────────────

// Speaks line-delimited JSON over the peer's stdin/stdout. The peer opens
// with {"type":"hello","version":1}; each request is one line
// {"type":"decode","id":...,"prefix_ms":N,"forced":[...],"beam":B} answered
// by one line {"beams":[...]}. One request in flight per peer.
class BridgeDecoder : public Decoder {
 public:
  explicit BridgeDecoder(const std::string& command, std::int64_t timeout_ms = 60000);
  ~BridgeDecoder() override;

  BridgeDecoder(const BridgeDecoder&) = delete;
  BridgeDecoder& operator=(const BridgeDecoder&) = delete;

  Beam decode(const DecodeRequest& req) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// ── Wire helpers (shared with the bundled mock peer) ────────────────────────

std::string request_to_line(const DecodeRequest& req);
DecodeRequest request_from_line(const std::string& line);
std::string beams_to_wire(const Beam& beam);      // the {"beams":[...]} payload
Beam beams_from_wire(const std::string& json_text);

}  // namespace streamslate
