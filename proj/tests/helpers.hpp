// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "streamslate/core.hpp"
#include "streamslate/decoders.hpp"

namespace tst {

using namespace streamslate;

inline TokenSeq toks(std::initializer_list<std::string> texts) {
  TokenSeq out;
  for (const std::string& t : texts) out.push_back(Token{t, false});
  return out;
}

inline std::vector<std::string> texts(const TokenSeq& tokens) { return token_texts(tokens); }

inline Beam beam_of(std::initializer_list<std::initializer_list<std::string>> hyps) {
  std::vector<Hypothesis> items;
  double score = 0.0;
  for (const auto& h : hyps) {
    items.push_back(Hypothesis{toks(h), score});
    score -= 1.0;
  }
  return Beam(std::move(items));
}

class LambdaDecoder : public Decoder {
 public:
  explicit LambdaDecoder(std::function<Beam(const DecodeRequest&)> fn) : fn_(std::move(fn)) {}
  Beam decode(const DecodeRequest& req) override { return fn_(req); }

 private:
  std::function<Beam(const DecodeRequest&)> fn_;
};

inline std::string fixture_path(const std::string& name) {
  return std::string(STREAMSLATE_FIXTURE_DIR) + "/" + name;
}

// A small utterance with a timeline for direct engine/decoder tests:
// total 2000 ms, four tokens paced 400..1600 ms.
inline Utterance small_utterance() {
  Utterance u;
  u.id = "utt1";
  u.segments_ms = {1000, 1000};
  u.reference = toks({"wir", "hatten", "ein", "auto"});
  u.timeline = std::vector<TimelineEntry>{
      {400, Token{"wir", false}},
      {800, Token{"hatten", false}},
      {1200, Token{"ein", false}},
      {1600, Token{"auto", false}},
  };
  return u;
}

}  // namespace tst
