// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "helpers.hpp"

#include "streamslate/engine.hpp"

using namespace streamslate;
using tst::beam_of;
using tst::LambdaDecoder;
using tst::toks;

namespace {

Utterance plain_utterance(std::vector<std::int64_t> segments) {
  Utterance u;
  u.id = "utt1";
  u.segments_ms = std::move(segments);
  u.reference = toks({"wir", "hatten", "ein", "auto"});
  return validate_utterance(u);
}

LambdaDecoder constant_decoder(std::initializer_list<std::string> best) {
  TokenSeq tokens = toks(best);
  return LambdaDecoder([tokens](const DecodeRequest& req) {
    TokenSeq out = req.forced;
    for (std::size_t i = req.forced.size(); i < tokens.size(); ++i) out.push_back(tokens[i]);
    return Beam({Hypothesis{out, 0.0}});
  });
}

}  // namespace

TEST_CASE("config validation") {
  const auto rejected = [](EngineConfig cfg) { CHECK_THROWS_AS(cfg.validate(), Error); };
  rejected({Strategy::LA, 2, 0, 0, 4});
  rejected({Strategy::LA, 1, 500, 0, 4});
  rejected({Strategy::SP, 0, 500, 0, 4});
  rejected({Strategy::Hold, -1, 500, 0, 4});
  rejected({Strategy::LA, 2, 500, -1, 4});
  rejected({Strategy::LA, 2, 500, 0, 0});
  EngineConfig{Strategy::Hold, 0, 500, 0, 1}.validate();
  CHECK(strategy_from_name("sp") == Strategy::SP);
  CHECK_THROWS_AS(strategy_from_name("nope"), Error);
}

TEST_CASE("first trigger threshold is max(chunk_ms, initial_wait_ms)") {
  const Utterance u = plain_utterance({4000});
  auto decoder = constant_decoder({"a", "b", "c"});

  SUBCASE("no wait: chunk size triggers") {
    Session s({Strategy::Hold, 0, 500, 0, 4}, u, decoder);
    s.push_audio(499);
    CHECK(s.step().kind == ActionKind::Read);
    CHECK(s.decode_count() == 0);
    s.push_audio(1);
    CHECK(s.step().kind == ActionKind::Write);
    CHECK(s.decode_count() == 1);
    CHECK(s.read_ms() == 500);
  }
  SUBCASE("wait 2000 enlarges only the first chunk") {
    Session s({Strategy::Hold, 0, 250, 2000, 4}, u, decoder);
    s.push_audio(1999);
    CHECK(s.step().kind == ActionKind::Read);
    CHECK(s.decode_count() == 0);
    s.push_audio(1);
    CHECK(s.step().kind != ActionKind::Read);
    CHECK(s.read_ms() == 2000);
    s.push_audio(250);
    s.step();
    CHECK(s.read_ms() == 2250);  // subsequent chunks use chunk_ms
  }
}

TEST_CASE("push_audio accumulates, finishes and guards") {
  const Utterance u = plain_utterance({1000, 1000});
  auto decoder = constant_decoder({"a"});
  Session s({Strategy::Hold, 0, 500, 0, 4}, u, decoder);

  s.push_audio(1000);
  CHECK_FALSE(s.source_finished());
  s.push_audio(1000);
  CHECK(s.source_finished());

  try {
    s.push_audio(500);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::PushAfterFinish);
  }

  Session s2({Strategy::Hold, 0, 500, 0, 4}, u, decoder);
  s2.push_audio(1500);
  try {
    s2.push_audio(501);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Overrun);
  }
}

TEST_CASE("la-2 emits nothing after the first chunk") {
  std::vector<Utterance> utts{tst::small_utterance()};
  SimDecoder sim({0, 7, 0}, utts);
  Session s({Strategy::LA, 2, 500, 0, 4}, utts[0], sim);
  s.push_audio(500);
  CHECK(s.step().kind == ActionKind::Read);
  CHECK(s.decode_count() == 1);
  CHECK(s.commits().empty());
}

TEST_CASE("la-2 over the scripted fixture writes the agreed prefix at 1000 ms") {
  const Script script = Script::load_jsonl(tst::fixture_path("la2_500ms.jsonl"));
  ScriptedDecoder decoder{script};
  const Utterance u = plain_utterance({1000, 1000});
  Session s({Strategy::LA, 2, 500, 0, 4}, u, decoder);

  s.push_audio(500);
  CHECK(s.step().kind == ActionKind::Read);
  s.push_audio(500);
  const AgentAction act = s.step();
  REQUIRE(act.kind == ActionKind::Write);
  CHECK(tst::texts(act.payload) == std::vector<std::string>{"wir"});
  REQUIRE(s.commits().size() == 1);
  CHECK(s.commits().entries()[0].delay_ms == 1000);
  CHECK(s.commits().entries()[0].chunk_index == 2);
}

TEST_CASE("strip_eos") {
  Hypothesis h{TokenSeq{Token{"a", false}, Token{"b", false}, eos_token()}, 0.0};
  CHECK(tst::texts(strip_eos(h).tokens) == std::vector<std::string>{"a", "b"});
  Hypothesis none{toks({"a", "b"}), 0.0};
  CHECK(tst::texts(strip_eos(none).tokens) == std::vector<std::string>{"a", "b"});
  Hypothesis only{TokenSeq{eos_token()}, 0.0};
  CHECK(strip_eos(only).tokens.empty());
}

TEST_CASE("finalize flushes the remaining best hypothesis at total_ms") {
  const Script script = Script::load_jsonl(tst::fixture_path("la2_500ms.jsonl"));
  ScriptedDecoder decoder{script};
  const Utterance u = plain_utterance({1000, 1000});
  Session s({Strategy::LA, 2, 500, 0, 4}, u, decoder);

  for (int i = 0; i < 4; ++i) {
    s.push_audio(500);
    if (!s.source_finished()) s.step();
  }
  CHECK(s.source_finished());
  const FinalResult fin = s.finalize();
  CHECK(tst::texts(fin.prediction) ==
        std::vector<std::string>{"wir", "hatten", "ein", "auto"});
  CHECK(fin.delays_ms == std::vector<std::int64_t>{1000, 1500, 2000, 2000});
  CHECK(s.is_finalized());
  CHECK_THROWS_AS(s.finalize(), Error);
  CHECK_THROWS_AS(s.step(), Error);
  CHECK_THROWS_AS(s.push_audio(1), Error);
}

TEST_CASE("finalize requires a finished source") {
  const Utterance u = plain_utterance({2000});
  auto decoder = constant_decoder({"a"});
  Session s({Strategy::Hold, 0, 500, 0, 4}, u, decoder);
  s.push_audio(500);
  CHECK_THROWS_AS(s.finalize(), Error);
}

TEST_CASE("offline configuration: single decode at the end, all delays total") {
  const Utterance u = plain_utterance({1000, 1000});
  auto decoder = constant_decoder({"a", "b", "c"});
  Session s({Strategy::LA, 2, 5000, 0, 4}, u, decoder);
  while (!s.source_finished()) s.push_audio(100);
  const FinalResult fin = s.finalize();
  CHECK(s.decode_count() == 1);
  CHECK(tst::texts(fin.prediction) == std::vector<std::string>{"a", "b", "c"});
  CHECK(fin.delays_ms == std::vector<std::int64_t>{2000, 2000, 2000});
}

TEST_CASE("a drain step consumes a short final chunk when driven directly") {
  const Utterance u = plain_utterance({1000, 990});
  std::vector<Utterance> utts{tst::small_utterance()};
  utts[0].segments_ms = {1000, 990};  // total 1990
  SimDecoder sim({0, 7, 0}, utts);
  Session s({Strategy::Hold, 0, 500, 0, 4}, utts[0], sim);

  while (!s.source_finished()) {
    s.push_audio(std::min<std::int64_t>(100, s.total_ms() - s.arrived_ms()));
    if (!s.source_finished()) s.step();
  }
  CHECK(s.unread_ms() == 490);
  s.step();  // short final chunk: 490 ms
  CHECK(s.read_ms() == 1990);
  CHECK(s.unread_ms() == 0);
  CHECK(s.step().kind == ActionKind::Read);  // nothing left to consume
}

TEST_CASE("decoder violations are rejected") {
  const Utterance u = plain_utterance({1000, 1000});
  int calls = 0;
  LambdaDecoder bad([&](const DecodeRequest&) {
    ++calls;
    return calls == 1 ? beam_of({{"a", "b"}}) : beam_of({{"a", "x"}});
  });
  Session s({Strategy::Hold, 0, 500, 0, 4}, u, bad);
  s.push_audio(500);
  CHECK(s.step().kind == ActionKind::Write);  // commits ["a","b"]
  s.push_audio(500);
  try {
    s.step();  // beam ["a","x"] does not extend ["a","b"]
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DecoderViolation);
  }
}

TEST_CASE("finalize rejects a flush that contradicts the commit log") {
  const Utterance u = plain_utterance({500, 500});
  int calls = 0;
  LambdaDecoder bad([&](const DecodeRequest&) {
    ++calls;
    return calls == 1 ? beam_of({{"a", "b"}}) : beam_of({{"a", "x"}});
  });
  Session s({Strategy::Hold, 0, 500, 0, 4}, u, bad);
  s.push_audio(500);
  CHECK(s.step().kind == ActionKind::Write);
  s.push_audio(500);
  try {
    s.finalize();
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DecoderViolation);
  }
}

TEST_CASE("append-only output: the trace concatenation is the prediction") {
  std::vector<Utterance> utts{tst::small_utterance()};
  SimDecoder sim({2, 7, 2}, utts);
  Session s({Strategy::LA, 2, 500, 0, 4}, utts[0], sim);

  TokenSeq written;
  while (!s.source_finished()) {
    s.push_audio(100);
    if (s.source_finished()) break;
    const AgentAction act = s.step();
    if (act.kind == ActionKind::Write) {
      written.insert(written.end(), act.payload.begin(), act.payload.end());
    }
  }
  const std::size_t pre_flush = written.size();
  const FinalResult fin = s.finalize();
  CHECK(pre_flush <= fin.prediction.size());
  CHECK(starts_with_texts(fin.prediction, written));

  std::int64_t prev = 0;
  for (std::int64_t d : fin.delays_ms) {
    CHECK(d > 0);
    CHECK(d <= s.total_ms());
    CHECK(d >= prev);
    prev = d;
  }
  CHECK(fin.delays_ms.size() == fin.prediction.size());
}

TEST_CASE("identical inputs produce identical action traces") {
  std::vector<Utterance> utts{tst::small_utterance()};
  auto trace = [&]() {
    SimDecoder sim({2, 7, 2}, utts);
    Session s({Strategy::LA, 2, 500, 0, 4}, utts[0], sim);
    std::vector<std::string> events;
    while (!s.source_finished()) {
      s.push_audio(100);
      if (s.source_finished()) break;
      const AgentAction act = s.step();
      std::string e = act.kind == ActionKind::Write ? "W:" : "R";
      for (const Token& t : act.payload) e += t.text + ",";
      events.push_back(std::move(e));
    }
    const FinalResult fin = s.finalize();
    for (const Token& t : fin.prediction) events.push_back(t.text);
    return events;
  };
  CHECK(trace() == trace());
}

TEST_CASE("one step may write several newly stable tokens with one delay") {
  const Utterance u = plain_utterance({1000, 1000});
  LambdaDecoder steady([&](const DecodeRequest& req) {
    TokenSeq full = toks({"a", "b", "c", "d"});
    TokenSeq out = req.forced;
    for (std::size_t i = req.forced.size(); i < full.size(); ++i) out.push_back(full[i]);
    return Beam({Hypothesis{out, 0.0}});
  });
  Session s({Strategy::LA, 2, 500, 0, 4}, u, steady);
  s.push_audio(500);
  CHECK(s.step().kind == ActionKind::Read);
  s.push_audio(500);
  const AgentAction act = s.step();
  REQUIRE(act.kind == ActionKind::Write);
  CHECK(act.payload.size() == 4);  // the whole agreed span in one action
  for (const CommitEntry& e : s.commits().entries()) CHECK(e.delay_ms == 1000);
}
