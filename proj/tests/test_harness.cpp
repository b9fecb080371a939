// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"

#include "streamslate/harness.hpp"
#include "streamslate/metrics.hpp"

using namespace streamslate;

TEST_CASE("tokenizers") {
  CHECK(tokenize("wir  hatten\tein auto ", TokenizerKind::Whitespace) ==
        std::vector<std::string>{"wir", "hatten", "ein", "auto"});
  CHECK(tokenize("", TokenizerKind::Whitespace).empty());
  CHECK(tokenize("猫が 鳴く", TokenizerKind::Character) ==
        std::vector<std::string>{"猫", "が", "鳴", "く"});
  CHECK(tokenize("ab", TokenizerKind::Character) == std::vector<std::string>{"a", "b"});
  CHECK(tokenizer_from_name("ws") == TokenizerKind::Whitespace);
  CHECK_THROWS_AS(tokenizer_from_name("words"), Error);
}

TEST_CASE("dataset parsing") {
  SUBCASE("two valid lines") {
    std::istringstream in(
        R"({"id":"a","segments_ms":[1000,1000],"reference":"x y"})"
        "\n"
        R"({"id":"b","segments_ms":[500],"reference":"z","timeline":[[100,"z"]]})"
        "\n");
    const Dataset ds = parse_dataset(in, TokenizerKind::Whitespace);
    REQUIRE(ds.utterances.size() == 2);
    CHECK(ds.utterances[0].total_ms() == 2000);
    CHECK(tst::texts(ds.utterances[0].reference) == std::vector<std::string>{"x", "y"});
    REQUIRE(ds.utterances[1].timeline.has_value());
    CHECK(ds.utterances[1].timeline->size() == 1);
    CHECK(ds.find("b") != nullptr);
    CHECK(ds.find("c") == nullptr);
  }
  SUBCASE("duplicate id") {
    std::istringstream in(
        R"({"id":"a","segments_ms":[1000],"reference":"x"})"
        "\n"
        R"({"id":"a","segments_ms":[1000],"reference":"y"})"
        "\n");
    try {
      parse_dataset(in, TokenizerKind::Whitespace);
      FAIL("expected error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::DuplicateId);
    }
  }
  SUBCASE("malformed line is reported with its number") {
    std::istringstream in(
        R"({"id":"a","segments_ms":[1000],"reference":"x"})"
        "\n"
        R"({"id":"b","segments_ms":[1000],"reference":"y"})"
        "\n"
        "{broken\n");
    try {
      parse_dataset(in, TokenizerKind::Whitespace);
      FAIL("expected error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::ParseError);
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }
}

TEST_CASE("bundled dataset round-trips through the manifest format") {
  const Dataset ds = make_bundled_dataset(7, 20);
  REQUIRE(ds.utterances.size() == 20);
  for (const Utterance& u : ds.utterances) {
    CHECK(u.total_ms() >= 2000);
    CHECK(u.total_ms() <= 8000);
    REQUIRE(u.timeline.has_value());
    CHECK(u.reference.size() == u.timeline->size());
  }

  std::ostringstream out;
  write_dataset_jsonl(ds, out);
  std::istringstream in(out.str());
  const Dataset back = parse_dataset(in, TokenizerKind::Whitespace);
  REQUIRE(back.utterances.size() == ds.utterances.size());
  for (std::size_t i = 0; i < ds.utterances.size(); ++i) {
    const Utterance& a = ds.utterances[i];
    const Utterance& b = back.utterances[i];
    CHECK(a.id == b.id);
    CHECK(a.segments_ms == b.segments_ms);
    CHECK(same_texts(a.reference, b.reference));
    REQUIRE(b.timeline.has_value());
    REQUIRE(a.timeline->size() == b.timeline->size());
    for (std::size_t t = 0; t < a.timeline->size(); ++t) {
      CHECK((*a.timeline)[t].reveal_ms == (*b.timeline)[t].reveal_ms);
      CHECK((*a.timeline)[t].token.text == (*b.timeline)[t].token.text);
    }
  }
}

TEST_CASE("run produces identical reports for identical inputs") {
  const Dataset ds = make_bundled_dataset(7, 6);
  const EngineConfig cfg{Strategy::LA, 2, 500, 0, 4};
  auto report_str = [&] {
    SimDecoder decoder({2, 7, 2}, ds.utterances);
    return report_to_json(run(cfg, ds, decoder, RunOptions{100, 7}));
  };
  const std::string a = report_str();
  CHECK(a == report_str());
  CHECK(a.find("\"bleu\": 100.0000") != std::string::npos);  // fixed 4-decimal formatting
}

TEST_CASE("run validates the arrival granularity") {
  const Dataset ds = make_bundled_dataset(7, 2);
  SimDecoder decoder({2, 7, 2}, ds.utterances);
  CHECK_THROWS_AS(run({Strategy::LA, 2, 500, 0, 4}, ds, decoder, RunOptions{600, 7}), Error);
  CHECK_THROWS_AS(run({Strategy::LA, 2, 500, 0, 4}, ds, decoder, RunOptions{0, 7}), Error);
}

TEST_CASE("offline configuration reports mean utterance duration as AL") {
  const Dataset ds = make_bundled_dataset(7, 8);
  SimDecoder decoder({2, 7, 2}, ds.utterances);
  std::int64_t max_total = 0;
  double mean_total = 0.0;
  for (const Utterance& u : ds.utterances) {
    max_total = std::max(max_total, u.total_ms());
    mean_total += static_cast<double>(u.total_ms());
  }
  mean_total /= static_cast<double>(ds.utterances.size());

  const RunReport report =
      run({Strategy::LA, 2, max_total, 0, 4}, ds, decoder, RunOptions{100, 7});
  CHECK(report.corpus.al_ms == doctest::Approx(mean_total).epsilon(1e-12));
  CHECK(report.corpus.ap == doctest::Approx(1.0).epsilon(1e-12));
  for (const UtteranceRecord& r : report.utterances) {
    const Utterance* u = ds.find(r.id);
    REQUIRE(u != nullptr);
    for (std::int64_t d : r.delays_ms) CHECK(d == u->total_ms());
    CHECK(r.pre_flush_commits == 0);
  }
}

TEST_CASE("negative classic AL only appears with over-long hypotheses on engine runs") {
  const Dataset ds = make_bundled_dataset(7, 20);
  for (int hold : {0, 2}) {
    SimDecoder decoder({2, 7, 2}, ds.utterances);
    const RunReport report =
        run({Strategy::Hold, hold, 500, 0, 4}, ds, decoder, RunOptions{100, 7});
    for (const UtteranceRecord& r : report.utterances) {
      const Utterance* u = ds.find(r.id);
      const LatencyInput in{r.delays_ms, u->total_ms(), static_cast<int>(u->reference.size())};
      if (average_lagging(in, false) < 0.0) {
        CHECK(r.prediction.size() > u->reference.size());
      }
    }
  }
}

TEST_CASE("initial wait trades latency for early context") {
  const Dataset ds = make_bundled_dataset(7, 10);
  SimDecoder decoder({2, 7, 2}, ds.utterances);
  const RunReport plain = run({Strategy::LA, 2, 250, 0, 4}, ds, decoder, RunOptions{50, 7});
  const RunReport waited = run({Strategy::LA, 2, 250, 2000, 4}, ds, decoder, RunOptions{50, 7});
  CHECK(waited.corpus.al_ms > plain.corpus.al_ms);
  CHECK(waited.corpus.ap > plain.corpus.ap);
  // with an error-free decoder the flush still recovers the full truth
  CHECK(waited.corpus.bleu == doctest::Approx(100.0));
}

TEST_CASE("larger chunks never commit a token earlier") {
  // with nested chunk sizes the commit opportunities of the larger chunk are
  // a subset of the smaller one's, so per-token delays dominate
  const Dataset ds = make_bundled_dataset(7, 10);
  SimDecoder decoder({2, 7, 2}, ds.utterances);
  const RunReport fine = run({Strategy::LA, 2, 500, 0, 4}, ds, decoder, RunOptions{100, 7});
  const RunReport coarse = run({Strategy::LA, 2, 1000, 0, 4}, ds, decoder, RunOptions{100, 7});
  REQUIRE(fine.utterances.size() == coarse.utterances.size());
  for (std::size_t i = 0; i < fine.utterances.size(); ++i) {
    REQUIRE(fine.utterances[i].prediction == coarse.utterances[i].prediction);
    for (std::size_t t = 0; t < fine.utterances[i].delays_ms.size(); ++t) {
      CHECK(coarse.utterances[i].delays_ms[t] >= fine.utterances[i].delays_ms[t]);
    }
  }
  CHECK(coarse.corpus.al_ms >= fine.corpus.al_ms);
}

TEST_CASE("sweep emits one sorted row per grid point") {
  const Dataset ds = make_bundled_dataset(7, 4);
  SimDecoder decoder({2, 7, 2}, ds.utterances);
  SweepGrid grid;
  grid.strategies = {Strategy::LA, Strategy::Hold};
  grid.ns = {2};
  grid.chunk_ms = {500, 250};
  grid.initial_wait_ms = {0};
  grid.beams = {4};
  const std::string csv = sweep(grid, ds, decoder, RunOptions{50, 7});

  std::istringstream lines(csv);
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(lines, line)) rows.push_back(line);
  REQUIRE(rows.size() == 5);  // header + 4 rows
  CHECK(rows[0] == kSweepCsvHeader);
  CHECK(rows[1].rfind("hold,2,250,", 0) == 0);
  CHECK(rows[2].rfind("hold,2,500,", 0) == 0);
  CHECK(rows[3].rfind("la,2,250,", 0) == 0);
  CHECK(rows[4].rfind("la,2,500,", 0) == 0);

  SUBCASE("deterministic") {
    SimDecoder again({2, 7, 2}, ds.utterances);
    CHECK(sweep(grid, ds, again, RunOptions{50, 7}) == csv);
  }
}

TEST_CASE("sweep rejects empty and invalid grids") {
  const Dataset ds = make_bundled_dataset(7, 2);
  SimDecoder decoder({2, 7, 2}, ds.utterances);
  SweepGrid empty;
  try {
    sweep(empty, ds, decoder, RunOptions{50, 7});
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EmptyGrid);
  }

  SweepGrid bad;
  bad.strategies = {Strategy::LA};
  bad.ns = {1};  // la requires n >= 2
  bad.chunk_ms = {500};
  bad.initial_wait_ms = {0};
  bad.beams = {4};
  try {
    sweep(bad, ds, decoder, RunOptions{50, 7});
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InvalidConfig);
  }
}

TEST_CASE("score_logs reproduces the negative-AL diagnosis") {
  std::istringstream in(
      R"({"reference":"r1 r2","prediction":"h1 h2 h3 h4 h5","delays_ms":[1000,1000,1000,1000,2000],"total_ms":2000})"
      "\n"
      R"({"reference":"a b c","prediction":"a b c","delays_ms":[3000,3000,3000],"segments_ms":[1500,1500]})"
      "\n");
  const LogScore score = score_logs(in, TokenizerKind::Whitespace);
  REQUIRE(score.lines.size() == 2);

  CHECK(score.lines[0].al_ms == doctest::Approx(-800.0).epsilon(1e-9));
  CHECK(score.lines[0].al_corrected_ms == doctest::Approx(400.0).epsilon(1e-9));
  CHECK(score.lines[0].negative_al);
  CHECK(score.lines[0].hyp_len - score.lines[0].ref_len == 3);

  CHECK(score.lines[1].al_ms == doctest::Approx(3000.0).epsilon(1e-9));  // offline: AL = total
  CHECK_FALSE(score.lines[1].negative_al);

  const std::string text = log_score_to_json(score);
  CHECK(text.find("\"al_ms\": -800.0000") != std::string::npos);
  CHECK(text.find("\"negative_al\": true") != std::string::npos);
  CHECK(text.find("\"hyp_minus_ref\": 3") != std::string::npos);
}

TEST_CASE("score_logs reports malformed records with line context") {
  SUBCASE("delays shorter than the prediction") {
    std::istringstream in(
        R"({"reference":"a","prediction":"a b","delays_ms":[500],"total_ms":1000})"
        "\n");
    try {
      score_logs(in, TokenizerKind::Whitespace);
      FAIL("expected error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::LengthMismatch);
      CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }
  }
  SUBCASE("missing fields") {
    std::istringstream in(R"({"reference":"a"})"
                          "\n");
    CHECK_THROWS_AS(score_logs(in, TokenizerKind::Whitespace), Error);
  }
  SUBCASE("wall_ms is accepted and ignored") {
    std::istringstream in(
        R"({"reference":"a","prediction":"a","delays_ms":[1000],"total_ms":1000,"wall_ms":123})"
        "\n");
    CHECK(score_logs(in, TokenizerKind::Whitespace).lines.size() == 1);
  }
}

TEST_CASE("commit log serialization round-trips") {
  std::mt19937_64 rng(99);
  for (int it = 0; it < 100; ++it) {
    CommitLog log;
    std::int64_t delay = 1;
    int chunk = 1;
    const int entries = static_cast<int>(rng() % 8);
    for (int i = 0; i < entries; ++i) {
      delay += static_cast<std::int64_t>(rng() % 500);
      chunk += static_cast<int>(rng() % 2);
      log.append(Token{"t" + std::to_string(rng() % 10), false}, delay, chunk);
    }
    CHECK(commit_log_from_json(commit_log_to_json(log)) == log);
  }
}
