// SPDX-License-Identifier: Apache-2.0
//
// streamslate CLI: run one configuration, sweep a grid, score external
// logs, or emit the bundled synthetic dataset.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "streamslate/harness.hpp"

namespace {

using namespace streamslate;

struct DecoderFlags {
  std::string kind = "sim";
  std::string script_path;
  int tail = 2;
  int beam_jitter = 2;
  std::uint64_t seed = 7;
  std::int64_t bridge_timeout_ms = 60000;
};

void add_decoder_flags(CLI::App& cmd, DecoderFlags& flags) {
  cmd.add_option("--decoder", flags.kind, "decoder backend: sim|script|bridge")
      ->check(CLI::IsMember({"sim", "script", "bridge"}));
  cmd.add_option("--script", flags.script_path, "script file for --decoder script");
  cmd.add_option("--tail", flags.tail, "sim decoder: unstable guess tokens per decode");
  cmd.add_option("--beam-jitter", flags.beam_jitter, "sim decoder: perturbed-tail alternates");
  cmd.add_option("--seed", flags.seed, "sim decoder seed (echoed into reports)");
  cmd.add_option("--bridge-timeout-ms", flags.bridge_timeout_ms, "per-call bridge timeout");
}

std::unique_ptr<Decoder> make_decoder(const DecoderFlags& flags, const Dataset& ds) {
  if (flags.kind == "sim") {
    return std::make_unique<SimDecoder>(SimDecoderConfig{flags.tail, flags.seed, flags.beam_jitter},
                                        ds.utterances);
  }
  if (flags.kind == "script") {
    if (flags.script_path.empty()) {
      raise(Errc::InvalidConfig, "--decoder script requires --script PATH");
    }
    return std::make_unique<ScriptedDecoder>(Script::load_jsonl(flags.script_path));
  }
  const char* cmd = std::getenv("STREAMSLATE_BRIDGE_CMD");
  if (cmd == nullptr || *cmd == '\0') {
    raise(Errc::InvalidConfig, "--decoder bridge requires STREAMSLATE_BRIDGE_CMD");
  }
  return std::make_unique<BridgeDecoder>(cmd, flags.bridge_timeout_ms);
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Errc::ParseError, "cannot write '" + path + "'");
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"run an offline decoder as a simultaneous translator via chunked "
               "incremental decoding and evaluate the quality-latency trade-off"};
  app.require_subcommand(1);

  // run
  auto* run_cmd = app.add_subcommand("run", "evaluate one engine configuration");
  std::string dataset_path, tokenizer = "ws", report_path, record_script_path;
  std::string strategy = "la";
  int n = 2, beam = 4;
  std::int64_t chunk_ms = 1000, initial_wait_ms = 0, arrival_ms = 100;
  DecoderFlags run_decoder;
  run_cmd->add_option("--dataset", dataset_path, "manifest (JSON lines)")->required();
  run_cmd->add_option("--strategy", strategy, "hold|la|sp")
      ->check(CLI::IsMember({"hold", "la", "sp"}));
  run_cmd->add_option("--n", n, "strategy parameter");
  run_cmd->add_option("--chunk-ms", chunk_ms, "chunk size in ms");
  run_cmd->add_option("--initial-wait-ms", initial_wait_ms, "first-chunk enlargement in ms");
  run_cmd->add_option("--beam", beam, "beam size");
  run_cmd->add_option("--arrival-ms", arrival_ms, "audio arrival increment");
  run_cmd->add_option("--tokenizer", tokenizer, "ws|char")->check(CLI::IsMember({"ws", "char"}));
  run_cmd->add_option("--report", report_path, "report JSON path (default: stdout)");
  run_cmd->add_option("--record-script", record_script_path,
                      "capture every decode into a replayable script file");
  add_decoder_flags(*run_cmd, run_decoder);

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "evaluate a configuration grid, emit CSV");
  std::string sweep_dataset, sweep_tokenizer = "ws", csv_path;
  std::vector<std::string> sweep_strategies{"la"};
  std::vector<int> sweep_ns{2}, sweep_beams{4};
  std::vector<std::int64_t> sweep_chunks{250, 500, 1000, 2000}, sweep_waits{0};
  std::int64_t sweep_arrival = 50;
  DecoderFlags sweep_decoder;
  sweep_cmd->add_option("--dataset", sweep_dataset, "manifest (JSON lines)")->required();
  sweep_cmd->add_option("--strategy", sweep_strategies, "strategies to sweep")->delimiter(',');
  sweep_cmd->add_option("--n", sweep_ns, "strategy parameters to sweep")->delimiter(',');
  sweep_cmd->add_option("--chunk-ms", sweep_chunks, "chunk sizes to sweep")->delimiter(',');
  sweep_cmd->add_option("--initial-wait-ms", sweep_waits, "initial waits to sweep")->delimiter(',');
  sweep_cmd->add_option("--beam", sweep_beams, "beam sizes to sweep")->delimiter(',');
  sweep_cmd->add_option("--arrival-ms", sweep_arrival, "audio arrival increment");
  sweep_cmd->add_option("--tokenizer", sweep_tokenizer, "ws|char")
      ->check(CLI::IsMember({"ws", "char"}));
  sweep_cmd->add_option("--csv", csv_path, "CSV output path (default: stdout)");
  add_decoder_flags(*sweep_cmd, sweep_decoder);

  // score-logs
  auto* score_cmd = app.add_subcommand("score-logs", "score externally produced decision logs");
  std::string logs_path, score_tokenizer = "ws", score_report;
  score_cmd->add_option("--logs", logs_path, "log file (JSON lines)")->required();
  score_cmd->add_option("--tokenizer", score_tokenizer, "ws|char")
      ->check(CLI::IsMember({"ws", "char"}));
  score_cmd->add_option("--report", score_report, "report JSON path (default: stdout)");

  // gen-fixture
  auto* gen_cmd = app.add_subcommand("gen-fixture", "emit the bundled synthetic dataset");
  std::string out_path;
  std::uint64_t gen_seed = 7;
  int gen_count = 20;
  gen_cmd->add_option("--out", out_path, "manifest output path (default: stdout)");
  gen_cmd->add_option("--seed", gen_seed, "generator seed");
  gen_cmd->add_option("--count", gen_count, "number of utterances");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      const Dataset ds = load_dataset(dataset_path, tokenizer_from_name(tokenizer));
      const auto decoder = make_decoder(run_decoder, ds);
      const EngineConfig cfg{strategy_from_name(strategy), n, chunk_ms, initial_wait_ms, beam};
      const RunOptions opts{arrival_ms, run_decoder.seed};
      RunReport report;
      if (record_script_path.empty()) {
        report = run(cfg, ds, *decoder, opts);
      } else {
        Script script;
        RecordingDecoder recorder(*decoder, script);
        report = run(cfg, ds, recorder, opts);
        script.save_jsonl(record_script_path);
      }
      emit(report_to_json(report), report_path);
    } else if (*sweep_cmd) {
      const Dataset ds = load_dataset(sweep_dataset, tokenizer_from_name(sweep_tokenizer));
      const auto decoder = make_decoder(sweep_decoder, ds);
      SweepGrid grid;
      for (const std::string& s : sweep_strategies) grid.strategies.push_back(strategy_from_name(s));
      grid.ns = sweep_ns;
      grid.chunk_ms = sweep_chunks;
      grid.initial_wait_ms = sweep_waits;
      grid.beams = sweep_beams;
      emit(sweep(grid, ds, *decoder, RunOptions{sweep_arrival, sweep_decoder.seed}), csv_path);
    } else if (*score_cmd) {
      const LogScore score = score_logs_file(logs_path, tokenizer_from_name(score_tokenizer));
      emit(log_score_to_json(score), score_report);
    } else if (*gen_cmd) {
      const Dataset ds = make_bundled_dataset(gen_seed, gen_count);
      if (out_path.empty()) {
        write_dataset_jsonl(ds, std::cout);
      } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) raise(Errc::ParseError, "cannot write '" + out_path + "'");
        write_dataset_jsonl(ds, out);
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
