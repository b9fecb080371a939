// SPDX-License-Identifier: Apache-2.0
//
// Mock bridge peer: replays a recorded script over the line-delimited JSON
// protocol. --exit-after N makes it die silently after N responses, for
// testing peer-failure handling.
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "streamslate/decoders.hpp"

int main(int argc, char** argv) {
  CLI::App app{"mock decode peer replaying a recorded script"};
  std::string script_path;
  int exit_after = -1;
  app.add_option("script", script_path, "script file (JSON lines)")->required();
  app.add_option("--exit-after", exit_after, "exit without replying after N responses");
  CLI11_PARSE(app, argc, argv);

  using namespace streamslate;
  Script script;
  try {
    script = Script::load_jsonl(script_path);
  } catch (const Error& e) {
    std::cerr << "mock_peer: " << e.what() << "\n";
    return 2;
  }

  std::cout << R"({"type":"hello","version":1})" << "\n" << std::flush;

  std::string line;
  int served = 0;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    if (exit_after >= 0 && served >= exit_after) return 0;
    try {
      const DecodeRequest req = request_from_line(line);
      const Beam* beam = script.find(req.utterance_id, req.audio_prefix_ms);
      if (beam == nullptr) {
        std::cout << nlohmann::json{{"error", "no script entry for (" + req.utterance_id + ", " +
                                                  std::to_string(req.audio_prefix_ms) + ")"}}
                         .dump()
                  << "\n"
                  << std::flush;
      } else {
        std::cout << beams_to_wire(*beam) << "\n" << std::flush;
      }
    } catch (const Error& e) {
      std::cout << nlohmann::json{{"error", e.what()}}.dump() << "\n" << std::flush;
    }
    ++served;
  }
  return 0;
}
