// Copyright 2026 The ConvNat Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Writes a synthetic fixture corpus (train/dev/eval manifests, WAV audio,
// utterance span sidecars and transcripts) for trying out the CLI.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "convnat/errors.h"
#include "fixtures.h"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic conversation corpus"};
  std::string out;
  size_t train = 32, dev = 8, eval = 12;
  uint64_t seed = 7;
  app.add_option("--out", out, "Output directory")->required();
  app.add_option("--train", train, "Training conversations")->capture_default_str();
  app.add_option("--dev", dev, "Dev conversations")->capture_default_str();
  app.add_option("--eval", eval, "Eval conversations")->capture_default_str();
  app.add_option("--seed", seed)->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    namespace fx = convnat::fixtures;
    const std::filesystem::path dir(out);
    uint64_t stream = 0;
    for (auto [name, n] : {std::pair<const char*, size_t>{"train", train}, {"dev", dev}, {"eval", eval}}) {
      fx::Options opt;
      opt.name = name;
      opt.num_conversations = n;
      opt.seed = seed + 1000 * stream++;
      const auto set = fx::WriteFixtureSet(dir, opt);
      std::cout << set.manifest_path.string() << ": " << n << " conversations\n";
    }
    std::filesystem::create_directories(dir / "transcripts");
    const char* scripts[] = {
        "U: hi, can you help me book a table?\nS: of course, for how many people?\nU: four, tonight.\n",
        "S: welcome back, what would you like to do?\nU: check my order status.\nS: one moment please.\n",
        "U: what's the weather like tomorrow?\nS: sunny with a light breeze.\n",
    };
    for (int i = 0; i < 3; ++i) {
      std::ofstream(dir / "transcripts" / ("dialogue_" + std::to_string(i) + ".txt")) << scripts[i];
    }
  } catch (const convnat::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
