// Copyright 2026 The cycleaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// cycleaug <command> [--config file] [--seed n] [--out dir] [--<key> value ...]
//
// Exit codes: 0 success, 1 usage or config error, 2 runtime failure.

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "cycleaug/pipeline.hpp"

namespace {

constexpr int kUsageError = 1;
constexpr int kRuntimeError = 2;

/// `--key value` and `--key=value` pairs left over after CLI11 parsing.
std::vector<std::pair<std::string, std::string>> parse_overrides(const std::vector<std::string>& extras) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& a = extras[i];
    if (!a.starts_with("--") || a.size() < 3) throw cycleaug::ConfigError("unexpected argument '" + a + "'");
    const auto eq = a.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(a.substr(2, eq - 2), a.substr(eq + 1));
    } else {
      if (i + 1 >= extras.size()) throw cycleaug::ConfigError("flag '" + a + "' needs a value");
      out.emplace_back(a.substr(2), extras[++i]);
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic-lesion CycleGAN augmentation pipeline"};
  app.require_subcommand(1, 1);
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  const auto add_globals = [&](CLI::App* a) {
    a->add_option("--config", config_path, "key = value config file");
    a->add_option("--seed", seed, "root seed");
    a->add_option("--out", out_dir, "output root directory");
  };
  add_globals(&app);

  const std::vector<std::pair<std::string, std::string>> commands{
      {"synth", "write a synthetic dataset"},
      {"train-gan", "train the CycleGAN and write a checkpoint plus loss log"},
      {"translate", "translate images with a trained generator"},
      {"train-clf", "train one classifier variant"},
      {"eval", "run the variant x seed experiment and write the report"},
      {"artifact-report", "compare checkerboard energy of two generators"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->allow_extras();
    add_globals(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsageError;
  }

  const CLI::App* sub = app.get_subcommands().front();
  cycleaug::RunConfig cfg;
  try {
    if (!config_path.empty()) cfg.apply(cycleaug::KeyValues::load(config_path), config_path);
    for (const auto& [k, v] : parse_overrides(sub->remaining())) cfg.set(k, v);
    if (seed) cfg.set("seed", std::to_string(*seed));
    if (!out_dir.empty()) cfg.set("out", out_dir);
    cfg.kv().integer("seed");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  }

  try {
    const auto dir = cycleaug::run_command(sub->get_name(), cfg);
    std::cout << dir.string() << '\n';
    return 0;
  } catch (const cycleaug::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}
