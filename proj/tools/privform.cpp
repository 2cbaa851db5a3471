// Copyright 2026 The privform Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: analyze, simulate, codesign, sweep.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "privform/run.hpp"

namespace {

struct Flags {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<std::int64_t> horizon;
};

CLI::App* add_mode(CLI::App& app, const std::string& name,
                   const std::string& help, Flags& flags) {
  CLI::App* sub = app.add_subcommand(name, help);
  sub->add_option("--config", flags.config, "config file (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--out", flags.out, "output directory")->capture_default_str();
  sub->add_option("--seed", flags.seed, "root seed, overrides the config");
  sub->add_option("--trials", flags.trials, "independent simulation trials");
  sub->add_option("--horizon", flags.horizon, "simulation horizon in steps");
  return sub;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private formation control: analysis, "
               "simulation and privacy/network co-design"};
  app.require_subcommand(1);
  Flags flags;
  auto* analyze = add_mode(app, "analyze",
                           "steady-state covariance and error bound", flags);
  auto* simulate = add_mode(app, "simulate",
                            "Monte Carlo run compared against the exact error",
                            flags);
  auto* codesign = add_mode(app, "codesign",
                            "optimize edge weights and privacy levels", flags);
  auto* sweep = add_mode(app, "sweep", "co-design over a parameter grid", flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : privform::kExitConfig;
  }

  privform::Mode mode = privform::Mode::kAnalyze;
  if (*simulate) mode = privform::Mode::kSimulate;
  if (*codesign) mode = privform::Mode::kCodesign;
  if (*sweep) mode = privform::Mode::kSweep;
  (void)analyze;

  try {
    const privform::RunConfig rc = privform::load_run_config(
        mode, flags.config, flags.out, flags.seed, flags.trials, flags.horizon);
    const privform::RunOutcome outcome = privform::run(rc);
    (outcome.exit_code == 0 ? std::cout : std::cerr) << outcome.message << "\n";
    return outcome.exit_code;
  } catch (const privform::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return privform::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return privform::kExitFailure;
  }
}
