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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "privform/codesign.hpp"
#include "privform/error.hpp"
#include "privform/io.hpp"
#include "privform/scenario.hpp"

namespace privform {

enum class Mode { kAnalyze, kSimulate, kCodesign, kSweep };

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // I/O and anything unexpected
inline constexpr int kExitConfig = 2;
inline constexpr int kExitInfeasible = 3;
inline constexpr int kExitUnstable = 4;  // unstable step or disconnected graph
inline constexpr int kExitNonConvergence = 5;

int exit_code_for(ErrorKind kind);

struct SweepAxis {
  // One of e_R, eps_max_uniform, lambda2_min, vartheta.
  std::string name;
  std::vector<double> values;
};

struct RunConfig {
  Mode mode = Mode::kAnalyze;
  std::filesystem::path config_path;
  Json document;  // parsed config file
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;
  std::optional<int> trials;
  std::optional<std::int64_t> horizon;
  std::optional<SweepAxis> sweep;
};

// Reads and checks the config file; command-line values override the file.
RunConfig load_run_config(Mode mode, const std::filesystem::path& config_path,
                          const std::filesystem::path& out_dir,
                          std::optional<std::uint64_t> seed,
                          std::optional<int> trials,
                          std::optional<std::int64_t> horizon);

// Relative paths inside the config resolve against base_dir.
NetworkScenario scenario_from_config(const Json& config,
                                     const std::filesystem::path& base_dir);
CodesignProblem problem_from_config(const Json& config,
                                    const std::filesystem::path& base_dir);
SolverOptions solver_options_from_json(const Json& value);
// Applies one sweep value to a problem.
void apply_sweep_value(CodesignProblem& problem, const std::string& axis,
                       double value);

struct RunOutcome {
  int exit_code = kExitOk;
  std::string message;  // one line
  std::vector<std::filesystem::path> artifacts;
};

// Runs one mode and writes its artifacts into config.out_dir. Library errors
// are reported through the exit code rather than thrown.
RunOutcome run(const RunConfig& config);

}  // namespace privform
