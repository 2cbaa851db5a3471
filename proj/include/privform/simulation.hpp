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
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "privform/scenario.hpp"

namespace privform {

struct SimulationOptions {
  std::int64_t horizon = 100000;
  // Defaults to default_burn_in(graph, gamma).
  std::optional<std::int64_t> burn_in;
  // Keep every state and error (needed for trajectory export).
  bool record_trajectory = false;
  // x(0) = p + U[-spread, spread]^d per agent.
  double initial_spread = 1.0;
};

struct SimulationResult {
  std::int64_t horizon = 0;
  std::int64_t burn_in = 0;
  std::uint64_t seed = 0;
  // Time-averaged (d/N) sum_i e_i^2 over k in [burn_in, horizon], averaged
  // over the d coordinates.
  double empirical_mse_tail = 0.0;
  // Entries k = 0..horizon when recorded; error_trajectory[k] is N x d.
  std::vector<NetworkState> trajectory;
  std::vector<Eigen::MatrixXd> error_trajectory;
};

// Runs the protocol from an explicit initial state with caller-owned
// per-agent random streams.
SimulationResult run_protocol(const NetworkScenario& scenario,
                              NetworkState initial, std::span<Rng> agent_rngs,
                              const SimulationOptions& options);

// One trial. Agent j's stream is make_rng(seed, j); the initial perturbation
// uses make_rng(seed, kInitialStream).
SimulationResult simulate(const NetworkScenario& scenario,
                          const SimulationOptions& options, std::uint64_t seed);

inline constexpr std::uint64_t kInitialStream = 1u << 20;

struct TrialSummary {
  std::vector<double> per_trial_mse;
  double mean_mse = 0.0;
  double standard_error = 0.0;
};

// Independent trials with seeds split_seed(seed, t), run concurrently and
// folded in trial order.
TrialSummary simulate_trials(const NetworkScenario& scenario,
                             const SimulationOptions& options,
                             std::uint64_t seed, int trials);

}  // namespace privform
