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

#include "privform/simulation.hpp"

#include <cmath>
#include <random>

#include "formation_internal.hpp"
#include "privform/error.hpp"
#include "privform/parallel.hpp"

namespace privform {

SimulationResult run_protocol(const NetworkScenario& scenario,
                              NetworkState initial, std::span<Rng> agent_rngs,
                              const SimulationOptions& options) {
  scenario.validate();
  const WeightedGraph& g = scenario.graph;
  const int n = g.n_agents();
  const int d = scenario.dimension;
  if (component_count(g) != 1) {
    fail(ErrorKind::kDisconnected,
         "simulation requires a connected communication graph");
  }
  if (static_cast<int>(agent_rngs.size()) != n) {
    fail(ErrorKind::kInvalidArgument, "need one random stream per agent");
  }
  const std::int64_t burn_in =
      options.burn_in.value_or(default_burn_in(g, scenario.gamma));
  if (options.horizon <= burn_in) {
    fail(ErrorKind::kConfig, "horizon must exceed the burn-in (" +
                                 std::to_string(burn_in) + " steps)");
  }

  SimulationResult result;
  result.horizon = options.horizon;
  result.burn_in = burn_in;
  const auto edges = g.edges();

  Eigen::MatrixXd shifted = initial.shifted_states;
  double tail_sum = 0.0;
  std::int64_t tail_count = 0;
  auto observe = [&](std::int64_t k) {
    const Eigen::MatrixXd e = shifted.rowwise() - shifted.colwise().mean();
    if (k >= burn_in) {
      tail_sum += e.squaredNorm();
      ++tail_count;
    }
    if (options.record_trajectory) {
      result.trajectory.push_back(
          NetworkState::from_shifted(shifted, scenario.formation, k));
      result.error_trajectory.push_back(e);
    }
  };

  observe(0);
  for (std::int64_t k = 1; k <= options.horizon; ++k) {
    shifted = internal::advance_shifted(shifted, edges, scenario.noise,
                                        scenario.gamma, agent_rngs);
    observe(k);
  }
  // (d/N) * mean over k and l of sum_i e_{l,i}^2; tail_sum already sums
  // over the d coordinates.
  const double per_dimension =
      tail_sum / (static_cast<double>(tail_count) * static_cast<double>(d));
  result.empirical_mse_tail = static_cast<double>(d) / n * per_dimension;
  return result;
}

SimulationResult simulate(const NetworkScenario& scenario,
                          const SimulationOptions& options,
                          std::uint64_t seed) {
  scenario.validate();
  const int n = scenario.n_agents();
  const int d = scenario.dimension;
  Rng init_rng = make_rng(seed, kInitialStream);
  std::uniform_real_distribution<double> spread(-options.initial_spread,
                                                options.initial_spread);
  Eigen::MatrixXd shifted(n, d);
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < d; ++l) shifted(i, l) = spread(init_rng);
  }
  std::vector<Rng> rngs;
  rngs.reserve(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) {
    rngs.push_back(make_rng(seed, static_cast<std::uint64_t>(j)));
  }
  SimulationResult result = run_protocol(
      scenario, NetworkState::from_shifted(shifted, scenario.formation), rngs,
      options);
  result.seed = seed;
  return result;
}

TrialSummary simulate_trials(const NetworkScenario& scenario,
                             const SimulationOptions& options,
                             std::uint64_t seed, int trials) {
  if (trials < 1) fail(ErrorKind::kConfig, "need at least one trial");
  SimulationOptions quiet = options;
  quiet.record_trajectory = false;

  TrialSummary out;
  out.per_trial_mse.assign(static_cast<size_t>(trials), 0.0);
  parallel_for(trials, [&](int t) {
    const std::uint64_t trial_seed =
        split_seed(seed, static_cast<std::uint64_t>(t));
    out.per_trial_mse[static_cast<size_t>(t)] =
        simulate(scenario, quiet, trial_seed).empirical_mse_tail;
  });
  double sum = 0.0;
  for (double v : out.per_trial_mse) sum += v;
  out.mean_mse = sum / trials;
  if (trials > 1) {
    double var = 0.0;
    for (double v : out.per_trial_mse) {
      var += (v - out.mean_mse) * (v - out.mean_mse);
    }
    out.standard_error = std::sqrt(var / (trials - 1) / trials);
  }
  return out;
}

}  // namespace privform
