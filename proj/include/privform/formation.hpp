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
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "privform/graph.hpp"
#include "privform/privacy.hpp"
#include "privform/rng.hpp"

namespace privform {

// Desired relative offsets Δ_ij for every ordered mask pair, together with a
// witness configuration p satisfying p_j - p_i = Δ_ij.
class FormationSpec {
 public:
  FormationSpec() = default;
  // Offsets derived from the reference points for every mask edge.
  static FormationSpec from_reference_points(const TopologyMask& mask,
                                             Eigen::MatrixXd points);
  // Offsets given per ordered pair (either orientation suffices). A witness
  // is recovered along a spanning forest and every offset is checked against
  // it to 1e-9; opposite orientations must be antisymmetric.
  static FormationSpec from_offsets(
      const TopologyMask& mask, int dimension,
      const std::map<std::pair<int, int>, Eigen::VectorXd>& offsets);
  // All agents at the origin: plain consensus.
  static FormationSpec consensus(const TopologyMask& mask, int dimension);

  int dimension() const { return static_cast<int>(points_.cols()); }
  int n_agents() const { return static_cast<int>(points_.rows()); }
  const Eigen::MatrixXd& reference_points() const { return points_; }
  const std::map<std::pair<int, int>, Eigen::VectorXd>& offsets() const {
    return offsets_;
  }
  Eigen::VectorXd offset(int i, int j) const;

 private:
  Eigen::MatrixXd points_;  // N x d, row i is p_i
  std::map<std::pair<int, int>, Eigen::VectorXd> offsets_;
};

// Which step sizes the dynamics accept.
enum class StepRule {
  // gamma * d_max < 1: I - gamma L is entrywise nonnegative.
  kDegreeBound,
  // Relaxed: gamma * lambda_N < 2.
  kSpectral,
};

// Throws Error(kUnstableStep) when gamma violates the rule.
void check_step_size(const WeightedGraph& g, double gamma, StepRule rule);

struct NetworkState {
  std::int64_t time_index = 0;
  Eigen::MatrixXd states;          // x(k), N x d
  Eigen::MatrixXd shifted_states;  // x(k) - p

  static NetworkState from_states(Eigen::MatrixXd states,
                                  const FormationSpec& spec,
                                  std::int64_t time_index = 0);
  static NetworkState from_shifted(Eigen::MatrixXd shifted,
                                   const FormationSpec& spec,
                                   std::int64_t time_index = 0);
};

// One step of the privatized protocol. Each agent j draws one privacy noise
// vector v_j(k) (broadcast unchanged to all its neighbours) and then its own
// process noise n_j(k), both from agent_rngs[j].
NetworkState step_private(const NetworkState& state, const WeightedGraph& g,
                          const FormationSpec& spec, const NoiseModel& noise,
                          double gamma, std::span<Rng> agent_rngs,
                          StepRule rule = StepRule::kDegreeBound);

// e_[l] = (I - 11ᵀ/N) x̄_[l] for every dimension l; column l of the result.
Eigen::MatrixXd network_error(const NetworkState& state);

// Smallest k with rho^k < 1e-3, doubled, where rho = sigma_max(M).
std::int64_t default_burn_in(const WeightedGraph& g, double gamma);

}  // namespace privform
