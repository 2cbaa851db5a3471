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

#include "privform/formation.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>

#include "privform/error.hpp"
#include "formation_internal.hpp"

namespace privform {

FormationSpec FormationSpec::from_reference_points(const TopologyMask& mask,
                                                   Eigen::MatrixXd points) {
  if (points.rows() != mask.n_agents()) {
    fail(ErrorKind::kInvalidArgument,
         "need one reference point per agent");
  }
  if (points.cols() < 1) {
    fail(ErrorKind::kInvalidArgument, "formation dimension must be >= 1");
  }
  FormationSpec spec;
  spec.points_ = std::move(points);
  for (const Edge& e : mask.edges()) {
    const Eigen::VectorXd delta =
        (spec.points_.row(e.j) - spec.points_.row(e.i)).transpose();
    spec.offsets_[{e.i, e.j}] = delta;
    spec.offsets_[{e.j, e.i}] = -delta;
  }
  return spec;
}

FormationSpec FormationSpec::from_offsets(
    const TopologyMask& mask, int dimension,
    const std::map<std::pair<int, int>, Eigen::VectorXd>& offsets) {
  const int n = mask.n_agents();
  // Directed view of the supplied offsets, completing missing orientations.
  std::map<std::pair<int, int>, Eigen::VectorXd> full;
  for (const auto& [key, delta] : offsets) {
    const auto [i, j] = key;
    if (!mask.allows(i, j)) {
      fail(ErrorKind::kInvalidArgument,
           "offset given for a pair outside the topology");
    }
    if (delta.size() != dimension) {
      fail(ErrorKind::kInvalidArgument, "offset has the wrong dimension");
    }
    auto rev = offsets.find({j, i});
    if (rev != offsets.end() && (rev->second + delta).norm() > 1e-9) {
      fail(ErrorKind::kInvalidArgument,
           "offsets are not antisymmetric on {" + std::to_string(i + 1) + "," +
               std::to_string(j + 1) + "}");
    }
    full[{i, j}] = delta;
    full[{j, i}] = -delta;
  }
  for (const Edge& e : mask.edges()) {
    if (!full.contains({e.i, e.j})) {
      fail(ErrorKind::kInvalidArgument,
           "missing offset for edge {" + std::to_string(e.i + 1) + "," +
               std::to_string(e.j + 1) + "}");
    }
  }

  // Witness by breadth-first propagation from each component root.
  std::vector<std::vector<int>> adj(static_cast<size_t>(n));
  for (const Edge& e : mask.edges()) {
    adj[static_cast<size_t>(e.i)].push_back(e.j);
    adj[static_cast<size_t>(e.j)].push_back(e.i);
  }
  Eigen::MatrixXd points = Eigen::MatrixXd::Zero(n, dimension);
  std::vector<bool> placed(static_cast<size_t>(n), false);
  for (int root = 0; root < n; ++root) {
    if (placed[static_cast<size_t>(root)]) continue;
    placed[static_cast<size_t>(root)] = true;
    std::queue<int> frontier;
    frontier.push(root);
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop();
      for (int v : adj[static_cast<size_t>(u)]) {
        if (placed[static_cast<size_t>(v)]) continue;
        points.row(v) = points.row(u) + full.at({u, v}).transpose();
        placed[static_cast<size_t>(v)] = true;
        frontier.push(v);
      }
    }
  }
  for (const auto& [key, delta] : full) {
    const auto [i, j] = key;
    if ((points.row(j) - points.row(i) - delta.transpose()).norm() > 1e-9) {
      fail(ErrorKind::kInvalidArgument,
           "offsets are not cycle-consistent around {" +
               std::to_string(i + 1) + "," + std::to_string(j + 1) + "}");
    }
  }
  FormationSpec spec;
  spec.points_ = std::move(points);
  spec.offsets_ = std::move(full);
  return spec;
}

FormationSpec FormationSpec::consensus(const TopologyMask& mask,
                                       int dimension) {
  return from_reference_points(
      mask, Eigen::MatrixXd::Zero(mask.n_agents(), dimension));
}

Eigen::VectorXd FormationSpec::offset(int i, int j) const {
  auto it = offsets_.find({i, j});
  if (it == offsets_.end()) {
    fail(ErrorKind::kInvalidArgument, "no offset stored for this pair");
  }
  return it->second;
}

void check_step_size(const WeightedGraph& g, double gamma, StepRule rule) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    fail(ErrorKind::kUnstableStep, "step size gamma must be positive");
  }
  if (rule == StepRule::kDegreeBound) {
    const double dmax = adjacency_and_degrees(g).max_degree();
    if (gamma * dmax >= 1.0) {
      fail(ErrorKind::kUnstableStep,
           "unstable step size: gamma * d_max = " +
               std::to_string(gamma * dmax) + " >= 1");
    }
    return;
  }
  if (g.n_agents() < 2) return;
  const double lmax = spectral_summary(g).lambda_max;
  // A few ulps of slack so gamma exactly at 2 / lambda_N is rejected.
  if (gamma * lmax >= 2.0 * (1.0 - 1e-14)) {
    fail(ErrorKind::kUnstableStep,
         "unstable step size: gamma * lambda_N = " +
             std::to_string(gamma * lmax) + " >= 2");
  }
}

NetworkState NetworkState::from_states(Eigen::MatrixXd states,
                                       const FormationSpec& spec,
                                       std::int64_t time_index) {
  if (states.rows() != spec.n_agents() || states.cols() != spec.dimension()) {
    fail(ErrorKind::kInvalidArgument, "state shape does not match formation");
  }
  NetworkState s;
  s.time_index = time_index;
  s.shifted_states = states - spec.reference_points();
  s.states = std::move(states);
  return s;
}

NetworkState NetworkState::from_shifted(Eigen::MatrixXd shifted,
                                        const FormationSpec& spec,
                                        std::int64_t time_index) {
  if (shifted.rows() != spec.n_agents() ||
      shifted.cols() != spec.dimension()) {
    fail(ErrorKind::kInvalidArgument, "state shape does not match formation");
  }
  NetworkState s;
  s.time_index = time_index;
  s.states = shifted + spec.reference_points();
  s.shifted_states = std::move(shifted);
  return s;
}

namespace internal {

Eigen::MatrixXd advance_shifted(const Eigen::MatrixXd& shifted,
                                std::span<const WeightedEdge> edges,
                                const NoiseModel& noise, double gamma,
                                std::span<Rng> agent_rngs) {
  const Eigen::Index n = shifted.rows();
  const int d = static_cast<int>(shifted.cols());
  // Privatized broadcasts x̄_j + v_j, one draw per sender.
  Eigen::MatrixXd shared(n, d);
  Eigen::MatrixXd process(n, d);
  for (Eigen::Index j = 0; j < n; ++j) {
    Rng& rng = agent_rngs[static_cast<size_t>(j)];
    shared.row(j) = shifted.row(j) +
                    sample_privacy_noise(noise.privacy_sigmas()(j), d, rng)
                        .transpose();
    process.row(j) =
        sample_privacy_noise(noise.process_sigmas()(j), d, rng).transpose();
  }
  Eigen::MatrixXd next = shifted;
  for (const auto& [e, w] : edges) {
    next.row(e.i) += gamma * w * (shared.row(e.j) - shifted.row(e.i));
    next.row(e.j) += gamma * w * (shared.row(e.i) - shifted.row(e.j));
  }
  next += process;
  return next;
}

}  // namespace internal

NetworkState step_private(const NetworkState& state, const WeightedGraph& g,
                          const FormationSpec& spec, const NoiseModel& noise,
                          double gamma, std::span<Rng> agent_rngs,
                          StepRule rule) {
  const int n = g.n_agents();
  if (spec.n_agents() != n || noise.n_agents() != n ||
      state.shifted_states.rows() != n ||
      state.shifted_states.cols() != spec.dimension()) {
    fail(ErrorKind::kInvalidArgument,
         "graph, formation, noise and state disagree on N or d");
  }
  if (static_cast<int>(agent_rngs.size()) != n) {
    fail(ErrorKind::kInvalidArgument, "need one random stream per agent");
  }
  check_step_size(g, gamma, rule);
  const auto edges = g.edges();
  return NetworkState::from_shifted(
      internal::advance_shifted(state.shifted_states, edges, noise, gamma,
                                agent_rngs),
      spec, state.time_index + 1);
}

Eigen::MatrixXd network_error(const NetworkState& state) {
  const Eigen::MatrixXd& xbar = state.shifted_states;
  return xbar.rowwise() - xbar.colwise().mean();
}

std::int64_t default_burn_in(const WeightedGraph& g, double gamma) {
  const SpectralSummary s = spectral_summary(g);
  const double rho = std::max(std::abs(1.0 - gamma * s.lambda2),
                              std::abs(1.0 - gamma * s.lambda_max));
  if (rho <= 0.0) return 2;
  if (rho >= 1.0) {
    fail(ErrorKind::kDisconnected,
         "error dynamics do not contract (sigma_max(M) >= 1)");
  }
  const double k = std::ceil(std::log(1e-3) / std::log(rho));
  return 2 * std::max<std::int64_t>(1, static_cast<std::int64_t>(k));
}

}  // namespace privform
