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

#include <compare>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace privform {

// Unordered agent pair, stored with i < j. Indices are zero-based here;
// file formats use one-based labels.
struct Edge {
  int i = 0;
  int j = 0;

  auto operator<=>(const Edge&) const = default;
};

// The allowed communication pairs over N agents: the unweighted input
// topology whose edges a design may weight.
class TopologyMask {
 public:
  TopologyMask() = default;
  // Pairs may be given in either orientation; duplicates are merged.
  // Throws on self-pairs or out-of-range indices.
  TopologyMask(int n_agents, std::span<const Edge> allowed_edges);

  int n_agents() const { return n_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }  // sorted
  std::optional<int> index_of(int i, int j) const;
  bool allows(int i, int j) const { return index_of(i, j).has_value(); }

  friend bool operator==(const TopologyMask&, const TopologyMask&) = default;

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
};

struct WeightedEdge {
  Edge edge;
  double weight = 0.0;
};

// Symmetric positive weights on a subset of a mask's edges. Weights are held
// per mask edge; a zero entry means the pair carries no edge.
class WeightedGraph {
 public:
  WeightedGraph() = default;
  // mask_weights[k] belongs to mask.edges()[k]; entries must be finite and
  // nonnegative.
  WeightedGraph(TopologyMask mask, std::vector<double> mask_weights);
  // Graph whose mask is exactly the weighted edge list.
  static WeightedGraph from_edges(int n_agents,
                                  std::span<const WeightedEdge> edges);
  // Every mask edge weighted `weight`.
  static WeightedGraph uniform(const TopologyMask& mask, double weight);

  int n_agents() const { return mask_.n_agents(); }
  const TopologyMask& mask() const { return mask_; }
  const std::vector<double>& mask_weights() const { return weights_; }
  // Edges with strictly positive weight, sorted.
  std::vector<WeightedEdge> edges() const;
  double weight(int i, int j) const;
  double total_weight() const;

  // Copy with every weight below `threshold` removed. The mask is kept.
  WeightedGraph pruned(double threshold) const;

 private:
  TopologyMask mask_;
  std::vector<double> weights_;
};

Eigen::MatrixXd laplacian(const WeightedGraph& g);

struct AdjacencyDegrees {
  Eigen::MatrixXd adjacency;
  Eigen::VectorXd degrees;

  double max_degree() const;
};

AdjacencyDegrees adjacency_and_degrees(const WeightedGraph& g);

struct SpectralSummary {
  Eigen::VectorXd eigenvalues;  // ascending
  Eigen::MatrixXd eigenvectors;
  Eigen::VectorXd fiedler_vector;
  double lambda2 = 0.0;
  double lambda_max = 0.0;
  // lambda2 and lambda3 closer than kDegenerateGap.
  bool degenerate_fiedler = false;
};

inline constexpr double kDegenerateGap = 1e-9;

// Requires n_agents >= 2.
SpectralSummary spectral_summary(const WeightedGraph& g);

// Spectral test: lambda2 > tol.
bool is_connected(const WeightedGraph& g, double tol = 1e-9);

// Breadth-first component count over positive-weight edges.
int component_count(const WeightedGraph& g);

}  // namespace privform
