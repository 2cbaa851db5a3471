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

#include "privform/graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>

#include "privform/eigen_sym.hpp"
#include "privform/error.hpp"

namespace privform {

TopologyMask::TopologyMask(int n_agents, std::span<const Edge> allowed_edges)
    : n_(n_agents) {
  if (n_agents < 1) {
    fail(ErrorKind::kInvalidArgument, "graph needs at least one agent");
  }
  edges_.reserve(allowed_edges.size());
  for (const Edge& e : allowed_edges) {
    if (e.i < 0 || e.j < 0 || e.i >= n_ || e.j >= n_) {
      fail(ErrorKind::kInvalidArgument,
           "edge {" + std::to_string(e.i + 1) + "," + std::to_string(e.j + 1) +
               "} references an agent outside 1.." + std::to_string(n_));
    }
    if (e.i == e.j) {
      fail(ErrorKind::kInvalidArgument,
           "self-loop on agent " + std::to_string(e.i + 1));
    }
    edges_.push_back({std::min(e.i, e.j), std::max(e.i, e.j)});
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
}

std::optional<int> TopologyMask::index_of(int i, int j) const {
  const Edge key{std::min(i, j), std::max(i, j)};
  auto it = std::lower_bound(edges_.begin(), edges_.end(), key);
  if (it == edges_.end() || *it != key) return std::nullopt;
  return static_cast<int>(it - edges_.begin());
}

WeightedGraph::WeightedGraph(TopologyMask mask, std::vector<double> weights)
    : mask_(std::move(mask)), weights_(std::move(weights)) {
  if (weights_.size() != mask_.edges().size()) {
    fail(ErrorKind::kInvalidArgument,
         "weight vector length does not match the mask edge count");
  }
  for (double w : weights_) {
    if (!std::isfinite(w) || w < 0.0) {
      fail(ErrorKind::kInvalidArgument,
           "edge weights must be finite and nonnegative");
    }
  }
}

WeightedGraph WeightedGraph::from_edges(int n_agents,
                                        std::span<const WeightedEdge> edges) {
  std::vector<Edge> pairs;
  pairs.reserve(edges.size());
  for (const auto& we : edges) pairs.push_back(we.edge);
  TopologyMask mask(n_agents, pairs);
  if (mask.edge_count() != static_cast<int>(edges.size())) {
    fail(ErrorKind::kInvalidArgument, "duplicate edge in weighted edge list");
  }
  std::vector<double> w(edges.size(), 0.0);
  for (const auto& we : edges) {
    w[static_cast<size_t>(*mask.index_of(we.edge.i, we.edge.j))] = we.weight;
  }
  return WeightedGraph(std::move(mask), std::move(w));
}

WeightedGraph WeightedGraph::uniform(const TopologyMask& mask, double weight) {
  return WeightedGraph(mask, std::vector<double>(mask.edges().size(), weight));
}

std::vector<WeightedEdge> WeightedGraph::edges() const {
  std::vector<WeightedEdge> out;
  for (size_t k = 0; k < weights_.size(); ++k) {
    if (weights_[k] > 0.0) out.push_back({mask_.edges()[k], weights_[k]});
  }
  return out;
}

double WeightedGraph::weight(int i, int j) const {
  const auto k = mask_.index_of(i, j);
  return k ? weights_[static_cast<size_t>(*k)] : 0.0;
}

double WeightedGraph::total_weight() const {
  double sum = 0.0;
  for (double w : weights_) sum += w;
  return sum;
}

WeightedGraph WeightedGraph::pruned(double threshold) const {
  std::vector<double> w = weights_;
  for (double& x : w) {
    if (x < threshold) x = 0.0;
  }
  return WeightedGraph(mask_, std::move(w));
}

Eigen::MatrixXd laplacian(const WeightedGraph& g) {
  const int n = g.n_agents();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [e, w] : g.edges()) {
    l(e.i, e.j) -= w;
    l(e.j, e.i) -= w;
    l(e.i, e.i) += w;
    l(e.j, e.j) += w;
  }
  return l;
}

double AdjacencyDegrees::max_degree() const {
  return degrees.size() == 0 ? 0.0 : degrees.maxCoeff();
}

AdjacencyDegrees adjacency_and_degrees(const WeightedGraph& g) {
  const int n = g.n_agents();
  AdjacencyDegrees out{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)};
  for (const auto& [e, w] : g.edges()) {
    out.adjacency(e.i, e.j) = w;
    out.adjacency(e.j, e.i) = w;
    out.degrees(e.i) += w;
    out.degrees(e.j) += w;
  }
  return out;
}

SpectralSummary spectral_summary(const WeightedGraph& g) {
  const int n = g.n_agents();
  if (n < 2) {
    fail(ErrorKind::kInvalidArgument,
         "spectral summary needs at least two agents");
  }
  const SymmetricEigen es = jacobi_eigen(laplacian(g));

  SpectralSummary out;
  out.eigenvalues = es.values;
  out.eigenvectors = es.vectors;
  out.lambda2 = es.values(1);
  out.lambda_max = es.values(n - 1);
  out.degenerate_fiedler =
      n >= 3 && (es.values(2) - es.values(1)) < kDegenerateGap;

  // Pick the unit vector of span{v1, v2} orthogonal to the ones vector. For a
  // connected graph v1 is parallel to ones and this returns v2; when the
  // zero eigenvalue is repeated it picks a vector inside that eigenspace.
  const Eigen::VectorXd v1 = es.vectors.col(0);
  const Eigen::VectorXd v2 = es.vectors.col(1);
  const double a = v1.sum();
  const double b = v2.sum();
  Eigen::VectorXd f = b * v1 - a * v2;
  if (f.norm() < 1e-12) f = v2;
  f.normalize();
  for (int i = 0; i < n; ++i) {
    if (std::abs(f(i)) > 1e-14) {
      if (f(i) < 0.0) f = -f;
      break;
    }
  }
  out.fiedler_vector = f;
  return out;
}

bool is_connected(const WeightedGraph& g, double tol) {
  if (tol <= 0.0) {
    fail(ErrorKind::kInvalidArgument, "connectivity tolerance must be > 0");
  }
  if (g.n_agents() == 1) return true;
  return spectral_summary(g).lambda2 > tol;
}

int component_count(const WeightedGraph& g) {
  const int n = g.n_agents();
  std::vector<std::vector<int>> adj(static_cast<size_t>(n));
  for (const auto& [e, w] : g.edges()) {
    adj[static_cast<size_t>(e.i)].push_back(e.j);
    adj[static_cast<size_t>(e.j)].push_back(e.i);
  }
  std::vector<bool> seen(static_cast<size_t>(n), false);
  int components = 0;
  for (int s = 0; s < n; ++s) {
    if (seen[static_cast<size_t>(s)]) continue;
    ++components;
    std::queue<int> frontier;
    frontier.push(s);
    seen[static_cast<size_t>(s)] = true;
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop();
      for (int v : adj[static_cast<size_t>(u)]) {
        if (!seen[static_cast<size_t>(v)]) {
          seen[static_cast<size_t>(v)] = true;
          frontier.push(v);
        }
      }
    }
  }
  return components;
}

}  // namespace privform
