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

#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "privform/eigen_sym.hpp"
#include "privform/error.hpp"
#include "privform/graph.hpp"

using namespace privform;

namespace {

WeightedGraph path3(double w12 = 1.0, double w23 = 1.0) {
  const WeightedEdge e[] = {{{0, 1}, w12}, {{1, 2}, w23}};
  return WeightedGraph::from_edges(3, e);
}

WeightedGraph complete(int n) {
  std::vector<WeightedEdge> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) e.push_back({{i, j}, 1.0});
  return WeightedGraph::from_edges(n, e);
}

}  // namespace

TEST_CASE("mask normalizes orientation and duplicates") {
  const Edge e[] = {{2, 0}, {0, 2}, {1, 0}};
  const TopologyMask m(3, e);
  CHECK(m.edge_count() == 2);
  CHECK(m.edges()[0] == Edge{0, 1});
  CHECK(m.edges()[1] == Edge{0, 2});
  CHECK(m.allows(2, 0));
  CHECK_FALSE(m.allows(1, 2));
}

TEST_CASE("mask rejects self loops and out of range") {
  const Edge loop[] = {{1, 1}};
  CHECK_THROWS_AS(TopologyMask(3, loop), Error);
  const Edge far[] = {{0, 3}};
  CHECK_THROWS_AS(TopologyMask(3, far), Error);
}

TEST_CASE("weights must be finite and nonnegative") {
  const Edge e[] = {{0, 1}};
  const TopologyMask m(2, e);
  CHECK_THROWS_AS(WeightedGraph(m, {-1.0}), Error);
  CHECK_THROWS_AS(WeightedGraph(m, {std::nan("")}), Error);
  CHECK_THROWS_AS(WeightedGraph(m, {1.0, 2.0}), Error);
}

TEST_CASE("laplacian small cases") {
  const WeightedEdge one[] = {{{0, 1}, 1.0}};
  Eigen::MatrixXd expect2(2, 2);
  expect2 << 1, -1, -1, 1;
  CHECK(laplacian(WeightedGraph::from_edges(2, one)).isApprox(expect2));

  const WeightedGraph empty = WeightedGraph::from_edges(3, {});
  CHECK(laplacian(empty).isZero());

  Eigen::MatrixXd expect3(3, 3);
  expect3 << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  CHECK(laplacian(path3()).isApprox(expect3));
}

TEST_CASE("laplacian matches brute force on random graphs") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 9;
    const WeightedGraph g = oracle::random_connected_graph(n, rng);
    const Eigen::MatrixXd l = laplacian(g);
    CHECK((l - oracle::laplacian(n, g.edges())).norm() < 1e-14);
    CHECK((l - l.transpose()).norm() == 0.0);
    CHECK(l.rowwise().sum().cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("adjacency and degrees") {
  const WeightedEdge two[] = {{{0, 1}, 2.0}};
  const AdjacencyDegrees ad = adjacency_and_degrees(WeightedGraph::from_edges(2, two));
  CHECK(ad.adjacency(0, 1) == 2.0);
  CHECK(ad.adjacency(1, 0) == 2.0);
  CHECK(ad.degrees(0) == 2.0);
  CHECK(ad.degrees(1) == 2.0);

  const AdjacencyDegrees none = adjacency_and_degrees(WeightedGraph::from_edges(3, {}));
  CHECK(none.adjacency.isZero());
  CHECK(none.degrees.isZero());

  const AdjacencyDegrees p = adjacency_and_degrees(path3(1.0, 3.0));
  CHECK(p.degrees(0) == 1.0);
  CHECK(p.degrees(1) == 4.0);
  CHECK(p.degrees(2) == 3.0);
  CHECK(p.max_degree() == 4.0);
}

TEST_CASE("spectrum of known graphs") {
  const SpectralSummary k4 = spectral_summary(complete(4));
  CHECK(k4.eigenvalues(0) == doctest::Approx(0.0).epsilon(1e-12));
  for (int k = 1; k < 4; ++k) CHECK(k4.eigenvalues(k) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(k4.degenerate_fiedler);

  const SpectralSummary p3 = spectral_summary(path3());
  CHECK(std::abs(p3.eigenvalues(0)) < 1e-12);
  CHECK(p3.lambda2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p3.lambda_max == doctest::Approx(3.0).epsilon(1e-12));
  CHECK_FALSE(p3.degenerate_fiedler);
  // Fiedler vector of P3 is (1, 0, -1)/sqrt(2) up to sign.
  CHECK(std::abs(p3.fiedler_vector(1)) < 1e-12);
  CHECK(std::abs(std::abs(p3.fiedler_vector(0)) - std::sqrt(0.5)) < 1e-12);
}

TEST_CASE("disconnected graph has zero lambda2") {
  const WeightedEdge e[] = {{{0, 1}, 1.0}, {{2, 3}, 2.0}};
  const WeightedGraph g = WeightedGraph::from_edges(4, e);
  CHECK(std::abs(spectral_summary(g).lambda2) < 1e-12);
  CHECK_FALSE(is_connected(g));
  CHECK(component_count(g) == 2);
}

TEST_CASE("spectrum matches an independent eigensolver") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + trial % 11;
    const WeightedGraph g = oracle::random_connected_graph(n, rng);
    const SpectralSummary s = spectral_summary(g);
    const Eigen::VectorXd ref = oracle::eigenvalues(oracle::laplacian(n, g.edges()));
    CHECK((s.eigenvalues - ref).cwiseAbs().maxCoeff() < 1e-10);
    const Eigen::MatrixXd l = laplacian(g);
    CHECK((l * s.fiedler_vector - s.lambda2 * s.fiedler_vector).norm() < 1e-9);
    CHECK(std::abs(s.fiedler_vector.sum()) < 1e-10);
    CHECK(s.fiedler_vector.norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("jacobi reconstructs the matrix") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  for (int n : {1, 2, 5, 12}) {
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) a(i, j) = a(j, i) = z(rng);
    const SymmetricEigen e = jacobi_eigen(a);
    const Eigen::MatrixXd back =
        e.vectors * e.values.asDiagonal() * e.vectors.transpose();
    CHECK((back - a).norm() < 1e-11);
    CHECK((e.vectors.transpose() * e.vectors -
           Eigen::MatrixXd::Identity(n, n)).norm() < 1e-11);
    for (int k = 1; k < n; ++k) CHECK(e.values(k - 1) <= e.values(k));
  }
}

TEST_CASE("jacobi reports an exhausted sweep budget") {
  Eigen::MatrixXd a(3, 3);
  a << 2, 1, 0.5, 1, 3, 0.2, 0.5, 0.2, 1;
  JacobiOptions tight;
  tight.max_sweeps = 1;
  CHECK_THROWS_AS(jacobi_eigen(a, tight), ConvergenceError);
}

TEST_CASE("psd part clips negative eigenvalues") {
  Eigen::MatrixXd a(2, 2);
  a << 1, 0, 0, -2;
  const Eigen::MatrixXd p = psd_part(a);
  CHECK(p(0, 0) == doctest::Approx(1.0));
  CHECK(std::abs(p(1, 1)) < 1e-15);
}

TEST_CASE("connectivity") {
  CHECK(is_connected(path3()));
  CHECK_FALSE(is_connected(WeightedGraph::from_edges(2, {})));
  const auto edges = oracle::ten_node_edges();
  const WeightedGraph ten = WeightedGraph::uniform(TopologyMask(10, edges), 1.0);
  CHECK(is_connected(ten));
  CHECK(oracle::components(10, ten.edges()) == 1);
  CHECK(component_count(ten) == 1);
  CHECK_THROWS_AS(is_connected(ten, 0.0), Error);
}

TEST_CASE("component count agrees with union find") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 9;
    std::vector<WeightedEdge> e;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (u(rng) < 0.25) e.push_back({{i, j}, 0.5 + u(rng)});
    const WeightedGraph g = WeightedGraph::from_edges(n, e);
    const int expect = oracle::components(n, e);
    CHECK(component_count(g) == expect);
    CHECK(is_connected(g) == (expect == 1));
  }
}

TEST_CASE("pruning zeroes small weights but keeps the mask") {
  const WeightedGraph g = path3(1e-5, 2.0);
  const WeightedGraph p = g.pruned(1e-4);
  CHECK(p.mask() == g.mask());
  CHECK(p.weight(0, 1) == 0.0);
  CHECK(p.weight(1, 2) == 2.0);
  CHECK(p.edges().size() == 1);
  CHECK(p.total_weight() == 2.0);
}
