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

#include <map>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "privform/error.hpp"
#include "privform/formation.hpp"
#include "privform/simulation.hpp"

using namespace privform;

namespace {

WeightedGraph single_edge(double w = 1.0) {
  const WeightedEdge e[] = {{{0, 1}, w}};
  return WeightedGraph::from_edges(2, e);
}

std::vector<Rng> streams(int n, std::uint64_t seed) {
  std::vector<Rng> r;
  for (int j = 0; j < n; ++j) r.push_back(make_rng(seed, static_cast<std::uint64_t>(j)));
  return r;
}

NetworkScenario two_node_scenario() {
  NetworkScenario s;
  s.graph = single_edge();
  s.formation = FormationSpec::consensus(s.graph.mask(), 1);
  s.gamma = 0.25;
  s.noise = NoiseModel(Eigen::VectorXd::Ones(2), Eigen::VectorXd::Zero(2));
  return s;
}

}  // namespace

TEST_CASE("formation from reference points") {
  const Edge e[] = {{0, 1}, {1, 2}};
  const TopologyMask mask(3, e);
  Eigen::MatrixXd p(3, 2);
  p << 0, 0, 1, 0, 1, 2;
  const FormationSpec f = FormationSpec::from_reference_points(mask, p);
  CHECK(f.dimension() == 2);
  CHECK(f.offset(0, 1).isApprox(Eigen::Vector2d(1, 0)));
  CHECK(f.offset(2, 1).isApprox(Eigen::Vector2d(0, -2)));
}

TEST_CASE("formation from offsets checks cycles") {
  const Edge e[] = {{0, 1}, {1, 2}, {0, 2}};
  const TopologyMask mask(3, e);
  std::map<std::pair<int, int>, Eigen::VectorXd> good = {
      {{0, 1}, Eigen::VectorXd::Constant(1, 1.0)},
      {{1, 2}, Eigen::VectorXd::Constant(1, 2.0)},
      {{0, 2}, Eigen::VectorXd::Constant(1, 3.0)}};
  const FormationSpec f = FormationSpec::from_offsets(mask, 1, good);
  const Eigen::MatrixXd& w = f.reference_points();
  CHECK(w(1, 0) - w(0, 0) == doctest::Approx(1.0));
  CHECK(w(2, 0) - w(0, 0) == doctest::Approx(3.0));

  auto bad = good;
  bad[{0, 2}] = Eigen::VectorXd::Constant(1, 3.5);
  CHECK_THROWS_AS(FormationSpec::from_offsets(mask, 1, bad), Error);

  auto asym = good;
  asym[{1, 0}] = Eigen::VectorXd::Constant(1, 1.0);
  CHECK_THROWS_AS(FormationSpec::from_offsets(mask, 1, asym), Error);
}

TEST_CASE("step size rules") {
  const WeightedGraph g = single_edge(2.0);  // d_max = 2, lambda_N = 4
  CHECK_NOTHROW(check_step_size(g, 0.49, StepRule::kDegreeBound));
  CHECK_THROWS_AS(check_step_size(g, 0.5, StepRule::kDegreeBound), Error);
  CHECK_NOTHROW(check_step_size(g, 0.49, StepRule::kSpectral));
  CHECK_THROWS_AS(check_step_size(g, 0.5, StepRule::kSpectral), Error);
  CHECK_THROWS_AS(check_step_size(g, -0.1, StepRule::kDegreeBound), Error);
  try {
    check_step_size(g, 0.6, StepRule::kDegreeBound);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kUnstableStep);
  }
}

TEST_CASE("noiseless equilibrium is fixed") {
  const Edge e[] = {{0, 1}, {1, 2}};
  const TopologyMask mask(3, e);
  Eigen::MatrixXd p(3, 2);
  p << 0, 0, 1, 0, 2, 1;
  const FormationSpec f = FormationSpec::from_reference_points(mask, p);
  const WeightedGraph g = WeightedGraph::uniform(mask, 1.0);
  const NoiseModel quiet(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3));
  Eigen::MatrixXd shifted(3, 2);
  shifted << 4, -1, 4, -1, 4, -1;
  const NetworkState s = NetworkState::from_shifted(shifted, f);
  auto r = streams(3, 1);
  const NetworkState next = step_private(s, g, f, quiet, 0.3, r);
  CHECK((next.states - s.states).norm() < 1e-15);
  CHECK(next.time_index == 1);
}

TEST_CASE("noiseless two-node step") {
  const WeightedGraph g = single_edge();
  const FormationSpec f = FormationSpec::consensus(g.mask(), 1);
  const NoiseModel quiet(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2));
  Eigen::MatrixXd x(2, 1);
  x << 1, 0;
  auto r = streams(2, 1);
  const NetworkState next =
      step_private(NetworkState::from_shifted(x, f), g, f, quiet, 0.25, r);
  CHECK(next.shifted_states(0, 0) == doctest::Approx(0.75));
  CHECK(next.shifted_states(1, 0) == doctest::Approx(0.25));
}

TEST_CASE("one noisy step matches a hand computation") {
  // Replays the per-agent draws to check the broadcast structure: agent j
  // draws its privacy noise, then its process noise.
  const WeightedEdge e[] = {{{0, 1}, 0.5}, {{1, 2}, 1.5}};
  const WeightedGraph g = WeightedGraph::from_edges(3, e);
  const FormationSpec f = FormationSpec::consensus(g.mask(), 1);
  Eigen::VectorXd sig(3), proc(3);
  sig << 0.7, 1.1, 0.4;
  proc << 0.2, 0.0, 0.3;
  const NoiseModel noise(sig, proc);
  Eigen::MatrixXd x(3, 1);
  x << 1.0, -2.0, 0.5;
  auto r = streams(3, 77);
  const NetworkState next =
      step_private(NetworkState::from_shifted(x, f), g, f, noise, 0.2, r);

  auto replay = streams(3, 77);
  Eigen::VectorXd v(3), n(3);
  for (int j = 0; j < 3; ++j) {
    // Zero sigmas still consume a draw so streams stay aligned.
    std::normal_distribution<double> z1(0.0, 1.0);
    v(j) = sig(j) * z1(replay[static_cast<size_t>(j)]);
    std::normal_distribution<double> z2(0.0, 1.0);
    n(j) = proc(j) * z2(replay[static_cast<size_t>(j)]);
  }
  const double g0 = 0.2;
  Eigen::VectorXd expect(3);
  expect(0) = x(0) + g0 * 0.5 * (x(1) + v(1) - x(0)) + n(0);
  expect(1) = x(1) + g0 * 0.5 * (x(0) + v(0) - x(1)) +
              g0 * 1.5 * (x(2) + v(2) - x(1)) + n(1);
  expect(2) = x(2) + g0 * 1.5 * (x(1) + v(1) - x(2)) + n(2);
  CHECK((next.shifted_states.col(0) - expect).norm() < 1e-13);
}

TEST_CASE("network error") {
  NetworkState s;
  s.shifted_states = Eigen::MatrixXd::Constant(4, 2, 3.5);
  CHECK(network_error(s).isZero());
  s.shifted_states = Eigen::MatrixXd(2, 1);
  s.shifted_states << 1, 0;
  const Eigen::MatrixXd e = network_error(s);
  CHECK(e(0, 0) == doctest::Approx(0.5));
  CHECK(e(1, 0) == doctest::Approx(-0.5));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  s.shifted_states = Eigen::MatrixXd(7, 3);
  for (int i = 0; i < 7; ++i)
    for (int l = 0; l < 3; ++l) s.shifted_states(i, l) = z(rng);
  CHECK(network_error(s).colwise().sum().cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("burn in") {
  // sigma_max(M) = 0.5 for the two-node fixture: ceil(log 1e-3 / log 0.5) = 10.
  CHECK(default_burn_in(single_edge(), 0.25) == 20);
  CHECK_THROWS_AS(default_burn_in(WeightedGraph::from_edges(2, {}), 0.25), Error);
}

TEST_CASE("noiseless simulation converges") {
  std::mt19937_64 rng(4);
  for (int n : {3, 6, 9}) {
    NetworkScenario s;
    s.graph = oracle::random_connected_graph(n, rng);
    s.formation = FormationSpec::consensus(s.graph.mask(), 2);
    s.dimension = 2;
    s.gamma = 0.9 / adjacency_and_degrees(s.graph).max_degree();
    s.noise = NoiseModel(Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n));
    SimulationOptions o;
    o.horizon = 20000;
    o.burn_in = 15000;
    const SimulationResult r = simulate(s, o, 3);
    CHECK(r.empirical_mse_tail < 1e-12);
  }
}

TEST_CASE("simulation is reproducible") {
  NetworkScenario s = two_node_scenario();
  SimulationOptions o;
  o.horizon = 500;
  o.record_trajectory = true;
  const SimulationResult a = simulate(s, o, 99);
  const SimulationResult b = simulate(s, o, 99);
  REQUIRE(a.trajectory.size() == 501);
  for (size_t k = 0; k < a.trajectory.size(); ++k) {
    CHECK(a.trajectory[k].states == b.trajectory[k].states);
  }
  CHECK(a.empirical_mse_tail == b.empirical_mse_tail);
  const SimulationResult c = simulate(s, o, 100);
  CHECK(c.empirical_mse_tail != a.empirical_mse_tail);
}

TEST_CASE("two-node steady state error") {
  SimulationOptions o;
  o.horizon = 200000;
  const SimulationResult r = simulate(two_node_scenario(), o, 2026);
  CHECK(std::abs(r.empirical_mse_tail - 1.0 / 24.0) / (1.0 / 24.0) < 0.05);
}

TEST_CASE("relabeling agents permutes the trajectory") {
  std::mt19937_64 rng(21);
  const int n = 5;
  const WeightedGraph g = oracle::random_connected_graph(n, rng);
  const std::vector<int> perm = {3, 0, 4, 1, 2};  // old i -> new perm[i]
  std::vector<WeightedEdge> pe;
  for (const auto& we : g.edges()) {
    const int a = perm[static_cast<size_t>(we.edge.i)];
    const int b = perm[static_cast<size_t>(we.edge.j)];
    pe.push_back({{std::min(a, b), std::max(a, b)}, we.weight});
  }
  const WeightedGraph h = WeightedGraph::from_edges(n, pe);
  Eigen::MatrixXd p(n, 2), pp(n, 2);
  Eigen::VectorXd sig(n), psig(n), proc(n), pproc(n);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd x(n, 2), px(n, 2);
  for (int i = 0; i < n; ++i) {
    const int k = perm[static_cast<size_t>(i)];
    p.row(i) << u(rng), u(rng);
    pp.row(k) = p.row(i);
    sig(i) = psig(k) = u(rng);
    proc(i) = pproc(k) = 0.3 * u(rng);
    x.row(i) << u(rng), u(rng);
    px.row(k) = x.row(i);
  }
  const FormationSpec f = FormationSpec::from_reference_points(g.mask(), p);
  const FormationSpec pf = FormationSpec::from_reference_points(h.mask(), pp);
  const NoiseModel noise(sig, proc), pnoise(psig, pproc);
  std::vector<Rng> r, pr(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    r.push_back(make_rng(5, static_cast<std::uint64_t>(i)));
    pr[static_cast<size_t>(perm[static_cast<size_t>(i)])] =
        make_rng(5, static_cast<std::uint64_t>(i));
  }
  const double gamma = 0.9 / adjacency_and_degrees(g).max_degree();
  NetworkState s = NetworkState::from_states(x, f);
  NetworkState ps = NetworkState::from_states(px, pf);
  for (int k = 0; k < 50; ++k) {
    s = step_private(s, g, f, noise, gamma, r);
    ps = step_private(ps, h, pf, pnoise, gamma, pr);
  }
  for (int i = 0; i < n; ++i) {
    CHECK((s.states.row(i) - ps.states.row(perm[static_cast<size_t>(i)])).norm() < 1e-12);
  }
}

TEST_CASE("simulation rejects bad setups") {
  NetworkScenario s = two_node_scenario();
  SimulationOptions o;
  o.horizon = 10;
  o.burn_in = 10;
  CHECK_THROWS_AS(simulate(s, o, 1), Error);
  s.graph = WeightedGraph::from_edges(2, {});
  o.horizon = 100;
  o.burn_in = 5;
  CHECK_THROWS_AS(simulate(s, o, 1), Error);
}

TEST_CASE("independent trials") {
  SimulationOptions o;
  o.horizon = 2000;
  const TrialSummary a = simulate_trials(two_node_scenario(), o, 12, 8);
  const TrialSummary b = simulate_trials(two_node_scenario(), o, 12, 8);
  CHECK(a.per_trial_mse == b.per_trial_mse);
  CHECK(a.per_trial_mse.size() == 8);
  CHECK(a.standard_error > 0.0);
  CHECK(a.per_trial_mse[0] ==
        simulate(two_node_scenario(), o, split_seed(12, 0)).empirical_mse_tail);
}
