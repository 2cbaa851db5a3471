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
#include "privform/analysis.hpp"
#include "privform/codesign.hpp"
#include "privform/error.hpp"
#include "privform/privacy.hpp"

using namespace privform;

namespace {

CodesignProblem ten_node_problem(double e_r, double lambda2_min, double vartheta) {
  CodesignProblem p;
  const auto edges = oracle::ten_node_edges();
  p.mask = TopologyMask(10, edges);
  p.eps_max.resize(10);
  p.eps_max << 0.4, 0.9, 0.55, 0.35, 0.8, 0.45, 0.7, 0.5, 0.52, 0.58;
  p.deltas = Eigen::VectorXd::Constant(10, 0.05);
  p.adjacency_bounds = Eigen::VectorXd::Ones(10);
  p.process_sigmas = Eigen::VectorXd::Zero(10);
  p.gamma = 1.0 / 20.0;
  p.e_r = e_r;
  p.lambda2_min = lambda2_min;
  p.vartheta = vartheta;
  return p;
}

CodesignProblem two_node_problem() {
  CodesignProblem p;
  const Edge e[] = {{0, 1}};
  p.mask = TopologyMask(2, e);
  p.eps_max = Eigen::VectorXd::Constant(2, 5.0);
  p.deltas = Eigen::VectorXd::Constant(2, 0.05);
  p.adjacency_bounds = Eigen::VectorXd::Ones(2);
  p.process_sigmas = Eigen::VectorXd::Zero(2);
  p.gamma = 0.25;
  p.e_r = 1.0;
  p.lambda2_min = 0.1;
  p.vartheta = 1.0;
  return p;
}

Eigen::VectorXd weights_of(const WeightedGraph& g) {
  return Eigen::Map<const Eigen::VectorXd>(g.mask_weights().data(),
                                           static_cast<Eigen::Index>(g.mask_weights().size()));
}

}  // namespace

TEST_CASE("objective") {
  CHECK(objective(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(2), 10.0) == 0.0);
  CHECK(objective(Eigen::VectorXd::Constant(1, 3.0), Eigen::VectorXd::Constant(2, 0.1), 10.0) ==
        doctest::Approx(6.2).epsilon(1e-14));
  Eigen::VectorXd w(3);
  w << 0.5, 1.25, 2.0;
  const Eigen::VectorXd none = Eigen::VectorXd::Zero(2);
  CHECK(objective(2.0 * w, none, 1.0) == 2.0 * objective(w, none, 1.0));
}

TEST_CASE("problem validation") {
  CodesignProblem p = two_node_problem();
  CHECK_NOTHROW(p.validate());
  p.vartheta = -1.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = two_node_problem();
  p.eps_max = Eigen::VectorXd::Constant(3, 1.0);
  CHECK_THROWS_AS(p.validate(), Error);
  p = two_node_problem();
  p.deltas(0) = 0.7;
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("constraint values") {
  const CodesignProblem p = ten_node_problem(1e6, 0.2, 10.0);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(p.mask.edge_count());
  const ConstraintValues slack = constraint_values(p, ones, p.eps_max);
  CHECK(slack.g_err <= 0.0);
  CHECK(slack.g_lambda <= 0.0);
  CHECK(slack.g_eps.maxCoeff() <= 0.0);

  const ConstraintValues empty =
      constraint_values(p, Eigen::VectorXd::Zero(p.mask.edge_count()), p.eps_max);
  CHECK(empty.g_lambda == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(empty.lambda2_clamped);

  // sigma(eps) = 1 exactly when eps = Q^{-1}(delta) + 1/2.
  CodesignProblem two = two_node_problem();
  const double eps = q_inverse(0.05) + 0.5;
  CHECK(kappa(0.05, eps) == doctest::Approx(1.0).epsilon(1e-14));
  const ConstraintValues c =
      constraint_values(two, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Constant(2, eps));
  CHECK(std::abs(c.g_err - (1.0 / 24.0 - two.e_r)) < 1e-13);
}

TEST_CASE("lambda2 gradient matches finite differences") {
  std::mt19937_64 rng(41);
  int checked = 0;
  for (int trial = 0; trial < 30 && checked < 15; ++trial) {
    const WeightedGraph g = oracle::random_connected_graph(6, rng);
    const SpectralSummary s = spectral_summary(g);
    if (s.eigenvalues(2) - s.lambda2 < 1e-3) continue;
    ++checked;
    const Eigen::VectorXd grad = lambda2_gradient(g);
    for (int e = 0; e < g.mask().edge_count(); ++e) {
      std::vector<double> up = g.mask_weights(), down = g.mask_weights();
      const double h = 1e-6;
      up[static_cast<size_t>(e)] += h;
      down[static_cast<size_t>(e)] -= h;
      const double fd = (spectral_summary(WeightedGraph(g.mask(), up)).lambda2 -
                         spectral_summary(WeightedGraph(g.mask(), down)).lambda2) /
                        (2.0 * h);
      CHECK(grad(e) == doctest::Approx(fd).epsilon(1e-5));
    }
  }
  CHECK(checked > 5);
}

TEST_CASE("two-node design is feasible and tight") {
  const CodesignProblem p = two_node_problem();
  const CodesignSolution s = solve(p, SolverOptions{}, 1);
  REQUIRE(s.status == SolveStatus::kConverged);
  const ValidationReport r = validate_solution(p, s, 1e-6);
  CHECK(r.feasible);
  CHECK(r.e_ss_exact <= p.e_r + 1e-6);
  CHECK(s.stationarity <= SolverOptions{}.stat_tol);
  // A single edge: lambda2 = 2w, so the cheapest weight sits on the
  // connectivity boundary or the error bound binds.
  const bool lambda_binds = std::abs(s.residuals.g_lambda) < 1e-6;
  const bool error_binds = std::abs(s.residuals.g_err) < 1e-6;
  CHECK((lambda_binds || error_binds));
}

TEST_CASE("slack constraints drive epsilon to the floor") {
  CodesignProblem p = ten_node_problem(1e12, 0.2, 10.0);
  const SolverOptions o;
  const CodesignSolution s = solve(p, o, 3);
  REQUIRE(s.status == SolveStatus::kConverged);
  for (int i = 0; i < p.n_agents(); ++i) {
    CHECK(s.epsilons(i) == doctest::Approx(o.eps_floor).epsilon(1e-6));
  }
  CHECK(s.residuals.lambda2 == doctest::Approx(p.lambda2_min).epsilon(1e-5));
  CHECK(validate_solution(p, s, 1e-6).feasible);
}

TEST_CASE("example-style design") {
  const CodesignProblem p = ten_node_problem(2.0, 0.2, 10.0);
  const CodesignSolution s = solve(p, SolverOptions{}, 2026);
  REQUIRE(s.status == SolveStatus::kConverged);
  const ValidationReport r = validate_solution(p, s, 1e-6);
  CHECK(r.feasible);
  CHECK(r.e_ss_exact <= r.constraints.bound + 1e-12);
  CHECK(r.constraints.bound <= p.e_r + 1e-6);
  CHECK(r.constraints.lambda2 >= p.lambda2_min - 1e-6);
  CHECK(r.objective_recomputed == doctest::Approx(s.objective_value));
  for (size_t k = 1; k < s.accepted_objectives.size(); ++k) {
    CHECK(s.accepted_objectives[k] <= s.accepted_objectives[k - 1]);
  }
  for (double w : s.graph.mask_weights()) {
    CHECK((w == 0.0 || w >= SolverOptions{}.prune_threshold));
  }
}

TEST_CASE("solve is deterministic") {
  const CodesignProblem p = ten_node_problem(8.0, 0.2, 10.0);
  const CodesignSolution a = solve(p, SolverOptions{}, 5);
  const CodesignSolution b = solve(p, SolverOptions{}, 5);
  CHECK(a.graph.mask_weights() == b.graph.mask_weights());
  CHECK(a.epsilons == b.epsilons);
  CHECK(a.objective_value == b.objective_value);
  CHECK(a.selected_start == b.selected_start);
}

TEST_CASE("infeasible problems are reported") {
  CodesignProblem p = ten_node_problem(0.5, 0.2, 10.0);
  p.process_sigmas = Eigen::VectorXd::Ones(10);
  const CodesignSolution s = solve(p, SolverOptions{}, 1);
  CHECK(s.status == SolveStatus::kInfeasible);
  CHECK(s.binding_constraint == "error_bound");
  CHECK_FALSE(s.message.empty());

  CodesignProblem split = ten_node_problem(2.0, 0.2, 10.0);
  const Edge e[] = {{0, 1}, {2, 3}};
  split.mask = TopologyMask(10, e);
  const CodesignSolution t = solve(split, SolverOptions{}, 1);
  CHECK(t.status == SolveStatus::kInfeasible);
  CHECK(t.binding_constraint == "lambda2");

  CodesignProblem strong = ten_node_problem(2.0, 50.0, 10.0);
  CHECK(solve(strong, SolverOptions{}, 1).status == SolveStatus::kInfeasible);
}

TEST_CASE("validation flags violations") {
  const CodesignProblem p = ten_node_problem(2.0, 0.2, 10.0);
  CodesignSolution s = solve(p, SolverOptions{}, 7);
  REQUIRE(s.status == SolveStatus::kConverged);
  s.epsilons(3) = p.eps_max(3) + 0.1;
  s.objective_value = objective(weights_of(s.graph), s.epsilons, p.vartheta);
  const ValidationReport r = validate_solution(p, s, 1e-6);
  CHECK_FALSE(r.feasible);
  CHECK(r.constraints.g_eps(3) == doctest::Approx(0.1));

  CodesignSolution cut = solve(p, SolverOptions{}, 7);
  std::vector<double> w(cut.graph.mask_weights().size(), 0.0);
  cut.graph = WeightedGraph(p.mask, w);
  cut.objective_value = objective(weights_of(cut.graph), cut.epsilons, p.vartheta);
  const ValidationReport rc = validate_solution(p, cut, 1e-6);
  CHECK_FALSE(rc.feasible);
  CHECK(rc.constraints.g_lambda > 0.0);
}

TEST_CASE("error requirement sweep trend") {
  Eigen::VectorXd previous = Eigen::VectorXd::Constant(10, INFINITY);
  for (double e_r : {2.0, 16.0, 64.0}) {
    const CodesignProblem p = ten_node_problem(e_r, 0.2, 10.0);
    const CodesignSolution s = solve(p, SolverOptions{}, 2026);
    REQUIRE(s.status == SolveStatus::kConverged);
    for (int i = 0; i < 10; ++i) CHECK(s.epsilons(i) <= previous(i) + 1e-6);
    previous = s.epsilons;
  }
}
