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
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "privform/graph.hpp"

namespace privform {

// Joint topology/privacy design: choose weights on the mask edges and
// per-agent epsilons minimizing Tr(L) + vartheta * sum eps_i^2 subject to
//   error bound <= e_R,  lambda2(L) >= lambda2_min,  eps_i <= eps_max_i.
struct CodesignProblem {
  TopologyMask mask;
  double e_r = 1.0;
  double lambda2_min = 0.1;
  double vartheta = 1.0;
  Eigen::VectorXd eps_max;
  Eigen::VectorXd deltas;
  Eigen::VectorXd adjacency_bounds;
  Eigen::VectorXd process_sigmas;
  double gamma = 0.05;
  int dimension = 1;

  int n_agents() const { return mask.n_agents(); }
  // Throws Error(kConfig) on any domain or length violation.
  void validate() const;
};

struct SolverOptions {
  int max_outer = 60;
  int max_inner = 20000;
  // Stop when the scaled constraint violation is below feasibility_target
  // and the projected Lagrangian gradient is below stat_tol.
  double feasibility_target = 1e-10;
  double stat_tol = 1e-7;
  // Tolerance used to accept an iterate as feasible and to validate.
  double tol_feas = 1e-6;
  int multistarts = 5;
  double eps_floor = 1e-4;
  double prune_threshold = 1e-4;
  double penalty_initial = 10.0;
  double penalty_growth = 10.0;
  double penalty_max = 1e10;
  // Keep 2 * gamma * d_i <= 1 so the bound's Fiedler form stays valid and
  // the dynamics stay stable.
  bool enforce_step_bound = true;
  // Relative spread of randomized starting weights for starts >= 1.
  double start_perturbation = 0.5;
};

// Constraint values at a candidate point; each is <= 0 when satisfied.
struct ConstraintValues {
  double g_err = 0.0;     // bound - e_R
  double g_lambda = 0.0;  // lambda2_min - lambda2
  Eigen::VectorXd g_eps;  // eps - eps_max
  double bound = 0.0;
  double lambda2 = 0.0;
  // lambda2 was below machine epsilon and clamped inside the bound.
  bool lambda2_clamped = false;
};

// weights are indexed like problem.mask.edges().
ConstraintValues constraint_values(const CodesignProblem& problem,
                                   const Eigen::VectorXd& weights,
                                   const Eigen::VectorXd& epsilons);

// Tr(L) + vartheta * sum eps^2 = 2 * sum w + vartheta * sum eps^2.
double objective(const Eigen::VectorXd& weights,
                 const Eigen::VectorXd& epsilons, double vartheta);

// d lambda2 / d w_e = (v_i - v_j)^2 for every mask edge, v the Fiedler
// vector. Valid where lambda2 is simple.
Eigen::VectorXd lambda2_gradient(const WeightedGraph& g);

enum class SolveStatus { kConverged, kNotConverged, kInfeasible };

std::string to_string(SolveStatus status);

struct CodesignSolution {
  SolveStatus status = SolveStatus::kNotConverged;
  WeightedGraph graph;  // after pruning
  Eigen::VectorXd epsilons;
  double objective_value = 0.0;
  ConstraintValues residuals;
  bool converged = false;
  int iterations = 0;  // outer iterations of the selected start
  double stationarity = 0.0;
  int selected_start = -1;
  // For kInfeasible: which constraint cannot be met, and why.
  std::string binding_constraint;
  std::string message;
  // Objective at each accepted outer iterate of the selected start.
  std::vector<double> accepted_objectives;
  std::vector<std::string> log;
};

CodesignSolution solve(const CodesignProblem& problem,
                       const SolverOptions& options, std::uint64_t seed);

struct ValidationReport {
  bool feasible = false;
  ConstraintValues constraints;
  double e_ss_exact = 0.0;
  double objective_recomputed = 0.0;
  std::vector<std::string> violations;
};

// Recomputes every constraint from scratch on the solution's graph, checks
// the solution invariants, and evaluates the exact steady-state error.
ValidationReport validate_solution(const CodesignProblem& problem,
                                   const CodesignSolution& solution,
                                   double tol_feas);

}  // namespace privform
