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

#include <string>

#include <Eigen/Dense>

#include "privform/scenario.hpp"

namespace privform {

// Covariance of the per-coordinate network noise z_[l](k):
//   Σ_z = γ² A Σ_v A + Σ_n.
Eigen::MatrixXd sigma_z(const WeightedGraph& g, double gamma,
                        const NoiseModel& noise);

// I - 11ᵀ/N.
Eigen::MatrixXd centering_projector(int n);

// M = I - γL - 11ᵀ/N.
Eigen::MatrixXd m_matrix(const WeightedGraph& g, double gamma);

// Largest singular value of M from the Laplacian spectrum: M is symmetric
// with eigenvalues {0} ∪ {1 - γλ_k : k >= 2}.
double sigma_max_m(const SpectralSummary& spectrum, double gamma);

// One step Σ_e ← M Σ_e M + P Σ_z P.
Eigen::MatrixXd covariance_recursion(const Eigen::MatrixXd& sigma_e,
                                     const Eigen::MatrixXd& m,
                                     const Eigen::MatrixXd& sigma_z);

// Σ_{i<k} M^i Q M^i evaluated term by term.
Eigen::MatrixXd covariance_partial_sum(const Eigen::MatrixXd& m,
                                       const Eigen::MatrixXd& q, int terms);

enum class LyapunovMethod {
  kAuto,        // Kronecker up to kKroneckerMaxN agents, Smith above
  kKronecker,   // (I - M⊗M) vec Σ = vec Q, dense LU
  kFixedPoint,  // Σ ← Q + MΣM until the update stalls
  kSmith,       // doubling: Σ ← Σ + AΣA, A ← A²
};

inline constexpr int kKroneckerMaxN = 40;

struct LyapunovSolution {
  Eigen::MatrixXd sigma;
  double residual = 0.0;  // ||Σ - Q - MΣM||_F
  int iterations = 0;
  LyapunovMethod method = LyapunovMethod::kAuto;
};

// Solves Σ = Q + MΣM for a contraction M (spectral radius < 1). Iterative
// methods throw ConvergenceError with the last residual on budget
// exhaustion.
LyapunovSolution solve_lyapunov(const Eigen::MatrixXd& m,
                                const Eigen::MatrixXd& q,
                                LyapunovMethod method = LyapunovMethod::kAuto,
                                int max_iterations = 1000000);

// Tr(Q) in closed form:
//   γ² Σ_i (Σ_j w_ij² - d_i²/N) σ_i² + ((N-1)/N) Σ_i s_i².
double trace_q(const WeightedGraph& g, double gamma, const NoiseModel& noise);

struct BoundReport {
  // (d/N) Tr(Q) / (1 - σ_max(M)²): valid for every stable γ.
  double value = 0.0;
  // Same with σ_max(M) replaced by 1 - γλ₂; equals `value` whenever the
  // Fiedler mode dominates (1 - γλ₂ >= |1 - γλ_N|).
  double fiedler_form = 0.0;
  // The closed fraction with γ·d in front of the noise sum and N·λ₂(2-γλ₂)
  // below. Differs from fiedler_form when process noise is present.
  double printed_form = 0.0;
  double trace_q = 0.0;
  double sigma_max_m = 0.0;
  double lambda2 = 0.0;
  bool fiedler_dominant = true;
};

// Requires a connected graph; throws Error(kDisconnected) otherwise.
BoundReport error_bound(const NetworkScenario& scenario);

struct CovarianceReport {
  Eigen::MatrixXd sigma_z;
  Eigen::MatrixXd m;
  Eigen::MatrixXd sigma_inf;
  double e_ss_exact = 0.0;  // (d/N) Tr Σ∞
  double e_ss_bound = 0.0;
  double e_ss_bound_fiedler = 0.0;
  double e_ss_bound_printed = 0.0;
  double trace_q = 0.0;
  double sigma_max_m = 0.0;
  double lambda2 = 0.0;
  double lambda_max = 0.0;
  bool fiedler_dominant = true;
  double lyapunov_residual = 0.0;
  std::string lyapunov_method;
};

// Exact steady-state covariance plus the scalar bound. Throws
// Error(kDisconnected) for disconnected graphs and Error(kUnstableStep) when
// γ violates the scenario's step rule.
CovarianceReport steady_state(const NetworkScenario& scenario,
                              LyapunovMethod method = LyapunovMethod::kAuto);

std::string to_string(LyapunovMethod method);

}  // namespace privform
