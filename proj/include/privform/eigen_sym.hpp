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

#include <Eigen/Dense>

namespace privform {

struct SymmetricEigen {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // column k pairs with values(k)
  int sweeps = 0;
};

struct JacobiOptions {
  // Convergence when the off-diagonal Frobenius norm drops below
  // off_diagonal_tol * max(1, ||A||_F).
  double off_diagonal_tol = 1e-12;
  int max_sweeps = 100;
};

// Cyclic Jacobi rotations on a dense symmetric matrix. Throws
// ConvergenceError carrying the remaining off-diagonal norm when the sweep
// budget runs out.
SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& a,
                            const JacobiOptions& options = {});

// Projection of a symmetric matrix onto the PSD cone, V max(Λ,0) Vᵀ.
Eigen::MatrixXd psd_part(const Eigen::MatrixXd& a);

}  // namespace privform
