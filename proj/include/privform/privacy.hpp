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

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "privform/rng.hpp"

namespace privform {

// Gaussian tail Q(y) = P[Z > y] for standard normal Z.
double q_function(double y);

// Inverse of q_function on (0, 1). Rational initial guess, then Newton
// refinement against q_function; |Q(q_inverse(p)) - p| <= 1e-10.
double q_inverse(double p);

// Noise-to-sensitivity ratio of the Gaussian mechanism:
//   kappa(delta, eps) = (K + sqrt(K^2 + 2 eps)) / (2 eps),  K = Q^{-1}(delta).
// Requires 0 < delta < 1/2 and eps > 0.
double kappa(double delta, double epsilon);

// d kappa / d epsilon at fixed delta.
double kappa_epsilon_derivative(double delta, double epsilon);

// Per-agent privacy requirement: (epsilon, delta)-differential privacy for
// trajectories within l2 distance b of each other.
class PrivacySpec {
 public:
  PrivacySpec(double epsilon, double delta, double adjacency_bound);

  double epsilon() const { return epsilon_; }
  double delta() const { return delta_; }
  double adjacency_bound() const { return b_; }

  // Smallest admissible noise standard deviation, kappa(delta, eps) * b.
  double min_sigma() const;

 private:
  double epsilon_;
  double delta_;
  double b_;
};

inline double min_sigma(const PrivacySpec& spec) { return spec.min_sigma(); }

// Per-agent noise standard deviations entering the network dynamics.
class NoiseModel {
 public:
  NoiseModel() = default;
  NoiseModel(Eigen::VectorXd privacy_sigmas, Eigen::VectorXd process_sigmas);
  // Privacy sigmas set to equality with each spec's minimum.
  static NoiseModel from_specs(std::span<const PrivacySpec> specs,
                               Eigen::VectorXd process_sigmas);
  // Explicit sigmas checked against the specs' minima.
  static NoiseModel with_specs(std::span<const PrivacySpec> specs,
                               Eigen::VectorXd privacy_sigmas,
                               Eigen::VectorXd process_sigmas);

  int n_agents() const { return static_cast<int>(privacy_.size()); }
  const Eigen::VectorXd& privacy_sigmas() const { return privacy_; }
  const Eigen::VectorXd& process_sigmas() const { return process_; }

 private:
  Eigen::VectorXd privacy_;
  Eigen::VectorXd process_;
};

// One draw of the mechanism's additive noise in R^d.
Eigen::VectorXd sample_privacy_noise(double sigma, int dimension, Rng& rng);

// True iff the finite-horizon l2 distance between the trajectories is <= b.
// Throws on length or per-step dimension mismatch.
bool check_adjacency(std::span<const Eigen::VectorXd> v,
                     std::span<const Eigen::VectorXd> w, double b);

}  // namespace privform
