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

#include "privform/privacy.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "privform/error.hpp"

namespace privform {
namespace {

double standard_normal_pdf(double y) {
  return std::exp(-0.5 * y * y) / std::sqrt(2.0 * std::numbers::pi);
}

// Lower-tail standard normal quantile, P. J. Acklam's rational approximation
// (relative error about 1.15e-9), used as the Newton starting point.
double normal_quantile_guess(double p) {
  constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                          -2.759285104469687e+02, 1.383577518672690e+02,
                          -3.066479806614716e+01, 2.506628277459239e+00};
  constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                          -1.556989798598866e+02, 6.680131188771972e+01,
                          -1.328068155288572e+01};
  constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                          -2.400758277161838e+00, -2.549732539343734e+00,
                          4.374664141464968e+00,  2.938163982698783e+00};
  constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                          2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r +
            a[5]) *
           q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r +
            1.0);
  }
  const double q = std::sqrt(-2.0 * std::log1p(-p));
  return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
           c[5]) /
         ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

void check_privacy_domain(double delta, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    fail(ErrorKind::kInvalidArgument, "epsilon must be positive and finite");
  }
  if (!(delta > 0.0 && delta < 0.5)) {
    fail(ErrorKind::kInvalidArgument, "delta must lie in (0, 1/2)");
  }
}

}  // namespace

double q_function(double y) {
  return 0.5 * std::erfc(y / std::numbers::sqrt2);
}

double q_inverse(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    fail(ErrorKind::kInvalidArgument,
         "q_inverse: probability must lie in (0, 1)");
  }
  // Q(y) = p  <=>  Phi(-y) = p.
  double y = -normal_quantile_guess(p);
  for (int iter = 0; iter < 8; ++iter) {
    const double residual = q_function(y) - p;
    const double pdf = standard_normal_pdf(y);
    if (pdf == 0.0) break;
    // Halley step on f(y) = Q(y) - p, f' = -pdf, f'' = y * pdf.
    const double newton = residual / pdf;
    const double step = newton / (1.0 + 0.5 * y * newton);
    y += step;
    if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(y))) break;
  }
  return y;
}

double kappa(double delta, double epsilon) {
  check_privacy_domain(delta, epsilon);
  const double k = q_inverse(delta);
  return (k + std::sqrt(k * k + 2.0 * epsilon)) / (2.0 * epsilon);
}

double kappa_epsilon_derivative(double delta, double epsilon) {
  check_privacy_domain(delta, epsilon);
  const double k = q_inverse(delta);
  const double root = std::sqrt(k * k + 2.0 * epsilon);
  return -(k + root) / (2.0 * epsilon * epsilon) +
         1.0 / (2.0 * epsilon * root);
}

PrivacySpec::PrivacySpec(double epsilon, double delta, double adjacency_bound)
    : epsilon_(epsilon), delta_(delta), b_(adjacency_bound) {
  check_privacy_domain(delta, epsilon);
  if (!(adjacency_bound > 0.0) || !std::isfinite(adjacency_bound)) {
    fail(ErrorKind::kInvalidArgument, "adjacency bound b must be positive");
  }
}

double PrivacySpec::min_sigma() const { return kappa(delta_, epsilon_) * b_; }

NoiseModel::NoiseModel(Eigen::VectorXd privacy_sigmas,
                       Eigen::VectorXd process_sigmas)
    : privacy_(std::move(privacy_sigmas)), process_(std::move(process_sigmas)) {
  if (privacy_.size() != process_.size()) {
    fail(ErrorKind::kInvalidArgument,
         "privacy and process sigma vectors differ in length");
  }
  for (Eigen::Index i = 0; i < privacy_.size(); ++i) {
    if (!std::isfinite(privacy_(i)) || privacy_(i) < 0.0 ||
        !std::isfinite(process_(i)) || process_(i) < 0.0) {
      fail(ErrorKind::kInvalidArgument,
           "noise standard deviations must be finite and nonnegative");
    }
  }
}

NoiseModel NoiseModel::from_specs(std::span<const PrivacySpec> specs,
                                  Eigen::VectorXd process_sigmas) {
  Eigen::VectorXd sigma(static_cast<Eigen::Index>(specs.size()));
  for (size_t i = 0; i < specs.size(); ++i) {
    sigma(static_cast<Eigen::Index>(i)) = specs[i].min_sigma();
  }
  return NoiseModel(std::move(sigma), std::move(process_sigmas));
}

NoiseModel NoiseModel::with_specs(std::span<const PrivacySpec> specs,
                                  Eigen::VectorXd privacy_sigmas,
                                  Eigen::VectorXd process_sigmas) {
  if (static_cast<Eigen::Index>(specs.size()) != privacy_sigmas.size()) {
    fail(ErrorKind::kInvalidArgument,
         "one privacy spec is required per agent");
  }
  for (size_t i = 0; i < specs.size(); ++i) {
    const double floor = specs[i].min_sigma();
    if (privacy_sigmas(static_cast<Eigen::Index>(i)) < floor) {
      fail(ErrorKind::kInvalidArgument,
           "agent " + std::to_string(i + 1) + " sigma is below kappa * b = " +
               std::to_string(floor));
    }
  }
  return NoiseModel(std::move(privacy_sigmas), std::move(process_sigmas));
}

Eigen::VectorXd sample_privacy_noise(double sigma, int dimension, Rng& rng) {
  if (dimension < 1) {
    fail(ErrorKind::kInvalidArgument, "dimension must be at least 1");
  }
  if (!(sigma >= 0.0)) {
    fail(ErrorKind::kInvalidArgument, "sigma must be nonnegative");
  }
  Eigen::VectorXd out(dimension);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int l = 0; l < dimension; ++l) out(l) = sigma * normal(rng);
  return out;
}

bool check_adjacency(std::span<const Eigen::VectorXd> v,
                     std::span<const Eigen::VectorXd> w, double b) {
  if (v.size() != w.size()) {
    fail(ErrorKind::kInvalidArgument, "trajectories differ in length");
  }
  double squared = 0.0;
  for (size_t k = 0; k < v.size(); ++k) {
    if (v[k].size() != w[k].size()) {
      fail(ErrorKind::kInvalidArgument,
           "trajectories differ in dimension at step " + std::to_string(k));
    }
    squared += (v[k] - w[k]).squaredNorm();
  }
  // Inclusive boundary; a few ulps absorb rounding in the squared sum.
  return squared <= b * b * (1.0 + 8.0 * std::numeric_limits<double>::epsilon());
}

}  // namespace privform
