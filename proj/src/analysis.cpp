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

#include "privform/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "privform/error.hpp"

namespace privform {

void NetworkScenario::validate() const {
  const int n = graph.n_agents();
  if (dimension < 1) {
    fail(ErrorKind::kInvalidArgument, "dimension must be at least 1");
  }
  if (formation.n_agents() != n || formation.dimension() != dimension) {
    fail(ErrorKind::kInvalidArgument,
         "formation spec does not match the graph size or dimension");
  }
  if (noise.n_agents() != n) {
    fail(ErrorKind::kInvalidArgument,
         "noise model does not match the graph size");
  }
  check_step_size(graph, gamma, step_rule);
}

Eigen::MatrixXd sigma_z(const WeightedGraph& g, double gamma,
                        const NoiseModel& noise) {
  const AdjacencyDegrees ad = adjacency_and_degrees(g);
  const Eigen::VectorXd var_v = noise.privacy_sigmas().array().square();
  const Eigen::VectorXd var_n = noise.process_sigmas().array().square();
  Eigen::MatrixXd out =
      gamma * gamma * ad.adjacency * var_v.asDiagonal() * ad.adjacency;
  out.diagonal() += var_n;
  return 0.5 * (out + out.transpose());
}

Eigen::MatrixXd centering_projector(int n) {
  return Eigen::MatrixXd::Identity(n, n) -
         Eigen::MatrixXd::Constant(n, n, 1.0 / n);
}

Eigen::MatrixXd m_matrix(const WeightedGraph& g, double gamma) {
  const int n = g.n_agents();
  return Eigen::MatrixXd::Identity(n, n) - gamma * laplacian(g) -
         Eigen::MatrixXd::Constant(n, n, 1.0 / n);
}

double sigma_max_m(const SpectralSummary& spectrum, double gamma) {
  return std::max(std::abs(1.0 - gamma * spectrum.lambda2),
                  std::abs(1.0 - gamma * spectrum.lambda_max));
}

Eigen::MatrixXd covariance_recursion(const Eigen::MatrixXd& sigma_e,
                                     const Eigen::MatrixXd& m,
                                     const Eigen::MatrixXd& sigma_z) {
  const Eigen::MatrixXd p = centering_projector(static_cast<int>(m.rows()));
  Eigen::MatrixXd out = m * sigma_e * m + p * sigma_z * p;
  return 0.5 * (out + out.transpose());
}

Eigen::MatrixXd covariance_partial_sum(const Eigen::MatrixXd& m,
                                       const Eigen::MatrixXd& q, int terms) {
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(q.rows(), q.cols());
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(m.rows(), m.cols());
  for (int i = 0; i < terms; ++i) {
    sum += power * q * power.transpose();
    power = power * m;
  }
  return 0.5 * (sum + sum.transpose());
}

namespace {

double lyapunov_residual(const Eigen::MatrixXd& m, const Eigen::MatrixXd& q,
                         const Eigen::MatrixXd& sigma) {
  return (sigma - q - m * sigma * m).norm();
}

Eigen::MatrixXd kronecker_solve(const Eigen::MatrixXd& m,
                                const Eigen::MatrixXd& q) {
  const Eigen::Index n = m.rows();
  const Eigen::Index nn = n * n;
  // Column-major vec: vec(M Σ M) = (Mᵀ ⊗ M) vec Σ, and M is symmetric.
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(nn, nn);
  for (Eigen::Index l = 0; l < n; ++l) {
    for (Eigen::Index k = 0; k < n; ++k) {
      for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
          system(i + j * n, k + l * n) -= m(i, k) * m(j, l);
        }
      }
    }
  }
  const Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(q.data(), nn);
  const Eigen::VectorXd x = system.partialPivLu().solve(rhs);
  Eigen::MatrixXd sigma = Eigen::Map<const Eigen::MatrixXd>(x.data(), n, n);
  return 0.5 * (sigma + sigma.transpose());
}

}  // namespace

LyapunovSolution solve_lyapunov(const Eigen::MatrixXd& m,
                                const Eigen::MatrixXd& q,
                                LyapunovMethod method, int max_iterations) {
  if (m.rows() != m.cols() || q.rows() != m.rows() || q.cols() != m.cols()) {
    fail(ErrorKind::kInvalidArgument, "Lyapunov operands differ in shape");
  }
  if (method == LyapunovMethod::kAuto) {
    method = m.rows() <= kKroneckerMaxN ? LyapunovMethod::kKronecker
                                        : LyapunovMethod::kSmith;
  }
  LyapunovSolution out;
  out.method = method;
  const double q_norm = q.norm();
  const double stall = 1e-15 * std::max(q_norm, 1e-300);

  switch (method) {
    case LyapunovMethod::kKronecker:
      out.sigma = kronecker_solve(m, q);
      break;
    case LyapunovMethod::kFixedPoint: {
      Eigen::MatrixXd sigma = q;
      for (;;) {
        if (out.iterations == max_iterations) {
          throw ConvergenceError("fixed-point Lyapunov iteration stalled",
                                 lyapunov_residual(m, q, sigma));
        }
        Eigen::MatrixXd next = q + m * sigma * m;
        ++out.iterations;
        const double change = (next - sigma).norm();
        sigma = std::move(next);
        if (change <= stall * std::max(1.0, sigma.norm() / q_norm)) break;
      }
      out.sigma = 0.5 * (sigma + sigma.transpose());
      break;
    }
    case LyapunovMethod::kSmith: {
      Eigen::MatrixXd sigma = q;
      Eigen::MatrixXd a = m;
      for (;;) {
        if (out.iterations == std::min(max_iterations, 200)) {
          throw ConvergenceError("Smith doubling did not converge",
                                 lyapunov_residual(m, q, sigma));
        }
        const Eigen::MatrixXd increment = a * sigma * a;
        sigma += increment;
        a = a * a;
        ++out.iterations;
        if (increment.norm() <= stall) break;
      }
      out.sigma = 0.5 * (sigma + sigma.transpose());
      break;
    }
    case LyapunovMethod::kAuto:
      break;
  }
  out.residual = lyapunov_residual(m, q, out.sigma);
  return out;
}

double trace_q(const WeightedGraph& g, double gamma, const NoiseModel& noise) {
  const int n = g.n_agents();
  const AdjacencyDegrees ad = adjacency_and_degrees(g);
  double privacy_part = 0.0;
  double process_part = 0.0;
  for (int i = 0; i < n; ++i) {
    const double c = ad.adjacency.row(i).squaredNorm() -
                     ad.degrees(i) * ad.degrees(i) / n;
    const double sigma = noise.privacy_sigmas()(i);
    const double s = noise.process_sigmas()(i);
    privacy_part += c * sigma * sigma;
    process_part += s * s;
  }
  return gamma * gamma * privacy_part +
         (static_cast<double>(n - 1) / n) * process_part;
}

namespace {

void require_connected(const SpectralSummary& spectrum,
                       const WeightedGraph& g) {
  if (component_count(g) != 1 || !(spectrum.lambda2 > 0.0)) {
    fail(ErrorKind::kDisconnected,
         "communication graph is disconnected (lambda2 = " +
             std::to_string(spectrum.lambda2) +
             "); the steady-state error exists only for connected graphs");
  }
}

BoundReport bound_from_spectrum(const NetworkScenario& scenario,
                                const SpectralSummary& spectrum) {
  const int n = scenario.n_agents();
  const double gamma = scenario.gamma;
  const double scale = static_cast<double>(scenario.dimension) / n;

  BoundReport out;
  out.lambda2 = spectrum.lambda2;
  out.trace_q = trace_q(scenario.graph, gamma, scenario.noise);
  out.sigma_max_m = sigma_max_m(spectrum, gamma);
  const double fiedler_rate = 1.0 - gamma * spectrum.lambda2;
  out.fiedler_dominant =
      fiedler_rate >= std::abs(1.0 - gamma * spectrum.lambda_max);
  out.value = scale * out.trace_q / (1.0 - out.sigma_max_m * out.sigma_max_m);
  out.fiedler_form =
      scale * out.trace_q / (1.0 - fiedler_rate * fiedler_rate);

  const AdjacencyDegrees ad = adjacency_and_degrees(scenario.graph);
  double noise_sum = 0.0;
  double process_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double c = ad.adjacency.row(i).squaredNorm() -
                     ad.degrees(i) * ad.degrees(i) / n;
    const double sigma = scenario.noise.privacy_sigmas()(i);
    const double s = scenario.noise.process_sigmas()(i);
    noise_sum += c * sigma * sigma;
    process_sum += s * s;
  }
  const double l2 = spectrum.lambda2;
  out.printed_form =
      (gamma * scenario.dimension * noise_sum +
       (static_cast<double>(n - 1) / n) * process_sum) /
      (n * l2 * (2.0 - gamma * l2));
  return out;
}

}  // namespace

BoundReport error_bound(const NetworkScenario& scenario) {
  scenario.validate();
  const SpectralSummary spectrum = spectral_summary(scenario.graph);
  require_connected(spectrum, scenario.graph);
  return bound_from_spectrum(scenario, spectrum);
}

CovarianceReport steady_state(const NetworkScenario& scenario,
                              LyapunovMethod method) {
  scenario.validate();
  const WeightedGraph& g = scenario.graph;
  const int n = g.n_agents();
  const SpectralSummary spectrum = spectral_summary(g);
  require_connected(spectrum, g);

  CovarianceReport out;
  out.sigma_z = sigma_z(g, scenario.gamma, scenario.noise);
  out.m = m_matrix(g, scenario.gamma);
  const Eigen::MatrixXd p = centering_projector(n);
  Eigen::MatrixXd q = p * out.sigma_z * p;
  q = 0.5 * (q + q.transpose());

  const LyapunovSolution lyap = solve_lyapunov(out.m, q, method);
  const double tolerance = 1e-10 * std::max(1.0, q.norm());
  if (lyap.residual > tolerance) {
    throw ConvergenceError("Lyapunov residual above tolerance", lyap.residual);
  }
  out.sigma_inf = lyap.sigma;
  out.lyapunov_residual = lyap.residual;
  out.lyapunov_method = to_string(lyap.method);
  out.e_ss_exact =
      static_cast<double>(scenario.dimension) / n * out.sigma_inf.trace();

  const BoundReport bound = bound_from_spectrum(scenario, spectrum);
  out.e_ss_bound = bound.value;
  out.e_ss_bound_fiedler = bound.fiedler_form;
  out.e_ss_bound_printed = bound.printed_form;
  out.trace_q = bound.trace_q;
  out.sigma_max_m = bound.sigma_max_m;
  out.fiedler_dominant = bound.fiedler_dominant;
  out.lambda2 = spectrum.lambda2;
  out.lambda_max = spectrum.lambda_max;
  return out;
}

std::string to_string(LyapunovMethod method) {
  switch (method) {
    case LyapunovMethod::kAuto:
      return "auto";
    case LyapunovMethod::kKronecker:
      return "kronecker";
    case LyapunovMethod::kFixedPoint:
      return "fixed_point";
    case LyapunovMethod::kSmith:
      return "smith";
  }
  return "unknown";
}

}  // namespace privform
