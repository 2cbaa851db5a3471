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

#include "privform/codesign.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <random>
#include <sstream>

#include "privform/analysis.hpp"
#include "privform/eigen_sym.hpp"
#include "privform/error.hpp"
#include "privform/parallel.hpp"
#include "privform/privacy.hpp"
#include "privform/rng.hpp"

namespace privform {

void CodesignProblem::validate() const {
  const int n = n_agents();
  auto bad = [](const std::string& what) { fail(ErrorKind::kConfig, what); };
  if (n < 2) bad("co-design needs at least two agents");
  if (!(e_r > 0.0)) bad("e_R must be positive");
  if (!(lambda2_min > 0.0)) bad("lambda2_min must be positive");
  if (!(vartheta > 0.0)) bad("vartheta must be positive");
  if (!(gamma > 0.0)) bad("gamma must be positive");
  if (dimension < 1) bad("dimension must be at least 1");
  for (const auto* v : {&eps_max, &deltas, &adjacency_bounds, &process_sigmas}) {
    if (v->size() != n) bad("per-agent vectors must have one entry per agent");
  }
  for (int i = 0; i < n; ++i) {
    if (!(eps_max(i) > 0.0)) bad("eps_max entries must be positive");
    if (!(deltas(i) > 0.0 && deltas(i) < 0.5)) bad("delta must lie in (0, 1/2)");
    if (!(adjacency_bounds(i) > 0.0)) bad("adjacency bounds must be positive");
    if (!(process_sigmas(i) >= 0.0)) bad("process sigmas must be nonnegative");
  }
}

double objective(const Eigen::VectorXd& weights,
                 const Eigen::VectorXd& epsilons, double vartheta) {
  return 2.0 * weights.sum() + vartheta * epsilons.squaredNorm();
}

namespace {

Eigen::VectorXd sigmas_for(const CodesignProblem& problem,
                           const Eigen::VectorXd& epsilons) {
  Eigen::VectorXd sigma(problem.n_agents());
  for (int i = 0; i < problem.n_agents(); ++i) {
    sigma(i) = kappa(problem.deltas(i), epsilons(i)) *
               problem.adjacency_bounds(i);
  }
  return sigma;
}

}  // namespace

ConstraintValues constraint_values(const CodesignProblem& problem,
                                   const Eigen::VectorXd& weights,
                                   const Eigen::VectorXd& epsilons) {
  const int n = problem.n_agents();
  if (weights.size() != problem.mask.edge_count() || epsilons.size() != n) {
    fail(ErrorKind::kInvalidArgument,
         "candidate point does not match the problem dimensions");
  }
  const WeightedGraph g(problem.mask,
                        std::vector<double>(weights.data(),
                                            weights.data() + weights.size()));
  const SpectralSummary spectrum = spectral_summary(g);
  const NoiseModel noise(sigmas_for(problem, epsilons), problem.process_sigmas);

  ConstraintValues out;
  out.lambda2 = spectrum.lambda2;
  double lambda2 = spectrum.lambda2;
  if (lambda2 < DBL_EPSILON) {
    lambda2 = DBL_EPSILON;
    out.lambda2_clamped = true;
  }
  const double gamma = problem.gamma;
  const double rho = std::max(std::abs(1.0 - gamma * lambda2),
                              std::abs(1.0 - gamma * spectrum.lambda_max));
  const double denom = 1.0 - rho * rho;
  out.bound = denom > 0.0 ? static_cast<double>(problem.dimension) / n *
                                trace_q(g, gamma, noise) / denom
                          : std::numeric_limits<double>::infinity();
  out.g_err = out.bound - problem.e_r;
  out.g_lambda = problem.lambda2_min - spectrum.lambda2;
  out.g_eps = epsilons - problem.eps_max;
  return out;
}

Eigen::VectorXd lambda2_gradient(const WeightedGraph& g) {
  const SpectralSummary s = spectral_summary(g);
  const auto& edges = g.mask().edges();
  Eigen::VectorXd grad(static_cast<Eigen::Index>(edges.size()));
  for (size_t k = 0; k < edges.size(); ++k) {
    const double diff = s.fiedler_vector(edges[k].i) - s.fiedler_vector(edges[k].j);
    grad(static_cast<Eigen::Index>(k)) = diff * diff;
  }
  return grad;
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kConverged:
      return "converged";
    case SolveStatus::kNotConverged:
      return "not_converged";
    case SolveStatus::kInfeasible:
      return "infeasible";
  }
  return "unknown";
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// Orthonormal basis of the complement of the ones vector (Helmert columns).
Eigen::MatrixXd complement_basis(int n) {
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n, n - 1);
  for (int k = 1; k < n; ++k) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(k) * (k + 1));
    for (int i = 0; i < k; ++i) u(i, k - 1) = scale;
    u(k, k - 1) = -k * scale;
  }
  return u;
}

// Problem with lambda2 lifted into an auxiliary variable t:
//   min  Tr(L(w)) + vartheta |eps|^2
//   s.t. (d/N) Tr Q(w, eps) / (gamma t (2 - gamma t)) <= e_R
//        Uᵀ L(w) U - t I  is PSD,  t >= lambda2_min
//        2 gamma d_i(w) <= 1                        (optional)
// over the box w >= 0, eps_floor <= eps <= eps_max, t <= 1/gamma. For
// gamma t <= 1 the bound decreases in t, so any feasible point satisfies the
// original constraints with lambda2(L) >= t. The PSD form stays smooth when
// lambda2 is repeated; with a simple lambda2 and a rank-one multiplier its
// weight gradient reduces to the Fiedler formula (v_i - v_j)^2.
constexpr double kErrorMargin = 1e-7;

class LiftedProblem {
 public:
  LiftedProblem(const CodesignProblem& problem, const SolverOptions& options)
      : problem_(problem),
        options_(options),
        n_(problem.n_agents()),
        n_edges_(problem.mask.edge_count()),
        basis_(complement_basis(problem.n_agents())),
        k_delta_(problem.n_agents()) {
    for (int i = 0; i < n_; ++i) k_delta_(i) = q_inverse(problem.deltas(i));
    lower_ = Eigen::VectorXd::Zero(size());
    upper_ = Eigen::VectorXd::Zero(size());
    const double w_cap = options.enforce_step_bound ? 0.5 / problem.gamma
                                                    : 1.0 / problem.gamma;
    for (int e = 0; e < n_edges_; ++e) upper_(e) = w_cap;
    for (int i = 0; i < n_; ++i) {
      lower_(n_edges_ + i) = std::min(options.eps_floor, problem.eps_max(i));
      upper_(n_edges_ + i) = problem.eps_max(i);
    }
    lower_(t_index()) = problem.lambda2_min;
    upper_(t_index()) = std::max(problem.lambda2_min, 1.0 / problem.gamma);
    edge_vectors_.resize(static_cast<size_t>(n_edges_));
    for (int e = 0; e < n_edges_; ++e) {
      const Edge& edge = problem.mask.edges()[static_cast<size_t>(e)];
      edge_vectors_[static_cast<size_t>(e)] =
          (basis_.row(edge.i) - basis_.row(edge.j)).transpose();
    }
    scalar_count_ = 1 + (options.enforce_step_bound ? n_ : 0);
    // Aim slightly inside e_R so converged designs meet it without slack.
    e_target_ = problem.e_r * (1.0 - kErrorMargin);
  }

  int size() const { return n_edges_ + n_ + 1; }
  int t_index() const { return n_edges_ + n_; }
  int scalar_count() const { return scalar_count_; }
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }

  Eigen::VectorXd project(const Eigen::VectorXd& x) const {
    return x.cwiseMax(lower_).cwiseMin(upper_);
  }

  double sigma(int i, double eps) const {
    const double k = k_delta_(i);
    return (k + std::sqrt(k * k + 2.0 * eps)) / (2.0 * eps) *
           problem_.adjacency_bounds(i);
  }

  double sigma_derivative(int i, double eps) const {
    const double k = k_delta_(i);
    const double root = std::sqrt(k * k + 2.0 * eps);
    return (-(k + root) / (2.0 * eps * eps) + 1.0 / (2.0 * eps * root)) *
           problem_.adjacency_bounds(i);
  }

  double raw_objective(const Eigen::VectorXd& x) const {
    return 2.0 * x.head(n_edges_).sum() +
           problem_.vartheta * x.segment(n_edges_, n_).squaredNorm();
  }

  struct Constraints {
    Eigen::VectorXd scalar;        // c_err, then c_deg_i; <= 0 feasible
    Eigen::MatrixXd scalar_grad;   // one column per scalar constraint
    Eigen::MatrixXd psd;           // (Uᵀ L U - t I) / lambda2_min, want PSD
  };

  Constraints constraints(const Eigen::VectorXd& x, bool with_grad) const {
    const Eigen::VectorXd w = x.head(n_edges_);
    const Eigen::VectorXd eps = x.segment(n_edges_, n_);
    const double t = x(t_index());
    const double gamma = problem_.gamma;
    const auto& edges = problem_.mask.edges();

    Eigen::VectorXd degree = Eigen::VectorXd::Zero(n_);
    Eigen::VectorXd square_sum = Eigen::VectorXd::Zero(n_);
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n_, n_);
    for (int e = 0; e < n_edges_; ++e) {
      const Edge& edge = edges[static_cast<size_t>(e)];
      const double we = w(e);
      degree(edge.i) += we;
      degree(edge.j) += we;
      square_sum(edge.i) += we * we;
      square_sum(edge.j) += we * we;
      lap(edge.i, edge.j) -= we;
      lap(edge.j, edge.i) -= we;
      lap(edge.i, edge.i) += we;
      lap(edge.j, edge.j) += we;
    }
    Eigen::VectorXd sig(n_), c(n_);
    double tr_q = 0.0;
    for (int i = 0; i < n_; ++i) {
      sig(i) = sigma(i, eps(i));
      c(i) = square_sum(i) - degree(i) * degree(i) / n_;
      tr_q += gamma * gamma * c(i) * sig(i) * sig(i) +
              (static_cast<double>(n_ - 1) / n_) * problem_.process_sigmas(i) *
                  problem_.process_sigmas(i);
    }
    const double scale = static_cast<double>(problem_.dimension) / n_;
    const double denom = gamma * t * (2.0 - gamma * t);
    const double bound = scale * tr_q / denom;

    Constraints out;
    out.scalar.resize(scalar_count_);
    out.scalar(0) = bound / e_target_ - 1.0;
    if (options_.enforce_step_bound) {
      for (int i = 0; i < n_; ++i) out.scalar(1 + i) = 2.0 * gamma * degree(i) - 1.0;
    }
    out.psd = (basis_.transpose() * lap * basis_ -
               t * Eigen::MatrixXd::Identity(n_ - 1, n_ - 1)) /
              problem_.lambda2_min;

    if (with_grad) {
      out.scalar_grad = Eigen::MatrixXd::Zero(size(), scalar_count_);
      const double k_err = scale * gamma * gamma / (denom * e_target_);
      for (int e = 0; e < n_edges_; ++e) {
        const Edge& edge = edges[static_cast<size_t>(e)];
        const double we = w(e);
        out.scalar_grad(e, 0) =
            k_err * ((2.0 * we - 2.0 * degree(edge.i) / n_) * sig(edge.i) * sig(edge.i) +
                     (2.0 * we - 2.0 * degree(edge.j) / n_) * sig(edge.j) * sig(edge.j));
        if (options_.enforce_step_bound) {
          out.scalar_grad(e, 1 + edge.i) = 2.0 * gamma;
          out.scalar_grad(e, 1 + edge.j) = 2.0 * gamma;
        }
      }
      for (int i = 0; i < n_; ++i) {
        out.scalar_grad(n_edges_ + i, 0) =
            k_err * c(i) * 2.0 * sig(i) * sigma_derivative(i, eps(i));
      }
      const double d_denom = 2.0 * gamma * (1.0 - gamma * t);
      out.scalar_grad(t_index(), 0) =
          -scale * tr_q * d_denom / (denom * denom * e_target_);
    }
    return out;
  }

  // Gradient of <S, psd(x)> with respect to x.
  Eigen::VectorXd psd_pairing_gradient(const Eigen::MatrixXd& s) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(size());
    for (int e = 0; e < n_edges_; ++e) {
      const Eigen::VectorXd& u = edge_vectors_[static_cast<size_t>(e)];
      g(e) = u.dot(s * u) / problem_.lambda2_min;
    }
    g(t_index()) = -s.trace() / problem_.lambda2_min;
    return g;
  }

  Eigen::VectorXd objective_gradient(const Eigen::VectorXd& x) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(size());
    g.head(n_edges_).setConstant(2.0);
    g.segment(n_edges_, n_) = 2.0 * problem_.vartheta * x.segment(n_edges_, n_);
    return g;
  }

 private:
  const CodesignProblem& problem_;
  const SolverOptions& options_;
  int n_;
  int n_edges_;
  int scalar_count_ = 1;
  double e_target_ = 0.0;
  Eigen::MatrixXd basis_;
  Eigen::VectorXd k_delta_;
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
  std::vector<Eigen::VectorXd> edge_vectors_;
};

struct Multipliers {
  Eigen::VectorXd scalar;
  Eigen::MatrixXd psd;
};

// Augmented Lagrangian for c(x) <= 0 and G(x) PSD:
//   f/f_scale + (1/2rho) sum (max(0, mu + rho c)^2 - mu^2)
//             + (1/2rho) (||Π₊(Λ - rho G)||² - ||Λ||²).
class AugmentedLagrangian {
 public:
  AugmentedLagrangian(const LiftedProblem& lifted, const Multipliers& mult,
                      double rho, double f_scale)
      : lifted_(lifted), mult_(mult), rho_(rho), f_scale_(f_scale) {}

  double value(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const {
    const auto c = lifted_.constraints(x, grad != nullptr);
    double v = lifted_.raw_objective(x) / f_scale_;
    if (grad) *grad = lifted_.objective_gradient(x) / f_scale_;
    for (Eigen::Index k = 0; k < c.scalar.size(); ++k) {
      const double mu = mult_.scalar(k);
      const double shifted = std::max(0.0, mu + rho_ * c.scalar(k));
      v += (shifted * shifted - mu * mu) / (2.0 * rho_);
      if (grad && shifted > 0.0) *grad += shifted * c.scalar_grad.col(k);
    }
    const Eigen::MatrixXd s = psd_part(mult_.psd - rho_ * c.psd);
    v += (s.squaredNorm() - mult_.psd.squaredNorm()) / (2.0 * rho_);
    if (grad) *grad -= lifted_.psd_pairing_gradient(s);
    return v;
  }

 private:
  const LiftedProblem& lifted_;
  const Multipliers& mult_;
  double rho_;
  double f_scale_;
};

struct InnerResult {
  Eigen::VectorXd x;
  double projected_gradient = 0.0;
  int iterations = 0;
};

// Projected L-BFGS over the box. The quasi-Newton direction acts on the free
// variables (those not held at a bound by the gradient); the step follows the
// projection arc with an Armijo test. When the direction fails, the memory is
// dropped and a projected gradient step with a Barzilai-Borwein length is
// tried instead.
InnerResult box_minimize(const AugmentedLagrangian& merit,
                         const LiftedProblem& lifted, Eigen::VectorXd x,
                         double tol, int max_iterations) {
  constexpr int kMemory = 10;
  constexpr double kSufficient = 1e-4;
  const Eigen::VectorXd& lo = lifted.lower();
  const Eigen::VectorXd& hi = lifted.upper();
  x = lifted.project(x);
  Eigen::VectorXd g;
  double f = merit.value(x, &g);
  auto pg_norm = [&](const Eigen::VectorXd& point, const Eigen::VectorXd& grad) {
    return (lifted.project(point - grad) - point).lpNorm<Eigen::Infinity>();
  };
  double pg = pg_norm(x, g);
  double bb = std::clamp(1.0 / std::max(pg, 1e-12), 1e-12, 1e12);
  std::deque<Eigen::VectorXd> s_mem, y_mem;

  const double box_span = (hi - lo).lpNorm<Eigen::Infinity>();
  // Armijo backtracking along x(a) = P(x + a d), starting from a step no
  // longer than the box.
  auto arc_search = [&](const Eigen::VectorXd& d, Eigen::VectorXd& x_new,
                        Eigen::VectorXd& g_new, double& f_new) {
    const double length = d.lpNorm<Eigen::Infinity>();
    double step = length > box_span ? box_span / length : 1.0;
    for (int ls = 0; ls < 100; ++ls) {
      x_new = lifted.project(x + step * d);
      const Eigen::VectorXd moved = x_new - x;
      const double decrease = g.dot(moved);
      if (decrease < 0.0) {
        f_new = merit.value(x_new, &g_new);
        if (f_new <= f + kSufficient * decrease) return true;
      } else if (moved.lpNorm<Eigen::Infinity>() == 0.0) {
        return false;
      }
      step *= 0.5;
    }
    return false;
  };

  InnerResult out;
  int iter = 0;
  for (; iter < max_iterations && pg > tol; ++iter) {
    Eigen::VectorXd free = Eigen::VectorXd::Ones(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double span = 1e-12 * std::max(1.0, hi(i) - lo(i));
      if ((x(i) <= lo(i) + span && g(i) > 0.0) ||
          (x(i) >= hi(i) - span && g(i) < 0.0)) {
        free(i) = 0.0;
      }
    }
    // Two-loop recursion restricted to the free variables.
    Eigen::VectorXd q = g.cwiseProduct(free);
    const size_t m = s_mem.size();
    std::vector<double> a(m), r(m);
    for (size_t k = m; k-- > 0;) {
      const Eigen::VectorXd sk = s_mem[k].cwiseProduct(free);
      const Eigen::VectorXd yk = y_mem[k].cwiseProduct(free);
      const double sy = sk.dot(yk);
      r[k] = sy > 1e-12 * sk.norm() * yk.norm() ? 1.0 / sy : 0.0;
      a[k] = r[k] * sk.dot(q);
      q -= a[k] * yk;
    }
    double scale = bb;
    if (m > 0) {
      const Eigen::VectorXd sk = s_mem.back().cwiseProduct(free);
      const Eigen::VectorXd yk = y_mem.back().cwiseProduct(free);
      const double yy = yk.squaredNorm();
      if (sk.dot(yk) > 0.0 && yy > 0.0) scale = sk.dot(yk) / yy;
    }
    Eigen::VectorXd d = scale * q;
    for (size_t k = 0; k < m; ++k) {
      const Eigen::VectorXd sk = s_mem[k].cwiseProduct(free);
      const Eigen::VectorXd yk = y_mem[k].cwiseProduct(free);
      const double b = r[k] * yk.dot(d);
      d += (a[k] - b) * sk;
    }
    d = -d.cwiseProduct(free);

    Eigen::VectorXd x_new, g_new;
    double f_new = 0.0;
    bool accepted = g.dot(d) < 0.0 && arc_search(d, x_new, g_new, f_new);
    if (!accepted) {
      s_mem.clear();
      y_mem.clear();
      accepted = arc_search(-bb * g, x_new, g_new, f_new);
    }
    if (!accepted) break;
    const Eigen::VectorXd sv = x_new - x;
    const Eigen::VectorXd yv = g_new - g;
    const double sy = sv.dot(yv);
    if (sy > 1e-12 * sv.norm() * yv.norm()) {
      s_mem.push_back(sv);
      y_mem.push_back(yv);
      if (static_cast<int>(s_mem.size()) > kMemory) {
        s_mem.pop_front();
        y_mem.pop_front();
      }
      bb = std::clamp(sv.squaredNorm() / sy, 1e-12, 1e12);
    }
    x = std::move(x_new);
    g = std::move(g_new);
    f = f_new;
    pg = pg_norm(x, g);
  }
  out.x = std::move(x);
  out.projected_gradient = pg;
  out.iterations = iter;
  return out;
}

struct StartResult {
  bool feasible = false;
  bool converged = false;
  Eigen::VectorXd weights;
  Eigen::VectorXd epsilons;
  double objective_value = std::numeric_limits<double>::infinity();
  double violation = std::numeric_limits<double>::infinity();
  double stationarity = 0.0;
  int iterations = 0;
  std::vector<double> accepted;
  std::vector<std::string> log;
};

struct FeasibilityScan {
  bool feasible = false;
  // Infeasibility is proven, not just suggested by the uniform scan.
  bool certified = false;
  double scale = 1.0;  // multiplier on unit weights
  double best_bound = std::numeric_limits<double>::infinity();
  std::string binding;
  std::string message;
};

// With eps at eps_max and every mask edge at a common weight alpha, find the
// smallest alpha meeting both the connectivity and the error requirement.
FeasibilityScan feasibility_scan(const CodesignProblem& problem,
                                 const SolverOptions& options) {
  FeasibilityScan out;
  const WeightedGraph unit = WeightedGraph::uniform(problem.mask, 1.0);
  if (component_count(unit) != 1) {
    out.binding = "lambda2";
    out.message = "the mask graph is disconnected, so lambda2 = 0 for every "
                  "weighting";
    out.certified = true;
    return out;
  }
  const int n = problem.n_agents();
  const double gamma = problem.gamma;
  const double scale = static_cast<double>(problem.dimension) / n;
  double process = 0.0;
  for (int i = 0; i < n; ++i) {
    process += problem.process_sigmas(i) * problem.process_sigmas(i);
  }
  process *= static_cast<double>(n - 1) / n;
  // gamma t (2 - gamma t) <= 1, so the process-noise term alone bounds the
  // error from below.
  if (scale * process > problem.e_r) {
    out.binding = "error_bound";
    out.message = "process noise alone forces the bound to at least " +
                  fmt(scale * process) + " > e_R = " + fmt(problem.e_r);
    out.best_bound = scale * process;
    out.certified = true;
    return out;
  }
  // lambda2 <= N/(N-1) * min degree, and the box caps t at 1/gamma.
  const double lambda2_cap =
      options.enforce_step_bound
          ? std::min(1.0 / gamma, static_cast<double>(n) / (n - 1) * 0.5 / gamma)
          : 1.0 / gamma;
  if (problem.lambda2_min > lambda2_cap) {
    out.binding = "lambda2";
    out.message = "lambda2 >= " + fmt(problem.lambda2_min) +
                  " exceeds the largest value reachable under the step-size "
                  "caps, " + fmt(lambda2_cap);
    out.certified = true;
    return out;
  }

  const SpectralSummary spectrum = spectral_summary(unit);
  const double l2 = spectrum.lambda2;
  const double dmax = adjacency_and_degrees(unit).max_degree();
  const NoiseModel noise(sigmas_for(problem, problem.eps_max),
                         problem.process_sigmas);
  const double privacy =
      trace_q(unit, 1.0, NoiseModel(noise.privacy_sigmas(),
                                    Eigen::VectorXd::Zero(n)));
  const double alpha_lo = problem.lambda2_min / l2;
  const double alpha_hi =
      options.enforce_step_bound ? 0.5 / (gamma * dmax) : 1.0 / (gamma * l2);
  if (alpha_lo > alpha_hi) {
    out.binding = "lambda2";
    out.message = "no uniform weighting reaches lambda2 >= " +
                  fmt(problem.lambda2_min) + " under the step-size caps";
    out.scale = alpha_hi;
    return out;
  }
  auto bound_at = [&](double alpha) {
    const double lam = alpha * l2;
    const double rho = std::max(std::abs(1.0 - gamma * lam),
                                std::abs(1.0 - gamma * alpha * spectrum.lambda_max));
    return scale * (gamma * gamma * alpha * alpha * privacy + process) /
           (1.0 - rho * rho);
  };
  constexpr int kGrid = 400;
  for (int k = 0; k <= kGrid; ++k) {
    const double alpha =
        alpha_lo * std::pow(alpha_hi / alpha_lo, static_cast<double>(k) / kGrid);
    const double b = bound_at(alpha);
    if (b < out.best_bound) {
      out.best_bound = b;
      out.scale = alpha;
    }
    if (b <= problem.e_r * (1.0 - 1e-9)) {
      out.feasible = true;
      out.scale = alpha;
      return out;
    }
  }
  out.binding = "error_bound";
  out.message = "with eps = eps_max and uniformly weighted mask edges the "
                "smallest achievable bound is " +
                fmt(out.best_bound) + " > e_R = " + fmt(problem.e_r);
  return out;
}

bool point_feasible(const ConstraintValues& c, const CodesignProblem& problem,
                    double tol) {
  return c.g_err <= tol * std::max(1.0, problem.e_r) && c.g_lambda <= tol &&
         c.g_eps.maxCoeff() <= tol;
}

double point_violation(const ConstraintValues& c) {
  return std::max({0.0, c.g_err, c.g_lambda, c.g_eps.maxCoeff()});
}

StartResult run_start(const CodesignProblem& problem,
                      const SolverOptions& options, const LiftedProblem& lifted,
                      Eigen::VectorXd x, double f_scale, int start_index) {
  StartResult out;
  const int n = problem.n_agents();
  const int n_edges = problem.mask.edge_count();
  auto log = [&](const std::string& line) {
    out.log.push_back("start " + std::to_string(start_index) + ": " + line);
  };

  Multipliers mult{Eigen::VectorXd::Zero(lifted.scalar_count()),
                   Eigen::MatrixXd::Zero(n - 1, n - 1)};
  double rho = options.penalty_initial;
  double previous_violation = std::numeric_limits<double>::infinity();
  double inner_tol = 1e-2;
  // Internal acceptance is tighter than tol_feas so pruning keeps slack.
  const double accept_tol = 1e-2 * options.tol_feas;
  double incumbent = std::numeric_limits<double>::infinity();
  bool degenerate_logged = false;
  constexpr int kStallLimit = 6;
  double best_violation = std::numeric_limits<double>::infinity();
  int stalled = 0;

  for (int outer = 0; outer < options.max_outer; ++outer) {
    const AugmentedLagrangian merit(lifted, mult, rho, f_scale);
    const InnerResult inner =
        box_minimize(merit, lifted, x, inner_tol, options.max_inner);
    x = inner.x;
    out.iterations = outer + 1;
    out.stationarity = inner.projected_gradient;

    const auto c = lifted.constraints(x, false);
    const Eigen::MatrixXd shifted = mult.psd - rho * c.psd;
    for (Eigen::Index k = 0; k < c.scalar.size(); ++k) {
      mult.scalar(k) = std::max(0.0, mult.scalar(k) + rho * c.scalar(k));
    }
    mult.psd = psd_part(shifted);
    const double psd_violation =
        std::max(0.0, -jacobi_eigen(c.psd).values(0));
    const double violation =
        std::max({0.0, c.scalar.maxCoeff(), psd_violation});

    // True constraints at the design point (fresh lambda2, no lifting).
    const Eigen::VectorXd w = x.head(n_edges);
    const Eigen::VectorXd eps = x.segment(n_edges, n);
    const ConstraintValues truth = constraint_values(problem, w, eps);
    const double obj = objective(w, eps, problem.vartheta);
    if (point_feasible(truth, problem, accept_tol) && obj <= incumbent) {
      incumbent = obj;
      out.feasible = true;
      out.weights = w;
      out.epsilons = eps;
      out.objective_value = obj;
      out.violation = point_violation(truth);
      out.accepted.push_back(obj);
    }
    if (!degenerate_logged) {
      const WeightedGraph g(problem.mask,
                            std::vector<double>(w.data(), w.data() + w.size()));
      if (spectral_summary(g).degenerate_fiedler) {
        log("outer " + std::to_string(outer) +
            ": lambda2 is repeated; PSD multiplier spans the eigenspace");
        degenerate_logged = true;
      }
    }
    if (!out.feasible) out.violation = std::min(out.violation, point_violation(truth));

    if (violation <= options.feasibility_target &&
        inner.projected_gradient <= options.stat_tol) {
      out.converged = true;
      log("converged after " + std::to_string(outer + 1) +
          " outer iterations, objective " + fmt(obj));
      break;
    }
    // Locally infeasible: the violation stops improving however large the
    // penalty gets. Feasible iterates only need more stationarity.
    if (violation <= options.tol_feas || violation < 0.9 * best_violation) {
      best_violation = std::min(best_violation, violation);
      stalled = 0;
    } else if (++stalled >= kStallLimit) {
      log("violation stalled at " + fmt(violation) + " after " +
          std::to_string(outer + 1) + " outer iterations");
      break;
    }
    if (violation > options.feasibility_target &&
        violation > 0.25 * previous_violation) {
      rho = std::min(rho * options.penalty_growth, options.penalty_max);
    }
    previous_violation = violation;
    inner_tol = std::max(options.stat_tol, 0.1 * inner_tol);
  }
  if (!out.converged && stalled < kStallLimit) {
    log("stopped after " + std::to_string(out.iterations) +
        " outer iterations; stationarity " + fmt(out.stationarity));
  }
  return out;
}

// Removes edges below the pruning threshold, then restores them one at a time
// (largest first) while any constraint is violated beyond tol_feas.
WeightedGraph prune_with_rollback(const CodesignProblem& problem,
                                  const SolverOptions& options,
                                  const Eigen::VectorXd& weights,
                                  const Eigen::VectorXd& epsilons,
                                  std::vector<std::string>& log) {
  std::vector<double> full(weights.data(), weights.data() + weights.size());
  std::vector<double> kept = full;
  std::vector<int> removed;
  for (size_t k = 0; k < kept.size(); ++k) {
    if (kept[k] > 0.0 && kept[k] < options.prune_threshold) {
      kept[k] = 0.0;
      removed.push_back(static_cast<int>(k));
    }
  }
  std::stable_sort(removed.begin(), removed.end(),
                   [&](int a, int b) { return full[static_cast<size_t>(a)] >
                                              full[static_cast<size_t>(b)]; });
  auto feasible = [&](const std::vector<double>& w) {
    const Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(
        w.data(), static_cast<Eigen::Index>(w.size()));
    return point_feasible(constraint_values(problem, v, epsilons), problem,
                          options.tol_feas);
  };
  size_t restored = 0;
  while (!feasible(kept) && restored < removed.size()) {
    const int k = removed[restored++];
    kept[static_cast<size_t>(k)] = full[static_cast<size_t>(k)];
    const Edge& e = problem.mask.edges()[static_cast<size_t>(k)];
    log.push_back("pruning rollback: restored edge {" + std::to_string(e.i + 1) +
                  "," + std::to_string(e.j + 1) + "}");
  }
  const size_t pruned = removed.size() - restored;
  if (pruned > 0) {
    log.push_back("pruned " + std::to_string(pruned) + " edge(s) below " +
                  fmt(options.prune_threshold));
  }
  return WeightedGraph(problem.mask, std::move(kept));
}

}  // namespace

CodesignSolution solve(const CodesignProblem& problem,
                       const SolverOptions& options, std::uint64_t seed) {
  problem.validate();
  if (options.multistarts < 1) {
    fail(ErrorKind::kConfig, "multistarts must be at least 1");
  }
  const int n = problem.n_agents();
  const int n_edges = problem.mask.edge_count();

  CodesignSolution solution;
  const FeasibilityScan scan = feasibility_scan(problem, options);
  if (!scan.feasible && scan.certified) {
    solution.status = SolveStatus::kInfeasible;
    solution.binding_constraint = scan.binding;
    solution.message = scan.message;
    solution.graph = WeightedGraph::uniform(problem.mask, 0.0);
    solution.epsilons = problem.eps_max;
    solution.log.push_back("infeasible: " + scan.message);
    return solution;
  }

  const LiftedProblem lifted(problem, options);
  auto initial_point = [&](const Eigen::VectorXd& w, const Eigen::VectorXd& eps) {
    Eigen::VectorXd x(lifted.size());
    x.head(n_edges) = w;
    x.segment(n_edges, n) = eps;
    const WeightedGraph g(problem.mask,
                          std::vector<double>(w.data(), w.data() + w.size()));
    x(lifted.t_index()) = spectral_summary(g).lambda2;
    return lifted.project(x);
  };

  std::vector<Eigen::VectorXd> starts;
  const Eigen::VectorXd base_w = Eigen::VectorXd::Constant(n_edges, scan.scale);
  starts.push_back(initial_point(base_w, problem.eps_max));
  for (int s = 1; s < options.multistarts; ++s) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(s));
    std::uniform_real_distribution<double> jitter(
        1.0 - options.start_perturbation, 1.0 + options.start_perturbation);
    std::uniform_real_distribution<double> eps_fraction(0.5, 1.0);
    Eigen::VectorXd w(n_edges), eps(n);
    for (int e = 0; e < n_edges; ++e) w(e) = scan.scale * jitter(rng);
    for (int i = 0; i < n; ++i) eps(i) = problem.eps_max(i) * eps_fraction(rng);
    starts.push_back(initial_point(w, eps));
  }
  const double f_scale =
      std::max(1.0, objective(base_w, problem.eps_max, problem.vartheta));

  std::vector<StartResult> results(starts.size());
  parallel_for(static_cast<int>(starts.size()), [&](int s) {
    results[static_cast<size_t>(s)] =
        run_start(problem, options, lifted, starts[static_cast<size_t>(s)],
                  f_scale, s);
  });

  if (scan.feasible) {
    solution.log.push_back("restoration: unit weights scaled by " +
                           fmt(scan.scale) + " with eps = eps_max");
  } else {
    solution.log.push_back("restoration failed (" + scan.message +
                           "); starting from the least violating scale " +
                           fmt(scan.scale));
  }
  // Prune each feasible start, then pick the best objective. Objectives within
  // kTieTolerance of each other tie; ties prefer a converged start, then the
  // lowest start index.
  constexpr double kTieTolerance = 1e-8;
  int best = -1;
  bool best_converged = false;
  WeightedGraph best_graph;
  double best_objective = std::numeric_limits<double>::infinity();
  for (size_t s = 0; s < results.size(); ++s) {
    StartResult& r = results[s];
    for (auto& line : r.log) solution.log.push_back(line);
    if (!r.feasible) continue;
    std::vector<std::string> prune_log;
    WeightedGraph g =
        prune_with_rollback(problem, options, r.weights, r.epsilons, prune_log);
    const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(
        g.mask_weights().data(), n_edges);
    const ConstraintValues c = constraint_values(problem, w, r.epsilons);
    if (!point_feasible(c, problem, options.tol_feas)) continue;
    const double obj = objective(w, r.epsilons, problem.vartheta);
    for (auto& line : prune_log) {
      solution.log.push_back("start " + std::to_string(s) + ": " + line);
    }
    const double tie = kTieTolerance * std::max(1.0, std::abs(obj));
    const bool better =
        best < 0 || obj < best_objective - tie ||
        (obj <= best_objective + tie && r.converged && !best_converged);
    if (better) {
      best_objective = obj;
      best = static_cast<int>(s);
      best_converged = r.converged;
      best_graph = std::move(g);
    }
  }

  if (best < 0) {
    // No start produced a feasible design; report the least violated one.
    size_t least = 0;
    for (size_t s = 1; s < results.size(); ++s) {
      if (results[s].violation < results[least].violation) least = s;
    }
    if (scan.feasible) {
      solution.status = SolveStatus::kNotConverged;
      solution.message = "no start reached a feasible design";
    } else {
      // Neither the uniform scan nor any start found a feasible point. This
      // is strong evidence, not a proof.
      solution.status = SolveStatus::kInfeasible;
      solution.binding_constraint = scan.binding;
      solution.message = scan.message + "; no start found a feasible design";
    }
    solution.selected_start = static_cast<int>(least);
    solution.graph = WeightedGraph::uniform(problem.mask, scan.scale);
    solution.epsilons = problem.eps_max;
    const Eigen::VectorXd w = Eigen::VectorXd::Constant(n_edges, scan.scale);
    solution.residuals = constraint_values(problem, w, solution.epsilons);
    solution.objective_value = objective(w, solution.epsilons, problem.vartheta);
    solution.iterations = results[least].iterations;
    solution.stationarity = results[least].stationarity;
    return solution;
  }

  const StartResult& r = results[static_cast<size_t>(best)];
  solution.graph = std::move(best_graph);
  solution.epsilons = r.epsilons;
  const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(
      solution.graph.mask_weights().data(), n_edges);
  solution.residuals = constraint_values(problem, w, solution.epsilons);
  solution.objective_value = objective(w, solution.epsilons, problem.vartheta);
  solution.converged = r.converged;
  solution.status =
      r.converged ? SolveStatus::kConverged : SolveStatus::kNotConverged;
  solution.iterations = r.iterations;
  solution.stationarity = r.stationarity;
  solution.selected_start = best;
  solution.accepted_objectives = r.accepted;
  solution.message = r.converged ? "converged" : "iteration budget exhausted";
  return solution;
}

ValidationReport validate_solution(const CodesignProblem& problem,
                                   const CodesignSolution& solution,
                                   double tol_feas) {
  ValidationReport report;
  const int n = problem.n_agents();
  auto violation = [&](const std::string& what) {
    report.violations.push_back(what);
  };
  if (solution.graph.mask() != problem.mask) {
    violation("solution graph is not defined on the problem mask");
    return report;
  }
  if (solution.epsilons.size() != n) {
    violation("solution has the wrong number of epsilons");
    return report;
  }
  const auto& mw = solution.graph.mask_weights();
  const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(
      mw.data(), static_cast<Eigen::Index>(mw.size()));
  for (int i = 0; i < n; ++i) {
    if (!(solution.epsilons(i) > 0.0)) {
      violation("epsilon of agent " + std::to_string(i + 1) + " is not positive");
    }
  }
  if (!report.violations.empty()) return report;

  report.constraints = constraint_values(problem, w, solution.epsilons);
  const ConstraintValues& c = report.constraints;
  if (c.g_err > tol_feas) violation("error bound exceeds e_R by " + fmt(c.g_err));
  if (c.g_lambda > tol_feas) {
    violation("lambda2 below lambda2_min by " + fmt(c.g_lambda));
  }
  for (int i = 0; i < n; ++i) {
    if (c.g_eps(i) > tol_feas) {
      violation("epsilon of agent " + std::to_string(i + 1) +
                " exceeds eps_max by " + fmt(c.g_eps(i)));
    }
  }
  report.objective_recomputed = objective(w, solution.epsilons, problem.vartheta);
  if (std::abs(report.objective_recomputed - solution.objective_value) >
      1e-9 * std::max(1.0, std::abs(report.objective_recomputed))) {
    violation("reported objective does not match the design point");
  }

  if (component_count(solution.graph) == 1) {
    NetworkScenario scenario;
    scenario.graph = solution.graph;
    scenario.formation =
        FormationSpec::consensus(problem.mask, problem.dimension);
    scenario.gamma = problem.gamma;
    scenario.dimension = problem.dimension;
    scenario.noise = NoiseModel(sigmas_for(problem, solution.epsilons),
                                problem.process_sigmas);
    scenario.step_rule = StepRule::kSpectral;
    try {
      report.e_ss_exact = steady_state(scenario).e_ss_exact;
      if (report.e_ss_exact > problem.e_r + tol_feas) {
        violation("exact steady-state error " + fmt(report.e_ss_exact) +
                  " exceeds e_R");
      }
    } catch (const Error& e) {
      violation(std::string("steady-state evaluation failed: ") + e.what());
    }
  } else {
    violation("solution graph is disconnected");
  }
  report.feasible = report.violations.empty();
  return report;
}

}  // namespace privform
