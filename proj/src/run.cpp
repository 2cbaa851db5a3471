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

#include "privform/run.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "privform/analysis.hpp"
#include "privform/formation.hpp"
#include "privform/privacy.hpp"
#include "privform/simulation.hpp"

namespace privform {

namespace fs = std::filesystem;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kConfig:
      return kExitConfig;
    case ErrorKind::kInfeasible:
      return kExitInfeasible;
    case ErrorKind::kDisconnected:
    case ErrorKind::kUnstableStep:
      return kExitUnstable;
    case ErrorKind::kNonConvergence:
      return kExitNonConvergence;
    case ErrorKind::kIo:
      return kExitFailure;
  }
  return kExitFailure;
}

namespace {

const std::set<std::string> kSweepAxes = {"e_R", "eps_max_uniform",
                                          "lambda2_min", "vartheta"};

void check_keys(const Json& object, const std::string& where,
                const std::set<std::string>& allowed) {
  if (!object.is_object()) fail(ErrorKind::kConfig, where + " must be an object");
  for (const auto& [key, value] : object.items()) {
    if (!allowed.count(key)) {
      fail(ErrorKind::kConfig, "unknown key '" + key + "' in " + where);
    }
  }
}

double number(const Json& object, const std::string& key,
              const std::string& where) {
  if (!object.contains(key)) {
    fail(ErrorKind::kConfig, where + " is missing '" + key + "'");
  }
  if (!object[key].is_number()) {
    fail(ErrorKind::kConfig, where + "." + key + " must be a number");
  }
  return object[key].get<double>();
}

template <typename T>
T integer_or(const Json& object, const std::string& key, T fallback) {
  if (!object.contains(key)) return fallback;
  if (!object[key].is_number_integer()) {
    fail(ErrorKind::kConfig, "'" + key + "' must be an integer");
  }
  return object[key].get<T>();
}

// A scalar broadcast to every agent, or one entry per agent.
Eigen::VectorXd per_agent(const Json& value, int n, const std::string& what) {
  if (value.is_number()) return Eigen::VectorXd::Constant(n, value.get<double>());
  if (value.is_array()) {
    const Eigen::VectorXd v = vector_from_json(value);
    if (v.size() != n) {
      fail(ErrorKind::kConfig, what + " needs " + std::to_string(n) +
                                   " entries, got " + std::to_string(v.size()));
    }
    return v;
  }
  fail(ErrorKind::kConfig, what + " must be a number or an array");
}

GraphFile load_graph(const Json& config, const fs::path& base_dir) {
  if (!config.contains("graph")) fail(ErrorKind::kConfig, "config is missing 'graph'");
  const Json& g = config["graph"];
  if (g.is_string()) {
    fs::path path = g.get<std::string>();
    if (path.is_relative()) path = base_dir / path;
    return read_graph_file(path);
  }
  return parse_graph_json(g);
}

double gamma_from(const Json& section, const Json& config, int n) {
  for (const Json* s : {&section, &config}) {
    if (s->contains("gamma")) return number(*s, "gamma", "config");
    if (s->contains("gamma_rule")) {
      const std::string rule = (*s)["gamma_rule"].get<std::string>();
      if (rule == "inverse_2n") return 1.0 / (2.0 * n);
      fail(ErrorKind::kConfig, "unknown gamma_rule '" + rule + "'");
    }
  }
  fail(ErrorKind::kConfig, "config needs 'gamma' or 'gamma_rule'");
}

const std::set<std::string> kTopKeys = {
    "description", "graph", "unit_weights", "gamma", "gamma_rule", "step_rule",
    "dimension", "formation", "privacy", "noise", "simulation", "codesign",
    "sweep", "seed"};

}  // namespace

NetworkScenario scenario_from_config(const Json& config, const fs::path& base_dir) {
  check_keys(config, "config", kTopKeys);
  const GraphFile gf = load_graph(config, base_dir);
  const int n = gf.mask.n_agents();
  NetworkScenario s;
  if (gf.has_weights) {
    s.graph = WeightedGraph(gf.mask, gf.weights);
  } else if (config.value("unit_weights", false)) {
    s.graph = WeightedGraph::uniform(gf.mask, 1.0);
  } else {
    fail(ErrorKind::kConfig,
         "graph has no edge weights; set \"unit_weights\": true to use w = 1");
  }
  s.gamma = gamma_from(Json::object(), config, n);
  const std::string rule = config.value("step_rule", std::string("degree"));
  if (rule == "degree") {
    s.step_rule = StepRule::kDegreeBound;
  } else if (rule == "spectral") {
    s.step_rule = StepRule::kSpectral;
  } else {
    fail(ErrorKind::kConfig, "step_rule must be 'degree' or 'spectral'");
  }

  int dimension = integer_or<int>(config, "dimension", 1);
  if (config.contains("formation")) {
    const Json& f = config["formation"];
    check_keys(f, "formation", {"points", "offsets"});
    if (f.contains("points")) {
      const Eigen::MatrixXd points = matrix_from_json(f["points"]);
      s.formation = FormationSpec::from_reference_points(gf.mask, points);
    } else if (f.contains("offsets")) {
      std::map<std::pair<int, int>, Eigen::VectorXd> offsets;
      for (const Json& o : f["offsets"]) {
        check_keys(o, "formation.offsets[]", {"i", "j", "offset"});
        const int i = o.at("i").get<int>() - 1;
        const int j = o.at("j").get<int>() - 1;
        offsets[{i, j}] = vector_from_json(o.at("offset"));
      }
      s.formation = FormationSpec::from_offsets(gf.mask, dimension, offsets);
    } else {
      fail(ErrorKind::kConfig, "formation needs 'points' or 'offsets'");
    }
    dimension = s.formation.dimension();
  } else {
    s.formation = FormationSpec::consensus(gf.mask, dimension);
  }
  s.dimension = dimension;

  Eigen::VectorXd process = Eigen::VectorXd::Zero(n);
  std::optional<Eigen::VectorXd> sigmas;
  if (config.contains("noise")) {
    const Json& noise = config["noise"];
    check_keys(noise, "noise", {"privacy_sigma", "process_sigma"});
    if (noise.contains("process_sigma")) {
      process = per_agent(noise["process_sigma"], n, "noise.process_sigma");
    }
    if (noise.contains("privacy_sigma")) {
      sigmas = per_agent(noise["privacy_sigma"], n, "noise.privacy_sigma");
    }
  }
  if (config.contains("privacy")) {
    const Json& p = config["privacy"];
    check_keys(p, "privacy", {"epsilon", "delta", "b"});
    const Eigen::VectorXd eps = per_agent(p.at("epsilon"), n, "privacy.epsilon");
    const Eigen::VectorXd delta = per_agent(p.at("delta"), n, "privacy.delta");
    const Eigen::VectorXd b = per_agent(p.at("b"), n, "privacy.b");
    std::vector<PrivacySpec> specs;
    for (int i = 0; i < n; ++i) specs.emplace_back(eps(i), delta(i), b(i));
    s.noise = sigmas ? NoiseModel::with_specs(specs, *sigmas, process)
                     : NoiseModel::from_specs(specs, process);
  } else if (sigmas) {
    s.noise = NoiseModel(*sigmas, process);
  } else {
    fail(ErrorKind::kConfig, "config needs 'privacy' or 'noise.privacy_sigma'");
  }
  s.validate();
  return s;
}

SolverOptions solver_options_from_json(const Json& v) {
  SolverOptions o;
  check_keys(v, "codesign.solver",
             {"max_outer", "max_inner", "feasibility_target", "stat_tol",
              "tol_feas", "multistarts", "eps_floor", "prune_threshold",
              "penalty_initial", "penalty_growth", "penalty_max",
              "enforce_step_bound", "start_perturbation"});
  o.max_outer = integer_or<int>(v, "max_outer", o.max_outer);
  o.max_inner = integer_or<int>(v, "max_inner", o.max_inner);
  o.multistarts = integer_or<int>(v, "multistarts", o.multistarts);
  auto real = [&](const char* key, double& field) {
    if (v.contains(key)) field = number(v, key, "codesign.solver");
  };
  real("feasibility_target", o.feasibility_target);
  real("stat_tol", o.stat_tol);
  real("tol_feas", o.tol_feas);
  real("eps_floor", o.eps_floor);
  real("prune_threshold", o.prune_threshold);
  real("penalty_initial", o.penalty_initial);
  real("penalty_growth", o.penalty_growth);
  real("penalty_max", o.penalty_max);
  real("start_perturbation", o.start_perturbation);
  if (v.contains("enforce_step_bound")) {
    o.enforce_step_bound = v["enforce_step_bound"].get<bool>();
  }
  if (o.max_outer < 1 || o.max_inner < 1 || o.multistarts < 1) {
    fail(ErrorKind::kConfig, "solver iteration counts must be positive");
  }
  if (!(o.eps_floor > 0.0) || !(o.tol_feas > 0.0) || !(o.stat_tol > 0.0) ||
      !(o.penalty_initial > 0.0) || !(o.penalty_growth > 1.0) ||
      !(o.start_perturbation >= 0.0 && o.start_perturbation < 1.0)) {
    fail(ErrorKind::kConfig, "solver tolerances are out of range");
  }
  return o;
}

CodesignProblem problem_from_config(const Json& config, const fs::path& base_dir) {
  check_keys(config, "config", kTopKeys);
  if (!config.contains("codesign")) {
    fail(ErrorKind::kConfig, "config is missing the 'codesign' section");
  }
  const Json& c = config["codesign"];
  check_keys(c, "codesign",
             {"e_R", "lambda2_min", "vartheta", "eps_max", "delta", "b",
              "process_sigma", "gamma", "gamma_rule", "solver"});
  const GraphFile gf = load_graph(config, base_dir);
  const int n = gf.mask.n_agents();
  CodesignProblem p;
  p.mask = gf.mask;
  p.e_r = number(c, "e_R", "codesign");
  p.lambda2_min = number(c, "lambda2_min", "codesign");
  p.vartheta = number(c, "vartheta", "codesign");
  for (const char* key : {"eps_max", "delta", "b"}) {
    if (!c.contains(key)) {
      fail(ErrorKind::kConfig, std::string("codesign is missing '") + key + "'");
    }
  }
  p.eps_max = per_agent(c["eps_max"], n, "codesign.eps_max");
  p.deltas = per_agent(c["delta"], n, "codesign.delta");
  p.adjacency_bounds = per_agent(c["b"], n, "codesign.b");
  p.process_sigmas = c.contains("process_sigma")
                         ? per_agent(c["process_sigma"], n, "codesign.process_sigma")
                         : Eigen::VectorXd::Zero(n);
  p.gamma = gamma_from(c, config, n);
  p.dimension = integer_or<int>(config, "dimension", 1);
  p.validate();
  return p;
}

void apply_sweep_value(CodesignProblem& problem, const std::string& axis,
                       double value) {
  if (axis == "e_R") {
    problem.e_r = value;
  } else if (axis == "eps_max_uniform") {
    problem.eps_max.setConstant(value);
  } else if (axis == "lambda2_min") {
    problem.lambda2_min = value;
  } else if (axis == "vartheta") {
    problem.vartheta = value;
  } else {
    fail(ErrorKind::kConfig, "unknown sweep axis '" + axis + "'");
  }
  problem.validate();
}

RunConfig load_run_config(Mode mode, const fs::path& config_path,
                          const fs::path& out_dir,
                          std::optional<std::uint64_t> seed,
                          std::optional<int> trials,
                          std::optional<std::int64_t> horizon) {
  RunConfig rc;
  rc.mode = mode;
  rc.config_path = config_path;
  rc.document = read_json_file(config_path);
  check_keys(rc.document, "config", kTopKeys);
  rc.out_dir = out_dir;
  if (seed) {
    rc.seed = *seed;
  } else if (rc.document.contains("seed")) {
    if (!rc.document["seed"].is_number_unsigned()) {
      fail(ErrorKind::kConfig, "seed must be a nonnegative integer");
    }
    rc.seed = rc.document["seed"].get<std::uint64_t>();
  }
  rc.trials = trials;
  rc.horizon = horizon;
  if (trials && *trials < 1) fail(ErrorKind::kConfig, "--trials must be positive");
  if (horizon && *horizon < 1) fail(ErrorKind::kConfig, "--horizon must be positive");
  if (rc.document.contains("sweep")) {
    const Json& s = rc.document["sweep"];
    check_keys(s, "sweep", {"axis", "values"});
    SweepAxis axis;
    if (!s.contains("axis") || !s["axis"].is_string()) {
      fail(ErrorKind::kConfig, "sweep.axis must be a string");
    }
    axis.name = s["axis"].get<std::string>();
    if (!kSweepAxes.count(axis.name)) {
      fail(ErrorKind::kConfig, "unknown sweep axis '" + axis.name +
                                   "' (expected e_R, eps_max_uniform, "
                                   "lambda2_min or vartheta)");
    }
    const Eigen::VectorXd values = vector_from_json(s.value("values", Json()));
    if (values.size() == 0) fail(ErrorKind::kConfig, "sweep.values is empty");
    axis.values.assign(values.data(), values.data() + values.size());
    rc.sweep = std::move(axis);
  }
  if (mode == Mode::kSweep && !rc.sweep) {
    fail(ErrorKind::kConfig, "sweep mode needs a 'sweep' section");
  }
  return rc;
}

namespace {

fs::path base_dir_of(const RunConfig& rc) {
  return rc.config_path.has_parent_path() ? rc.config_path.parent_path()
                                          : fs::path(".");
}

RunOutcome run_analyze(const RunConfig& rc) {
  const NetworkScenario s = scenario_from_config(rc.document, base_dir_of(rc));
  const CovarianceReport report = steady_state(s);
  Json out = to_json(report);
  out["n"] = s.n_agents();
  out["gamma"] = s.gamma;
  out["dimension"] = s.dimension;
  out["graph"] = graph_to_json(s.graph);
  out["privacy_sigma"] = vector_to_json(s.noise.privacy_sigmas());
  out["process_sigma"] = vector_to_json(s.noise.process_sigmas());
  const fs::path path = rc.out_dir / "analysis.json";
  write_file_atomic(path, dump_json(out));
  return {kExitOk, "e_ss_exact=" + format_double(report.e_ss_exact) +
                       " bound=" + format_double(report.e_ss_bound),
          {path}};
}

RunOutcome run_simulate(const RunConfig& rc) {
  const NetworkScenario s = scenario_from_config(rc.document, base_dir_of(rc));
  const Json sim = rc.document.value("simulation", Json::object());
  check_keys(sim, "simulation",
             {"horizon", "burn_in", "trials", "initial_spread",
              "trajectory_stride", "write_trajectory"});
  SimulationOptions options;
  options.horizon = rc.horizon.value_or(
      integer_or<std::int64_t>(sim, "horizon", options.horizon));
  if (sim.contains("burn_in")) {
    options.burn_in = integer_or<std::int64_t>(sim, "burn_in", 0);
  }
  if (sim.contains("initial_spread")) {
    options.initial_spread = number(sim, "initial_spread", "simulation");
  }
  const int trials = rc.trials.value_or(integer_or<int>(sim, "trials", 1));
  const int stride = integer_or<int>(sim, "trajectory_stride", 1);
  const bool write_trajectory = sim.value("write_trajectory", true);
  if (trials < 1 || stride < 1) {
    fail(ErrorKind::kConfig, "trials and trajectory_stride must be positive");
  }

  const CovarianceReport report = steady_state(s);
  const TrialSummary summary = simulate_trials(s, options, rc.seed, trials);
  RunOutcome outcome;
  std::int64_t burn_in = 0;
  if (write_trajectory) {
    SimulationOptions recorded = options;
    recorded.record_trajectory = true;
    const SimulationResult first = simulate(s, recorded, split_seed(rc.seed, 0));
    burn_in = first.burn_in;
    const fs::path path = rc.out_dir / "trajectory.csv";
    write_file_atomic(path, trajectory_csv(first, stride));
    outcome.artifacts.push_back(path);
  } else {
    burn_in = options.burn_in.value_or(default_burn_in(s.graph, s.gamma));
  }
  const double rel = std::abs(summary.mean_mse - report.e_ss_exact) /
                     report.e_ss_exact;
  Json cmp = {{"e_ss_exact", report.e_ss_exact},
              {"e_ss_bound", report.e_ss_bound},
              {"empirical_mse", summary.mean_mse},
              {"standard_error", summary.standard_error},
              {"relative_error", rel},
              {"trials", trials},
              {"horizon", options.horizon},
              {"burn_in", burn_in},
              {"seed", rc.seed},
              {"per_trial_mse", summary.per_trial_mse}};
  const fs::path path = rc.out_dir / "comparison.json";
  write_file_atomic(path, dump_json(cmp));
  outcome.artifacts.push_back(path);
  outcome.message = "empirical=" + format_double(summary.mean_mse) +
                    " exact=" + format_double(report.e_ss_exact) +
                    " relative_error=" + format_double(rel);
  return outcome;
}

struct DesignRun {
  CodesignSolution solution;
  ValidationReport validation;
};

DesignRun design(const CodesignProblem& p, const SolverOptions& o,
                 std::uint64_t seed) {
  DesignRun r;
  r.solution = solve(p, o, seed);
  if (r.solution.status != SolveStatus::kInfeasible) {
    r.validation = validate_solution(p, r.solution, o.tol_feas);
  }
  return r;
}

Json solution_document(const DesignRun& r, const SolverOptions& o,
                       std::uint64_t seed) {
  Json doc = to_json(r.solution);
  doc["seed"] = seed;
  doc["solver"] = to_json(o);
  if (r.solution.status != SolveStatus::kInfeasible) {
    doc["validation"] = to_json(r.validation);
  }
  return doc;
}

int design_exit_code(const DesignRun& r) {
  switch (r.solution.status) {
    case SolveStatus::kInfeasible:
      return kExitInfeasible;
    case SolveStatus::kNotConverged:
      return kExitNonConvergence;
    case SolveStatus::kConverged:
      return r.validation.feasible ? kExitOk : kExitNonConvergence;
  }
  return kExitFailure;
}

SolverOptions options_from(const Json& doc) {
  const Json& c = doc["codesign"];
  return c.contains("solver") ? solver_options_from_json(c["solver"])
                              : SolverOptions{};
}

RunOutcome run_codesign(const RunConfig& rc) {
  const CodesignProblem p = problem_from_config(rc.document, base_dir_of(rc));
  const SolverOptions o = options_from(rc.document);
  const DesignRun r = design(p, o, rc.seed);
  RunOutcome outcome;
  const fs::path problem_path = rc.out_dir / "problem.json";
  write_file_atomic(problem_path, dump_json(to_json(p)));
  const fs::path solution_path = rc.out_dir / "solution.json";
  write_file_atomic(solution_path, dump_json(solution_document(r, o, rc.seed)));
  outcome.artifacts = {problem_path, solution_path};
  if (r.solution.status != SolveStatus::kInfeasible) {
    const fs::path dot_path = rc.out_dir / "solution.dot";
    export_dot(r.solution.graph, r.solution.epsilons, dot_path);
    outcome.artifacts.push_back(dot_path);
  }
  outcome.exit_code = design_exit_code(r);
  if (r.solution.status == SolveStatus::kInfeasible) {
    outcome.message = "infeasible (" + r.solution.binding_constraint +
                      "): " + r.solution.message;
  } else {
    outcome.message = to_string(r.solution.status) +
                      " objective=" + format_double(r.solution.objective_value) +
                      " e_ss_exact=" + format_double(r.validation.e_ss_exact);
    if (!r.validation.feasible && !r.validation.violations.empty()) {
      outcome.message += " validation: " + r.validation.violations.front();
    }
  }
  return outcome;
}

std::string index_label(size_t k, size_t count) {
  std::string s = std::to_string(k);
  const size_t width = std::to_string(count > 0 ? count - 1 : 0).size();
  return std::string(width - std::min(width, s.size()), '0') + s;
}

RunOutcome run_sweep(const RunConfig& rc) {
  const CodesignProblem base = problem_from_config(rc.document, base_dir_of(rc));
  const SolverOptions o = options_from(rc.document);
  const SweepAxis& axis = *rc.sweep;
  RunOutcome outcome;
  std::string csv =
      "axis,value,status,agent,epsilon,eps_max,degree,lambda2,bound,objective,"
      "trace_l,e_ss_exact\n";
  bool any_infeasible = false;
  bool any_unconverged = false;
  for (size_t k = 0; k < axis.values.size(); ++k) {
    CodesignProblem p = base;
    apply_sweep_value(p, axis.name, axis.values[k]);
    const DesignRun r = design(p, o, rc.seed);
    const std::string stem = "sweep_" + index_label(k, axis.values.size());
    const fs::path json_path = rc.out_dir / (stem + ".json");
    Json doc = solution_document(r, o, rc.seed);
    doc["axis"] = axis.name;
    doc["value"] = axis.values[k];
    write_file_atomic(json_path, dump_json(doc));
    outcome.artifacts.push_back(json_path);
    const int code = design_exit_code(r);
    any_infeasible |= code == kExitInfeasible;
    any_unconverged |= code == kExitNonConvergence;
    if (r.solution.status == SolveStatus::kInfeasible) {
      csv += axis.name + ',' + format_double(axis.values[k]) + ",infeasible,,,,,,,,,\n";
      continue;
    }
    const fs::path dot_path = rc.out_dir / (stem + ".dot");
    export_dot(r.solution.graph, r.solution.epsilons, dot_path);
    outcome.artifacts.push_back(dot_path);
    const AdjacencyDegrees ad = adjacency_and_degrees(r.solution.graph);
    for (int i = 0; i < p.n_agents(); ++i) {
      csv += axis.name + ',' + format_double(axis.values[k]) + ',' +
             to_string(r.solution.status) + ',' + std::to_string(i + 1) + ',' +
             format_double(r.solution.epsilons(i)) + ',' +
             format_double(p.eps_max(i)) + ',' + format_double(ad.degrees(i)) +
             ',' + format_double(r.solution.residuals.lambda2) + ',' +
             format_double(r.solution.residuals.bound) + ',' +
             format_double(r.solution.objective_value) + ',' +
             format_double(2.0 * r.solution.graph.total_weight()) + ',' +
             format_double(r.validation.e_ss_exact) + '\n';
    }
  }
  const fs::path csv_path = rc.out_dir / "sweep.csv";
  write_file_atomic(csv_path, csv);
  outcome.artifacts.push_back(csv_path);
  outcome.exit_code = any_infeasible    ? kExitInfeasible
                      : any_unconverged ? kExitNonConvergence
                                        : kExitOk;
  outcome.message = "swept " + axis.name + " over " +
                    std::to_string(axis.values.size()) + " values";
  if (any_infeasible) outcome.message += "; some values are infeasible";
  if (any_unconverged) outcome.message += "; some values did not converge";
  return outcome;
}

}  // namespace

RunOutcome run(const RunConfig& rc) {
  try {
    std::error_code ec;
    fs::create_directories(rc.out_dir, ec);
    if (ec) fail(ErrorKind::kIo, "cannot create " + rc.out_dir.string());
    switch (rc.mode) {
      case Mode::kAnalyze:
        return run_analyze(rc);
      case Mode::kSimulate:
        return run_simulate(rc);
      case Mode::kCodesign:
        return run_codesign(rc);
      case Mode::kSweep:
        return run_sweep(rc);
    }
    fail(ErrorKind::kConfig, "unknown mode");
  } catch (const Error& e) {
    return {exit_code_for(e.kind()), e.what(), {}};
  } catch (const Json::exception& e) {
    return {kExitConfig, std::string("config: ") + e.what(), {}};
  }
}

}  // namespace privform
