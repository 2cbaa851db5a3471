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

#include "privform/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <regex>
#include <sstream>
#include <system_error>

#include "privform/error.hpp"

namespace privform {

namespace fs = std::filesystem;

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::kIo, "cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) fail(ErrorKind::kIo, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorKind::kIo, "cannot move output into place at " + path.string());
  }
}

Json read_json_file(const fs::path& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(ErrorKind::kConfig, path.string() + ": " + e.what());
  }
}

std::string dump_json(const Json& value) { return value.dump(2) + "\n"; }

namespace {

// Drawing attributes rounded to 1e-9 so they print without ulp noise.
double drawing_size(double v) { return std::round(v * 1e9) / 1e9; }

int json_index(const Json& v, const char* what) {
  if (!v.is_number_integer()) {
    fail(ErrorKind::kConfig, std::string("graph edge field '") + what +
                                 "' must be an integer");
  }
  return v.get<int>();
}

}  // namespace

GraphFile parse_graph_json(const Json& value) {
  if (!value.is_object() || !value.contains("n") || !value.contains("edges")) {
    fail(ErrorKind::kConfig, "graph JSON needs 'n' and 'edges'");
  }
  if (!value["n"].is_number_integer() || value["n"].get<int>() < 1) {
    fail(ErrorKind::kConfig, "graph 'n' must be a positive integer");
  }
  const int n = value["n"].get<int>();
  if (!value["edges"].is_array()) {
    fail(ErrorKind::kConfig, "graph 'edges' must be an array");
  }
  std::vector<Edge> edges;
  std::vector<std::pair<Edge, std::optional<double>>> raw;
  for (const Json& e : value["edges"]) {
    if (!e.is_object() || !e.contains("i") || !e.contains("j")) {
      fail(ErrorKind::kConfig, "every edge needs 'i' and 'j'");
    }
    const int i = json_index(e["i"], "i");
    const int j = json_index(e["j"], "j");
    if (i < 1 || j < 1 || i > n || j > n) {
      fail(ErrorKind::kConfig, "edge {" + std::to_string(i) + "," +
                                   std::to_string(j) + "} is out of range");
    }
    if (i == j) fail(ErrorKind::kConfig, "self-loop at node " + std::to_string(i));
    Edge edge{std::min(i, j) - 1, std::max(i, j) - 1};
    std::optional<double> w;
    if (e.contains("w")) {
      if (!e["w"].is_number()) fail(ErrorKind::kConfig, "edge weight must be a number");
      w = e["w"].get<double>();
      if (!std::isfinite(*w) || *w < 0.0) {
        fail(ErrorKind::kConfig, "edge weights must be finite and nonnegative");
      }
    }
    edges.push_back(edge);
    raw.emplace_back(edge, w);
  }
  GraphFile out;
  out.mask = TopologyMask(n, edges);
  out.weights.assign(static_cast<size_t>(out.mask.edge_count()), 0.0);
  for (const auto& [edge, w] : raw) {
    if (!w) continue;
    out.has_weights = true;
    const int k = *out.mask.index_of(edge.i, edge.j);
    out.weights[static_cast<size_t>(k)] = *w;
  }
  return out;
}

GraphFile read_graph_file(const fs::path& path) {
  return parse_graph_json(read_json_file(path));
}

Json graph_to_json(const WeightedGraph& g) {
  Json edges = Json::array();
  const auto& mask_edges = g.mask().edges();
  for (size_t k = 0; k < mask_edges.size(); ++k) {
    edges.push_back({{"i", mask_edges[k].i + 1},
                     {"j", mask_edges[k].j + 1},
                     {"w", g.mask_weights()[k]}});
  }
  return Json{{"n", g.n_agents()}, {"edges", std::move(edges)}};
}

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const Json& value) {
  if (!value.is_array()) fail(ErrorKind::kConfig, "matrix must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(value.size());
  const Eigen::Index cols =
      rows == 0 ? 0 : static_cast<Eigen::Index>(value[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Json& row = value[static_cast<size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      fail(ErrorKind::kConfig, "matrix rows must have equal length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!row[static_cast<size_t>(c)].is_number()) {
        fail(ErrorKind::kConfig, "matrix entries must be numbers");
      }
      m(r, c) = row[static_cast<size_t>(c)].get<double>();
    }
  }
  return m;
}

Json vector_to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const Json& value) {
  if (!value.is_array()) fail(ErrorKind::kConfig, "expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(value.size()));
  for (size_t i = 0; i < value.size(); ++i) {
    if (!value[i].is_number()) fail(ErrorKind::kConfig, "expected an array of numbers");
    v(static_cast<Eigen::Index>(i)) = value[i].get<double>();
  }
  return v;
}

Json to_json(const CovarianceReport& r) {
  return Json{{"e_ss_exact", r.e_ss_exact},
              {"e_ss_bound", r.e_ss_bound},
              {"e_ss_bound_fiedler", r.e_ss_bound_fiedler},
              {"e_ss_bound_printed", r.e_ss_bound_printed},
              {"trace_q", r.trace_q},
              {"sigma_max_m", r.sigma_max_m},
              {"lambda2", r.lambda2},
              {"lambda_max", r.lambda_max},
              {"fiedler_dominant", r.fiedler_dominant},
              {"lyapunov_residual", r.lyapunov_residual},
              {"lyapunov_method", r.lyapunov_method},
              {"sigma_z", matrix_to_json(r.sigma_z)},
              {"m", matrix_to_json(r.m)},
              {"sigma_inf", matrix_to_json(r.sigma_inf)}};
}

Json to_json(const CodesignProblem& p) {
  std::vector<Json> edges;
  for (const Edge& e : p.mask.edges()) edges.push_back({{"i", e.i + 1}, {"j", e.j + 1}});
  return Json{{"mask", {{"n", p.n_agents()}, {"edges", edges}}},
              {"e_R", p.e_r},
              {"lambda2_min", p.lambda2_min},
              {"vartheta", p.vartheta},
              {"gamma", p.gamma},
              {"dimension", p.dimension},
              {"eps_max", vector_to_json(p.eps_max)},
              {"delta", vector_to_json(p.deltas)},
              {"b", vector_to_json(p.adjacency_bounds)},
              {"process_sigma", vector_to_json(p.process_sigmas)}};
}

Json to_json(const SolverOptions& o) {
  return Json{{"max_outer", o.max_outer},
              {"max_inner", o.max_inner},
              {"feasibility_target", o.feasibility_target},
              {"stat_tol", o.stat_tol},
              {"tol_feas", o.tol_feas},
              {"multistarts", o.multistarts},
              {"eps_floor", o.eps_floor},
              {"prune_threshold", o.prune_threshold},
              {"penalty_initial", o.penalty_initial},
              {"penalty_growth", o.penalty_growth},
              {"penalty_max", o.penalty_max},
              {"enforce_step_bound", o.enforce_step_bound},
              {"start_perturbation", o.start_perturbation}};
}

Json to_json(const ConstraintValues& c) {
  return Json{{"g_err", c.g_err},
              {"g_lambda", c.g_lambda},
              {"g_eps", vector_to_json(c.g_eps)},
              {"bound", c.bound},
              {"lambda2", c.lambda2},
              {"lambda2_clamped", c.lambda2_clamped}};
}

Json to_json(const CodesignSolution& s) {
  return Json{{"status", to_string(s.status)},
              {"converged", s.converged},
              {"objective", s.objective_value},
              {"trace_l", 2.0 * s.graph.total_weight()},
              {"graph", graph_to_json(s.graph)},
              {"epsilons", vector_to_json(s.epsilons)},
              {"residuals", to_json(s.residuals)},
              {"iterations", s.iterations},
              {"stationarity", s.stationarity},
              {"selected_start", s.selected_start},
              {"binding_constraint", s.binding_constraint},
              {"message", s.message},
              {"accepted_objectives", s.accepted_objectives},
              {"log", s.log}};
}

Json to_json(const ValidationReport& r) {
  return Json{{"feasible", r.feasible},
              {"constraints", to_json(r.constraints)},
              {"e_ss_exact", r.e_ss_exact},
              {"objective_recomputed", r.objective_recomputed},
              {"violations", r.violations}};
}

Json to_json(const TrialSummary& s) {
  return Json{{"per_trial_mse", s.per_trial_mse},
              {"mean_mse", s.mean_mse},
              {"standard_error", s.standard_error}};
}

SolutionFile parse_solution_json(const Json& value) {
  if (!value.is_object() || !value.contains("graph") ||
      !value.contains("epsilons")) {
    fail(ErrorKind::kConfig, "solution JSON needs 'graph' and 'epsilons'");
  }
  const GraphFile gf = parse_graph_json(value["graph"]);
  SolutionFile out;
  out.graph = WeightedGraph(gf.mask, gf.weights);
  out.epsilons = vector_from_json(value["epsilons"]);
  if (out.epsilons.size() != gf.mask.n_agents()) {
    fail(ErrorKind::kConfig, "solution has the wrong number of epsilons");
  }
  out.objective_value = value.value("objective", 0.0);
  out.status = value.value("status", std::string());
  return out;
}

std::string trajectory_csv(const SimulationResult& result, int stride) {
  if (stride < 1) fail(ErrorKind::kInvalidArgument, "stride must be positive");
  if (result.trajectory.size() != result.error_trajectory.size()) {
    fail(ErrorKind::kInvalidArgument, "trajectory and error lengths differ");
  }
  std::string out = "k,agent,dim,x,xbar,e\n";
  for (size_t k = 0; k < result.trajectory.size(); k += static_cast<size_t>(stride)) {
    const NetworkState& s = result.trajectory[k];
    const Eigen::MatrixXd& e = result.error_trajectory[k];
    for (Eigen::Index i = 0; i < s.states.rows(); ++i) {
      for (Eigen::Index d = 0; d < s.states.cols(); ++d) {
        out += std::to_string(s.time_index);
        out += ',';
        out += std::to_string(i + 1);
        out += ',';
        out += std::to_string(d + 1);
        out += ',';
        out += format_double(s.states(i, d));
        out += ',';
        out += format_double(s.shifted_states(i, d));
        out += ',';
        out += format_double(e(i, d));
        out += '\n';
      }
    }
  }
  return out;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream fields(line);
    while (std::getline(fields, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (first) {
      table.header = std::move(cells);
      first = false;
    } else {
      if (cells.size() != table.header.size()) {
        fail(ErrorKind::kConfig, "CSV row width does not match the header");
      }
      table.rows.push_back(std::move(cells));
    }
  }
  return table;
}

std::string dot_string(const WeightedGraph& g, const Eigen::VectorXd& epsilons) {
  const int n = g.n_agents();
  if (epsilons.size() != n) {
    fail(ErrorKind::kInvalidArgument, "need one epsilon per node");
  }
  const double max_eps = epsilons.size() > 0 ? epsilons.maxCoeff() : 1.0;
  const auto& mw = g.mask_weights();
  const double max_w =
      mw.empty() ? 0.0 : *std::max_element(mw.begin(), mw.end());

  std::string out = "graph privform {\n";
  out += "  // mask:";
  for (const Edge& e : g.mask().edges()) {
    out += ' ' + std::to_string(e.i + 1) + '-' + std::to_string(e.j + 1);
  }
  out += "\n  node [shape=circle, fixedsize=true];\n";
  for (int i = 0; i < n; ++i) {
    const double size = drawing_size(
        max_eps > 0.0 ? 0.3 + 0.7 * epsilons(i) / max_eps : 0.3);
    out += "  " + std::to_string(i + 1) + " [epsilon=" +
           format_double(epsilons(i)) + ", width=" + format_double(size) +
           ", height=" + format_double(size) + "];\n";
  }
  const auto& edges = g.mask().edges();
  for (size_t k = 0; k < edges.size(); ++k) {
    if (!(mw[k] > 0.0)) continue;
    const double pen =
        drawing_size(max_w > 0.0 ? 0.5 + 4.5 * mw[k] / max_w : 1.0);
    out += "  " + std::to_string(edges[k].i + 1) + " -- " +
           std::to_string(edges[k].j + 1) + " [weight=" + format_double(mw[k]) +
           ", penwidth=" + format_double(pen) + "];\n";
  }
  out += "}\n";
  return out;
}

void export_dot(const WeightedGraph& g, const Eigen::VectorXd& epsilons,
                const fs::path& path) {
  write_file_atomic(path, dot_string(g, epsilons));
}

std::pair<WeightedGraph, Eigen::VectorXd> parse_dot(const std::string& text) {
  static const std::regex node_re(R"(^\s*(\d+)\s*\[epsilon=([^,\]]+))");
  static const std::regex edge_re(R"(^\s*(\d+)\s*--\s*(\d+)\s*\[weight=([^,\]]+))");
  static const std::regex pair_re(R"((\d+)-(\d+))");
  std::vector<std::pair<int, double>> nodes;
  std::vector<std::pair<Edge, double>> weighted;
  std::vector<Edge> mask_edges;
  std::istringstream in(text);
  std::string line;
  std::smatch m;
  while (std::getline(in, line)) {
    if (line.find("// mask:") != std::string::npos) {
      for (auto it = std::sregex_iterator(line.begin(), line.end(), pair_re);
           it != std::sregex_iterator(); ++it) {
        mask_edges.push_back({std::stoi((*it)[1]) - 1, std::stoi((*it)[2]) - 1});
      }
    } else if (std::regex_search(line, m, edge_re)) {
      weighted.push_back({{std::stoi(m[1]) - 1, std::stoi(m[2]) - 1},
                          std::stod(m[3])});
    } else if (std::regex_search(line, m, node_re)) {
      nodes.emplace_back(std::stoi(m[1]) - 1, std::stod(m[2]));
    }
  }
  const int n = static_cast<int>(nodes.size());
  Eigen::VectorXd eps(n);
  for (const auto& [i, e] : nodes) {
    if (i < 0 || i >= n) fail(ErrorKind::kConfig, "DOT node ids must be 1..N");
    eps(i) = e;
  }
  for (const auto& [e, w] : weighted) mask_edges.push_back(e);
  TopologyMask mask(n, mask_edges);
  std::vector<double> w(static_cast<size_t>(mask.edge_count()), 0.0);
  for (const auto& [e, value] : weighted) {
    w[static_cast<size_t>(*mask.index_of(e.i, e.j))] = value;
  }
  return {WeightedGraph(mask, std::move(w)), eps};
}

}  // namespace privform
