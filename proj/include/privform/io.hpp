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

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "privform/analysis.hpp"
#include "privform/codesign.hpp"
#include "privform/graph.hpp"
#include "privform/simulation.hpp"

namespace privform {

using Json = nlohmann::json;

// Shortest decimal string that reads back to the same double.
std::string format_double(double value);

std::string read_text_file(const std::filesystem::path& path);
// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents);
Json read_json_file(const std::filesystem::path& path);
// Pretty-printed with a trailing newline.
std::string dump_json(const Json& value);

// Graph files: {"n": N, "edges": [{"i": 1, "j": 2, "w": 0.5}, ...]}, one-based.
// An edge without "w" is a mask-only edge.
struct GraphFile {
  TopologyMask mask;
  std::vector<double> weights;  // indexed like mask.edges(); 0 when absent
  bool has_weights = false;     // at least one edge carried "w"
};

GraphFile parse_graph_json(const Json& value);
GraphFile read_graph_file(const std::filesystem::path& path);
// Every mask edge with its weight (zero for pruned edges), sorted.
Json graph_to_json(const WeightedGraph& g);

Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& value);
Json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const Json& value);

Json to_json(const CovarianceReport& report);
Json to_json(const CodesignProblem& problem);
Json to_json(const SolverOptions& options);
Json to_json(const ConstraintValues& values);
Json to_json(const CodesignSolution& solution);
Json to_json(const ValidationReport& report);
Json to_json(const TrialSummary& summary);

// The design point stored in a solution file.
struct SolutionFile {
  WeightedGraph graph;
  Eigen::VectorXd epsilons;
  double objective_value = 0.0;
  std::string status;
};
SolutionFile parse_solution_json(const Json& value);

// Columns k,agent,dim,x,xbar,e with one-based agent and dim, every `stride`
// steps.
std::string trajectory_csv(const SimulationResult& result, int stride = 1);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvTable parse_csv(const std::string& text);

// Undirected Graphviz graph; edges with positive weight only, penwidth
// proportional to w, node width growing with epsilon (smaller node = more
// private). Nodes and edges in index order.
std::string dot_string(const WeightedGraph& g, const Eigen::VectorXd& epsilons);
void export_dot(const WeightedGraph& g, const Eigen::VectorXd& epsilons,
                const std::filesystem::path& path);
// Reads back what dot_string writes.
std::pair<WeightedGraph, Eigen::VectorXd> parse_dot(const std::string& text);

}  // namespace privform
