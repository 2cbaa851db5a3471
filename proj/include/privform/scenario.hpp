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

#include "privform/formation.hpp"
#include "privform/graph.hpp"
#include "privform/privacy.hpp"

namespace privform {

// Everything needed to analyze or simulate one private formation network.
struct NetworkScenario {
  WeightedGraph graph;
  FormationSpec formation;
  double gamma = 0.0;
  NoiseModel noise;
  int dimension = 1;
  StepRule step_rule = StepRule::kDegreeBound;

  int n_agents() const { return graph.n_agents(); }

  // Consistent N and d across fields, gamma > 0, and the step rule.
  void validate() const;
};

}  // namespace privform
