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

#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "privform/error.hpp"
#include "privform/privacy.hpp"
#include "privform/rng.hpp"

using namespace privform;

TEST_CASE("q function values") {
  CHECK(q_function(0.0) == 0.5);
  CHECK(q_function(40.0) < 1e-300);
  CHECK(q_function(1.6449) == doctest::Approx(0.05).epsilon(1e-4));
  for (double y : {-3.0, -0.7, 0.3, 1.2, 2.5, 4.0}) {
    CHECK(std::abs(q_function(y) - oracle::gaussian_tail(y)) < 1e-12);
  }
}

TEST_CASE("q inverse") {
  CHECK(q_inverse(0.5) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(std::abs(q_inverse(q_function(1.234)) - 1.234) < 1e-9);
  CHECK(std::abs(q_inverse(0.05) - 1.6448536269514722) < 1e-10);
  for (double p : {1e-12, 1e-6, 0.01, 0.05, 0.1, 0.3, 0.7, 0.99}) {
    CHECK(std::abs(q_function(q_inverse(p)) - p) <= 1e-10 * std::max(p, 1e-3));
  }
  CHECK_THROWS_AS(q_inverse(0.0), Error);
  CHECK_THROWS_AS(q_inverse(1.0), Error);
  CHECK_THROWS_AS(q_inverse(std::nan("")), Error);
}

TEST_CASE("q inverse against the bisection quantile") {
  for (double p : {0.01, 0.05, 0.1}) {
    CHECK(std::abs(q_inverse(p) - oracle::tail_quantile(p)) <= 1e-8);
  }
}

TEST_CASE("kappa") {
  const double k = oracle::tail_quantile(0.05);
  CHECK(std::abs(kappa(0.05, 1.0) - oracle::kappa(k, 1.0)) < 1e-8);
  CHECK(kappa(0.05, 1.0) == doctest::Approx(1.9071).epsilon(1e-4));
  CHECK(kappa(0.05, 0.1) > kappa(0.05, 0.5));
  CHECK(kappa(0.05, 0.5) > kappa(0.05, 1.0));
  for (double d : {0.001, 0.05, 0.2, 0.45}) {
    for (double e : {0.01, 0.3, 1.0, 7.0}) {
      CHECK(kappa(d, e) >= q_inverse(d) / (2.0 * e));
    }
  }
  CHECK_THROWS_AS(kappa(0.5, 1.0), Error);
  CHECK_THROWS_AS(kappa(0.05, 0.0), Error);
}

TEST_CASE("kappa derivative matches finite differences") {
  for (double e : {0.02, 0.3, 1.0, 4.0}) {
    const double h = 1e-6 * e;
    const double fd = (kappa(0.05, e + h) - kappa(0.05, e - h)) / (2.0 * h);
    CHECK(kappa_epsilon_derivative(0.05, e) == doctest::Approx(fd).epsilon(1e-6));
    CHECK(kappa_epsilon_derivative(0.05, e) < 0.0);
  }
}

TEST_CASE("minimum sigma") {
  CHECK(PrivacySpec(1.0, 0.05, 1.0).min_sigma() == doctest::Approx(1.9071).epsilon(1e-4));
  CHECK(PrivacySpec(1.0, 0.05, 2.0).min_sigma() ==
        2.0 * PrivacySpec(1.0, 0.05, 1.0).min_sigma());
  CHECK(min_sigma(PrivacySpec(1e6, 0.05, 1.0)) < 0.01);
  CHECK_THROWS_AS(PrivacySpec(-1.0, 0.05, 1.0), Error);
  CHECK_THROWS_AS(PrivacySpec(1.0, 0.05, 0.0), Error);
}

TEST_CASE("sigma decreases along an epsilon grid") {
  double previous = INFINITY;
  for (int k = 0; k < 100; ++k) {
    const double eps = 0.01 + k * (5.0 - 0.01) / 99.0;
    const double s = PrivacySpec(eps, 0.05, 1.0).min_sigma();
    CHECK(s < previous);
    previous = s;
  }
}

TEST_CASE("noise model") {
  const std::vector<PrivacySpec> specs = {{1.0, 0.05, 1.0}, {0.5, 0.05, 1.0}};
  const NoiseModel m = NoiseModel::from_specs(specs, Eigen::VectorXd::Zero(2));
  CHECK(m.privacy_sigmas()(0) == specs[0].min_sigma());
  CHECK(m.privacy_sigmas()(1) == specs[1].min_sigma());
  Eigen::VectorXd low(2);
  low << 1.0, 1.0;
  CHECK_THROWS_AS(NoiseModel::with_specs(specs, low, Eigen::VectorXd::Zero(2)), Error);
  Eigen::VectorXd high(2);
  high << 3.0, 5.0;
  CHECK_NOTHROW(NoiseModel::with_specs(specs, high, Eigen::VectorXd::Zero(2)));
  CHECK_THROWS_AS(NoiseModel(high, Eigen::VectorXd::Zero(3)), Error);
}

TEST_CASE("noise samples") {
  Rng a = make_rng(42, 0);
  CHECK(sample_privacy_noise(0.0, 3, a).isZero());
  Rng r1 = make_rng(9, 2), r2 = make_rng(9, 2);
  CHECK(sample_privacy_noise(1.5, 4, r1) == sample_privacy_noise(1.5, 4, r2));

  Rng r = make_rng(2024, 0);
  const int count = 1000000;
  double sum = 0.0, sq = 0.0;
  for (int k = 0; k < count; ++k) {
    const double x = sample_privacy_noise(2.0, 1, r)(0);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / count;
  const double var = sq / count - mean * mean;
  CHECK(var >= 3.98);
  CHECK(var <= 4.02);
}

TEST_CASE("adjacency relation") {
  std::vector<Eigen::VectorXd> v = {Eigen::VectorXd::Constant(2, 1.0),
                                    Eigen::VectorXd::Constant(2, -1.0)};
  CHECK(check_adjacency(v, v, 0.1));

  std::vector<Eigen::VectorXd> a = {Eigen::VectorXd::Zero(1)};
  std::vector<Eigen::VectorXd> b = {Eigen::VectorXd::Constant(1, 1.001)};
  CHECK_FALSE(check_adjacency(a, b, 1.0));

  std::vector<Eigen::VectorXd> x = {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)};
  std::vector<Eigen::VectorXd> y = {Eigen::VectorXd::Constant(1, 0.6),
                                    Eigen::VectorXd::Constant(1, 0.8)};
  CHECK(check_adjacency(x, y, 1.0));

  std::vector<Eigen::VectorXd> shorter = {Eigen::VectorXd::Zero(1)};
  CHECK_THROWS_AS(check_adjacency(x, shorter, 1.0), Error);
  std::vector<Eigen::VectorXd> wide = {Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2)};
  CHECK_THROWS_AS(check_adjacency(x, wide, 1.0), Error);
}

TEST_CASE("seed splitting gives distinct streams") {
  CHECK(split_seed(1, 0) != split_seed(1, 1));
  CHECK(split_seed(1, 0) != split_seed(2, 0));
  CHECK(split_seed(7, 3) == split_seed(7, 3));
  Rng a = make_rng(5, 1), b = make_rng(5, 1);
  CHECK(a() == b());
}
