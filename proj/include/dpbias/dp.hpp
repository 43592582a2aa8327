//
// Copyright 2026 The dpbias Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef DPBIAS_DP_HPP_
#define DPBIAS_DP_HPP_

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "dpbias/rng.hpp"

namespace dpbias {

// Scales g down to L2 norm c if it is longer; returns the pre-clip norm.
double clip_to_norm(Eigen::VectorXd& g, double c);

// Adds independent N(0, stddev^2) noise to every coordinate, in index order.
void add_gaussian_noise(Eigen::VectorXd& v, double stddev, Rng& rng);

// Sum of clipped per-sample gradients -> noisy mean estimate: the caller has
// already accumulated `sum` over m clipped gradients; this perturbs it with
// N(0, (sigma * clip)^2 I) and divides by the realized batch size m.
void noisy_mean_in_place(Eigen::VectorXd& sum, std::size_t m, double clip,
                         double sigma, Rng& rng);

// List form of the same aggregation: clips every gradient to `clip`, sums,
// perturbs with N(0, (sigma * clip)^2 I), and divides by the list size.
// Deterministic given the seed.
Eigen::VectorXd noisy_aggregate(const std::vector<Eigen::VectorXd>& grads,
                                double clip, double sigma, std::uint64_t seed);

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long t = 0;

  explicit AdamState(long n)
      : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}
};

// Standard Adam with bias correction (beta1 = 0.9, beta2 = 0.999,
// eps = 1e-8).
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad,
               AdamState& state, double learning_rate);

}  // namespace dpbias

#endif  // DPBIAS_DP_HPP_
