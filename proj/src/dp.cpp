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

#include "dpbias/dp.hpp"

#include <cmath>

#include "dpbias/util.hpp"

namespace dpbias {

double clip_to_norm(Eigen::VectorXd& g, double c) {
  if (!(c > 0.0)) throw ValidationError("clip norm must be positive");
  const double norm = g.norm();
  if (norm > c) g *= c / norm;
  return norm;
}

void add_gaussian_noise(Eigen::VectorXd& v, double stddev, Rng& rng) {
  if (stddev == 0.0) return;
  for (long i = 0; i < v.size(); ++i) v[i] += stddev * rng.normal();
}

void noisy_mean_in_place(Eigen::VectorXd& sum, std::size_t m, double clip,
                         double sigma, Rng& rng) {
  if (m == 0) throw ValidationError("empty batch has no mean gradient");
  // sigma = 0 with an unbounded clip (non-private mode) must stay noiseless,
  // so the product is never formed in that case.
  if (sigma > 0.0) add_gaussian_noise(sum, sigma * clip, rng);
  sum /= static_cast<double>(m);
}

Eigen::VectorXd noisy_aggregate(const std::vector<Eigen::VectorXd>& grads,
                                double clip, double sigma,
                                std::uint64_t seed) {
  if (grads.empty()) throw ValidationError("empty batch has no mean gradient");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(grads.front().size());
  for (const Eigen::VectorXd& g : grads) {
    if (g.size() != sum.size()) {
      throw ValidationError("per-sample gradients disagree in size");
    }
    Eigen::VectorXd clipped = g;
    clip_to_norm(clipped, clip);
    sum += clipped;
  }
  Rng rng(mix_seed(seed, 0x61676772ULL));
  noisy_mean_in_place(sum, grads.size(), clip, sigma, rng);
  return sum;
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad,
               AdamState& state, double learning_rate) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  ++state.t;
  state.m = kBeta1 * state.m + (1.0 - kBeta1) * grad;
  state.v = kBeta2 * state.v.array() + (1.0 - kBeta2) * grad.array().square();
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.t));
  params.array() -=
      learning_rate * (state.m.array() / c1) /
      ((state.v.array() / c2).sqrt() + kEps);
}

}  // namespace dpbias
