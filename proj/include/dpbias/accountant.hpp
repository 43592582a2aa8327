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

#ifndef DPBIAS_ACCOUNTANT_HPP_
#define DPBIAS_ACCOUNTANT_HPP_

#include <vector>

namespace dpbias {

// Renyi-DP orders used for accounting: 1.25 to 64 in steps of 0.25, plus 128
// and 256 for very low noise.
const std::vector<double>& default_rdp_orders();

// Renyi divergence of one step of the Poisson-subsampled Gaussian mechanism
// at the given order (alpha > 1).  q = 0 contributes nothing; q = 1 is the
// plain Gaussian mechanism.
double rdp_sampled_gaussian(double q, double sigma, double alpha);

// min over orders of rdp[i] + log(1/delta) / (orders[i] - 1).  If best_order
// is non-null it receives the argmin.
double epsilon_from_rdp(const std::vector<double>& orders,
                        const std::vector<double>& rdp, double delta,
                        double* best_order = nullptr);

// Accumulates composition over steps at fixed (q, sigma).
struct AccountantState {
  double q = 0.0;
  double sigma = 0.0;
  std::vector<double> orders;
  std::vector<double> rdp;  // accumulated Renyi divergence per order
  long steps = 0;

  static AccountantState create(double q, double sigma);
  void advance(long n_steps);
  double epsilon(double delta) const;
};

double compute_epsilon(double q, double sigma, long steps, double delta);

// Smallest noise multiplier in [0.3, 100] whose accumulated budget stays
// within target_epsilon, found by bisection to 1e-3.  Throws ValidationError
// if sigma = 100 is still not private enough.
double calibrate_sigma(double target_epsilon, double delta, double q,
                       long steps);

}  // namespace dpbias

#endif  // DPBIAS_ACCOUNTANT_HPP_
