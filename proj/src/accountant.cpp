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

#include "dpbias/accountant.hpp"

#include <cmath>
#include <limits>

#include "dpbias/util.hpp"

namespace dpbias {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSigmaLo = 0.3;
constexpr double kSigmaHi = 100.0;
constexpr double kSigmaTol = 1e-3;

double log_add(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

// log(exp(a) - exp(b)) for a > b.
double log_sub(double a, double b) {
  if (b == -kInf) return a;
  if (b >= a) {
    throw std::overflow_error("log-domain subtraction went negative in the "
                              "privacy accountant");
  }
  return a + std::log1p(-std::exp(b - a));
}

double log_erfc(double x) {
  if (x < 25.0) return std::log(std::erfc(x));
  // Asymptotic expansion for the far tail, where erfc underflows.
  const double x2 = x * x;
  const double inv = 1.0 / x2;
  const double correction = std::log1p(inv * (-0.5 + inv * (0.75 - 1.875 * inv)));
  return -x2 - std::log(x * std::sqrt(3.141592653589793238462643383279502884)) +
         correction;
}

// Integer order: binomial expansion of the moment, summed in the log domain.
double log_a_int(double q, double sigma, long alpha) {
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  double log_coef = 0.0;  // log C(alpha, j), updated by recurrence
  double log_a = -kInf;
  for (long j = 0; j <= alpha; ++j) {
    const double term = log_coef + j * log_q + (alpha - j) * log_1mq +
                        (static_cast<double>(j) * j - j) / (2.0 * sigma * sigma);
    log_a = log_add(log_a, term);
    log_coef += std::log(static_cast<double>(alpha - j)) -
                std::log(static_cast<double>(j + 1));
  }
  return log_a;
}

// Fractional order: two-sided series with erfc tail weights.  The binomial
// coefficients alternate in sign beyond i > alpha, handled by a running sign.
double log_a_frac(double q, double sigma, double alpha) {
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  const double s2 = sigma * sigma;
  const double z0 = s2 * std::log(1.0 / q - 1.0) + 0.5;
  const double sqrt2s = std::sqrt(2.0) * sigma;

  double log_a0 = -kInf;
  double log_a1 = -kInf;
  double log_coef = 0.0;  // log |C(alpha, i)|
  double sign = 1.0;
  for (long i = 0;; ++i) {
    const double di = static_cast<double>(i);
    const double j = alpha - di;
    const double log_t0 = log_coef + di * log_q + j * log_1mq;
    const double log_t1 = log_coef + j * log_q + di * log_1mq;
    const double log_e0 =
        std::log(0.5) + log_erfc((di - z0) / sqrt2s);
    const double log_e1 =
        std::log(0.5) + log_erfc((z0 - j) / sqrt2s);
    const double log_s0 = log_t0 + (di * di - di) / (2.0 * s2) + log_e0;
    const double log_s1 = log_t1 + (j * j - j) / (2.0 * s2) + log_e1;
    if (sign > 0.0) {
      log_a0 = log_add(log_a0, log_s0);
      log_a1 = log_add(log_a1, log_s1);
    } else {
      log_a0 = log_sub(log_a0, log_s0);
      log_a1 = log_sub(log_a1, log_s1);
    }
    const double biggest = std::max(log_s0, log_s1);
    if (di > alpha && biggest < std::max(log_a0, log_a1) - 40.0) break;
    const double factor = (alpha - di) / (di + 1.0);
    if (factor < 0.0) sign = -sign;
    log_coef += std::log(std::fabs(factor));
  }
  return log_add(log_a0, log_a1);
}

}  // namespace

const std::vector<double>& default_rdp_orders() {
  static const std::vector<double> kOrders = [] {
    std::vector<double> orders;
    for (double a = 1.25; a <= 64.0 + 1e-9; a += 0.25) orders.push_back(a);
    orders.push_back(128.0);
    orders.push_back(256.0);
    return orders;
  }();
  return kOrders;
}

double rdp_sampled_gaussian(double q, double sigma, double alpha) {
  if (!(q >= 0.0 && q <= 1.0)) {
    throw ValidationError("sampling rate q must lie in [0, 1]");
  }
  if (!(sigma > 0.0)) {
    throw ValidationError("noise multiplier sigma must be positive");
  }
  if (!(alpha > 1.0)) {
    throw ValidationError("Renyi order alpha must exceed 1");
  }
  if (q == 0.0) return 0.0;
  if (q == 1.0) return alpha / (2.0 * sigma * sigma);
  const double rounded = std::nearbyint(alpha);
  const double log_a =
      std::fabs(alpha - rounded) < 1e-9
          ? log_a_int(q, sigma, static_cast<long>(rounded))
          : log_a_frac(q, sigma, alpha);
  return log_a / (alpha - 1.0);
}

double epsilon_from_rdp(const std::vector<double>& orders,
                        const std::vector<double>& rdp, double delta,
                        double* best_order) {
  if (orders.size() != rdp.size() || orders.empty()) {
    throw ValidationError("orders and rdp vectors must match and be nonempty");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ValidationError("delta must lie in (0, 1)");
  }
  const double log_inv_delta = std::log(1.0 / delta);
  double best = kInf;
  double arg = orders[0];
  for (std::size_t i = 0; i < orders.size(); ++i) {
    const double eps = rdp[i] + log_inv_delta / (orders[i] - 1.0);
    if (eps < best) {
      best = eps;
      arg = orders[i];
    }
  }
  if (best_order != nullptr) *best_order = arg;
  return std::max(best, 0.0);
}

AccountantState AccountantState::create(double q, double sigma) {
  AccountantState state;
  state.q = q;
  state.sigma = sigma;
  state.orders = default_rdp_orders();
  state.rdp.assign(state.orders.size(), 0.0);
  return state;
}

void AccountantState::advance(long n_steps) {
  if (n_steps < 0) throw ValidationError("step count cannot be negative");
  if (n_steps == 0) return;
  for (std::size_t i = 0; i < orders.size(); ++i) {
    rdp[i] += static_cast<double>(n_steps) *
              rdp_sampled_gaussian(q, sigma, orders[i]);
  }
  steps += n_steps;
}

double AccountantState::epsilon(double delta) const {
  if (steps == 0) return 0.0;
  return epsilon_from_rdp(orders, rdp, delta);
}

double compute_epsilon(double q, double sigma, long steps, double delta) {
  AccountantState state = AccountantState::create(q, sigma);
  state.advance(steps);
  return state.epsilon(delta);
}

double calibrate_sigma(double target_epsilon, double delta, double q,
                       long steps) {
  if (!(target_epsilon > 0.0)) {
    throw ValidationError("target epsilon must be positive");
  }
  if (compute_epsilon(q, kSigmaHi, steps, delta) > target_epsilon) {
    throw ValidationError(
        "epsilon " + format_double(target_epsilon) +
        " is unreachable: even sigma = 100 exceeds the budget");
  }
  double lo = kSigmaLo;
  double hi = kSigmaHi;
  if (compute_epsilon(q, lo, steps, delta) <= target_epsilon) return lo;
  while (hi - lo > kSigmaTol) {
    const double mid = 0.5 * (lo + hi);
    if (compute_epsilon(q, mid, steps, delta) <= target_epsilon) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  if (compute_epsilon(q, hi, steps, delta) > target_epsilon) {
    throw std::logic_error("sigma calibration failed its round-trip check");
  }
  return hi;
}

}  // namespace dpbias
