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

#ifndef DPBIAS_TRAINER_HPP_
#define DPBIAS_TRAINER_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "dpbias/accountant.hpp"
#include "dpbias/model.hpp"
#include "dpbias/text.hpp"
#include "dpbias/vocab.hpp"

namespace dpbias {

// Training hyperparameters and the privacy budget.  Exactly one of three
// noise modes applies:
//   - non_private = true: no clipping, no noise, epsilon reported as inf;
//   - sigma set explicitly (>= 0);
//   - target_epsilon set: sigma is calibrated before the first step.
struct DPConfig {
  double clip_norm = 0.1;
  double sigma = std::numeric_limits<double>::quiet_NaN();
  int batch_size = 16;
  double learning_rate = 3e-4;
  int epochs = 3;
  double target_epsilon = std::numeric_limits<double>::quiet_NaN();
  double delta = 1e-5;
  bool non_private = false;

  bool has_sigma() const { return !std::isnan(sigma); }
  bool has_target() const { return !std::isnan(target_epsilon); }

  // Validates against the training-set size N.  Warns on stderr when
  // delta >= 1/N.
  void validate(std::size_t n_train) const;
};

// Frozen end-of-epoch measurements.  Fields evaluated on splits that were
// not supplied stay NaN.
struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double ppl_all = std::numeric_limits<double>::quiet_NaN();
  double ppl_female = std::numeric_limits<double>::quiet_NaN();
  double ppl_male = std::numeric_limits<double>::quiet_NaN();
  double l1_female = std::numeric_limits<double>::quiet_NaN();
  double l1_male = std::numeric_limits<double>::quiet_NaN();
  double l1_mean_norm_female = std::numeric_limits<double>::quiet_NaN();
  double l1_mean_norm_male = std::numeric_limits<double>::quiet_NaN();
  double epsilon_spent = std::numeric_limits<double>::quiet_NaN();
};

// Validation material evaluated at every epoch boundary.  Null pointers skip
// the corresponding fields.
struct EvalSuite {
  const Corpus* all = nullptr;
  const Corpus* female = nullptr;
  const Corpus* male = nullptr;
};

struct TrainHooks {
  // Called once per sampled example with the global step index, the corpus
  // index, and the gradient L2 norm before and after clipping.
  std::function<void(long step, std::size_t example, double pre_clip_norm,
                     double post_clip_norm)>
      on_example;
  // Called after each epoch's stats are frozen.
  std::function<void(const EpochStats&, const LMParams&)> on_epoch;
};

struct TrainResult {
  LMParams params;
  std::vector<EpochStats> log;
  double sigma_used = 0.0;
  double sampling_rate = 0.0;
  long total_steps = 0;
  double final_epsilon = std::numeric_limits<double>::quiet_NaN();
};

// DP-Adam over the corpus: Poisson batch sampling at rate q = B/N, per
// example loss_and_grad -> clip -> noisy mean -> adam_step.  Non-private
// mode runs the identical code path with an unbounded clip and sigma = 0.
// Deterministic given (corpus, config, seed).
TrainResult train(const Corpus& corpus, const Vocab& vocab,
                  const ModelConfig& model_config, const DPConfig& config,
                  std::uint64_t seed, const EvalSuite& eval = {},
                  const TrainHooks& hooks = {});

// CSV with one row per epoch:
// epoch,train_loss,ppl_all,ppl_female,ppl_male,l1_female,l1_male,
// epsilon_spent.
std::string training_log_to_csv(const std::vector<EpochStats>& log);

}  // namespace dpbias

#endif  // DPBIAS_TRAINER_HPP_
