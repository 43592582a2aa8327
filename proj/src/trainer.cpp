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

#include "dpbias/trainer.hpp"

#include <cstdio>
#include <utility>

#include "dpbias/dp.hpp"
#include "dpbias/probes.hpp"
#include "dpbias/rng.hpp"
#include "dpbias/util.hpp"

namespace dpbias {
namespace {

constexpr std::uint64_t kBatchTag = 0x62617463ULL;
constexpr std::uint64_t kNoiseTag = 0x6e6f6973ULL;

}  // namespace

void DPConfig::validate(std::size_t n_train) const {
  if (n_train == 0) throw ValidationError("training corpus is empty");
  if (!(clip_norm > 0.0)) {
    throw ValidationError("clip norm must be positive");
  }
  if (batch_size < 1) throw ValidationError("batch size must be at least 1");
  if (static_cast<std::size_t>(batch_size) > n_train) {
    throw ValidationError("batch size exceeds the corpus size");
  }
  if (!(learning_rate > 0.0)) {
    throw ValidationError("learning rate must be positive");
  }
  if (epochs < 1) throw ValidationError("epochs must be at least 1");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ValidationError("delta must lie in (0, 1)");
  }
  if (has_sigma() && sigma < 0.0) {
    throw ValidationError("noise multiplier must be nonnegative");
  }
  if (has_target() && !(target_epsilon > 0.0)) {
    throw ValidationError("target epsilon must be positive");
  }
  if (!non_private && delta >= 1.0 / static_cast<double>(n_train)) {
    std::fprintf(stderr,
                 "warning: delta %g is not below 1/N = %g; the guarantee is "
                 "weaker than recommended\n",
                 delta, 1.0 / static_cast<double>(n_train));
  }
}

TrainResult train(const Corpus& corpus, const Vocab& vocab,
                  const ModelConfig& model_config, const DPConfig& config,
                  std::uint64_t seed, const EvalSuite& eval,
                  const TrainHooks& hooks) {
  const std::size_t n = corpus.size();
  config.validate(n);
  model_config.validate();
  if (model_config.vocab_size != static_cast<int>(vocab.size())) {
    throw ValidationError("model vocab size disagrees with the vocabulary");
  }

  const double q =
      static_cast<double>(config.batch_size) / static_cast<double>(n);
  const long steps_per_epoch =
      static_cast<long>((n + static_cast<std::size_t>(config.batch_size) - 1) /
                        static_cast<std::size_t>(config.batch_size));
  const long total_steps = static_cast<long>(config.epochs) * steps_per_epoch;

  double sigma = 0.0;
  if (!config.non_private) {
    if (config.has_sigma()) {
      sigma = config.sigma;
    } else if (config.has_target()) {
      sigma = calibrate_sigma(config.target_epsilon, config.delta, q,
                              total_steps);
    } else {
      throw ValidationError(
          "private training needs a noise multiplier or a target epsilon");
    }
  }
  const double clip = config.non_private
                          ? std::numeric_limits<double>::infinity()
                          : config.clip_norm;

  std::vector<std::vector<int>> encoded(n);
  for (std::size_t i = 0; i < n; ++i) {
    encoded[i] = vocab.encode(corpus.sentences[i]);
  }

  LMParams params(model_config);
  params.init(seed);
  AdamState opt(model_config.param_count());
  AccountantState acct;
  if (sigma > 0.0) acct = AccountantState::create(q, sigma);

  Workspace ws(model_config);
  Eigen::VectorXd grad(model_config.param_count());
  Eigen::VectorXd sum(model_config.param_count());
  std::vector<std::size_t> batch;
  batch.reserve(static_cast<std::size_t>(4 * config.batch_size));

  std::vector<EpochStats> log;
  log.reserve(static_cast<std::size_t>(config.epochs));
  for (int e = 0; e < config.epochs; ++e) {
    double loss_sum = 0.0;
    long position_count = 0;
    for (long s = 0; s < steps_per_epoch; ++s) {
      const long step = static_cast<long>(e) * steps_per_epoch + s;
      Rng batch_rng(
          mix_seed(seed, kBatchTag, static_cast<std::uint64_t>(step)));
      batch.clear();
      for (std::size_t i = 0; i < n; ++i) {
        if (batch_rng.bernoulli(q)) batch.push_back(i);
      }
      if (!batch.empty()) {
        sum.setZero();
        for (const std::size_t i : batch) {
          loss_sum += sentence_loss(params, encoded[i], ws, &grad);
          position_count += static_cast<long>(encoded[i].size()) + 1;
          const double pre_norm = clip_to_norm(grad, clip);
          if (hooks.on_example) {
            hooks.on_example(step, i, pre_norm, grad.norm());
          }
          sum += grad;
        }
        Rng noise_rng(
            mix_seed(seed, kNoiseTag, static_cast<std::uint64_t>(step)));
        noisy_mean_in_place(sum, batch.size(), clip, sigma, noise_rng);
        adam_step(params.flat(), sum, opt, config.learning_rate);
      }
      // Empty batches still consume a composition step.
      if (sigma > 0.0) acct.advance(1);
    }

    EpochStats st;
    st.epoch = e + 1;
    st.train_loss = position_count > 0
                        ? loss_sum / static_cast<double>(position_count)
                        : std::numeric_limits<double>::quiet_NaN();
    if (eval.all != nullptr) st.ppl_all = perplexity(params, vocab, *eval.all);
    if (eval.female != nullptr) {
      st.ppl_female = perplexity(params, vocab, *eval.female);
      st.l1_female = split_gradient_l1(params, vocab, *eval.female);
      st.l1_mean_norm_female =
          split_mean_gradient_l1(params, vocab, *eval.female);
    }
    if (eval.male != nullptr) {
      st.ppl_male = perplexity(params, vocab, *eval.male);
      st.l1_male = split_gradient_l1(params, vocab, *eval.male);
      st.l1_mean_norm_male = split_mean_gradient_l1(params, vocab, *eval.male);
    }
    st.epsilon_spent = sigma > 0.0
                           ? acct.epsilon(config.delta)
                           : std::numeric_limits<double>::infinity();
    if (hooks.on_epoch) hooks.on_epoch(st, params);
    log.push_back(st);
  }

  TrainResult result{std::move(params), std::move(log), sigma, q, total_steps,
                     0.0};
  result.final_epsilon = result.log.back().epsilon_spent;
  return result;
}

std::string training_log_to_csv(const std::vector<EpochStats>& log) {
  std::string csv =
      "epoch,train_loss,ppl_all,ppl_female,ppl_male,l1_female,l1_male,"
      "epsilon_spent\n";
  for (const EpochStats& st : log) {
    csv += std::to_string(st.epoch);
    csv += ',' + format_double(st.train_loss);
    csv += ',' + format_double(st.ppl_all);
    csv += ',' + format_double(st.ppl_female);
    csv += ',' + format_double(st.ppl_male);
    csv += ',' + format_double(st.l1_female);
    csv += ',' + format_double(st.l1_male);
    csv += ',' + format_double(st.epsilon_spent);
    csv += '\n';
  }
  return csv;
}

}  // namespace dpbias
