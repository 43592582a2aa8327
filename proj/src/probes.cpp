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

#include "dpbias/probes.hpp"

#include <algorithm>
#include <numeric>

#include "dpbias/synth.hpp"
#include "dpbias/util.hpp"

namespace dpbias {
namespace {

constexpr double kRatioFloor = 1e-12;

// Accumulation order fixed by sentence text so the result does not depend on
// how the split is stored.
std::vector<std::size_t> canonical_order(const Corpus& split) {
  std::vector<std::size_t> order(split.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&split](std::size_t a, std::size_t b) {
              return split.sentences[a].line() < split.sentences[b].line();
            });
  return order;
}

double ratio_or_nan(double numerator, double denominator) {
  if (!(denominator > kRatioFloor)) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return numerator / denominator;
}

std::string ratio_cell(double value) {
  return std::isnan(value) ? std::string("undefined") : format_double(value);
}

}  // namespace

double split_gradient_l1(const LMParams& params, const Vocab& vocab,
                         const Corpus& split) {
  if (split.size() == 0) {
    throw ValidationError("empty split has no gradient");
  }
  Workspace ws(params.config());
  Eigen::VectorXd grad(params.config().param_count());
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(params.config().param_count());
  for (const std::size_t i : canonical_order(split)) {
    sentence_loss(params, vocab.encode(split.sentences[i]), ws, &grad);
    sum += grad;
  }
  sum /= static_cast<double>(split.size());
  return sum.lpNorm<1>();
}

double split_mean_gradient_l1(const LMParams& params, const Vocab& vocab,
                              const Corpus& split) {
  if (split.size() == 0) {
    throw ValidationError("empty split has no gradient");
  }
  Workspace ws(params.config());
  Eigen::VectorXd grad(params.config().param_count());
  std::vector<double> norms;
  norms.reserve(split.size());
  for (const Sentence& s : split.sentences) {
    sentence_loss(params, vocab.encode(s), ws, &grad);
    norms.push_back(grad.lpNorm<1>());
  }
  return stable_mean(norms);
}

DisparityTrace disparity_trace(const std::vector<EpochStats>& log) {
  DisparityTrace trace;
  trace.rows.reserve(log.size());
  for (const EpochStats& st : log) {
    DisparityRow row;
    row.epoch = st.epoch;
    row.l1_female = st.l1_female;
    row.l1_male = st.l1_male;
    row.ratio = ratio_or_nan(st.l1_female, st.l1_male);
    row.ppl_female = st.ppl_female;
    row.ppl_male = st.ppl_male;
    row.ppl_ratio = ratio_or_nan(st.ppl_female, st.ppl_male);
    row.l1_mean_norm_female = st.l1_mean_norm_female;
    row.l1_mean_norm_male = st.l1_mean_norm_male;
    trace.rows.push_back(row);
  }
  return trace;
}

std::string DisparityTrace::to_csv() const {
  std::string csv =
      "epoch,l1_female,l1_male,ratio,ppl_female,ppl_male,ppl_ratio,"
      "l1_mean_norm_female,l1_mean_norm_male\n";
  for (const DisparityRow& row : rows) {
    csv += std::to_string(row.epoch);
    csv += ',' + format_double(row.l1_female);
    csv += ',' + format_double(row.l1_male);
    csv += ',' + ratio_cell(row.ratio);
    csv += ',' + format_double(row.ppl_female);
    csv += ',' + format_double(row.ppl_male);
    csv += ',' + ratio_cell(row.ppl_ratio);
    csv += ',' + format_double(row.l1_mean_norm_female);
    csv += ',' + format_double(row.l1_mean_norm_male);
    csv += '\n';
  }
  return csv;
}

SwappedResult swapped_experiment(const Corpus& corpus,
                                 const GenderLexicon& lexicon,
                                 const DPConfig& config,
                                 const ModelConfig& model_config,
                                 const std::vector<PromptPair>& pairs,
                                 const LexiconScorer& toxicity_scorer,
                                 const GenConfig& gen_config,
                                 std::uint64_t seed) {
  const SwapSplits splits = swap_gender_split(corpus, lexicon, seed);

  Corpus training;
  training.provenance = Provenance::kAugmented;
  training.sentences.reserve(splits.a.size() + splits.b.size());
  training.sentences.insert(training.sentences.end(),
                            splits.a.sentences.begin(),
                            splits.a.sentences.end());
  training.sentences.insert(training.sentences.end(),
                            splits.b.sentences.begin(),
                            splits.b.sentences.end());

  const Vocab vocab = build_vocab(training, 1, &lexicon);
  ModelConfig mc = model_config;
  mc.vocab_size = static_cast<int>(vocab.size());

  const TrainResult trained = train(training, vocab, mc, config, seed);

  SwappedResult result;
  const double grad_a = split_gradient_l1(trained.params, vocab, splits.a);
  const double grad_b = split_gradient_l1(trained.params, vocab, splits.b);
  result.grad_ratio_ab = ratio_or_nan(grad_a, grad_b);
  result.ppl_a = perplexity(trained.params, vocab, splits.a);
  result.ppl_b = perplexity(trained.params, vocab, splits.b);
  result.toxicity_bias = toxicity_bias(trained.params, vocab, pairs,
                                       toxicity_scorer, gen_config);
  return result;
}

}  // namespace dpbias
