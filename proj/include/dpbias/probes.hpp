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

#ifndef DPBIAS_PROBES_HPP_
#define DPBIAS_PROBES_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "dpbias/lexicon.hpp"
#include "dpbias/metrics.hpp"
#include "dpbias/model.hpp"
#include "dpbias/text.hpp"
#include "dpbias/trainer.hpp"
#include "dpbias/vocab.hpp"

namespace dpbias {

// L1 norm of the mean unclipped per-sentence gradient over the split.
// Pure measurement: no parameter update, no noise.
double split_gradient_l1(const LMParams& params, const Vocab& vocab,
                         const Corpus& split);

// Companion diagnostic: mean of the per-sentence gradient L1 norms.
double split_mean_gradient_l1(const LMParams& params, const Vocab& vocab,
                              const Corpus& split);

// Per-epoch gradient and perplexity disparities between the gendered
// validation splits, derived from the frozen end-of-epoch measurements.
struct DisparityRow {
  int epoch = 0;
  double l1_female = 0.0;
  double l1_male = 0.0;
  double ratio = std::numeric_limits<double>::quiet_NaN();
  double ppl_female = 0.0;
  double ppl_male = 0.0;
  double ppl_ratio = std::numeric_limits<double>::quiet_NaN();
  double l1_mean_norm_female = std::numeric_limits<double>::quiet_NaN();
  double l1_mean_norm_male = std::numeric_limits<double>::quiet_NaN();
};

struct DisparityTrace {
  std::vector<DisparityRow> rows;

  // CSV with the documented column order; ratio cells where the denominator
  // is not above 1e-12 are flagged as "undefined".
  std::string to_csv() const;
};

DisparityTrace disparity_trace(const std::vector<EpochStats>& log);

struct SwappedResult {
  double grad_ratio_ab = std::numeric_limits<double>::quiet_NaN();
  double ppl_a = 0.0;
  double ppl_b = 0.0;
  double toxicity_bias = 0.0;
};

// Trains on the corpus per config, splits it with swap_gender_split, and
// reports (gradient L1 ratio A/B, perplexity A, perplexity B, toxicity
// bias).  Split A is the male->female swapped half, split B the reverse.
SwappedResult swapped_experiment(const Corpus& corpus,
                                 const GenderLexicon& lexicon,
                                 const DPConfig& config,
                                 const ModelConfig& model_config,
                                 const std::vector<PromptPair>& pairs,
                                 const LexiconScorer& toxicity_scorer,
                                 const GenConfig& gen_config,
                                 std::uint64_t seed);

}  // namespace dpbias

#endif  // DPBIAS_PROBES_HPP_
