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

#ifndef DPBIAS_METRICS_HPP_
#define DPBIAS_METRICS_HPP_

#include <cstdint>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "dpbias/lexicon.hpp"
#include "dpbias/model.hpp"
#include "dpbias/text.hpp"
#include "dpbias/vocab.hpp"

namespace dpbias {

// A gendered prompt pair: identical contexts except for one token position
// holding a lexicon pair.
struct PromptPair {
  std::string template_id;
  Sentence male;
  Sentence female;
};

// TSV "template_id TAB male_context TAB female_context"; each row is
// validated against the lexicon.
std::vector<PromptPair> load_prompt_pairs(const std::string& path,
                                          const GenderLexicon& lexicon);

struct StereoTriple {
  std::string category;  // gender | race | religion
  Sentence stereo;
  Sentence anti;
  Sentence unrelated;
};

// TSV "category TAB stereo TAB anti TAB unrelated"; the three sentences must
// share the template except for a single slot.
std::vector<StereoTriple> load_stereo_triples(const std::string& path);

// One prompt per line.
std::vector<Sentence> load_prompts(const std::string& path);

// Bag-of-words scorer: sum of matched term weights over token count, clipped
// to [0, 1].
class LexiconScorer {
 public:
  enum class Kind { kToxicity, kNegativeSentiment };

  // TSV "term TAB weight" with weights in [0, 1].
  static LexiconScorer load(const std::string& path, Kind kind);
  static LexiconScorer from_terms(
      const std::vector<std::pair<std::string, double>>& terms, Kind kind);

  double score(const Sentence& s) const;
  Kind kind() const { return kind_; }

 private:
  Kind kind_ = Kind::kToxicity;
  std::unordered_map<std::string, double> weights_;
};

struct GenConfig {
  std::size_t max_tokens = 50;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  // Independent completions per unpaired prompt; the paired metrics always
  // draw one completion per side.
  std::size_t samples = 5;
};

// Completion of a single prompt with the per-(prompt, side) seed used by the
// paired metrics; side is 0 for male, 1 for female, and 2 + j for the j-th
// sample of an unpaired prompt.
Sentence complete_prompt(const LMParams& params, const Vocab& vocab,
                         const Sentence& prompt, int side,
                         const GenConfig& config);

// Aggregation cores, usable with stubbed generations or external scores.
double mean_abs_diff(const std::vector<std::pair<double, double>>& scores);
double occupation_bias_from_sentences(const std::vector<Sentence>& sentences,
                                      const std::set<std::string>& occupations,
                                      const GenderLexicon& lexicon);
double gender_count_bias_from_sentences(const std::vector<Sentence>& sentences,
                                        const GenderLexicon& lexicon);

// Mean |score(male completion) - score(female completion)| over prompt pairs.
// The scored sentence is the prompt plus its sampled continuation.
double toxicity_bias(const LMParams& params, const Vocab& vocab,
                     const std::vector<PromptPair>& pairs,
                     const LexiconScorer& scorer, const GenConfig& config);
double sentiment_bias(const LMParams& params, const Vocab& vocab,
                      const std::vector<PromptPair>& pairs,
                      const LexiconScorer& scorer, const GenConfig& config);

// Mean over occupations of |n_m(o) - n_f(o)| where n_g(o) counts generated
// sentences in which o co-occurs with a male/female lexicon word.
double occupation_bias(const LMParams& params, const Vocab& vocab,
                       const std::vector<Sentence>& prompts,
                       const std::set<std::string>& occupations,
                       const GenderLexicon& lexicon, const GenConfig& config);

// |n_m / (n_m + n_f) - 0.5| pooled over all completions of gender-neutral
// prompts; throws if no gendered token is generated at all.
double gender_count_bias(const LMParams& params, const Vocab& vocab,
                         const std::vector<Sentence>& prompts,
                         const GenderLexicon& lexicon,
                         const GenConfig& config);

// Distribution distances over the next-token distributions of the two
// contexts; no generation involved.
double avg_kl(const Eigen::VectorXd& p, const Eigen::VectorXd& q);
double hellinger(const Eigen::VectorXd& p, const Eigen::VectorXd& q);
double kl_bias(const LMParams& params, const Vocab& vocab,
               const std::vector<PromptPair>& pairs);
double hellinger_bias(const LMParams& params, const Vocab& vocab,
                      const std::vector<PromptPair>& pairs);

// Percentage of triples where the stereotypical sentence outscores the
// anti-stereotypical one by sequence log probability; ties count half.
double stereotype_preference_rate(const LMParams& params, const Vocab& vocab,
                                  const std::vector<StereoTriple>& triples);

struct BiasReport {
  // Metric values.
  double toxicity_bias = 0.0;
  double sentiment_bias = 0.0;
  double occupation_bias = 0.0;
  double gender_count_bias = 0.0;
  double kl_bias = 0.0;
  double hellinger_bias = 0.0;
  double stereotype_preference_rate = 0.0;
  // Run metadata.
  std::string epsilon_label;  // numeric text or "non-private"
  double mixing_ratio = 0.0;
  std::uint64_t seed = 0;
  double temperature = 1.0;
  std::size_t max_tokens = 50;
  double perplexity = 0.0;

  static std::string csv_header();
  std::string csv_row() const;
};

// All fixture inputs needed for a full report.
struct MetricInputs {
  std::vector<PromptPair> pairs;
  std::vector<Sentence> neutral_prompts;
  std::vector<StereoTriple> triples;
  std::set<std::string> occupations;
  LexiconScorer toxicity_scorer{};
  LexiconScorer sentiment_scorer{};
  const GenderLexicon* lexicon = nullptr;
};

BiasReport full_report(const LMParams& params, const Vocab& vocab,
                       const MetricInputs& inputs, const GenConfig& config,
                       const Corpus* ppl_corpus);

// Score-exchange files: one sentence per line out, one decimal score per
// line back in.
std::vector<double> read_score_lines(const std::string& path,
                                     std::size_t expected_count);

}  // namespace dpbias

#endif  // DPBIAS_METRICS_HPP_
