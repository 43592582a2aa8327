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

#include "dpbias/metrics.hpp"

#include <cmath>

#include "dpbias/cda.hpp"
#include "dpbias/rng.hpp"
#include "dpbias/util.hpp"

namespace dpbias {
namespace {

// Index of the single differing position, or -1.
long single_diff_position(const Sentence& a, const Sentence& b) {
  if (a.size() != b.size()) return -1;
  long diff = -1;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.lower[i] != b.lower[i]) {
      if (diff >= 0) return -1;
      diff = static_cast<long>(i);
    }
  }
  return diff;
}

std::uint64_t prompt_seed(const GenConfig& config, const std::string& key,
                          int side) {
  return mix_seed(config.seed, fnv1a64(key),
                  static_cast<std::uint64_t>(side));
}

}  // namespace

std::vector<PromptPair> load_prompt_pairs(const std::string& path,
                                          const GenderLexicon& lexicon) {
  std::vector<PromptPair> pairs;
  for (const std::string& raw : read_lines(path)) {
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> fields = split_on(line, '\t');
    if (fields.size() != 3) {
      throw ValidationError(
          "prompt pair row needs template_id TAB male TAB female: " + raw);
    }
    PromptPair pair;
    pair.template_id = trim(fields[0]);
    pair.male = parse_sentence(fields[1]);
    pair.female = parse_sentence(fields[2]);
    const long diff = single_diff_position(pair.male, pair.female);
    if (diff < 0) {
      throw ValidationError(
          "prompt pair contexts must differ in exactly one token: " + raw);
    }
    const std::string& m = pair.male.lower[static_cast<std::size_t>(diff)];
    const std::string& f = pair.female.lower[static_cast<std::size_t>(diff)];
    const std::string* counterpart = lexicon.counterpart(m);
    if (lexicon.gender_of(m) != Gender::kMale || counterpart == nullptr ||
        *counterpart != f) {
      throw ValidationError(
          "differing tokens must be a male/female lexicon pair: " + raw);
    }
    pairs.push_back(std::move(pair));
  }
  if (pairs.empty()) throw ValidationError("no prompt pairs in " + path);
  return pairs;
}

std::vector<StereoTriple> load_stereo_triples(const std::string& path) {
  std::vector<StereoTriple> triples;
  for (const std::string& raw : read_lines(path)) {
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> fields = split_on(line, '\t');
    if (fields.size() != 4) {
      throw ValidationError(
          "triple row needs category TAB stereo TAB anti TAB unrelated: " +
          raw);
    }
    StereoTriple t;
    t.category = to_lower_ascii(trim(fields[0]));
    if (t.category != "gender" && t.category != "race" &&
        t.category != "religion") {
      throw ValidationError("triple category must be gender, race, or "
                            "religion: " + raw);
    }
    t.stereo = parse_sentence(fields[1]);
    t.anti = parse_sentence(fields[2]);
    t.unrelated = parse_sentence(fields[3]);
    const long d1 = single_diff_position(t.stereo, t.anti);
    const long d2 = single_diff_position(t.stereo, t.unrelated);
    if (d1 < 0 || d2 < 0 || d1 != d2) {
      throw ValidationError(
          "triple sentences must share the template except one slot: " + raw);
    }
    triples.push_back(std::move(t));
  }
  if (triples.empty()) throw ValidationError("no triples in " + path);
  return triples;
}

std::vector<Sentence> load_prompts(const std::string& path) {
  std::vector<Sentence> prompts;
  for (const std::string& raw : read_lines(path)) {
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    prompts.push_back(parse_sentence(line));
  }
  if (prompts.empty()) throw ValidationError("no prompts in " + path);
  return prompts;
}

LexiconScorer LexiconScorer::load(const std::string& path, Kind kind) {
  std::vector<std::pair<std::string, double>> terms;
  for (const std::string& raw : read_lines(path)) {
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> fields = split_on(line, '\t');
    if (fields.size() != 2) {
      throw ValidationError("scorer row needs term TAB weight: " + raw);
    }
    terms.emplace_back(to_lower_ascii(trim(fields[0])),
                       parse_double_strict(fields[1], "scorer weight"));
  }
  return from_terms(terms, kind);
}

LexiconScorer LexiconScorer::from_terms(
    const std::vector<std::pair<std::string, double>>& terms, Kind kind) {
  LexiconScorer scorer;
  scorer.kind_ = kind;
  for (const auto& [term, weight] : terms) {
    if (!(weight >= 0.0 && weight <= 1.0)) {
      throw ValidationError("scorer weight must lie in [0, 1]: " + term);
    }
    if (term.empty()) throw ValidationError("scorer term is empty");
    if (!scorer.weights_.emplace(term, weight).second) {
      throw ValidationError("duplicate scorer term: " + term);
    }
  }
  if (scorer.weights_.empty()) {
    throw ValidationError("scorer lexicon has no terms");
  }
  return scorer;
}

double LexiconScorer::score(const Sentence& s) const {
  if (s.size() == 0) return 0.0;
  double total = 0.0;
  for (const std::string& t : s.lower) {
    const auto it = weights_.find(t);
    if (it != weights_.end()) total += it->second;
  }
  const double value = total / static_cast<double>(s.size());
  return std::min(1.0, std::max(0.0, value));
}

Sentence complete_prompt(const LMParams& params, const Vocab& vocab,
                         const Sentence& prompt, int side,
                         const GenConfig& config) {
  return generate(params, vocab, prompt, config.max_tokens,
                  prompt_seed(config, prompt.line(), side),
                  config.temperature);
}

double mean_abs_diff(const std::vector<std::pair<double, double>>& scores) {
  if (scores.empty()) {
    throw ValidationError("score list is empty");
  }
  std::vector<double> diffs;
  diffs.reserve(scores.size());
  for (const auto& [a, b] : scores) diffs.push_back(std::fabs(a - b));
  return stable_mean(diffs);
}

double occupation_bias_from_sentences(const std::vector<Sentence>& sentences,
                                      const std::set<std::string>& occupations,
                                      const GenderLexicon& lexicon) {
  if (occupations.empty()) {
    throw ValidationError("occupation set is empty");
  }
  std::map<std::string, std::pair<long, long>> counts;  // o -> (n_m, n_f)
  for (const Sentence& s : sentences) {
    const GenderCounts g = count_gendered_tokens(s, lexicon);
    if (g.male == 0 && g.female == 0) continue;
    std::set<std::string> present;
    for (const std::string& t : s.lower) {
      if (occupations.count(t)) present.insert(t);
    }
    for (const std::string& o : present) {
      if (g.male > 0) ++counts[o].first;
      if (g.female > 0) ++counts[o].second;
    }
  }
  double total = 0.0;
  for (const std::string& o : occupations) {
    const auto it = counts.find(o);
    if (it == counts.end()) continue;
    total += std::fabs(static_cast<double>(it->second.first) -
                       static_cast<double>(it->second.second));
  }
  return total / static_cast<double>(occupations.size());
}

double gender_count_bias_from_sentences(const std::vector<Sentence>& sentences,
                                        const GenderLexicon& lexicon) {
  GenderCounts pooled;
  for (const Sentence& s : sentences) {
    const GenderCounts g = count_gendered_tokens(s, lexicon);
    pooled.male += g.male;
    pooled.female += g.female;
  }
  if (pooled.male + pooled.female == 0) {
    throw ValidationError("no gendered tokens generated");
  }
  const double share = static_cast<double>(pooled.male) /
                       static_cast<double>(pooled.male + pooled.female);
  return std::fabs(share - 0.5);
}

namespace {

double completion_score_bias(const LMParams& params, const Vocab& vocab,
                             const std::vector<PromptPair>& pairs,
                             const LexiconScorer& scorer,
                             const GenConfig& config) {
  if (pairs.empty()) throw ValidationError("prompt pair set is empty");
  std::vector<std::pair<double, double>> scores;
  scores.reserve(pairs.size());
  for (const PromptPair& p : pairs) {
    const Sentence sm = complete_prompt(params, vocab, p.male, 0, config);
    const Sentence sf = complete_prompt(params, vocab, p.female, 1, config);
    scores.emplace_back(scorer.score(sm), scorer.score(sf));
  }
  return mean_abs_diff(scores);
}

}  // namespace

double toxicity_bias(const LMParams& params, const Vocab& vocab,
                     const std::vector<PromptPair>& pairs,
                     const LexiconScorer& scorer, const GenConfig& config) {
  return completion_score_bias(params, vocab, pairs, scorer, config);
}

double sentiment_bias(const LMParams& params, const Vocab& vocab,
                      const std::vector<PromptPair>& pairs,
                      const LexiconScorer& scorer, const GenConfig& config) {
  return completion_score_bias(params, vocab, pairs, scorer, config);
}

double occupation_bias(const LMParams& params, const Vocab& vocab,
                       const std::vector<Sentence>& prompts,
                       const std::set<std::string>& occupations,
                       const GenderLexicon& lexicon, const GenConfig& config) {
  if (prompts.empty()) throw ValidationError("prompt set is empty");
  std::vector<Sentence> generations;
  generations.reserve(prompts.size() * config.samples);
  for (const Sentence& p : prompts) {
    for (std::size_t j = 0; j < config.samples; ++j) {
      generations.push_back(
          complete_prompt(params, vocab, p, 2 + static_cast<int>(j), config));
    }
  }
  return occupation_bias_from_sentences(generations, occupations, lexicon);
}

double gender_count_bias(const LMParams& params, const Vocab& vocab,
                         const std::vector<Sentence>& prompts,
                         const GenderLexicon& lexicon,
                         const GenConfig& config) {
  if (prompts.empty()) throw ValidationError("prompt set is empty");
  std::vector<Sentence> generations;
  generations.reserve(prompts.size() * config.samples);
  for (const Sentence& p : prompts) {
    for (std::size_t j = 0; j < config.samples; ++j) {
      generations.push_back(
          complete_prompt(params, vocab, p, 2 + static_cast<int>(j), config));
    }
  }
  return gender_count_bias_from_sentences(generations, lexicon);
}

double avg_kl(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) {
    throw ValidationError("distributions must have equal support");
  }
  double forward_kl = 0.0;
  double reverse_kl = 0.0;
  for (long i = 0; i < p.size(); ++i) {
    if (!(p[i] > 0.0 && q[i] > 0.0)) {
      throw ValidationError("distributions must be strictly positive");
    }
    const double log_ratio = std::log(p[i] / q[i]);
    forward_kl += p[i] * log_ratio;
    reverse_kl -= q[i] * log_ratio;
  }
  return 0.5 * (forward_kl + reverse_kl);
}

double hellinger(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) {
    throw ValidationError("distributions must have equal support");
  }
  // The sqrt-difference form stays exact when p and q coincide, unlike
  // 1 - sum(sqrt(p q)), which cancels to rounding noise.
  double sum = 0.0;
  for (long i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0 && q[i] >= 0.0)) {
      throw ValidationError("distributions cannot have negative mass");
    }
    const double d = std::sqrt(p[i]) - std::sqrt(q[i]);
    sum += d * d;
  }
  return std::sqrt(0.5 * sum);
}

namespace {

// Next-token distribution after the full prompt.
Eigen::VectorXd prompt_distribution(const LMParams& params,
                                    const Vocab& vocab, const Sentence& s,
                                    Workspace& ws) {
  const std::vector<int> ids = vocab.encode(s);
  const std::vector<int> ctx =
      context_window(ids, ids.size(), params.config().window);
  return forward(params, ctx, ws);
}

}  // namespace

double kl_bias(const LMParams& params, const Vocab& vocab,
               const std::vector<PromptPair>& pairs) {
  if (pairs.empty()) throw ValidationError("prompt pair set is empty");
  Workspace ws(params.config());
  std::vector<double> values;
  values.reserve(pairs.size());
  for (const PromptPair& p : pairs) {
    const Eigen::VectorXd pm = prompt_distribution(params, vocab, p.male, ws);
    const Eigen::VectorXd pf =
        prompt_distribution(params, vocab, p.female, ws);
    values.push_back(avg_kl(pm, pf));
  }
  return stable_mean(values);
}

double hellinger_bias(const LMParams& params, const Vocab& vocab,
                      const std::vector<PromptPair>& pairs) {
  if (pairs.empty()) throw ValidationError("prompt pair set is empty");
  Workspace ws(params.config());
  std::vector<double> values;
  values.reserve(pairs.size());
  for (const PromptPair& p : pairs) {
    const Eigen::VectorXd pm = prompt_distribution(params, vocab, p.male, ws);
    const Eigen::VectorXd pf =
        prompt_distribution(params, vocab, p.female, ws);
    values.push_back(hellinger(pm, pf));
  }
  return stable_mean(values);
}

double stereotype_preference_rate(const LMParams& params, const Vocab& vocab,
                                  const std::vector<StereoTriple>& triples) {
  if (triples.empty()) throw ValidationError("triple set is empty");
  Workspace ws(params.config());
  double wins = 0.0;
  for (const StereoTriple& t : triples) {
    const double lp_stereo =
        sequence_log_prob(params, vocab.encode(t.stereo), ws);
    const double lp_anti = sequence_log_prob(params, vocab.encode(t.anti), ws);
    if (lp_stereo > lp_anti) {
      wins += 1.0;
    } else if (lp_stereo == lp_anti) {
      wins += 0.5;
    }
  }
  return 100.0 * wins / static_cast<double>(triples.size());
}

std::string BiasReport::csv_header() {
  return "epsilon,mixing_ratio,seed,temperature,max_tokens,perplexity,"
         "toxicity_bias,sentiment_bias,occupation_bias,gender_count_bias,"
         "kl_bias,hellinger_bias,stereotype_preference_rate";
}

std::string BiasReport::csv_row() const {
  std::string row = epsilon_label;
  row += ',' + format_double(mixing_ratio);
  row += ',' + std::to_string(seed);
  row += ',' + format_double(temperature);
  row += ',' + std::to_string(max_tokens);
  row += ',' + format_double(perplexity);
  row += ',' + format_double(toxicity_bias);
  row += ',' + format_double(sentiment_bias);
  row += ',' + format_double(occupation_bias);
  row += ',' + format_double(gender_count_bias);
  row += ',' + format_double(kl_bias);
  row += ',' + format_double(hellinger_bias);
  row += ',' + format_double(stereotype_preference_rate);
  return row;
}

BiasReport full_report(const LMParams& params, const Vocab& vocab,
                       const MetricInputs& inputs, const GenConfig& config,
                       const Corpus* ppl_corpus) {
  if (inputs.lexicon == nullptr) {
    throw ValidationError("metric inputs need a gender lexicon");
  }
  BiasReport report;
  report.toxicity_bias = toxicity_bias(params, vocab, inputs.pairs,
                                       inputs.toxicity_scorer, config);
  report.sentiment_bias = sentiment_bias(params, vocab, inputs.pairs,
                                         inputs.sentiment_scorer, config);
  report.occupation_bias =
      occupation_bias(params, vocab, inputs.neutral_prompts,
                      inputs.occupations, *inputs.lexicon, config);
  report.gender_count_bias = gender_count_bias(
      params, vocab, inputs.neutral_prompts, *inputs.lexicon, config);
  report.kl_bias = kl_bias(params, vocab, inputs.pairs);
  report.hellinger_bias = hellinger_bias(params, vocab, inputs.pairs);
  report.stereotype_preference_rate =
      stereotype_preference_rate(params, vocab, inputs.triples);
  report.temperature = config.temperature;
  report.max_tokens = config.max_tokens;
  if (ppl_corpus != nullptr) {
    report.perplexity = perplexity(params, vocab, *ppl_corpus);
  }
  return report;
}

std::vector<double> read_score_lines(const std::string& path,
                                     std::size_t expected_count) {
  std::vector<double> scores;
  for (const std::string& line : read_lines(path)) {
    if (trim(line).empty()) continue;
    scores.push_back(parse_double_strict(line, "exchange score"));
  }
  if (scores.size() != expected_count) {
    throw ValidationError(
        "score exchange file " + path + " has " +
        std::to_string(scores.size()) + " scores, expected " +
        std::to_string(expected_count));
  }
  return scores;
}

}  // namespace dpbias
