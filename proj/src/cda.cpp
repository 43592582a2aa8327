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

#include "dpbias/cda.hpp"

#include <cmath>

#include "dpbias/rng.hpp"
#include "dpbias/util.hpp"

namespace dpbias {

Sentence counterfactual(const Sentence& s, const GenderLexicon& lexicon) {
  Sentence out = s;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const std::string* other = lexicon.counterpart(s.lower[i]);
    if (other == nullptr) continue;
    out.lower[i] = *other;
    out.raw[i] = apply_case_pattern(s.raw[i], *other);
  }
  return out;
}

Sentence apply_direction(const Sentence& s, const GenderLexicon& lexicon,
                         SwapDirection direction) {
  const Gender source = direction == SwapDirection::kMaleToFemale
                            ? Gender::kMale
                            : Gender::kFemale;
  Sentence out = s;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (lexicon.gender_of(s.lower[i]) != source) continue;
    const std::string* other = lexicon.counterpart(s.lower[i]);
    out.lower[i] = *other;
    out.raw[i] = apply_case_pattern(s.raw[i], *other);
  }
  return out;
}

GenderCounts count_gendered_tokens(const Sentence& s,
                                   const GenderLexicon& lexicon) {
  GenderCounts c;
  for (const std::string& t : s.lower) {
    switch (lexicon.gender_of(t)) {
      case Gender::kMale: ++c.male; break;
      case Gender::kFemale: ++c.female; break;
      case Gender::kNone: break;
    }
  }
  return c;
}

GenderCounts count_gendered_tokens(const Corpus& corpus,
                                   const GenderLexicon& lexicon) {
  GenderCounts c;
  for (const Sentence& s : corpus.sentences) {
    const GenderCounts sc = count_gendered_tokens(s, lexicon);
    c.male += sc.male;
    c.female += sc.female;
  }
  return c;
}

Corpus augment(const Corpus& corpus, double ratio,
               const GenderLexicon& lexicon, std::uint64_t seed) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw ValidationError("augmentation ratio must lie in [0, 1], got " +
                          format_double(ratio));
  }
  Corpus out = corpus;
  out.provenance = Provenance::kAugmented;
  const std::size_t n = corpus.size();
  const std::size_t k =
      static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n)));
  if (k == 0) return out;
  Rng rng(mix_seed(seed, 0x6175676dULL));  // "augm"
  const std::vector<std::size_t> picked = rng.sample_indices(n, k);
  out.sentences.reserve(n + picked.size());
  for (std::size_t idx : picked) {
    out.sentences.push_back(counterfactual(corpus.sentences[idx], lexicon));
  }
  return out;
}

const std::unordered_set<std::string>& default_pronoun_terms() {
  static const std::unordered_set<std::string> kTerms = {
      "he", "him", "his", "himself", "she", "her", "hers", "herself"};
  return kTerms;
}

AmbiguityReport lint_ambiguities(
    const Corpus& corpus, const GenderLexicon& lexicon,
    const std::unordered_set<std::string>& pronoun_terms) {
  AmbiguityReport report;
  for (const Sentence& s : corpus.sentences) {
    bool hit = false;
    for (const std::string& t : s.lower) {
      if (pronoun_terms.count(t) && !lexicon.is_gendered(t)) {
        ++report.occurrences[t];
        ++report.total;
        hit = true;
      }
    }
    if (hit) ++report.affected_sentences;
  }
  return report;
}

std::string AmbiguityReport::to_string() const {
  if (clean()) return "no ambiguous gendered terms found";
  std::string out = "ambiguous gendered terms (counterfactual rewrite is "
                    "context dependent):";
  for (const auto& [term, count] : occurrences) {
    out += "\n  " + term + ": " + std::to_string(count);
  }
  out += "\n  total " + std::to_string(total) + " occurrence(s) across " +
         std::to_string(affected_sentences) + " sentence(s)";
  return out;
}

}  // namespace dpbias
