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

#ifndef DPBIAS_CDA_HPP_
#define DPBIAS_CDA_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include "dpbias/lexicon.hpp"
#include "dpbias/text.hpp"

namespace dpbias {

// Counterfactual copy: every lexicon term is replaced by its opposite-gender
// counterpart, with ALL-CAPS / Initial-cap casing carried over.  Applying it
// twice returns the original sentence; token count is always preserved.
Sentence counterfactual(const Sentence& s, const GenderLexicon& lexicon);

enum class SwapDirection { kMaleToFemale, kFemaleToMale };

// One-directional variant: only terms of the source gender are replaced.
Sentence apply_direction(const Sentence& s, const GenderLexicon& lexicon,
                         SwapDirection direction);

struct GenderCounts {
  std::size_t male = 0;
  std::size_t female = 0;
};

GenderCounts count_gendered_tokens(const Sentence& s,
                                   const GenderLexicon& lexicon);
GenderCounts count_gendered_tokens(const Corpus& corpus,
                                   const GenderLexicon& lexicon);

// Counterfactual data augmentation.  The output keeps every original sentence
// in order, then appends counterfactual copies of ceil(ratio * N) distinct
// sentences chosen uniformly at random, in ascending index order of their
// originals.  ratio must lie in [0, 1].
Corpus augment(const Corpus& corpus, double ratio,
               const GenderLexicon& lexicon, std::uint64_t seed);

// Gender-marked pronouns checked by the linter.  "her" can stand for "him" or
// "his", so a pairwise lexicon usually leaves these untouched.
const std::unordered_set<std::string>& default_pronoun_terms();

struct AmbiguityReport {
  // term -> number of occurrences in the corpus.
  std::map<std::string, std::size_t> occurrences;
  std::size_t total = 0;
  std::size_t affected_sentences = 0;

  bool clean() const { return total == 0; }
  std::string to_string() const;
};

// Reports corpus tokens that are in the pronoun set but missing from the
// lexicon, meaning counterfactual() silently leaves them in place.
AmbiguityReport lint_ambiguities(
    const Corpus& corpus, const GenderLexicon& lexicon,
    const std::unordered_set<std::string>& pronoun_terms =
        default_pronoun_terms());

}  // namespace dpbias

#endif  // DPBIAS_CDA_HPP_
