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

#ifndef DPBIAS_SYNTH_HPP_
#define DPBIAS_SYNTH_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "dpbias/cda.hpp"
#include "dpbias/lexicon.hpp"
#include "dpbias/text.hpp"

namespace dpbias {

// Controls for the synthetic skewed corpus.  rho is the fraction of skewed
// sentences that follow their stereotype (occupation gender, descriptor
// valence, story cast); rho = 0.5 gives a balanced corpus.
struct SkewSpec {
  double rho = 0.9;
  long n_sentences = 10000;
  std::uint64_t seed = 0;
  std::string occupations_file;
  std::string descriptors_file;
  std::string grammar = "v1";  // template grammar id

  // key = value file with the fields above; unknown keys are rejected.
  static SkewSpec from_config(const std::string& path);
  void validate() const;
};

struct Occupation {
  std::string term;
  Gender stereotype = Gender::kNone;
};

enum class DescriptorClass { kPositive, kNegative, kToxic };

struct Descriptor {
  std::string term;
  DescriptorClass cls = DescriptorClass::kPositive;
};

// TSV loaders: term TAB male|female, and term TAB positive|negative|toxic.
std::vector<Occupation> load_occupations(const std::string& path);
std::vector<Descriptor> load_descriptors(const std::string& path);

// Sentence mix: half occupation sentences (one gendered subject or object, one
// occupation term), a fifth descriptor sentences (one gendered token, one
// valenced descriptor), 15% story sentences (five same-gender tokens), a
// tenth twin sentences (one gendered token, a neutral object, emitted in
// exact male/female pairs so they carry no skew at any rho), the rest neutral
// filler.  Exactly round(rho * count) sentences of each skewed category are
// stereotype-aligned, so the aligned fraction is within 1/n_sentences of rho.
Corpus generate_synthetic_corpus(const SkewSpec& spec);
Corpus generate_synthetic_corpus(const SkewSpec& spec,
                                 const std::vector<Occupation>& occupations,
                                 const std::vector<Descriptor>& descriptors);

struct GenderSplits {
  Corpus female;  // sentences with >= min_gendered female-side tokens
  Corpus male;    // sentences with >= min_gendered male-side tokens
};

// A sentence can land in both splits if it clears both thresholds; either
// split may come back empty.
GenderSplits split_validation_by_gender(const Corpus& corpus,
                                        const GenderLexicon& lexicon,
                                        std::size_t min_gendered = 5);

struct SwapSplits {
  Corpus a;  // male words rewritten to female; no male-side tokens remain
  Corpus b;  // female words rewritten to male; no female-side tokens remain
};

// Randomly halves the corpus, rewrites one half male-to-female and the other
// female-to-male, and trims both to the same size.
SwapSplits swap_gender_split(const Corpus& corpus,
                             const GenderLexicon& lexicon,
                             std::uint64_t seed);

}  // namespace dpbias

#endif  // DPBIAS_SYNTH_HPP_
