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

#include "dpbias/synth.hpp"

#include <cmath>

#include "dpbias/rng.hpp"
#include "dpbias/util.hpp"

namespace dpbias {
namespace {

// Gendered noun pools; every entry is a lexicon term so splits and swaps stay
// exact.  Index i of the female pool is the counterpart of index i of the
// male pool.  The pools are kept deliberately small: a compact vocabulary
// with few templates gives every pattern enough repetitions to survive
// clipped, noised gradients at desk scale.
const std::vector<std::string> kMaleNouns = {"man", "boy", "king", "father",
                                             "son"};
const std::vector<std::string> kFemaleNouns = {"woman", "girl", "queen",
                                               "mother", "daughter"};

const std::vector<std::string> kNeutralNouns = {"market", "garden", "river",
                                                "road"};
const std::vector<std::string> kNeutralAdjs = {"quiet", "busy", "bright"};

std::string subject_noun(Gender g, Rng& rng) {
  // Occupation and descriptor sentences use the short noun subset.
  const std::vector<std::string>& pool =
      g == Gender::kMale ? kMaleNouns : kFemaleNouns;
  return pool[rng.uniform_index(2)];  // man/woman, boy/girl
}

std::vector<bool> exact_flags(std::size_t n, std::size_t n_true, Rng& rng) {
  std::vector<bool> flags(n, false);
  for (std::size_t i = 0; i < n_true && i < n; ++i) flags[i] = true;
  rng.shuffle(flags);
  return flags;
}

Sentence finish(std::vector<std::string> tokens) {
  tokens.push_back(".");
  if (!tokens.empty() && !tokens[0].empty()) {
    tokens[0] = apply_case_pattern("X", tokens[0]);
  }
  return make_sentence(tokens);
}

Sentence occupation_sentence(const std::string& occ, Gender g, Rng& rng) {
  const std::string pronoun = g == Gender::kMale ? "he" : "she";
  if (rng.uniform_index(2) == 0) {
    return finish({pronoun, "was", "a", occ});
  }
  return finish({"the", occ, "met", "the", subject_noun(g, rng)});
}

Sentence descriptor_sentence(const std::string& desc, Gender g, Rng& rng) {
  return finish({"the", subject_noun(g, rng), "was", desc});
}

Sentence story_sentence(Gender g, Rng& rng) {
  const std::vector<std::string>& pool =
      g == Gender::kMale ? kMaleNouns : kFemaleNouns;
  const std::string pronoun = g == Gender::kMale ? "he" : "she";
  std::string w[4];
  for (auto& t : w) t = pool[rng.uniform_index(pool.size())];
  return finish({pronoun, "met", "the", w[0], "and", "the", w[1], "and",
                 "the", w[2], "and", "the", w[3]});
}

// Twin sentences pair a gendered subject with a neutral object and are
// emitted in exact male/female pairs, so their conditionals carry no gender
// signal at any rho.  Subject index 2 selects the bare pronoun form.
Sentence twin_sentence(std::size_t subject, std::size_t object, Gender g) {
  const std::string obj = kNeutralNouns[object];
  if (subject == 2) {
    return finish({g == Gender::kMale ? "he" : "she", "saw", "the", obj});
  }
  const std::string& noun = g == Gender::kMale ? kMaleNouns[subject]
                                               : kFemaleNouns[subject];
  return finish({"the", noun, "saw", "the", obj});
}

Sentence neutral_sentence(Rng& rng) {
  const std::string n1 = kNeutralNouns[rng.uniform_index(kNeutralNouns.size())];
  const std::string adj = kNeutralAdjs[rng.uniform_index(kNeutralAdjs.size())];
  return finish({"the", n1, "was", adj});
}

Gender flip(Gender g) {
  return g == Gender::kMale ? Gender::kFemale : Gender::kMale;
}

}  // namespace

SkewSpec SkewSpec::from_config(const std::string& path) {
  SkewSpec spec;
  for (const auto& [key, value] : parse_key_values(path)) {
    if (key == "rho") {
      spec.rho = parse_double_strict(value, "rho");
    } else if (key == "n_sentences") {
      spec.n_sentences = parse_long_strict(value, "n_sentences");
    } else if (key == "seed") {
      spec.seed = static_cast<std::uint64_t>(
          parse_long_strict(value, "seed"));
    } else if (key == "occupations_file") {
      spec.occupations_file = value;
    } else if (key == "descriptors_file") {
      spec.descriptors_file = value;
    } else {
      throw ValidationError("unknown corpus config key: " + key);
    }
  }
  spec.validate();
  return spec;
}

void SkewSpec::validate() const {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw ValidationError("rho must lie in [0, 1], got " +
                          format_double(rho));
  }
  if (n_sentences <= 0) {
    throw ValidationError("n_sentences must be positive, got " +
                          std::to_string(n_sentences));
  }
  if (grammar != "v1") {
    throw ValidationError("unknown template grammar id: " + grammar);
  }
}

std::vector<Occupation> load_occupations(const std::string& path) {
  std::vector<Occupation> out;
  for (const std::string& raw : read_lines(path)) {
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> fields = split_on(line, '\t');
    if (fields.size() != 2) {
      throw ValidationError("occupation row needs term TAB stereotype: " +
                            raw);
    }
    Occupation occ;
    occ.term = to_lower_ascii(trim(fields[0]));
    const std::string tag = to_lower_ascii(trim(fields[1]));
    if (tag == "male") {
      occ.stereotype = Gender::kMale;
    } else if (tag == "female") {
      occ.stereotype = Gender::kFemale;
    } else {
      throw ValidationError("occupation stereotype must be male or female: " +
                            raw);
    }
    if (occ.term.empty()) {
      throw ValidationError("occupation term is empty: " + raw);
    }
    out.push_back(occ);
  }
  if (out.empty()) throw ValidationError("no occupations in " + path);
  return out;
}

std::vector<Descriptor> load_descriptors(const std::string& path) {
  std::vector<Descriptor> out;
  for (const std::string& raw : read_lines(path)) {
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> fields = split_on(line, '\t');
    if (fields.size() != 2) {
      throw ValidationError("descriptor row needs term TAB class: " + raw);
    }
    Descriptor d;
    d.term = to_lower_ascii(trim(fields[0]));
    const std::string tag = to_lower_ascii(trim(fields[1]));
    if (tag == "positive") {
      d.cls = DescriptorClass::kPositive;
    } else if (tag == "negative") {
      d.cls = DescriptorClass::kNegative;
    } else if (tag == "toxic") {
      d.cls = DescriptorClass::kToxic;
    } else {
      throw ValidationError(
          "descriptor class must be positive, negative, or toxic: " + raw);
    }
    if (d.term.empty()) {
      throw ValidationError("descriptor term is empty: " + raw);
    }
    out.push_back(d);
  }
  if (out.empty()) throw ValidationError("no descriptors in " + path);
  return out;
}

Corpus generate_synthetic_corpus(const SkewSpec& spec) {
  return generate_synthetic_corpus(spec,
                                   load_occupations(spec.occupations_file),
                                   load_descriptors(spec.descriptors_file));
}

Corpus generate_synthetic_corpus(const SkewSpec& spec,
                                 const std::vector<Occupation>& occupations,
                                 const std::vector<Descriptor>& descriptors) {
  spec.validate();
  std::vector<const Descriptor*> positive;
  std::vector<const Descriptor*> adverse;  // negative and toxic
  for (const Descriptor& d : descriptors) {
    (d.cls == DescriptorClass::kPositive ? positive : adverse).push_back(&d);
  }
  if (positive.empty() || adverse.empty()) {
    throw ValidationError(
        "descriptor list needs both positive and negative/toxic terms");
  }

  const std::size_t n = static_cast<std::size_t>(spec.n_sentences);
  const std::size_t n_occ = (n + 1) / 2;
  const std::size_t n_desc = n / 5;
  const std::size_t n_story = n * 3 / 20;
  const std::size_t n_twin = n / 10;
  const std::size_t n_neutral = n - n_occ - n_desc - n_story - n_twin;

  Rng rng(mix_seed(spec.seed, 0x636f7270ULL));  // "corp"
  const auto aligned_count = [&](std::size_t m) {
    return static_cast<std::size_t>(
        std::llround(spec.rho * static_cast<double>(m)));
  };

  Corpus corpus;
  corpus.provenance = Provenance::kSynthetic;
  corpus.sentences.reserve(n);

  // Occupation sentences: aligned means the subject gender matches the
  // occupation's stereotype.
  const std::vector<bool> occ_aligned =
      exact_flags(n_occ, aligned_count(n_occ), rng);
  for (std::size_t i = 0; i < n_occ; ++i) {
    const Occupation& occ = occupations[rng.uniform_index(occupations.size())];
    const Gender g = occ_aligned[i] ? occ.stereotype : flip(occ.stereotype);
    corpus.sentences.push_back(occupation_sentence(occ.term, g, rng));
  }

  // Descriptor sentences: aligned means male with positive terms and female
  // with negative or toxic terms.  Genders themselves are balanced.
  const std::vector<bool> desc_aligned =
      exact_flags(n_desc, aligned_count(n_desc), rng);
  const std::vector<bool> desc_male = exact_flags(n_desc, n_desc / 2, rng);
  for (std::size_t i = 0; i < n_desc; ++i) {
    const Gender g = desc_male[i] ? Gender::kMale : Gender::kFemale;
    const bool positive_term = desc_aligned[i] == (g == Gender::kMale);
    const auto& pool = positive_term ? positive : adverse;
    const Descriptor* d = pool[rng.uniform_index(pool.size())];
    corpus.sentences.push_back(descriptor_sentence(d->term, g, rng));
  }

  // Story sentences carry five same-gender tokens; aligned means male cast.
  const std::vector<bool> story_male =
      exact_flags(n_story, aligned_count(n_story), rng);
  for (std::size_t i = 0; i < n_story; ++i) {
    corpus.sentences.push_back(
        story_sentence(story_male[i] ? Gender::kMale : Gender::kFemale, rng));
  }

  // Twin sentences ignore rho: consecutive emissions share one subject and
  // object draw and differ only in gender.
  std::size_t twin_subject = 0;
  std::size_t twin_object = 0;
  for (std::size_t i = 0; i < n_twin; ++i) {
    if (i % 2 == 0) {
      twin_subject = rng.uniform_index(3);
      twin_object = rng.uniform_index(kNeutralNouns.size());
    }
    corpus.sentences.push_back(
        twin_sentence(twin_subject, twin_object,
                      i % 2 == 0 ? Gender::kMale : Gender::kFemale));
  }

  for (std::size_t i = 0; i < n_neutral; ++i) {
    corpus.sentences.push_back(neutral_sentence(rng));
  }

  rng.shuffle(corpus.sentences);
  return corpus;
}

GenderSplits split_validation_by_gender(const Corpus& corpus,
                                        const GenderLexicon& lexicon,
                                        std::size_t min_gendered) {
  GenderSplits splits;
  splits.female.provenance = corpus.provenance;
  splits.male.provenance = corpus.provenance;
  for (const Sentence& s : corpus.sentences) {
    const GenderCounts c = count_gendered_tokens(s, lexicon);
    if (c.female >= min_gendered) splits.female.sentences.push_back(s);
    if (c.male >= min_gendered) splits.male.sentences.push_back(s);
  }
  return splits;
}

SwapSplits swap_gender_split(const Corpus& corpus,
                             const GenderLexicon& lexicon,
                             std::uint64_t seed) {
  if (corpus.size() < 2) {
    throw ValidationError("swap split needs at least two sentences");
  }
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(mix_seed(seed, 0x73776170ULL));  // "swap"
  rng.shuffle(order);
  const std::size_t half = corpus.size() / 2;

  SwapSplits splits;
  splits.a.provenance = Provenance::kAugmented;
  splits.b.provenance = Provenance::kAugmented;
  splits.a.sentences.reserve(half);
  splits.b.sentences.reserve(half);
  for (std::size_t i = 0; i < half; ++i) {
    splits.a.sentences.push_back(apply_direction(
        corpus.sentences[order[i]], lexicon, SwapDirection::kMaleToFemale));
    splits.b.sentences.push_back(
        apply_direction(corpus.sentences[order[half + i]], lexicon,
                        SwapDirection::kFemaleToMale));
  }
  return splits;
}

}  // namespace dpbias
