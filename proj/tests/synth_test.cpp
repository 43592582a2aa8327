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

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <unordered_map>

#include "doctest.h"
#include "dpbias/util.hpp"

#ifndef DPBIAS_ASSETS_DIR
#define DPBIAS_ASSETS_DIR "assets"
#endif

namespace dpbias {
namespace {

const std::string kAssets = DPBIAS_ASSETS_DIR;

GenderLexicon full_lexicon() {
  return GenderLexicon::load(kAssets + "/gender_pairs.tsv");
}

std::vector<Occupation> occupations() {
  return load_occupations(kAssets + "/occupations.tsv");
}

std::vector<Descriptor> descriptors() {
  return load_descriptors(kAssets + "/descriptors.tsv");
}

SkewSpec desk_spec(double rho, long n, std::uint64_t seed) {
  SkewSpec spec;
  spec.rho = rho;
  spec.n_sentences = n;
  spec.seed = seed;
  spec.occupations_file = kAssets + "/occupations.tsv";
  spec.descriptors_file = kAssets + "/descriptors.tsv";
  return spec;
}

// Sentence category sizes for n sentences: half occupation, a fifth
// descriptor, 15% story, a tenth twin, remainder neutral.
struct CategoryCounts {
  std::size_t occupation = 0;
  std::size_t descriptor = 0;
  std::size_t story = 0;
  std::size_t twin = 0;
  std::size_t neutral = 0;
  std::size_t occ_aligned = 0;
  std::size_t desc_aligned = 0;
  std::size_t desc_male = 0;
  std::size_t story_male = 0;
  std::size_t twin_male = 0;
};

CategoryCounts classify(const Corpus& corpus, const GenderLexicon& lexicon) {
  std::unordered_map<std::string, Gender> occ_stereo;
  for (const Occupation& o : occupations()) occ_stereo[o.term] = o.stereotype;
  std::unordered_map<std::string, bool> desc_positive;
  for (const Descriptor& d : descriptors()) {
    desc_positive[d.term] = d.cls == DescriptorClass::kPositive;
  }

  CategoryCounts counts;
  for (const Sentence& s : corpus.sentences) {
    const GenderCounts g = count_gendered_tokens(s, lexicon);
    Gender subject = Gender::kNone;
    for (const std::string& t : s.lower) {
      if (lexicon.gender_of(t) != Gender::kNone) {
        subject = lexicon.gender_of(t);
        break;
      }
    }
    const auto occ_it = [&]() {
      for (const std::string& t : s.lower) {
        const auto it = occ_stereo.find(t);
        if (it != occ_stereo.end()) return it;
      }
      return occ_stereo.end();
    }();
    const auto desc_it = [&]() {
      for (const std::string& t : s.lower) {
        const auto it = desc_positive.find(t);
        if (it != desc_positive.end()) return it;
      }
      return desc_positive.end();
    }();

    if (occ_it != occ_stereo.end()) {
      ++counts.occupation;
      REQUIRE(g.male + g.female == 1);
      if (subject == occ_it->second) ++counts.occ_aligned;
    } else if (desc_it != desc_positive.end()) {
      ++counts.descriptor;
      REQUIRE(g.male + g.female == 1);
      if (subject == Gender::kMale) ++counts.desc_male;
      const bool aligned = desc_it->second == (subject == Gender::kMale);
      if (aligned) ++counts.desc_aligned;
    } else if (std::find(s.lower.begin(), s.lower.end(), "saw") !=
               s.lower.end()) {
      ++counts.twin;
      REQUIRE(g.male + g.female == 1);
      if (subject == Gender::kMale) ++counts.twin_male;
    } else if (g.male + g.female == 5) {
      ++counts.story;
      CHECK((g.male == 5 || g.female == 5));
      if (g.male == 5) ++counts.story_male;
    } else {
      ++counts.neutral;
      CHECK(g.male + g.female == 0);
    }
  }
  return counts;
}

TEST_CASE("category sizes and alignment counts are exact") {
  const GenderLexicon lexicon = full_lexicon();
  const Corpus corpus = generate_synthetic_corpus(desk_spec(0.9, 1000, 3));
  REQUIRE(corpus.size() == 1000);
  CHECK(corpus.provenance == Provenance::kSynthetic);

  const CategoryCounts c = classify(corpus, lexicon);
  CHECK(c.occupation == 500);
  CHECK(c.descriptor == 200);
  CHECK(c.story == 150);
  CHECK(c.twin == 100);
  CHECK(c.neutral == 50);
  // Exactly round(rho * m) aligned sentences per skewed category.
  CHECK(c.occ_aligned == 450);
  CHECK(c.desc_aligned == 180);
  CHECK(c.story_male == 135);
  // Descriptor and twin genders are balanced by construction.
  CHECK(c.desc_male == 100);
  CHECK(c.twin_male == 50);
}

TEST_CASE("rho 0.5 balances and the extremes saturate") {
  const GenderLexicon lexicon = full_lexicon();

  const CategoryCounts balanced =
      classify(generate_synthetic_corpus(desk_spec(0.5, 400, 1)), lexicon);
  CHECK(balanced.occ_aligned == 100);  // half of 200
  CHECK(balanced.desc_aligned == 40);  // half of 80
  CHECK(balanced.twin_male == 20);     // half of 40

  const CategoryCounts all =
      classify(generate_synthetic_corpus(desk_spec(1.0, 400, 1)), lexicon);
  CHECK(all.occ_aligned == 200);
  CHECK(all.desc_aligned == 80);
  CHECK(all.story_male == 60);
  CHECK(all.twin_male == 20);  // twins ignore rho

  const CategoryCounts none =
      classify(generate_synthetic_corpus(desk_spec(0.0, 400, 1)), lexicon);
  CHECK(none.occ_aligned == 0);
  CHECK(none.desc_aligned == 0);
  CHECK(none.story_male == 0);
  CHECK(none.twin_male == 20);
}

TEST_CASE("generation is deterministic in the seed") {
  const Corpus a = generate_synthetic_corpus(desk_spec(0.9, 200, 7));
  const Corpus b = generate_synthetic_corpus(desk_spec(0.9, 200, 7));
  const Corpus c = generate_synthetic_corpus(desk_spec(0.9, 200, 8));
  REQUIRE(a.size() == b.size());
  CHECK(corpus_to_text(a) == corpus_to_text(b));
  CHECK(corpus_to_text(a) != corpus_to_text(c));
}

TEST_CASE("sentences end with a period and start capitalized") {
  const Corpus corpus = generate_synthetic_corpus(desk_spec(0.9, 50, 2));
  for (const Sentence& s : corpus.sentences) {
    CHECK(s.raw.back() == ".");
    CHECK(std::isupper(static_cast<unsigned char>(s.raw[0][0])));
    CHECK(s.lower[0][0] == std::tolower(s.raw[0][0]));
  }
}

TEST_CASE("SkewSpec validation rejects bad fields") {
  SkewSpec spec = desk_spec(0.9, 100, 0);
  spec.rho = 1.5;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec = desk_spec(0.9, 0, 0);
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec = desk_spec(0.9, 100, 0);
  spec.grammar = "v2";
  CHECK_THROWS_AS(spec.validate(), ValidationError);
}

TEST_CASE("SkewSpec reads key = value configs") {
  const std::string path =
      (std::filesystem::temp_directory_path() / "dpbias_synth_cfg.txt")
          .string();
  write_text(path, "rho = 0.7\nn_sentences = 123\nseed = 9\n");
  const SkewSpec spec = SkewSpec::from_config(path);
  CHECK(spec.rho == 0.7);
  CHECK(spec.n_sentences == 123);
  CHECK(spec.seed == 9);

  write_text(path, "rho = 0.7\nbogus = 1\n");
  CHECK_THROWS_AS(SkewSpec::from_config(path), ValidationError);
  std::remove(path.c_str());
}

TEST_CASE("loader rejects malformed occupation and descriptor rows") {
  const std::string path =
      (std::filesystem::temp_directory_path() / "dpbias_synth_occ.tsv")
          .string();
  write_text(path, "doctor\tneutral\n");
  CHECK_THROWS_AS(load_occupations(path), ValidationError);
  write_text(path, "doctor male\n");
  CHECK_THROWS_AS(load_occupations(path), ValidationError);
  write_text(path, "# only comments\n");
  CHECK_THROWS_AS(load_occupations(path), ValidationError);
  write_text(path, "lazy\tmiddling\n");
  CHECK_THROWS_AS(load_descriptors(path), ValidationError);
  std::remove(path.c_str());
}

TEST_CASE("split_validation_by_gender applies the token threshold") {
  const GenderLexicon lexicon = full_lexicon();
  Corpus corpus;
  // Five female tokens: lands in the female split only.
  corpus.sentences.push_back(
      parse_sentence("the queen told the mother that the daughter and the "
                     "sister would visit the aunt ."));
  // One male token: below the threshold for either split.
  corpus.sentences.push_back(parse_sentence("the king smiled ."));
  // Five male tokens.
  corpus.sentences.push_back(
      parse_sentence("the king told the father that the son and the brother "
                     "would visit the uncle ."));

  const GenderSplits splits =
      split_validation_by_gender(corpus, lexicon, 5);
  REQUIRE(splits.female.size() == 1);
  REQUIRE(splits.male.size() == 1);
  CHECK(splits.female.sentences[0].lower[1] == "queen");
  CHECK(splits.male.sentences[0].lower[1] == "king");

  // Threshold 1 catches the short sentence too.
  const GenderSplits loose = split_validation_by_gender(corpus, lexicon, 1);
  CHECK(loose.male.size() == 2);
  CHECK(loose.female.size() == 1);
}

TEST_CASE("synthetic story sentences populate both validation splits") {
  const GenderLexicon lexicon = full_lexicon();
  const Corpus corpus = generate_synthetic_corpus(desk_spec(0.5, 2000, 4));
  const GenderSplits splits = split_validation_by_gender(corpus, lexicon, 5);
  // Story sentences are 15% of the corpus, split roughly evenly by rho = 0.5.
  CHECK(splits.female.size() + splits.male.size() == 300);
  CHECK(splits.female.size() == 150);
  CHECK(splits.male.size() == 150);
}

TEST_CASE("swap_gender_split rewrites each half one way") {
  const GenderLexicon lexicon = full_lexicon();
  const Corpus corpus = generate_synthetic_corpus(desk_spec(0.9, 401, 5));
  const SwapSplits splits = swap_gender_split(corpus, lexicon, 11);

  // Both halves have floor(n / 2) sentences.
  CHECK(splits.a.size() == 200);
  CHECK(splits.b.size() == 200);
  CHECK(splits.a.provenance == Provenance::kAugmented);

  const GenderCounts in_a = count_gendered_tokens(splits.a, lexicon);
  const GenderCounts in_b = count_gendered_tokens(splits.b, lexicon);
  CHECK(in_a.male == 0);
  CHECK(in_a.female > 0);
  CHECK(in_b.female == 0);
  CHECK(in_b.male > 0);

  // Deterministic in the seed.
  const SwapSplits again = swap_gender_split(corpus, lexicon, 11);
  CHECK(corpus_to_text(again.a) == corpus_to_text(splits.a));
  CHECK(corpus_to_text(again.b) == corpus_to_text(splits.b));
}

TEST_CASE("swap_gender_split needs at least two sentences") {
  const GenderLexicon lexicon = full_lexicon();
  Corpus tiny;
  tiny.sentences.push_back(parse_sentence("the king smiled ."));
  CHECK_THROWS_AS(swap_gender_split(tiny, lexicon, 0), ValidationError);
}

}  // namespace
}  // namespace dpbias
