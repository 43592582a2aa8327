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

#include "dpbias/lexicon.hpp"

#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "dpbias/util.hpp"

#ifndef DPBIAS_ASSETS_DIR
#define DPBIAS_ASSETS_DIR "assets"
#endif

namespace dpbias {
namespace {

std::string temp_file(const std::string& name, const std::string& content) {
  const std::string path =
      (std::filesystem::temp_directory_path() / name).string();
  write_text(path, content);
  return path;
}

TEST_CASE("from_pairs gives symmetric counterparts") {
  const GenderLexicon lex =
      GenderLexicon::from_pairs({{"king", "queen"}, {"he", "she"}});
  REQUIRE(lex.pair_count() == 2);
  REQUIRE(lex.counterpart("king") != nullptr);
  CHECK(*lex.counterpart("king") == "queen");
  CHECK(*lex.counterpart("queen") == "king");
  CHECK(*lex.counterpart("she") == "he");
  CHECK(lex.counterpart("castle") == nullptr);
  CHECK(lex.gender_of("king") == Gender::kMale);
  CHECK(lex.gender_of("queen") == Gender::kFemale);
  CHECK(lex.gender_of("castle") == Gender::kNone);
  CHECK(lex.is_gendered("he"));
  CHECK(!lex.is_gendered("the"));
}

TEST_CASE("load parses TSV with comments and normalizes case") {
  const std::string path = temp_file(
      "dpbias_lex_ok.tsv", "# pairs\nKing\tQueen\n\nactor\tactress\n");
  const GenderLexicon lex = GenderLexicon::load(path);
  CHECK(lex.pair_count() == 2);
  CHECK(*lex.counterpart("king") == "queen");
  CHECK(*lex.counterpart("actress") == "actor");
  std::remove(path.c_str());
}

TEST_CASE("load rejects malformed rows") {
  const std::string path = temp_file("dpbias_lex_bad.tsv", "king queen\n");
  CHECK_THROWS_AS(GenderLexicon::load(path), ValidationError);
  std::remove(path.c_str());
}

TEST_CASE("duplicate terms are rejected on either side") {
  CHECK_THROWS_AS(
      GenderLexicon::from_pairs({{"king", "queen"}, {"king", "empress"}}),
      ValidationError);
  CHECK_THROWS_AS(
      GenderLexicon::from_pairs({{"king", "queen"}, {"monarch", "queen"}}),
      ValidationError);
  // A term cannot appear on both sides of the table either.
  CHECK_THROWS_AS(
      GenderLexicon::from_pairs({{"king", "queen"}, {"queen", "consort"}}),
      ValidationError);
}

TEST_CASE("shipped gender pair fixture is well formed") {
  const GenderLexicon lex =
      GenderLexicon::load(std::string(DPBIAS_ASSETS_DIR) +
                          "/gender_pairs.tsv");
  CHECK(lex.pair_count() == 124);
  // Spot checks across the file.
  CHECK(*lex.counterpart("he") == "she");
  CHECK(*lex.counterpart("woman") == "man");
  CHECK(*lex.counterpart("grandfather") == "grandmother");
  CHECK(*lex.counterpart("actress") == "actor");
  for (const auto& [male, female] : lex.pairs()) {
    CAPTURE(male);
    CHECK(lex.gender_of(male) == Gender::kMale);
    CHECK(lex.gender_of(female) == Gender::kFemale);
    CHECK(*lex.counterpart(male) == female);
  }
}

}  // namespace
}  // namespace dpbias
