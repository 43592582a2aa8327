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

#include "dpbias/text.hpp"

#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "dpbias/util.hpp"

namespace dpbias {
namespace {

std::vector<std::string> toks(const std::string& s) { return tokenize(s); }

TEST_CASE("tokenize detaches edge punctuation") {
  CHECK(toks("The king smiled.") ==
        std::vector<std::string>{"The", "king", "smiled", "."});
  CHECK(toks("wait, what?!") ==
        std::vector<std::string>{"wait", ",", "what", "?", "!"});
  CHECK(toks("\"quoted\"") == std::vector<std::string>{"\"", "quoted", "\""});
}

TEST_CASE("tokenize keeps internal punctuation") {
  CHECK(toks("mother-in-law") == std::vector<std::string>{"mother-in-law"});
  CHECK(toks("o'clock.") == std::vector<std::string>{"o'clock", "."});
  CHECK(toks("'quoted'") == std::vector<std::string>{"'", "quoted", "'"});
}

TEST_CASE("tokenize handles pure punctuation and blanks") {
  CHECK(toks("...") == std::vector<std::string>{".", ".", "."});
  CHECK(toks("").empty());
  CHECK(toks("   \t ").empty());
}

TEST_CASE("tokenize passes non ASCII bytes through as word characters") {
  CHECK(toks("caf\xc3\xa9.") == std::vector<std::string>{"caf\xc3\xa9", "."});
}

TEST_CASE("Sentence keeps raw and lower in lockstep") {
  const Sentence s = parse_sentence("The King visited Rome.");
  REQUIRE(s.size() == 5);
  CHECK(s.raw[1] == "King");
  CHECK(s.lower[1] == "king");
  CHECK(s.line() == "The King visited Rome .");
}

TEST_CASE("make_sentence rejects empty input") {
  CHECK_THROWS_AS(make_sentence({}), ValidationError);
}

TEST_CASE("corpus save and load round-trip") {
  const std::string path =
      (std::filesystem::temp_directory_path() / "dpbias_text_corpus.txt")
          .string();
  Corpus corpus;
  corpus.sentences.push_back(parse_sentence("The king smiled."));
  corpus.sentences.push_back(parse_sentence("She waved back."));
  save_corpus(corpus, path);

  const Corpus loaded = load_corpus(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded.sentences[0].line() == "The king smiled .");
  CHECK(loaded.sentences[1].line() == "She waved back .");
  CHECK(loaded.provenance == Provenance::kFile);
  std::remove(path.c_str());
}

TEST_CASE("load_corpus skips blank lines") {
  const std::string path =
      (std::filesystem::temp_directory_path() / "dpbias_text_blank.txt")
          .string();
  write_text(path, "one sentence\n\n   \nanother one\n");
  CHECK(load_corpus(path).size() == 2);
  std::remove(path.c_str());
}

TEST_CASE("apply_case_pattern transfers casing shapes") {
  CHECK(apply_case_pattern("King", "queen") == "Queen");
  CHECK(apply_case_pattern("KING", "queen") == "QUEEN");
  CHECK(apply_case_pattern("king", "queen") == "queen");
  // Single capital letters count as initial-cap, not all-caps.
  CHECK(apply_case_pattern("I", "you") == "You");
  // Leading punctuation does not block the initial-cap transfer.
  CHECK(apply_case_pattern("'King", "queen") == "Queen");
  CHECK(apply_case_pattern("...", "queen") == "queen");
}

}  // namespace
}  // namespace dpbias
