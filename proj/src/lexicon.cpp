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

#include "dpbias/util.hpp"

namespace dpbias {

GenderLexicon GenderLexicon::load(const std::string& path) {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const std::string& raw : read_lines(path)) {
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> fields = split_on(line, '\t');
    if (fields.size() != 2) {
      throw ValidationError("gender lexicon row needs exactly two "
                            "tab-separated fields: " + raw);
    }
    const std::string male = to_lower_ascii(trim(fields[0]));
    const std::string female = to_lower_ascii(trim(fields[1]));
    if (male.empty() || female.empty()) {
      throw ValidationError("gender lexicon row has an empty term: " + raw);
    }
    if (male == female) {
      throw ValidationError("gender lexicon term paired with itself: " + male);
    }
    pairs.emplace_back(male, female);
  }
  if (pairs.empty()) {
    throw ValidationError("gender lexicon is empty: " + path);
  }
  return from_pairs(pairs);
}

GenderLexicon GenderLexicon::from_pairs(
    const std::vector<std::pair<std::string, std::string>>& pairs) {
  GenderLexicon lex;
  lex.pairs_ = pairs;
  for (const auto& [male, female] : pairs) {
    if (lex.counterpart_.count(male)) {
      throw ValidationError("duplicate gender lexicon term: " + male);
    }
    if (lex.counterpart_.count(female)) {
      throw ValidationError("duplicate gender lexicon term: " + female);
    }
    lex.counterpart_[male] = female;
    lex.counterpart_[female] = male;
    lex.male_.insert(male);
    lex.female_.insert(female);
  }
  return lex;
}

const std::string* GenderLexicon::counterpart(
    const std::string& lower_token) const {
  const auto it = counterpart_.find(lower_token);
  return it == counterpart_.end() ? nullptr : &it->second;
}

Gender GenderLexicon::gender_of(const std::string& lower_token) const {
  if (male_.count(lower_token)) return Gender::kMale;
  if (female_.count(lower_token)) return Gender::kFemale;
  return Gender::kNone;
}

}  // namespace dpbias
