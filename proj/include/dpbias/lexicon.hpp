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

#ifndef DPBIAS_LEXICON_HPP_
#define DPBIAS_LEXICON_HPP_

#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace dpbias {

enum class Gender { kNone, kMale, kFemale };

// Bidirectional male/female word pairs.  Lookup keys are canonical lowercase
// tokens.
class GenderLexicon {
 public:
  // TSV with two columns (male TAB female), '#' comments and blank lines
  // ignored.  Throws ValidationError on malformed rows or if any term occurs
  // twice.
  static GenderLexicon load(const std::string& path);
  static GenderLexicon from_pairs(
      const std::vector<std::pair<std::string, std::string>>& pairs);

  // Opposite-gender counterpart, or nullptr if the token is not gendered.
  const std::string* counterpart(const std::string& lower_token) const;

  Gender gender_of(const std::string& lower_token) const;
  bool is_gendered(const std::string& lower_token) const {
    return gender_of(lower_token) != Gender::kNone;
  }

  std::size_t pair_count() const { return pairs_.size(); }
  const std::vector<std::pair<std::string, std::string>>& pairs() const {
    return pairs_;
  }

 private:
  std::vector<std::pair<std::string, std::string>> pairs_;
  std::unordered_map<std::string, std::string> counterpart_;
  std::unordered_set<std::string> male_;
  std::unordered_set<std::string> female_;
};

}  // namespace dpbias

#endif  // DPBIAS_LEXICON_HPP_
