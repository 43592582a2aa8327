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

#ifndef DPBIAS_VOCAB_HPP_
#define DPBIAS_VOCAB_HPP_

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dpbias/lexicon.hpp"
#include "dpbias/text.hpp"

namespace dpbias {

// Token table over canonical lowercase tokens.  Ids 0..2 are reserved for
// <bos>, <eos>, <unk>; the rest are corpus tokens ordered by descending
// frequency, ties broken lexicographically.
class Vocab {
 public:
  static constexpr int kBos = 0;
  static constexpr int kEos = 1;
  static constexpr int kUnk = 2;

  // Tokens seen at least min_count times get an id; rarer ones fall back to
  // <unk>.  When a lexicon is given, the table is additionally closed under
  // gender swapping: the counterpart of every surviving lexicon term is added
  // even if the corpus never uses it, so counterfactual text cannot fall back
  // to <unk>.
  static Vocab build(const Corpus& corpus, std::size_t min_count = 1,
                     const GenderLexicon* lexicon = nullptr);
  static Vocab load(const std::string& path);
  void save(const std::string& path) const;

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(int id) const;
  std::optional<int> id_of(const std::string& lower_token) const;
  int id_or_unk(const std::string& lower_token) const;

  std::vector<int> encode(const Sentence& s) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  static Vocab from_tokens(std::vector<std::string> tokens);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

inline Vocab build_vocab(const Corpus& corpus, std::size_t min_count = 1,
                         const GenderLexicon* lexicon = nullptr) {
  return Vocab::build(corpus, min_count, lexicon);
}

}  // namespace dpbias

#endif  // DPBIAS_VOCAB_HPP_
