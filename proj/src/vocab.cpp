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

#include "dpbias/vocab.hpp"

#include <algorithm>
#include <map>

#include "dpbias/util.hpp"

namespace dpbias {
namespace {

const char* const kSpecials[] = {"<bos>", "<eos>", "<unk>"};

}  // namespace

Vocab Vocab::build(const Corpus& corpus, std::size_t min_count,
                   const GenderLexicon* lexicon) {
  if (corpus.size() == 0) {
    throw ValidationError("cannot build a vocabulary from an empty corpus");
  }
  std::map<std::string, std::size_t> counts;
  for (const Sentence& s : corpus.sentences) {
    for (const std::string& t : s.lower) ++counts[t];
  }
  std::map<std::string, std::size_t> kept;
  for (const auto& [term, count] : counts) {
    if (count >= min_count) kept.emplace(term, count);
  }
  if (lexicon != nullptr) {
    std::vector<std::pair<std::string, std::size_t>> missing;
    for (const auto& [term, count] : kept) {
      const std::string* other = lexicon->counterpart(term);
      if (other != nullptr && kept.find(*other) == kept.end()) {
        const auto it = counts.find(*other);
        missing.emplace_back(*other, it == counts.end() ? 0 : it->second);
      }
    }
    for (const auto& [term, count] : missing) kept.emplace(term, count);
  }
  std::vector<std::pair<std::string, std::size_t>> entries(kept.begin(),
                                                           kept.end());
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) {
              if (a.second != b.second) return a.second > b.second;
              return a.first < b.first;
            });
  std::vector<std::string> tokens(std::begin(kSpecials), std::end(kSpecials));
  for (const auto& [term, count] : entries) {
    if (term == "<bos>" || term == "<eos>" || term == "<unk>") continue;
    tokens.push_back(term);
  }
  return from_tokens(std::move(tokens));
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  Vocab v;
  v.tokens_ = std::move(tokens);
  for (int i = 0; i < static_cast<int>(v.tokens_.size()); ++i) {
    const auto [it, fresh] = v.ids_.emplace(v.tokens_[i], i);
    if (!fresh) {
      throw ValidationError("duplicate vocabulary token: " + v.tokens_[i]);
    }
  }
  for (int i = 0; i < 3; ++i) {
    if (v.tokens_.size() <= 3 || v.tokens_[i] != kSpecials[i]) {
      throw ValidationError(
          "vocabulary must start with <bos>, <eos>, <unk> and contain at "
          "least one regular token");
    }
  }
  return v;
}

Vocab Vocab::load(const std::string& path) {
  std::vector<std::string> tokens;
  for (const std::string& line : read_lines(path)) {
    if (line.empty()) continue;
    tokens.push_back(line);
  }
  return from_tokens(std::move(tokens));
}

void Vocab::save(const std::string& path) const {
  std::string out;
  for (const std::string& t : tokens_) {
    out += t;
    out.push_back('\n');
  }
  write_text(path, out);
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || id >= size()) {
    throw ValidationError("token id out of range: " + std::to_string(id));
  }
  return tokens_[id];
}

std::optional<int> Vocab::id_of(const std::string& lower_token) const {
  const auto it = ids_.find(lower_token);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

int Vocab::id_or_unk(const std::string& lower_token) const {
  const auto it = ids_.find(lower_token);
  return it == ids_.end() ? kUnk : it->second;
}

std::vector<int> Vocab::encode(const Sentence& s) const {
  std::vector<int> ids;
  ids.reserve(s.size());
  for (const std::string& t : s.lower) ids.push_back(id_or_unk(t));
  return ids;
}

}  // namespace dpbias
