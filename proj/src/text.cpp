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

#include <cctype>

#include "dpbias/util.hpp"

namespace dpbias {
namespace {

// ASCII alphanumerics and all non-ASCII bytes count as word characters.
bool is_word_char(unsigned char c) {
  return std::isalnum(c) || c >= 0x80;
}

}  // namespace

std::string Sentence::line() const {
  std::string out;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (i) out.push_back(' ');
    out += raw[i];
  }
  return out;
}

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> tokens;
  for (const std::string& chunk : split_whitespace(line)) {
    std::size_t first = chunk.size();
    std::size_t last = 0;
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      if (is_word_char(static_cast<unsigned char>(chunk[i]))) {
        if (first == chunk.size()) first = i;
        last = i;
      }
    }
    if (first == chunk.size()) {
      // Pure punctuation: one token per character.
      for (char c : chunk) tokens.emplace_back(1, c);
      continue;
    }
    for (std::size_t i = 0; i < first; ++i) tokens.emplace_back(1, chunk[i]);
    // The core keeps internal punctuation ("mother-in-law", "o'clock").
    tokens.push_back(chunk.substr(first, last - first + 1));
    for (std::size_t i = last + 1; i < chunk.size(); ++i) {
      tokens.emplace_back(1, chunk[i]);
    }
  }
  return tokens;
}

Sentence make_sentence(const std::vector<std::string>& raw_tokens) {
  if (raw_tokens.empty()) {
    throw ValidationError("sentence must have at least one token");
  }
  Sentence s;
  s.raw = raw_tokens;
  s.lower.reserve(raw_tokens.size());
  for (const std::string& t : raw_tokens) s.lower.push_back(to_lower_ascii(t));
  return s;
}

Sentence parse_sentence(const std::string& line) {
  return make_sentence(tokenize(line));
}

Corpus load_corpus(const std::string& path) {
  Corpus corpus;
  corpus.provenance = Provenance::kFile;
  for (const std::string& line : read_lines(path)) {
    if (trim(line).empty()) continue;
    corpus.sentences.push_back(parse_sentence(line));
  }
  return corpus;
}

std::string corpus_to_text(const Corpus& corpus) {
  std::string out;
  for (const Sentence& s : corpus.sentences) {
    out += s.line();
    out.push_back('\n');
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  write_text(path, corpus_to_text(corpus));
}

std::string apply_case_pattern(const std::string& pattern,
                               const std::string& replacement) {
  int alpha = 0;
  int upper = 0;
  bool first_alpha_upper = false;
  for (char c : pattern) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      if (alpha == 0) {
        first_alpha_upper = std::isupper(static_cast<unsigned char>(c)) != 0;
      }
      ++alpha;
      if (std::isupper(static_cast<unsigned char>(c))) ++upper;
    }
  }
  std::string out = replacement;
  if (alpha >= 2 && upper == alpha) {
    for (char& c : out) c = static_cast<char>(std::toupper(
        static_cast<unsigned char>(c)));
  } else if (alpha >= 1 && first_alpha_upper) {
    for (char& c : out) {
      if (std::isalpha(static_cast<unsigned char>(c))) {
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        break;
      }
    }
  }
  return out;
}

}  // namespace dpbias
