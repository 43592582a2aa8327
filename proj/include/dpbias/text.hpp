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

#ifndef DPBIAS_TEXT_HPP_
#define DPBIAS_TEXT_HPP_

#include <string>
#include <vector>

namespace dpbias {

// A tokenized sentence.  `raw` keeps the surface form (original casing),
// `lower` holds the canonical lowercase form used everywhere tokens are
// compared, counted, or looked up.  Both vectors always have the same length
// and are non-empty.
struct Sentence {
  std::vector<std::string> raw;
  std::vector<std::string> lower;

  std::size_t size() const { return raw.size(); }
  std::string line() const;
};

// Whitespace tokenization with punctuation detached from word edges.
// Sentence-internal hyphens and apostrophes stay inside the token
// ("mother-in-law", "o'clock").  Returns an empty list for blank input.
std::vector<std::string> tokenize(const std::string& line);

Sentence make_sentence(const std::vector<std::string>& raw_tokens);
Sentence parse_sentence(const std::string& line);

enum class Provenance { kSynthetic, kFile, kAugmented };

struct Corpus {
  std::vector<Sentence> sentences;
  Provenance provenance = Provenance::kFile;

  std::size_t size() const { return sentences.size(); }
};

// One sentence per line, LF separated, UTF-8 passed through byte-wise.
// Blank lines are skipped on load.
Corpus load_corpus(const std::string& path);
void save_corpus(const Corpus& corpus, const std::string& path);
std::string corpus_to_text(const Corpus& corpus);

// Casing transfer used when a token is replaced by another word: ALL-CAPS and
// Initial-capital patterns of `pattern` are re-applied to `replacement`
// (which is expected in lowercase).
std::string apply_case_pattern(const std::string& pattern,
                               const std::string& replacement);

}  // namespace dpbias

#endif  // DPBIAS_TEXT_HPP_
