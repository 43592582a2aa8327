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

#ifndef DPBIAS_MODEL_HPP_
#define DPBIAS_MODEL_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "dpbias/text.hpp"
#include "dpbias/vocab.hpp"

namespace dpbias {

struct ModelConfig {
  int vocab_size = 0;   // V
  int embed_dim = 32;   // d
  int window = 8;       // k
  int hidden_dim = 64;  // h

  void validate() const;
  long param_count() const;
};

// Fixed-window feed-forward next-token model.  The k previous token
// embeddings are concatenated, passed through one tanh layer, and projected
// to vocabulary logits.  All parameters live in a single flat vector; the
// matrix views below alias it.
//
// Flat layout (also the checkpoint payload order): embedding vectors one
// token at a time (V blocks of d), hidden weights one hidden unit at a time
// (h columns of k*d), h hidden offsets, output weights one vocabulary entry
// at a time (V columns of h), V output offsets.
class LMParams {
 public:
  explicit LMParams(const ModelConfig& config);

  // Uniform(-0.1, 0.1) weights, zero offsets.
  void init(std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  Eigen::VectorXd& flat() { return flat_; }
  const Eigen::VectorXd& flat() const { return flat_; }

  Eigen::Map<Eigen::MatrixXd> embeddings();          // d x V
  Eigen::Map<Eigen::MatrixXd> hidden_weights();      // (k*d) x h
  Eigen::Map<Eigen::VectorXd> hidden_offsets();      // h
  Eigen::Map<Eigen::MatrixXd> output_weights();      // h x V
  Eigen::Map<Eigen::VectorXd> output_offsets();      // V
  Eigen::Map<const Eigen::MatrixXd> embeddings() const;
  Eigen::Map<const Eigen::MatrixXd> hidden_weights() const;
  Eigen::Map<const Eigen::VectorXd> hidden_offsets() const;
  Eigen::Map<const Eigen::MatrixXd> output_weights() const;
  Eigen::Map<const Eigen::VectorXd> output_offsets() const;

  bool all_finite() const { return flat_.allFinite(); }

  // Binary checkpoint: "DPLM" magic, u32 version, u32 V/d/k/h, then the flat
  // vector as little-endian float64.
  void save(const std::string& path) const;
  static LMParams load(const std::string& path);

 private:
  ModelConfig config_;
  Eigen::VectorXd flat_;
};

// Scratch buffers for one forward/backward position; reused across calls.
struct Workspace {
  Eigen::VectorXd x;       // k*d context vector
  Eigen::VectorXd act;     // h tanh activations
  Eigen::VectorXd probs;   // V softmax output
  Eigen::VectorXd dlogit;  // V
  Eigen::VectorXd dact;    // h
  Eigen::VectorXd dx;      // k*d

  explicit Workspace(const ModelConfig& config);
};

// Left-pads with <bos> so every position has a full window.
std::vector<int> context_window(const std::vector<int>& ids, std::size_t pos,
                                int window);

// Softmax over the next token given the k context ids (most recent last).
// Writes into ws.probs and returns a reference to it.
const Eigen::VectorXd& forward(const LMParams& params,
                               const std::vector<int>& context,
                               Workspace& ws);

// Cross-entropy -log p(target | context) for one position; when grad is
// non-null it receives the exact analytic gradient (flat layout), overwriting
// its previous content.
double loss_and_grad(const LMParams& params, const std::vector<int>& context,
                     int target, Workspace& ws, Eigen::VectorXd* grad);

// Sum over positions of -log p(target | context) for the sentence
// w_1..w_L plus a final <eos> target.  When grad is non-null it receives the
// per-sentence gradient (same layout as the flat parameter vector),
// overwriting its previous content.
double sentence_loss(const LMParams& params, const std::vector<int>& ids,
                     Workspace& ws, Eigen::VectorXd* grad);

// log p(w_1..w_L); the <eos> continuation is not counted.
double sequence_log_prob(const LMParams& params, const std::vector<int>& ids,
                         Workspace& ws);

// exp of the mean negative log-likelihood per real token over the corpus.
double perplexity(const LMParams& params, const Vocab& vocab,
                  const Corpus& corpus);

// Appends up to n_tokens sampled tokens to the prompt, stopping early at
// <eos>.  Sampling is multinomial over the temperature-scaled distribution;
// temperature 0 means argmax.  Deterministic given the seed.
Sentence generate(const LMParams& params, const Vocab& vocab,
                  const Sentence& prompt, std::size_t n_tokens,
                  std::uint64_t seed, double temperature = 1.0);

}  // namespace dpbias

#endif  // DPBIAS_MODEL_HPP_
