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

#include "dpbias/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "dpbias/rng.hpp"
#include "dpbias/util.hpp"

namespace dpbias {
namespace {

constexpr char kMagic[4] = {'D', 'P', 'L', 'M'};
constexpr std::uint32_t kVersion = 1;

long offset_hidden_w(const ModelConfig& c) {
  return static_cast<long>(c.vocab_size) * c.embed_dim;
}
long offset_hidden_b(const ModelConfig& c) {
  return offset_hidden_w(c) +
         static_cast<long>(c.window) * c.embed_dim * c.hidden_dim;
}
long offset_output_w(const ModelConfig& c) {
  return offset_hidden_b(c) + c.hidden_dim;
}
long offset_output_b(const ModelConfig& c) {
  return offset_output_w(c) + static_cast<long>(c.hidden_dim) * c.vocab_size;
}

void write_u32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::ifstream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw IoError("truncated checkpoint header: " + path);
  }
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void ModelConfig::validate() const {
  if (vocab_size < 4 || embed_dim < 1 || window < 1 || hidden_dim < 1) {
    throw ValidationError("model dimensions out of range (V >= 4 and "
                          "positive d, k, h required)");
  }
}

long ModelConfig::param_count() const {
  return offset_output_b(*this) + vocab_size;
}

LMParams::LMParams(const ModelConfig& config) : config_(config) {
  config_.validate();
  flat_ = Eigen::VectorXd::Zero(config_.param_count());
}

void LMParams::init(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x696e6974ULL));  // "init"
  for (long i = 0; i < offset_hidden_w(config_); ++i) {
    flat_[i] = rng.uniform() * 0.2 - 0.1;
  }
  for (long i = offset_hidden_w(config_); i < offset_hidden_b(config_); ++i) {
    flat_[i] = rng.uniform() * 0.2 - 0.1;
  }
  for (long i = offset_hidden_b(config_); i < offset_output_w(config_); ++i) {
    flat_[i] = 0.0;
  }
  for (long i = offset_output_w(config_); i < offset_output_b(config_); ++i) {
    flat_[i] = rng.uniform() * 0.2 - 0.1;
  }
  for (long i = offset_output_b(config_); i < config_.param_count(); ++i) {
    flat_[i] = 0.0;
  }
}

Eigen::Map<Eigen::MatrixXd> LMParams::embeddings() {
  return {flat_.data(), config_.embed_dim, config_.vocab_size};
}
Eigen::Map<Eigen::MatrixXd> LMParams::hidden_weights() {
  return {flat_.data() + offset_hidden_w(config_),
          static_cast<long>(config_.window) * config_.embed_dim,
          config_.hidden_dim};
}
Eigen::Map<Eigen::VectorXd> LMParams::hidden_offsets() {
  return {flat_.data() + offset_hidden_b(config_), config_.hidden_dim};
}
Eigen::Map<Eigen::MatrixXd> LMParams::output_weights() {
  return {flat_.data() + offset_output_w(config_), config_.hidden_dim,
          config_.vocab_size};
}
Eigen::Map<Eigen::VectorXd> LMParams::output_offsets() {
  return {flat_.data() + offset_output_b(config_), config_.vocab_size};
}

Eigen::Map<const Eigen::MatrixXd> LMParams::embeddings() const {
  return {flat_.data(), config_.embed_dim, config_.vocab_size};
}
Eigen::Map<const Eigen::MatrixXd> LMParams::hidden_weights() const {
  return {flat_.data() + offset_hidden_w(config_),
          static_cast<long>(config_.window) * config_.embed_dim,
          config_.hidden_dim};
}
Eigen::Map<const Eigen::VectorXd> LMParams::hidden_offsets() const {
  return {flat_.data() + offset_hidden_b(config_), config_.hidden_dim};
}
Eigen::Map<const Eigen::MatrixXd> LMParams::output_weights() const {
  return {flat_.data() + offset_output_w(config_), config_.hidden_dim,
          config_.vocab_size};
}
Eigen::Map<const Eigen::VectorXd> LMParams::output_offsets() const {
  return {flat_.data() + offset_output_b(config_), config_.vocab_size};
}

void LMParams::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_u32(out, static_cast<std::uint32_t>(config_.vocab_size));
  write_u32(out, static_cast<std::uint32_t>(config_.embed_dim));
  write_u32(out, static_cast<std::uint32_t>(config_.window));
  write_u32(out, static_cast<std::uint32_t>(config_.hidden_dim));
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(flat_.data()),
              static_cast<std::streamsize>(flat_.size() * sizeof(double)));
  } else {
    for (long i = 0; i < flat_.size(); ++i) {
      std::uint64_t bits;
      std::memcpy(&bits, &flat_[i], 8);
      unsigned char b[8];
      for (int j = 0; j < 8; ++j) {
        b[j] = static_cast<unsigned char>(bits >> (8 * j));
      }
      out.write(reinterpret_cast<const char*>(b), 8);
    }
  }
  if (!out) throw IoError("checkpoint write failed: " + path);
}

LMParams LMParams::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError("not a model checkpoint (bad magic): " + path);
  }
  const std::uint32_t version = read_u32(in, path);
  if (version != kVersion) {
    throw IoError("unsupported checkpoint version " +
                  std::to_string(version) + ": " + path);
  }
  ModelConfig config;
  config.vocab_size = static_cast<int>(read_u32(in, path));
  config.embed_dim = static_cast<int>(read_u32(in, path));
  config.window = static_cast<int>(read_u32(in, path));
  config.hidden_dim = static_cast<int>(read_u32(in, path));
  config.validate();
  LMParams params(config);
  const long n = config.param_count();
  if constexpr (std::endian::native == std::endian::little) {
    if (!in.read(reinterpret_cast<char*>(params.flat_.data()),
                 static_cast<std::streamsize>(n * sizeof(double)))) {
      throw IoError("truncated checkpoint payload: " + path);
    }
  } else {
    for (long i = 0; i < n; ++i) {
      unsigned char b[8];
      if (!in.read(reinterpret_cast<char*>(b), 8)) {
        throw IoError("truncated checkpoint payload: " + path);
      }
      std::uint64_t bits = 0;
      for (int j = 0; j < 8; ++j) {
        bits |= static_cast<std::uint64_t>(b[j]) << (8 * j);
      }
      std::memcpy(&params.flat_[i], &bits, 8);
    }
  }
  char extra;
  if (in.read(&extra, 1)) {
    throw IoError("trailing bytes after checkpoint payload: " + path);
  }
  if (!params.all_finite()) {
    throw IoError("checkpoint contains non-finite values: " + path);
  }
  return params;
}

Workspace::Workspace(const ModelConfig& config)
    : x(static_cast<long>(config.window) * config.embed_dim),
      act(config.hidden_dim),
      probs(config.vocab_size),
      dlogit(config.vocab_size),
      dact(config.hidden_dim),
      dx(static_cast<long>(config.window) * config.embed_dim) {}

std::vector<int> context_window(const std::vector<int>& ids, std::size_t pos,
                                int window) {
  std::vector<int> ctx(window, Vocab::kBos);
  for (int j = 0; j < window; ++j) {
    const long src = static_cast<long>(pos) - window + j;
    if (src >= 0) ctx[j] = ids[static_cast<std::size_t>(src)];
  }
  return ctx;
}

namespace {

// Fills ws.x with the concatenated context embeddings and ws.probs with the
// softmax; ws.act keeps the tanh activations for the backward pass.
void forward_position(const LMParams& params, const int* context,
                      Workspace& ws) {
  const ModelConfig& c = params.config();
  const auto emb = params.embeddings();
  for (int j = 0; j < c.window; ++j) {
    ws.x.segment(static_cast<long>(j) * c.embed_dim, c.embed_dim) =
        emb.col(context[j]);
  }
  ws.act.noalias() = params.hidden_weights().transpose() * ws.x;
  ws.act += params.hidden_offsets();
  ws.act = ws.act.array().tanh();
  ws.probs.noalias() = params.output_weights().transpose() * ws.act;
  ws.probs += params.output_offsets();
  const double zmax = ws.probs.maxCoeff();
  ws.probs = (ws.probs.array() - zmax).exp();
  ws.probs /= ws.probs.sum();
}

// Backpropagates one position into the flat gradient; ws.probs must still
// hold the softmax and ws.dlogit the softmax-minus-onehot error.
void backward_position(const LMParams& params, const int* context,
                       Workspace& ws, Eigen::VectorXd& grad) {
  const ModelConfig& c = params.config();
  const long kd = static_cast<long>(c.window) * c.embed_dim;
  Eigen::Map<Eigen::MatrixXd> g_w2(
      grad.data() + c.vocab_size * static_cast<long>(c.embed_dim) +
          kd * c.hidden_dim + c.hidden_dim,
      c.hidden_dim, c.vocab_size);
  Eigen::Map<Eigen::VectorXd> g_b2(
      grad.data() + grad.size() - c.vocab_size, c.vocab_size);
  Eigen::Map<Eigen::MatrixXd> g_w1(
      grad.data() + c.vocab_size * static_cast<long>(c.embed_dim), kd,
      c.hidden_dim);
  Eigen::Map<Eigen::VectorXd> g_b1(
      grad.data() + c.vocab_size * static_cast<long>(c.embed_dim) +
          kd * c.hidden_dim,
      c.hidden_dim);
  Eigen::Map<Eigen::MatrixXd> g_emb(grad.data(), c.embed_dim, c.vocab_size);

  g_b2 += ws.dlogit;
  g_w2.noalias() += ws.act * ws.dlogit.transpose();
  ws.dact.noalias() = params.output_weights() * ws.dlogit;
  ws.dact.array() *= 1.0 - ws.act.array().square();
  g_b1 += ws.dact;
  g_w1.noalias() += ws.x * ws.dact.transpose();
  ws.dx.noalias() = params.hidden_weights() * ws.dact;
  for (int j = 0; j < c.window; ++j) {
    g_emb.col(context[j]) +=
        ws.dx.segment(static_cast<long>(j) * c.embed_dim, c.embed_dim);
  }
}

}  // namespace

const Eigen::VectorXd& forward(const LMParams& params,
                               const std::vector<int>& context,
                               Workspace& ws) {
  if (static_cast<int>(context.size()) != params.config().window) {
    throw ValidationError("context size must equal the model window");
  }
  for (int id : context) {
    if (id < 0 || id >= params.config().vocab_size) {
      throw ValidationError("token id out of range: " + std::to_string(id));
    }
  }
  forward_position(params, context.data(), ws);
  return ws.probs;
}

double loss_and_grad(const LMParams& params, const std::vector<int>& context,
                     int target, Workspace& ws, Eigen::VectorXd* grad) {
  const ModelConfig& c = params.config();
  if (target < 0 || target >= c.vocab_size) {
    throw ValidationError("target id out of range: " + std::to_string(target));
  }
  forward(params, context, ws);
  const double loss = -std::log(std::max(ws.probs[target], 1e-300));
  if (grad != nullptr) {
    grad->setZero(c.param_count());
    ws.dlogit = ws.probs;
    ws.dlogit[target] -= 1.0;
    backward_position(params, context.data(), ws, *grad);
  }
  return loss;
}

double sentence_loss(const LMParams& params, const std::vector<int>& ids,
                     Workspace& ws, Eigen::VectorXd* grad) {
  const ModelConfig& c = params.config();
  if (grad != nullptr) {
    grad->setZero(c.param_count());
  }
  std::vector<int> ctx(c.window, Vocab::kBos);
  double loss = 0.0;
  const std::size_t n_targets = ids.size() + 1;  // content tokens plus <eos>
  for (std::size_t t = 0; t < n_targets; ++t) {
    ctx = context_window(ids, t, c.window);
    forward_position(params, ctx.data(), ws);
    const int target = t < ids.size() ? ids[t] : Vocab::kEos;
    loss += -std::log(std::max(ws.probs[target], 1e-300));
    if (grad != nullptr) {
      ws.dlogit = ws.probs;
      ws.dlogit[target] -= 1.0;
      backward_position(params, ctx.data(), ws, *grad);
    }
  }
  return loss;
}

double sequence_log_prob(const LMParams& params, const std::vector<int>& ids,
                         Workspace& ws) {
  const ModelConfig& c = params.config();
  double logp = 0.0;
  for (std::size_t t = 0; t < ids.size(); ++t) {
    const std::vector<int> ctx = context_window(ids, t, c.window);
    forward_position(params, ctx.data(), ws);
    logp += std::log(std::max(ws.probs[ids[t]], 1e-300));
  }
  return logp;
}

double perplexity(const LMParams& params, const Vocab& vocab,
                  const Corpus& corpus) {
  if (corpus.size() == 0) {
    throw ValidationError("perplexity over an empty corpus is undefined");
  }
  Workspace ws(params.config());
  double total_logp = 0.0;
  std::size_t total_tokens = 0;
  for (const Sentence& s : corpus.sentences) {
    const std::vector<int> ids = vocab.encode(s);
    total_logp += sequence_log_prob(params, ids, ws);
    total_tokens += ids.size();
  }
  return std::exp(-total_logp / static_cast<double>(total_tokens));
}

Sentence generate(const LMParams& params, const Vocab& vocab,
                  const Sentence& prompt, std::size_t n_tokens,
                  std::uint64_t seed, double temperature) {
  if (temperature < 0.0) {
    throw ValidationError("temperature cannot be negative");
  }
  const ModelConfig& c = params.config();
  if (vocab.size() != c.vocab_size) {
    throw ValidationError("vocabulary size does not match the model");
  }
  Workspace ws(params.config());
  Rng rng(mix_seed(seed, 0x67656e32ULL));  // "gen2"
  std::vector<int> ids = vocab.encode(prompt);
  Sentence out = prompt;
  for (std::size_t step = 0; step < n_tokens; ++step) {
    const std::vector<int> ctx = context_window(ids, ids.size(), c.window);
    forward_position(params, ctx.data(), ws);
    int picked = 0;
    if (temperature == 0.0) {
      Eigen::Index arg = 0;
      ws.probs.maxCoeff(&arg);
      picked = static_cast<int>(arg);
    } else {
      if (temperature != 1.0) {
        ws.probs = (ws.probs.array().log() / temperature).exp();
        ws.probs /= ws.probs.sum();
      }
      const double u = rng.uniform();
      double acc = 0.0;
      picked = c.vocab_size - 1;
      for (int v = 0; v < c.vocab_size; ++v) {
        acc += ws.probs[v];
        if (u < acc) {
          picked = v;
          break;
        }
      }
    }
    if (picked == Vocab::kEos) break;
    ids.push_back(picked);
    out.raw.push_back(vocab.token(picked));
    out.lower.push_back(vocab.token(picked));
  }
  return out;
}

}  // namespace dpbias
