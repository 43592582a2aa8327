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

#include "dpbias/probes.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>

#include "dpbias/rng.hpp"
#include "dpbias/util.hpp"
#include "doctest.h"

namespace dpbias {
namespace {

struct ProbeFixture {
  Corpus corpus;
  Vocab vocab;
  ModelConfig model;

  ProbeFixture() {
    const char* lines[] = {
        "the king waved at the crowd", "the queen waved at the crowd",
        "he read a long book",         "she read a long book",
        "the market opened early",     "a quiet day passed",
    };
    for (const char* l : lines) corpus.sentences.push_back(parse_sentence(l));
    vocab = Vocab::build(corpus);
    model.vocab_size = vocab.size();
    model.embed_dim = 4;
    model.window = 2;
    model.hidden_dim = 4;
  }

  LMParams random_params(std::uint64_t seed) const {
    LMParams params(model);
    params.init(seed);
    return params;
  }
};

Corpus pick(const Corpus& corpus, std::initializer_list<std::size_t> idx) {
  Corpus out;
  for (std::size_t i : idx) out.sentences.push_back(corpus.sentences[i]);
  return out;
}

TEST_CASE("singleton split reduces to the sentence gradient") {
  const ProbeFixture fx;
  const LMParams params = fx.random_params(3);
  const Corpus split = pick(fx.corpus, {0});

  Workspace ws(fx.model);
  Eigen::VectorXd grad(fx.model.param_count());
  sentence_loss(params, fx.vocab.encode(split.sentences[0]), ws, &grad);

  CHECK(split_gradient_l1(params, fx.vocab, split) == grad.lpNorm<1>());
  CHECK(split_mean_gradient_l1(params, fx.vocab, split) == grad.lpNorm<1>());
}

TEST_CASE("split measurements ignore the storage order") {
  const ProbeFixture fx;
  const LMParams params = fx.random_params(4);
  const Corpus forward = pick(fx.corpus, {0, 2, 4});
  const Corpus shuffled = pick(fx.corpus, {4, 0, 2});
  CHECK(split_gradient_l1(params, fx.vocab, forward) ==
        split_gradient_l1(params, fx.vocab, shuffled));
  CHECK(split_mean_gradient_l1(params, fx.vocab, forward) ==
        split_mean_gradient_l1(params, fx.vocab, shuffled));
}

TEST_CASE("mean-of-norms dominates the norm-of-mean") {
  const ProbeFixture fx;
  const LMParams params = fx.random_params(5);
  // Triangle inequality: |mean g_i|_1 <= mean |g_i|_1.
  CHECK(split_gradient_l1(params, fx.vocab, fx.corpus) <=
        split_mean_gradient_l1(params, fx.vocab, fx.corpus) + 1e-12);
}

TEST_CASE("mirrored splits measure equally under tied parameters") {
  const ProbeFixture fx;
  LMParams params = fx.random_params(6);
  // Tie every parameter that tells king and queen (and he and she) apart.
  const auto tie = [&](const char* male, const char* female) {
    const int m = *fx.vocab.id_of(male);
    const int f = *fx.vocab.id_of(female);
    params.embeddings().col(f) = params.embeddings().col(m);
    params.output_weights().col(f) = params.output_weights().col(m);
    params.output_offsets()(f) = params.output_offsets()(m);
  };
  tie("king", "queen");
  tie("he", "she");

  const Corpus male_split = pick(fx.corpus, {0, 2});
  const Corpus female_split = pick(fx.corpus, {1, 3});
  CHECK(split_gradient_l1(params, fx.vocab, male_split) ==
        doctest::Approx(split_gradient_l1(params, fx.vocab, female_split))
            .epsilon(1e-12));
  CHECK(split_mean_gradient_l1(params, fx.vocab, male_split) ==
        doctest::Approx(
            split_mean_gradient_l1(params, fx.vocab, female_split))
            .epsilon(1e-12));

  // Untied parameters break the symmetry.
  const LMParams untied = fx.random_params(6);
  CHECK(split_gradient_l1(untied, fx.vocab, male_split) !=
        split_gradient_l1(untied, fx.vocab, female_split));
}

TEST_CASE("empty splits are rejected") {
  const ProbeFixture fx;
  const LMParams params = fx.random_params(7);
  const Corpus empty;
  CHECK_THROWS_AS(split_gradient_l1(params, fx.vocab, empty),
                  ValidationError);
  CHECK_THROWS_AS(split_mean_gradient_l1(params, fx.vocab, empty),
                  ValidationError);
}

TEST_CASE("disparity trace derives ratios from the epoch log") {
  std::vector<EpochStats> log(2);
  log[0].epoch = 1;
  log[0].l1_female = 0.2;
  log[0].l1_male = 0.1;
  log[0].ppl_female = 30.0;
  log[0].ppl_male = 20.0;
  log[0].l1_mean_norm_female = 0.5;
  log[0].l1_mean_norm_male = 0.25;
  log[1].epoch = 2;
  log[1].l1_female = 0.3;
  log[1].l1_male = 0.0;  // ratio denominator vanishes
  log[1].ppl_female = 25.0;
  // ppl_male and the mean-norm columns stay NaN.

  const DisparityTrace trace = disparity_trace(log);
  REQUIRE(trace.rows.size() == 2);
  CHECK(trace.rows[0].ratio == 2.0);
  CHECK(trace.rows[0].ppl_ratio == 1.5);
  CHECK(std::isnan(trace.rows[1].ratio));
  CHECK(std::isnan(trace.rows[1].ppl_ratio));

  const std::string csv = trace.to_csv();
  CHECK(csv ==
        "epoch,l1_female,l1_male,ratio,ppl_female,ppl_male,ppl_ratio,"
        "l1_mean_norm_female,l1_mean_norm_male\n"
        "1,0.2,0.1,2,30,20,1.5,0.5,0.25\n"
        "2,0.3,0,undefined,25,nan,undefined,nan,nan\n");
}

TEST_CASE("swapped experiment trains on the exchanged halves") {
  const GenderLexicon lexicon = GenderLexicon::from_pairs(
      {{"he", "she"}, {"king", "queen"}, {"man", "woman"}});

  Corpus corpus;
  const char* lines[] = {
      "the king waved at the crowd", "he read a long book",
      "the man opened the market",   "she walked to the square",
      "the queen sang a song",       "the woman closed the stall",
  };
  for (const char* l : lines) corpus.sentences.push_back(parse_sentence(l));

  DPConfig config;
  config.non_private = true;
  config.batch_size = 2;
  config.epochs = 2;
  config.learning_rate = 0.01;

  ModelConfig model;
  model.embed_dim = 4;
  model.window = 2;
  model.hidden_dim = 4;

  const std::string pair_path =
      (std::filesystem::temp_directory_path() / "dpbias_probe_pairs.tsv")
          .string();
  write_text(pair_path, "p1\tthe king waved\tthe queen waved\n");
  const std::vector<PromptPair> pairs = load_prompt_pairs(pair_path, lexicon);
  std::remove(pair_path.c_str());

  const LexiconScorer scorer = LexiconScorer::from_terms(
      {{"crowd", 1.0}}, LexiconScorer::Kind::kToxicity);
  GenConfig gen;
  gen.max_tokens = 6;
  gen.seed = 2;

  const SwappedResult r = swapped_experiment(corpus, lexicon, config, model,
                                             pairs, scorer, gen, 11);
  CHECK(std::isfinite(r.grad_ratio_ab));
  CHECK(r.grad_ratio_ab > 0.0);
  CHECK(r.ppl_a > 1.0);
  CHECK(r.ppl_b > 1.0);
  CHECK(std::isfinite(r.toxicity_bias));
  CHECK(r.toxicity_bias >= 0.0);

  const SwappedResult again = swapped_experiment(corpus, lexicon, config,
                                                 model, pairs, scorer, gen,
                                                 11);
  CHECK(again.grad_ratio_ab == r.grad_ratio_ab);
  CHECK(again.ppl_a == r.ppl_a);
  CHECK(again.toxicity_bias == r.toxicity_bias);
}

}  // namespace
}  // namespace dpbias
