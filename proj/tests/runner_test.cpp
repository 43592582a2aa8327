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

#include "dpbias/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "dpbias/cda.hpp"
#include "dpbias/rng.hpp"
#include "dpbias/util.hpp"

#ifndef DPBIAS_ASSETS_DIR
#define DPBIAS_ASSETS_DIR "assets"
#endif

namespace dpbias {
namespace {

const std::string kAssets = DPBIAS_ASSETS_DIR;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string fresh_dir(const std::string& name) {
  const std::string path =
      (std::filesystem::temp_directory_path() / name).string();
  std::filesystem::remove_all(path);
  return path;
}

// A matrix small enough to execute in a few seconds per invocation.
RunSpec tiny_spec(const std::string& output_dir) {
  RunSpec spec;
  spec.synth.rho = 0.9;
  spec.synth.n_sentences = 160;
  spec.synth.seed = 21;
  spec.assets_dir = kAssets;
  spec.output_dir = output_dir;
  spec.epsilon_labels = {"3", kNonPrivateLabel};
  spec.ratios = {0.0, 0.5};
  spec.seeds = {1, 2};
  spec.dp.batch_size = 16;
  spec.dp.epochs = 1;
  spec.model.embed_dim = 4;
  spec.model.window = 2;
  spec.model.hidden_dim = 4;
  spec.gen.max_tokens = 6;
  spec.gen.samples = 2;
  spec.validation_sentences = 100;
  spec.workers = 1;
  return spec;
}

TEST_CASE("pearson matches a hand-computed reference") {
  const std::vector<double> xs = {0.0, 0.25, 0.5, 0.75, 1.0};
  const std::vector<double> ys = {5.0, 4.0, 3.5, 2.0, 1.8};
  CHECK(pearson(xs, ys) ==
        doctest::Approx(-0.9796626187480877).epsilon(1e-12));
  // Exact colinear data gives exactly +1 or -1.
  CHECK(pearson({1.0, 2.0, 3.0}, {2.0, 4.0, 6.0}) == 1.0);
  CHECK(pearson({1.0, 2.0, 3.0}, {6.0, 4.0, 2.0}) == -1.0);
}

TEST_CASE("pearson rejects degenerate inputs") {
  CHECK_THROWS_AS(pearson({1.0, 2.0}, {1.0, 2.0, 3.0}), ValidationError);
  CHECK_THROWS_AS(pearson({1.0}, {2.0}), ValidationError);
  CHECK_THROWS_AS(pearson({1.0, 1.0, 1.0}, {1.0, 2.0, 3.0}),
                  ValidationError);
  CHECK_THROWS_AS(pearson({1.0, 2.0, 3.0}, {4.0, 4.0, 4.0}),
                  ValidationError);
}

TEST_CASE("cell keys map to filesystem-safe directory names") {
  CHECK(CellKey{"3", 0.25, 7}.dir_name() == "eps3_r0.25_s7");
  CHECK(CellKey{kNonPrivateLabel, 0.0, 1}.dir_name() ==
        "epsnon-private_r0_s1");
  CHECK(CellKey{"100", 1.0, 12}.dir_name() == "eps100_r1_s12");
}

TEST_CASE("spec validation rejects malformed grids") {
  const auto broken = [&](void (*mutate)(RunSpec&)) {
    RunSpec spec = tiny_spec("out");
    mutate(spec);
    CHECK_THROWS_AS(spec.validate(), ValidationError);
  };
  broken([](RunSpec& s) { s.epsilon_labels.clear(); });
  broken([](RunSpec& s) { s.epsilon_labels = {"3", "3"}; });
  broken([](RunSpec& s) { s.epsilon_labels = {"0"}; });
  broken([](RunSpec& s) { s.epsilon_labels = {"abc"}; });
  broken([](RunSpec& s) { s.ratios.clear(); });
  broken([](RunSpec& s) { s.ratios = {0.5, 0.5}; });
  broken([](RunSpec& s) { s.ratios = {1.5}; });
  broken([](RunSpec& s) { s.ratios = {-0.25}; });
  broken([](RunSpec& s) { s.seeds.clear(); });
  broken([](RunSpec& s) { s.seeds = {4, 4}; });
  broken([](RunSpec& s) { s.model.embed_dim = 0; });
  broken([](RunSpec& s) { s.gen.max_tokens = 0; });
  broken([](RunSpec& s) { s.gen.temperature = -1.0; });
  broken([](RunSpec& s) { s.gen.samples = 0; });
  broken([](RunSpec& s) { s.validation_sentences = 0; });
  broken([](RunSpec& s) { s.output_dir.clear(); });
  broken([](RunSpec& s) { s.assets_dir.clear(); });
  broken([](RunSpec& s) { s.synth.n_sentences = 0; });

  tiny_spec("out").validate();
}

TEST_CASE("spec hash covers the experiment but not the scratch knobs") {
  const RunSpec base = tiny_spec("out_a");
  const std::uint64_t h = base.content_hash();
  CHECK(h == base.content_hash());

  RunSpec relocated = base;
  relocated.output_dir = "somewhere_else";
  relocated.workers = 7;
  CHECK(relocated.content_hash() == h);

  RunSpec reseeded = base;
  reseeded.seeds = {1, 3};
  CHECK(reseeded.content_hash() != h);
  RunSpec reshaped = base;
  reshaped.model.hidden_dim = 8;
  CHECK(reshaped.content_hash() != h);
  RunSpec retuned = base;
  retuned.dp.clip_norm = 0.2;
  CHECK(retuned.content_hash() != h);
  RunSpec reskewed = base;
  reskewed.synth.rho = 0.8;
  CHECK(reskewed.content_hash() != h);

  const std::string text = base.serialize();
  CHECK(text.find("rho=0.9\n") != std::string::npos);
  CHECK(text.find("epsilons=3,non-private\n") != std::string::npos);
  CHECK(text.find("ratios=0,0.5\n") != std::string::npos);
  CHECK(text.find("asset_gender_pairs.tsv=") != std::string::npos);
  CHECK(text.find("output_dir") == std::string::npos);
  CHECK(text.find("workers") == std::string::npos);
}

TEST_CASE("bias report csv round-trips") {
  BiasReport report;
  report.epsilon_label = kNonPrivateLabel;
  report.mixing_ratio = 0.75;
  report.seed = 4;
  report.temperature = 0.8;
  report.max_tokens = 40;
  report.perplexity = 33.25;
  report.toxicity_bias = 0.0125;
  report.sentiment_bias = 0.05;
  report.occupation_bias = 1.5;
  report.gender_count_bias = 0.125;
  report.kl_bias = 0.015625;
  report.hellinger_bias = 0.03125;
  report.stereotype_preference_rate = 57.5;

  const std::string csv =
      BiasReport::csv_header() + "\n" + report.csv_row() + "\n";
  const BiasReport back = parse_bias_report_csv(csv);
  CHECK(back.epsilon_label == report.epsilon_label);
  CHECK(back.mixing_ratio == report.mixing_ratio);
  CHECK(back.seed == report.seed);
  CHECK(back.temperature == report.temperature);
  CHECK(back.max_tokens == report.max_tokens);
  CHECK(back.perplexity == report.perplexity);
  CHECK(back.toxicity_bias == report.toxicity_bias);
  CHECK(back.sentiment_bias == report.sentiment_bias);
  CHECK(back.occupation_bias == report.occupation_bias);
  CHECK(back.gender_count_bias == report.gender_count_bias);
  CHECK(back.kl_bias == report.kl_bias);
  CHECK(back.hellinger_bias == report.hellinger_bias);
  CHECK(back.stereotype_preference_rate ==
        report.stereotype_preference_rate);

  CHECK_THROWS_AS(parse_bias_report_csv("nonsense\n"), ValidationError);
  CHECK_THROWS_AS(
      parse_bias_report_csv(BiasReport::csv_header() + "\n1,2,3\n"),
      ValidationError);
}

TEST_CASE("training log csv round-trips") {
  std::vector<EpochStats> log(2);
  log[0].epoch = 1;
  log[0].train_loss = 4.5;
  log[0].ppl_all = 60.0;
  log[0].epsilon_spent = 2.5;
  log[1].epoch = 2;
  log[1].train_loss = 4.0;
  log[1].ppl_all = 50.0;
  log[1].epsilon_spent =
      std::numeric_limits<double>::infinity();

  const std::vector<EpochStats> back =
      parse_training_log_csv(training_log_to_csv(log));
  REQUIRE(back.size() == 2);
  CHECK(back[0].epoch == 1);
  CHECK(back[0].train_loss == 4.5);
  CHECK(back[0].ppl_all == 60.0);
  CHECK(std::isnan(back[0].ppl_female));
  CHECK(back[0].epsilon_spent == 2.5);
  CHECK(std::isinf(back[1].epsilon_spent));

  CHECK_THROWS_AS(parse_training_log_csv("epoch,train_loss\n1,2\n"),
                  ValidationError);
  CHECK_THROWS_AS(parse_training_log_csv(training_log_to_csv({})),
                  ValidationError);
}

TEST_CASE("metric inputs load from the assets layout") {
  const GenderLexicon lexicon =
      GenderLexicon::load(kAssets + "/gender_pairs.tsv");
  const MetricInputs inputs = load_metric_inputs(kAssets, &lexicon);
  CHECK(inputs.pairs.size() >= 10);
  CHECK(inputs.neutral_prompts.size() >= 9);
  CHECK(inputs.triples.size() >= 20);
  CHECK(inputs.occupations.size() >= 10);
  CHECK(inputs.lexicon == &lexicon);
  CHECK_THROWS_AS(load_metric_inputs(kAssets, nullptr), ValidationError);
}

TEST_CASE("run_matrix executes, persists, resumes, and reproduces") {
  const std::string dir_a = fresh_dir("dpbias_runner_a");
  const RunSpec spec = tiny_spec(dir_a);
  const RunMatrixResult first = run_matrix(spec);
  REQUIRE(first.cells.size() == 8);
  CHECK(first.all_ok());
  for (const CellResult& cell : first.cells) CHECK(!cell.resumed);

  // Every advertised artifact exists.
  for (const char* name :
       {"run_spec.txt", "manifest.txt", "corpus/base.txt",
        "corpus/validation.txt", "corpus/vocab.txt",
        "aggregates/seed_mean.csv", "aggregates/bias_increase.csv",
        "aggregates/pearson.csv", "plots/bias_vs_epsilon.csv",
        "plots/disparity_vs_epoch.csv"}) {
    CAPTURE(name);
    CHECK(std::filesystem::exists(dir_a + "/" + name));
  }
  const std::string cell_dir =
      dir_a + "/cells/" + CellKey{"non-private", 0.5, 2}.dir_name();
  for (const char* name :
       {"report.csv", "training_log.csv", "trace.csv", "model.bin",
        "done.txt"}) {
    CAPTURE(name);
    CHECK(std::filesystem::exists(cell_dir + "/" + name));
  }

  // The persisted report carries the cell coordinates.
  const BiasReport report =
      parse_bias_report_csv(slurp(cell_dir + "/report.csv"));
  CHECK(report.epsilon_label == "non-private");
  CHECK(report.mixing_ratio == 0.5);
  CHECK(report.seed == 2);
  CHECK(report.perplexity > 1.0);

  // Aggregate shapes: header plus one row per (epsilon, ratio) group.
  const std::string seed_mean = slurp(dir_a + "/aggregates/seed_mean.csv");
  CHECK(static_cast<int>(std::count(seed_mean.begin(), seed_mean.end(),
                                    '\n')) == 5);
  const std::string pearson_csv = slurp(dir_a + "/aggregates/pearson.csv");
  CHECK(pearson_csv.find("toxicity_bias,") != std::string::npos);
  CHECK(pearson_csv.find(",yes\n") != std::string::npos);
  CHECK(pearson_csv.find("kl_bias") != std::string::npos);
  CHECK(pearson_csv.find(",no\n") != std::string::npos);

  // A second invocation resumes every cell without touching the bytes.
  const std::string report_bytes = slurp(cell_dir + "/report.csv");
  const std::string model_bytes = slurp(cell_dir + "/model.bin");
  const RunMatrixResult second = run_matrix(spec);
  CHECK(second.all_ok());
  for (const CellResult& cell : second.cells) CHECK(cell.resumed);
  CHECK(slurp(cell_dir + "/report.csv") == report_bytes);
  CHECK(slurp(cell_dir + "/model.bin") == model_bytes);

  // A fresh directory reproduces the artifacts byte for byte.
  const std::string dir_b = fresh_dir("dpbias_runner_b");
  RunSpec moved = spec;
  moved.output_dir = dir_b;
  const RunMatrixResult third = run_matrix(moved);
  CHECK(third.all_ok());
  const std::string cell_dir_b =
      dir_b + "/cells/" + CellKey{"non-private", 0.5, 2}.dir_name();
  CHECK(slurp(cell_dir_b + "/report.csv") == report_bytes);
  CHECK(slurp(cell_dir_b + "/model.bin") == model_bytes);
  CHECK(slurp(dir_b + "/aggregates/seed_mean.csv") == seed_mean);

  // A changed spec invalidates the resume markers instead of reusing them.
  RunSpec changed = spec;
  changed.dp.learning_rate = 1e-3;
  const RunMatrixResult fourth = run_matrix(changed);
  CHECK(fourth.all_ok());
  for (const CellResult& cell : fourth.cells) CHECK(!cell.resumed);

  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
}

TEST_CASE("run_matrix agrees with the hand-assembled pipeline") {
  const std::string dir = fresh_dir("dpbias_runner_direct");
  const RunSpec spec = tiny_spec(dir);
  const RunMatrixResult result = run_matrix(spec);
  REQUIRE(result.all_ok());
  const CellResult* cell = result.find("non-private", 0.5, 2);
  REQUIRE(cell != nullptr);

  // Rebuild the same cell from the public pieces.
  const GenderLexicon lexicon =
      GenderLexicon::load(kAssets + "/gender_pairs.tsv");
  const auto occupations = load_occupations(kAssets + "/occupations.tsv");
  const auto descriptors = load_descriptors(kAssets + "/descriptors.tsv");
  const Corpus base =
      generate_synthetic_corpus(spec.synth, occupations, descriptors);
  SkewSpec val_spec = spec.synth;
  val_spec.rho = 0.5;
  val_spec.n_sentences = spec.validation_sentences;
  val_spec.seed = mix_seed(spec.synth.seed, 0x76616c69ULL);
  const Corpus validation =
      generate_synthetic_corpus(val_spec, occupations, descriptors);
  const GenderSplits splits =
      split_validation_by_gender(validation, lexicon, 5);
  const Vocab vocab = build_vocab(base, 1, &lexicon);
  ModelConfig model = spec.model;
  model.vocab_size = static_cast<int>(vocab.size());

  const Corpus training = augment(base, 0.5, lexicon, 2);
  DPConfig dp = spec.dp;
  dp.non_private = true;
  EvalSuite eval;
  eval.all = &validation;
  eval.female = splits.female.size() > 0 ? &splits.female : nullptr;
  eval.male = splits.male.size() > 0 ? &splits.male : nullptr;
  const TrainResult trained = train(training, vocab, model, dp, 2, eval);

  const MetricInputs inputs = load_metric_inputs(kAssets, &lexicon);
  GenConfig gen = spec.gen;
  gen.seed = 2;
  const BiasReport direct =
      full_report(trained.params, vocab, inputs, gen, &validation);

  CHECK(cell->report.perplexity == direct.perplexity);
  CHECK(cell->report.toxicity_bias == direct.toxicity_bias);
  CHECK(cell->report.sentiment_bias == direct.sentiment_bias);
  CHECK(cell->report.occupation_bias == direct.occupation_bias);
  CHECK(cell->report.gender_count_bias == direct.gender_count_bias);
  CHECK(cell->report.kl_bias == direct.kl_bias);
  CHECK(cell->report.hellinger_bias == direct.hellinger_bias);
  CHECK(cell->report.stereotype_preference_rate ==
        direct.stereotype_preference_rate);
  REQUIRE(cell->log.size() == trained.log.size());
  CHECK(cell->log.back().train_loss == trained.log.back().train_loss);

  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace dpbias
