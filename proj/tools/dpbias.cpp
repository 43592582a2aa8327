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
// Command-line front end: corpus generation, augmentation, training,
// evaluation, probes, and the full experiment matrix.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dpbias/cda.hpp"
#include "dpbias/probes.hpp"
#include "dpbias/runner.hpp"
#include "dpbias/synth.hpp"
#include "dpbias/util.hpp"

namespace {

using namespace dpbias;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitCellFailure = 2;
constexpr int kExitIo = 3;

std::string join_path(const std::string& dir, const std::string& name) {
  return dir + "/" + name;
}

struct DPFlags {
  double epsilon = 0.0;
  double sigma = -1.0;
  bool non_private = false;
  DPConfig dp;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--epsilon", epsilon,
                    "Target privacy budget (calibrates sigma)");
    cmd->add_option("--sigma", sigma, "Noise multiplier (overrides epsilon)");
    cmd->add_flag("--non-private", non_private,
                  "Disable clipping and noise");
    cmd->add_option("--clip-norm", dp.clip_norm, "Per-sentence L2 clip bound")
        ->capture_default_str();
    cmd->add_option("--batch-size", dp.batch_size, "Expected batch size")
        ->capture_default_str();
    cmd->add_option("--learning-rate", dp.learning_rate, "Adam step size")
        ->capture_default_str();
    cmd->add_option("--epochs", dp.epochs, "Training epochs")
        ->capture_default_str();
    cmd->add_option("--delta", dp.delta, "Privacy parameter delta")
        ->capture_default_str();
  }

  DPConfig resolve() const {
    DPConfig out = dp;
    out.non_private = non_private;
    if (!non_private) {
      if (sigma >= 0.0) {
        out.sigma = sigma;
      } else if (epsilon > 0.0) {
        out.target_epsilon = epsilon;
      } else {
        throw ValidationError(
            "pick one of --epsilon, --sigma, or --non-private");
      }
    }
    return out;
  }
};

struct ModelFlags {
  ModelConfig model;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--embed-dim", model.embed_dim, "Embedding width")
        ->capture_default_str();
    cmd->add_option("--window", model.window, "Context window length")
        ->capture_default_str();
    cmd->add_option("--hidden-dim", model.hidden_dim, "Hidden layer width")
        ->capture_default_str();
  }
};

struct GenFlags {
  GenConfig gen;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--max-tokens", gen.max_tokens,
                    "Tokens generated per prompt")
        ->capture_default_str();
    cmd->add_option("--temperature", gen.temperature, "Sampling temperature")
        ->capture_default_str();
    cmd->add_option("--samples", gen.samples,
                    "Completions per unpaired prompt")
        ->capture_default_str();
  }
};

int run_gen_corpus(const SkewSpec& spec, const std::string& occupations_file,
                   const std::string& descriptors_file,
                   const std::string& out) {
  SkewSpec resolved = spec;
  resolved.occupations_file = occupations_file;
  resolved.descriptors_file = descriptors_file;
  const Corpus corpus = generate_synthetic_corpus(
      resolved, load_occupations(occupations_file),
      load_descriptors(descriptors_file));
  save_corpus(corpus, out);
  std::printf("wrote %zu sentences to %s\n", corpus.size(), out.c_str());
  return kExitOk;
}

int run_augment(const std::string& in, double ratio, std::uint64_t seed,
                const std::string& pairs_file, const std::string& out,
                bool lint, const std::string& pronouns_file) {
  const Corpus corpus = load_corpus(in);
  const GenderLexicon lexicon = GenderLexicon::load(pairs_file);
  if (lint) {
    std::unordered_set<std::string> pronouns = default_pronoun_terms();
    if (!pronouns_file.empty()) {
      pronouns.clear();
      for (const std::string& line : read_lines(pronouns_file)) {
        const std::string term = to_lower_ascii(trim(line));
        if (!term.empty() && term[0] != '#') pronouns.insert(term);
      }
    }
    const AmbiguityReport report =
        lint_ambiguities(corpus, lexicon, pronouns);
    std::printf("%s\n", report.to_string().c_str());
  }
  const Corpus augmented = augment(corpus, ratio, lexicon, seed);
  save_corpus(augmented, out);
  std::printf("wrote %zu sentences (%zu original + %zu counterfactual) to "
              "%s\n",
              augmented.size(), corpus.size(),
              augmented.size() - corpus.size(), out.c_str());
  return kExitOk;
}

int run_train(const std::string& corpus_file, const std::string& val_file,
              const std::string& assets_dir, const DPFlags& dp_flags,
              const ModelConfig& model_flags, std::uint64_t seed,
              const std::string& out_dir) {
  const Corpus corpus = load_corpus(corpus_file);
  const GenderLexicon lexicon =
      GenderLexicon::load(join_path(assets_dir, "gender_pairs.tsv"));
  const Vocab vocab = build_vocab(corpus, 1, &lexicon);
  ModelConfig mc = model_flags;
  mc.vocab_size = vocab.size();

  Corpus validation;
  GenderSplits splits;
  EvalSuite eval;
  if (!val_file.empty()) {
    validation = load_corpus(val_file);
    splits = split_validation_by_gender(validation, lexicon, 5);
    eval.all = &validation;
    eval.female = splits.female.size() > 0 ? &splits.female : nullptr;
    eval.male = splits.male.size() > 0 ? &splits.male : nullptr;
  }

  const TrainResult result =
      train(corpus, vocab, mc, dp_flags.resolve(), seed, eval);

  ensure_directory(out_dir);
  result.params.save(join_path(out_dir, "model.bin"));
  vocab.save(join_path(out_dir, "vocab.txt"));
  write_text(join_path(out_dir, "training_log.csv"),
             training_log_to_csv(result.log));
  write_text(join_path(out_dir, "trace.csv"),
             disparity_trace(result.log).to_csv());
  std::printf("sigma=%s epsilon=%s artifacts in %s\n",
              format_double(result.sigma_used).c_str(),
              format_double(result.final_epsilon).c_str(), out_dir.c_str());
  return kExitOk;
}

int run_evaluate(const std::string& model_file, const std::string& vocab_file,
                 const std::string& assets_dir, const GenConfig& gen,
                 std::uint64_t seed, const std::string& ppl_corpus_file,
                 const std::string& out, const std::string& export_dir,
                 const std::string& tox_scores_male,
                 const std::string& tox_scores_female,
                 const std::string& sent_scores_male,
                 const std::string& sent_scores_female) {
  const LMParams params = LMParams::load(model_file);
  const Vocab vocab = Vocab::load(vocab_file);
  const GenderLexicon lexicon =
      GenderLexicon::load(join_path(assets_dir, "gender_pairs.tsv"));
  const MetricInputs inputs = load_metric_inputs(assets_dir, &lexicon);
  GenConfig cfg = gen;
  cfg.seed = seed;

  if (!export_dir.empty()) {
    ensure_directory(export_dir);
    std::string male_lines;
    std::string female_lines;
    for (const PromptPair& pair : inputs.pairs) {
      male_lines +=
          complete_prompt(params, vocab, pair.male, 0, cfg).line() + "\n";
      female_lines +=
          complete_prompt(params, vocab, pair.female, 1, cfg).line() + "\n";
    }
    std::string neutral_lines;
    for (const Sentence& prompt : inputs.neutral_prompts) {
      for (std::size_t j = 0; j < cfg.samples; ++j) {
        neutral_lines +=
            complete_prompt(params, vocab, prompt, 2 + static_cast<int>(j),
                            cfg).line() + "\n";
      }
    }
    write_text(join_path(export_dir, "completions_male.txt"), male_lines);
    write_text(join_path(export_dir, "completions_female.txt"), female_lines);
    write_text(join_path(export_dir, "completions_neutral.txt"),
               neutral_lines);
    std::printf("completions exported to %s\n", export_dir.c_str());
  }

  Corpus ppl_corpus;
  const Corpus* ppl = nullptr;
  if (!ppl_corpus_file.empty()) {
    ppl_corpus = load_corpus(ppl_corpus_file);
    ppl = &ppl_corpus;
  }
  BiasReport report = full_report(params, vocab, inputs, cfg, ppl);
  report.seed = seed;

  // External scorer exchange: imported per-side scores replace the built-in
  // lexicon scorers for the completion-difference metrics.
  auto imported_bias = [&](const std::string& male_path,
                           const std::string& female_path) {
    const std::vector<double> male =
        read_score_lines(male_path, inputs.pairs.size());
    const std::vector<double> female =
        read_score_lines(female_path, inputs.pairs.size());
    std::vector<std::pair<double, double>> scores;
    scores.reserve(male.size());
    for (std::size_t i = 0; i < male.size(); ++i) {
      scores.emplace_back(male[i], female[i]);
    }
    return mean_abs_diff(scores);
  };
  if (!tox_scores_male.empty() || !tox_scores_female.empty()) {
    if (tox_scores_male.empty() || tox_scores_female.empty()) {
      throw ValidationError("toxicity score import needs both sides");
    }
    report.toxicity_bias = imported_bias(tox_scores_male, tox_scores_female);
  }
  if (!sent_scores_male.empty() || !sent_scores_female.empty()) {
    if (sent_scores_male.empty() || sent_scores_female.empty()) {
      throw ValidationError("sentiment score import needs both sides");
    }
    report.sentiment_bias =
        imported_bias(sent_scores_male, sent_scores_female);
  }

  const std::string csv =
      BiasReport::csv_header() + "\n" + report.csv_row() + "\n";
  if (out.empty()) {
    std::printf("%s", csv.c_str());
  } else {
    write_text(out, csv);
    std::printf("report written to %s\n", out.c_str());
  }
  return kExitOk;
}

int run_probe(const std::string& corpus_file, const std::string& assets_dir,
              const DPFlags& dp_flags, const ModelConfig& model_flags,
              const GenConfig& gen, std::uint64_t seed,
              const std::string& out) {
  const Corpus corpus = load_corpus(corpus_file);
  const GenderLexicon lexicon =
      GenderLexicon::load(join_path(assets_dir, "gender_pairs.tsv"));
  const std::vector<PromptPair> pairs =
      load_prompt_pairs(join_path(assets_dir, "prompt_pairs.tsv"), lexicon);
  const LexiconScorer toxicity =
      LexiconScorer::load(join_path(assets_dir, "toxicity_terms.tsv"),
                          LexiconScorer::Kind::kToxicity);
  GenConfig cfg = gen;
  cfg.seed = seed;
  const SwappedResult result =
      swapped_experiment(corpus, lexicon, dp_flags.resolve(), model_flags,
                         pairs, toxicity, cfg, seed);
  const std::string csv =
      "grad_ratio_ab,ppl_a,ppl_b,toxicity_bias\n" +
      format_double(result.grad_ratio_ab) + ',' +
      format_double(result.ppl_a) + ',' + format_double(result.ppl_b) + ',' +
      format_double(result.toxicity_bias) + "\n";
  std::printf("%s", csv.c_str());
  if (!out.empty()) write_text(out, csv);
  return kExitOk;
}

int run_matrix_cmd(const RunSpec& spec, bool report_only) {
  const RunMatrixResult result = run_matrix(spec);
  int failed = 0;
  for (const CellResult& cell : result.cells) {
    if (!cell.ok) {
      ++failed;
      std::fprintf(stderr, "failed cell %s: %s\n",
                   cell.key.dir_name().c_str(), cell.error.c_str());
    }
  }
  if (report_only) {
    const AggregateTables tables = aggregate(result);
    std::printf("%s", tables.pearson_csv.c_str());
  }
  std::printf("%zu cells, %d failed, outputs in %s\n", result.cells.size(),
              failed, spec.output_dir.c_str());
  return failed == 0 ? kExitOk : kExitCellFailure;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Differential privacy and gender-bias measurement lab for a "
               "tiny language model"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI config file ([subcommand] sections)");

  // gen-corpus
  auto* gen_corpus = app.add_subcommand(
      "gen-corpus", "Generate the synthetic skewed corpus");
  SkewSpec skew;
  std::string occupations_file = "assets/occupations.tsv";
  std::string descriptors_file = "assets/descriptors.tsv";
  std::string gen_out = "corpus.txt";
  gen_corpus->add_option("--n", skew.n_sentences, "Sentence count")
      ->capture_default_str();
  gen_corpus->add_option("--rho", skew.rho, "Stereotype alignment fraction")
      ->capture_default_str();
  gen_corpus->add_option("--seed", skew.seed, "Corpus seed")
      ->capture_default_str();
  gen_corpus->add_option("--occupations", occupations_file,
                         "Occupation TSV (term TAB male|female)")
      ->capture_default_str();
  gen_corpus->add_option("--descriptors", descriptors_file,
                         "Descriptor TSV (term TAB positive|negative|toxic)")
      ->capture_default_str();
  gen_corpus->add_option("--out", gen_out, "Output corpus path")
      ->capture_default_str();

  // augment
  auto* augment_cmd =
      app.add_subcommand("augment", "Counterfactual data augmentation");
  std::string aug_in;
  std::string aug_out = "augmented.txt";
  std::string pairs_file = "assets/gender_pairs.tsv";
  std::string pronouns_file;
  double aug_ratio = 1.0;
  std::uint64_t aug_seed = 0;
  bool aug_lint = false;
  augment_cmd->add_option("--in", aug_in, "Input corpus")->required();
  augment_cmd->add_option("--ratio", aug_ratio, "Mixing ratio in [0,1]")
      ->capture_default_str();
  augment_cmd->add_option("--seed", aug_seed, "Selection seed")
      ->capture_default_str();
  augment_cmd->add_option("--pairs", pairs_file, "Gender pair TSV")
      ->capture_default_str();
  augment_cmd->add_flag("--lint", aug_lint,
                        "Report ambiguous pronoun occurrences first");
  augment_cmd->add_option("--pronouns", pronouns_file,
                          "Pronoun list for --lint (one per line)");
  augment_cmd->add_option("--out", aug_out, "Output corpus path")
      ->capture_default_str();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train one model");
  std::string train_corpus;
  std::string train_val;
  std::string train_assets = "assets";
  std::string train_out = "run";
  std::uint64_t train_seed = 0;
  DPFlags train_dp;
  ModelFlags train_model;
  train_cmd->add_option("--corpus", train_corpus, "Training corpus")
      ->required();
  train_cmd->add_option("--val-corpus", train_val, "Validation corpus");
  train_cmd->add_option("--assets-dir", train_assets, "Fixture directory")
      ->capture_default_str();
  train_cmd->add_option("--seed", train_seed, "Run seed")
      ->capture_default_str();
  train_cmd->add_option("--out-dir", train_out, "Artifact directory")
      ->capture_default_str();
  train_dp.add_to(train_cmd);
  train_model.add_to(train_cmd);

  // evaluate
  auto* eval_cmd =
      app.add_subcommand("evaluate", "Score a trained checkpoint");
  std::string eval_model;
  std::string eval_vocab;
  std::string eval_assets = "assets";
  std::string eval_ppl;
  std::string eval_out;
  std::string eval_export;
  std::string eval_tox_m, eval_tox_f, eval_sent_m, eval_sent_f;
  std::uint64_t eval_seed = 0;
  GenFlags eval_gen;
  eval_cmd->add_option("--model", eval_model, "Checkpoint file")->required();
  eval_cmd->add_option("--vocab", eval_vocab, "Vocabulary file")->required();
  eval_cmd->add_option("--assets-dir", eval_assets, "Fixture directory")
      ->capture_default_str();
  eval_cmd->add_option("--seed", eval_seed, "Generation seed")
      ->capture_default_str();
  eval_cmd->add_option("--ppl-corpus", eval_ppl,
                       "Corpus for the perplexity column");
  eval_cmd->add_option("--out", eval_out, "Report CSV path (default stdout)");
  eval_cmd->add_option("--export-completions", eval_export,
                       "Write prompt completions for external scoring");
  eval_cmd->add_option("--toxicity-scores-male", eval_tox_m,
                       "Imported toxicity scores, male side");
  eval_cmd->add_option("--toxicity-scores-female", eval_tox_f,
                       "Imported toxicity scores, female side");
  eval_cmd->add_option("--sentiment-scores-male", eval_sent_m,
                       "Imported sentiment scores, male side");
  eval_cmd->add_option("--sentiment-scores-female", eval_sent_f,
                       "Imported sentiment scores, female side");
  eval_gen.add_to(eval_cmd);

  // probe
  auto* probe_cmd = app.add_subcommand(
      "probe", "Swapped-gender training probe (4-tuple)");
  std::string probe_corpus;
  std::string probe_assets = "assets";
  std::string probe_out;
  std::uint64_t probe_seed = 0;
  DPFlags probe_dp;
  ModelFlags probe_model;
  GenFlags probe_gen;
  probe_cmd->add_option("--corpus", probe_corpus, "Training corpus")
      ->required();
  probe_cmd->add_option("--assets-dir", probe_assets, "Fixture directory")
      ->capture_default_str();
  probe_cmd->add_option("--seed", probe_seed, "Run seed")
      ->capture_default_str();
  probe_cmd->add_option("--out", probe_out, "Also write the tuple CSV here");
  probe_dp.add_to(probe_cmd);
  probe_model.add_to(probe_cmd);
  probe_gen.add_to(probe_cmd);

  // matrix / report
  RunSpec spec;
  auto add_matrix_flags = [&](CLI::App* cmd) {
    cmd->add_option("--output-dir", spec.output_dir, "Artifact root")
        ->capture_default_str();
    cmd->add_option("--assets-dir", spec.assets_dir, "Fixture directory")
        ->capture_default_str();
    cmd->add_option("--corpus-file", spec.corpus_file,
                    "Train on this corpus instead of generating one");
    cmd->add_option("--n", spec.synth.n_sentences, "Synthetic sentence count")
        ->capture_default_str();
    cmd->add_option("--rho", spec.synth.rho, "Stereotype alignment fraction")
        ->capture_default_str();
    cmd->add_option("--corpus-seed", spec.synth.seed, "Corpus seed")
        ->capture_default_str();
    cmd->add_option("--epsilons", spec.epsilon_labels,
                    "Privacy budgets, e.g. 3,10,non-private")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--ratios", spec.ratios, "CDA mixing ratios")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--seeds", spec.seeds, "Run seeds")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--validation-sentences", spec.validation_sentences,
                    "Validation corpus size")
        ->capture_default_str();
    cmd->add_option("--workers", spec.workers,
                    "Worker threads (0: DPBIAS_WORKERS env, else 1)")
        ->capture_default_str();
    cmd->add_option("--clip-norm", spec.dp.clip_norm, "L2 clip bound")
        ->capture_default_str();
    cmd->add_option("--batch-size", spec.dp.batch_size, "Expected batch size")
        ->capture_default_str();
    cmd->add_option("--learning-rate", spec.dp.learning_rate, "Adam step")
        ->capture_default_str();
    cmd->add_option("--epochs", spec.dp.epochs, "Training epochs")
        ->capture_default_str();
    cmd->add_option("--delta", spec.dp.delta, "Privacy parameter delta")
        ->capture_default_str();
    cmd->add_option("--embed-dim", spec.model.embed_dim, "Embedding width")
        ->capture_default_str();
    cmd->add_option("--window", spec.model.window, "Context window")
        ->capture_default_str();
    cmd->add_option("--hidden-dim", spec.model.hidden_dim, "Hidden width")
        ->capture_default_str();
    cmd->add_option("--max-tokens", spec.gen.max_tokens,
                    "Tokens generated per prompt")
        ->capture_default_str();
    cmd->add_option("--temperature", spec.gen.temperature,
                    "Sampling temperature")
        ->capture_default_str();
    cmd->add_option("--samples", spec.gen.samples,
                    "Completions per unpaired prompt")
        ->capture_default_str();
  };
  auto* matrix_cmd = app.add_subcommand(
      "matrix", "Run the (epsilon x mixing ratio x seed) experiment matrix");
  add_matrix_flags(matrix_cmd);
  auto* report_cmd = app.add_subcommand(
      "report", "Re-aggregate a finished matrix and print Pearson rows");
  add_matrix_flags(report_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitValidation;
  }

  if (gen_corpus->parsed()) {
    return run_gen_corpus(skew, occupations_file, descriptors_file, gen_out);
  }
  if (augment_cmd->parsed()) {
    return run_augment(aug_in, aug_ratio, aug_seed, pairs_file, aug_out,
                       aug_lint, pronouns_file);
  }
  if (train_cmd->parsed()) {
    return run_train(train_corpus, train_val, train_assets, train_dp,
                     train_model.model, train_seed, train_out);
  }
  if (eval_cmd->parsed()) {
    return run_evaluate(eval_model, eval_vocab, eval_assets, eval_gen.gen,
                        eval_seed, eval_ppl, eval_out, eval_export,
                        eval_tox_m, eval_tox_f, eval_sent_m, eval_sent_f);
  }
  if (probe_cmd->parsed()) {
    return run_probe(probe_corpus, probe_assets, probe_dp, probe_model.model,
                     probe_gen.gen, probe_seed, probe_out);
  }
  if (matrix_cmd->parsed()) return run_matrix_cmd(spec, false);
  if (report_cmd->parsed()) return run_matrix_cmd(spec, true);
  return kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const IoError& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return kExitIo;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  }
}
