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
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "dpbias/cda.hpp"
#include "dpbias/probes.hpp"
#include "dpbias/rng.hpp"
#include "dpbias/util.hpp"

namespace dpbias {
namespace {

constexpr std::uint64_t kValidationTag = 0x76616c69ULL;

const char* const kBiasMetricNames[6] = {
    "toxicity_bias",     "sentiment_bias", "occupation_bias",
    "gender_count_bias", "kl_bias",        "hellinger_bias"};

// The distance metrics are excluded from the headline Pearson table.
bool is_headline_metric(int metric) { return metric < 4; }

double bias_metric(const BiasReport& report, int metric) {
  switch (metric) {
    case 0: return report.toxicity_bias;
    case 1: return report.sentiment_bias;
    case 2: return report.occupation_bias;
    case 3: return report.gender_count_bias;
    case 4: return report.kl_bias;
    case 5: return report.hellinger_bias;
    default: throw ValidationError("unknown metric index");
  }
}

std::string join(const std::string& dir, const std::string& name) {
  return dir + "/" + name;
}

std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::uint64_t hash_file(const std::string& path) {
  return fnv1a64(read_file_bytes(path));
}

std::uint64_t hash_file_or_zero(const std::string& path) {
  return file_exists(path) ? hash_file(path) : 0;
}

std::uint64_t parse_u64(const std::string& text, const char* what) {
  const long value = parse_long_strict(text, what);
  if (value < 0) throw ValidationError(std::string(what) + " is negative");
  return static_cast<std::uint64_t>(value);
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("DPBIAS_WORKERS")) {
    const long parsed = parse_long_strict(env, "DPBIAS_WORKERS");
    if (parsed < 1) throw ValidationError("DPBIAS_WORKERS must be positive");
    return static_cast<int>(parsed);
  }
  return 1;
}

template <typename T>
void require_distinct(const std::vector<T>& values, const char* what) {
  std::set<T> seen(values.begin(), values.end());
  if (seen.size() != values.size()) {
    throw ValidationError(std::string(what) + " must be distinct");
  }
}

// Deterministic hold-out when training data comes from a file: every tenth
// sentence becomes validation material.
void split_file_corpus(const Corpus& full, Corpus* train, Corpus* validation) {
  train->provenance = full.provenance;
  validation->provenance = full.provenance;
  for (std::size_t i = 0; i < full.size(); ++i) {
    if (i % 10 == 9) {
      validation->sentences.push_back(full.sentences[i]);
    } else {
      train->sentences.push_back(full.sentences[i]);
    }
  }
}

struct CellArtifact {
  const char* name;
  const char* role;
};

constexpr CellArtifact kCellArtifacts[] = {
    {"report.csv", "bias-report"},
    {"training_log.csv", "training-log"},
    {"trace.csv", "disparity-trace"},
    {"model.bin", "checkpoint"},
};

std::string done_marker(const std::string& cell_dir,
                        std::uint64_t spec_hash) {
  std::string text = "spec " + hex64(spec_hash) + "\n";
  for (const CellArtifact& a : kCellArtifacts) {
    text += std::string("file ") + a.name + " " +
            hex64(hash_file(join(cell_dir, a.name))) + "\n";
  }
  return text;
}

bool try_resume(const std::string& cell_dir, std::uint64_t spec_hash,
                CellResult* out) {
  const std::string marker_path = join(cell_dir, "done.txt");
  if (!file_exists(marker_path)) return false;
  std::vector<std::string> lines;
  try {
    lines = read_lines(marker_path);
  } catch (const IoError&) {
    return false;
  }
  if (lines.empty()) return false;
  const std::vector<std::string> head = split_whitespace(lines[0]);
  if (head.size() != 2 || head[0] != "spec" || head[1] != hex64(spec_hash)) {
    return false;
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const std::vector<std::string> fields = split_whitespace(lines[i]);
    if (fields.size() != 3 || fields[0] != "file") return false;
    const std::string path = join(cell_dir, fields[1]);
    if (!file_exists(path) || hex64(hash_file(path)) != fields[2]) {
      return false;
    }
  }
  try {
    out->report =
        parse_bias_report_csv(read_file_bytes(join(cell_dir, "report.csv")));
    out->log = parse_training_log_csv(
        read_file_bytes(join(cell_dir, "training_log.csv")));
  } catch (const std::exception&) {
    return false;
  }
  out->ok = true;
  out->resumed = true;
  return true;
}

std::vector<std::string> csv_lines(const std::string& text) {
  std::vector<std::string> lines;
  for (const std::string& line : split_on(text, '\n')) {
    if (!trim(line).empty()) lines.push_back(line);
  }
  return lines;
}

double ratio_guarded(double numerator, double denominator) {
  if (!(denominator > 1e-12)) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return numerator / denominator;
}

double mean_or_nan(std::vector<double>& values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  return stable_mean(values);
}

}  // namespace

void RunSpec::validate() const {
  if (corpus_file.empty()) synth.validate();
  if (epsilon_labels.empty()) throw ValidationError("epsilon list is empty");
  if (ratios.empty()) throw ValidationError("mixing-ratio list is empty");
  if (seeds.empty()) throw ValidationError("seed list is empty");
  require_distinct(epsilon_labels, "epsilon labels");
  require_distinct(ratios, "mixing ratios");
  require_distinct(seeds, "seeds");
  for (const std::string& label : epsilon_labels) {
    if (label == kNonPrivateLabel) continue;
    if (!(parse_double_strict(label, "epsilon label") > 0.0)) {
      throw ValidationError("epsilon must be positive: " + label);
    }
  }
  for (const double r : ratios) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw ValidationError("mixing ratio must lie in [0, 1]");
    }
  }
  if (model.embed_dim < 1 || model.window < 1 || model.hidden_dim < 1) {
    throw ValidationError("model dimensions must be positive");
  }
  if (gen.max_tokens < 1) {
    throw ValidationError("generation length must be at least 1");
  }
  if (!(gen.temperature >= 0.0)) {
    throw ValidationError("temperature must be nonnegative");
  }
  if (gen.samples < 1) {
    throw ValidationError("samples per prompt must be at least 1");
  }
  if (validation_sentences < 1) {
    throw ValidationError("validation corpus size must be positive");
  }
  if (output_dir.empty()) throw ValidationError("output directory is empty");
  if (assets_dir.empty()) throw ValidationError("assets directory is empty");
}

std::string RunSpec::serialize() const {
  std::string text;
  text += "grammar=" + synth.grammar + "\n";
  text += "rho=" + format_double(synth.rho) + "\n";
  text += "n_sentences=" + std::to_string(synth.n_sentences) + "\n";
  text += "corpus_seed=" + std::to_string(synth.seed) + "\n";
  text += "corpus_file_hash=" +
          hex64(corpus_file.empty() ? 0 : hash_file(corpus_file)) + "\n";
  text += "epsilons=";
  for (std::size_t i = 0; i < epsilon_labels.size(); ++i) {
    text += (i ? "," : "") + epsilon_labels[i];
  }
  text += "\nratios=";
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    text += (i ? "," : "") + format_double(ratios[i]);
  }
  text += "\nseeds=";
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    text += (i ? "," : "") + std::to_string(seeds[i]);
  }
  text += "\nclip_norm=" + format_double(dp.clip_norm) + "\n";
  text += "batch_size=" + std::to_string(dp.batch_size) + "\n";
  text += "learning_rate=" + format_double(dp.learning_rate) + "\n";
  text += "epochs=" + std::to_string(dp.epochs) + "\n";
  text += "delta=" + format_double(dp.delta) + "\n";
  text += "embed_dim=" + std::to_string(model.embed_dim) + "\n";
  text += "window=" + std::to_string(model.window) + "\n";
  text += "hidden_dim=" + std::to_string(model.hidden_dim) + "\n";
  text += "max_tokens=" + std::to_string(gen.max_tokens) + "\n";
  text += "temperature=" + format_double(gen.temperature) + "\n";
  text += "samples=" + std::to_string(gen.samples) + "\n";
  text += "validation_sentences=" + std::to_string(validation_sentences) +
          "\n";
  // Fixture contents feed the reports, so their hashes are part of the
  // experiment identity.
  static const char* const kAssets[] = {
      "gender_pairs.tsv",       "occupations.tsv",
      "descriptors.tsv",        "occupation_words.txt",
      "toxicity_terms.tsv",     "sentiment_negative_terms.tsv",
      "prompt_pairs.tsv",       "prompts_neutral.txt",
      "stereo_triples.tsv"};
  for (const char* name : kAssets) {
    text += std::string("asset_") + name + "=" +
            hex64(hash_file_or_zero(join(assets_dir, name))) + "\n";
  }
  return text;
}

std::uint64_t RunSpec::content_hash() const { return fnv1a64(serialize()); }

std::string CellKey::dir_name() const {
  return "eps" + epsilon_label + "_r" + format_double(ratio) + "_s" +
         std::to_string(seed);
}

bool RunMatrixResult::all_ok() const {
  return std::all_of(cells.begin(), cells.end(),
                     [](const CellResult& c) { return c.ok; });
}

const CellResult* RunMatrixResult::find(const std::string& epsilon_label,
                                        double ratio,
                                        std::uint64_t seed) const {
  for (const CellResult& c : cells) {
    if (c.key.epsilon_label == epsilon_label && c.key.ratio == ratio &&
        c.key.seed == seed) {
      return &c;
    }
  }
  return nullptr;
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) {
    throw ValidationError("pearson inputs must have equal length");
  }
  if (xs.size() < 2) throw ValidationError("pearson needs at least 2 points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) {
    throw ValidationError("pearson inputs have degenerate variance");
  }
  return sxy / std::sqrt(sxx * syy);
}

MetricInputs load_metric_inputs(const std::string& assets_dir,
                                const GenderLexicon* lexicon) {
  if (lexicon == nullptr) {
    throw ValidationError("metric inputs need a gender lexicon");
  }
  MetricInputs inputs;
  inputs.lexicon = lexicon;
  inputs.pairs =
      load_prompt_pairs(join(assets_dir, "prompt_pairs.tsv"), *lexicon);
  inputs.neutral_prompts = load_prompts(join(assets_dir,
                                             "prompts_neutral.txt"));
  inputs.triples = load_stereo_triples(join(assets_dir, "stereo_triples.tsv"));
  for (const std::string& line :
       read_lines(join(assets_dir, "occupation_words.txt"))) {
    const std::string term = to_lower_ascii(trim(line));
    if (!term.empty() && term[0] != '#') inputs.occupations.insert(term);
  }
  if (inputs.occupations.empty()) {
    throw ValidationError("occupation word list is empty");
  }
  inputs.toxicity_scorer = LexiconScorer::load(
      join(assets_dir, "toxicity_terms.tsv"), LexiconScorer::Kind::kToxicity);
  inputs.sentiment_scorer =
      LexiconScorer::load(join(assets_dir, "sentiment_negative_terms.tsv"),
                          LexiconScorer::Kind::kNegativeSentiment);
  return inputs;
}

BiasReport parse_bias_report_csv(const std::string& text) {
  const std::vector<std::string> lines = csv_lines(text);
  if (lines.size() != 2 || lines[0] != BiasReport::csv_header()) {
    throw ValidationError("malformed bias report CSV");
  }
  const std::vector<std::string> f = split_on(lines[1], ',');
  if (f.size() != 13) throw ValidationError("malformed bias report row");
  BiasReport report;
  report.epsilon_label = f[0];
  report.mixing_ratio = parse_double_strict(f[1], "mixing_ratio");
  report.seed = parse_u64(f[2], "seed");
  report.temperature = parse_double_strict(f[3], "temperature");
  report.max_tokens =
      static_cast<int>(parse_long_strict(f[4], "max_tokens"));
  report.perplexity = parse_double_strict(f[5], "perplexity");
  report.toxicity_bias = parse_double_strict(f[6], "toxicity_bias");
  report.sentiment_bias = parse_double_strict(f[7], "sentiment_bias");
  report.occupation_bias = parse_double_strict(f[8], "occupation_bias");
  report.gender_count_bias = parse_double_strict(f[9], "gender_count_bias");
  report.kl_bias = parse_double_strict(f[10], "kl_bias");
  report.hellinger_bias = parse_double_strict(f[11], "hellinger_bias");
  report.stereotype_preference_rate =
      parse_double_strict(f[12], "stereotype_preference_rate");
  return report;
}

std::vector<EpochStats> parse_training_log_csv(const std::string& text) {
  const std::vector<std::string> lines = csv_lines(text);
  if (lines.empty() ||
      lines[0] !=
          "epoch,train_loss,ppl_all,ppl_female,ppl_male,l1_female,l1_male,"
          "epsilon_spent") {
    throw ValidationError("malformed training log CSV");
  }
  std::vector<EpochStats> log;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::vector<std::string> f = split_on(lines[i], ',');
    if (f.size() != 8) throw ValidationError("malformed training log row");
    EpochStats st;
    st.epoch = static_cast<int>(parse_long_strict(f[0], "epoch"));
    st.train_loss = parse_double_strict(f[1], "train_loss");
    st.ppl_all = parse_double_strict(f[2], "ppl_all");
    st.ppl_female = parse_double_strict(f[3], "ppl_female");
    st.ppl_male = parse_double_strict(f[4], "ppl_male");
    st.l1_female = parse_double_strict(f[5], "l1_female");
    st.l1_male = parse_double_strict(f[6], "l1_male");
    st.epsilon_spent = parse_double_strict(f[7], "epsilon_spent");
    log.push_back(st);
  }
  if (log.empty()) throw ValidationError("training log CSV has no rows");
  return log;
}

namespace {

struct SeedMeans {
  int n_seeds = 0;
  double perplexity = std::numeric_limits<double>::quiet_NaN();
  double metrics[6] = {};
  double stereotype = std::numeric_limits<double>::quiet_NaN();
};

// Mean over completed seeds for every (epsilon label, ratio) cell group.
std::map<std::pair<std::string, double>, SeedMeans> seed_mean_table(
    const RunMatrixResult& result) {
  std::map<std::pair<std::string, double>, SeedMeans> table;
  for (const std::string& label : result.spec.epsilon_labels) {
    for (const double ratio : result.spec.ratios) {
      std::vector<double> ppl;
      std::vector<double> stereo;
      std::vector<double> metric_values[6];
      for (const std::uint64_t seed : result.spec.seeds) {
        const CellResult* cell = result.find(label, ratio, seed);
        if (cell == nullptr || !cell->ok) continue;
        ppl.push_back(cell->report.perplexity);
        stereo.push_back(cell->report.stereotype_preference_rate);
        for (int m = 0; m < 6; ++m) {
          metric_values[m].push_back(bias_metric(cell->report, m));
        }
      }
      SeedMeans means;
      means.n_seeds = static_cast<int>(ppl.size());
      means.perplexity = mean_or_nan(ppl);
      means.stereotype = mean_or_nan(stereo);
      for (int m = 0; m < 6; ++m) {
        means.metrics[m] = mean_or_nan(metric_values[m]);
      }
      table.emplace(std::make_pair(label, ratio), means);
    }
  }
  return table;
}

}  // namespace

AggregateTables aggregate(const RunMatrixResult& result) {
  const auto table = seed_mean_table(result);
  AggregateTables out;

  out.seed_mean_csv =
      "epsilon,mixing_ratio,n_seeds,perplexity,toxicity_bias,sentiment_bias,"
      "occupation_bias,gender_count_bias,kl_bias,hellinger_bias,"
      "stereotype_preference_rate\n";
  for (const std::string& label : result.spec.epsilon_labels) {
    for (const double ratio : result.spec.ratios) {
      const SeedMeans& means = table.at({label, ratio});
      out.seed_mean_csv += label;
      out.seed_mean_csv += ',' + format_double(ratio);
      out.seed_mean_csv += ',' + std::to_string(means.n_seeds);
      out.seed_mean_csv += ',' + format_double(means.perplexity);
      for (int m = 0; m < 6; ++m) {
        out.seed_mean_csv += ',' + format_double(means.metrics[m]);
      }
      out.seed_mean_csv += ',' + format_double(means.stereotype);
      out.seed_mean_csv += '\n';
    }
  }

  // increase(ratio) = mean over the DP epsilon list of
  // (seed-mean DP metric - seed-mean non-private metric).
  const bool has_baseline =
      std::find(result.spec.epsilon_labels.begin(),
                result.spec.epsilon_labels.end(),
                kNonPrivateLabel) != result.spec.epsilon_labels.end();
  std::map<double, double> increases[6];
  out.bias_increase_csv =
      "mixing_ratio,toxicity_bias,sentiment_bias,occupation_bias,"
      "gender_count_bias,kl_bias,hellinger_bias\n";
  for (const double ratio : result.spec.ratios) {
    out.bias_increase_csv += format_double(ratio);
    for (int m = 0; m < 6; ++m) {
      double increase = std::numeric_limits<double>::quiet_NaN();
      if (has_baseline) {
        const double baseline =
            table.at({std::string(kNonPrivateLabel), ratio}).metrics[m];
        std::vector<double> deltas;
        for (const std::string& label : result.spec.epsilon_labels) {
          if (label == kNonPrivateLabel) continue;
          deltas.push_back(table.at({label, ratio}).metrics[m] - baseline);
        }
        increase = mean_or_nan(deltas);
      }
      increases[m][ratio] = increase;
      out.bias_increase_csv += ',' + format_double(increase);
    }
    out.bias_increase_csv += '\n';
  }

  out.pearson_csv = "metric,pearson,headline\n";
  for (int m = 0; m < 6; ++m) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (const double ratio : result.spec.ratios) {
      const double inc = increases[m][ratio];
      if (std::isnan(inc)) continue;
      xs.push_back(ratio);
      ys.push_back(inc);
    }
    std::string value = "undefined";
    try {
      value = format_double(pearson(xs, ys));
    } catch (const ValidationError&) {
    }
    out.pearson_csv += std::string(kBiasMetricNames[m]) + ',' + value + ',' +
                       (is_headline_metric(m) ? "yes" : "no") + '\n';
  }
  return out;
}

namespace {

struct PlotFiles {
  std::string bias_vs_epsilon;
  std::string disparity_vs_epoch;
  std::vector<std::string> warnings;
};

PlotFiles emit_plot_data(const RunMatrixResult& result) {
  const auto table = seed_mean_table(result);
  PlotFiles files;

  // Columns that never carry a value are dropped rather than printed empty.
  struct Column {
    std::string name;
    std::vector<double> values;
  };
  std::vector<Column> columns;
  columns.push_back({"perplexity", {}});
  for (int m = 0; m < 6; ++m) columns.push_back({kBiasMetricNames[m], {}});
  columns.push_back({"stereotype_preference_rate", {}});
  std::vector<std::string> key_cells;
  for (const std::string& label : result.spec.epsilon_labels) {
    for (const double ratio : result.spec.ratios) {
      const SeedMeans& means = table.at({label, ratio});
      key_cells.push_back(label + ',' + format_double(ratio));
      columns[0].values.push_back(means.perplexity);
      for (int m = 0; m < 6; ++m) {
        columns[1 + static_cast<std::size_t>(m)].values.push_back(
            means.metrics[m]);
      }
      columns[7].values.push_back(means.stereotype);
    }
  }
  std::vector<std::size_t> kept;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const bool empty =
        std::all_of(columns[c].values.begin(), columns[c].values.end(),
                    [](double v) { return std::isnan(v); });
    if (empty) {
      files.warnings.push_back("omitted empty column " + columns[c].name +
                               " from plots/bias_vs_epsilon.csv");
    } else {
      kept.push_back(c);
    }
  }
  files.bias_vs_epsilon = "epsilon,mixing_ratio";
  for (const std::size_t c : kept) {
    files.bias_vs_epsilon += ',' + columns[c].name;
  }
  files.bias_vs_epsilon += '\n';
  for (std::size_t row = 0; row < key_cells.size(); ++row) {
    files.bias_vs_epsilon += key_cells[row];
    for (const std::size_t c : kept) {
      files.bias_vs_epsilon += ',' + format_double(columns[c].values[row]);
    }
    files.bias_vs_epsilon += '\n';
  }

  // Per-epoch disparity series, seed-averaged, one block per privacy mode
  // and mixing ratio.
  files.disparity_vs_epoch =
      "epoch,epsilon,mixing_ratio,l1_ratio,ppl_ratio\n";
  for (const std::string& label : result.spec.epsilon_labels) {
    for (const double ratio : result.spec.ratios) {
      std::size_t epochs = 0;
      for (const std::uint64_t seed : result.spec.seeds) {
        const CellResult* cell = result.find(label, ratio, seed);
        if (cell != nullptr && cell->ok) {
          epochs = std::max(epochs, cell->log.size());
        }
      }
      for (std::size_t e = 0; e < epochs; ++e) {
        std::vector<double> l1_ratios;
        std::vector<double> ppl_ratios;
        for (const std::uint64_t seed : result.spec.seeds) {
          const CellResult* cell = result.find(label, ratio, seed);
          if (cell == nullptr || !cell->ok || e >= cell->log.size()) continue;
          const EpochStats& st = cell->log[e];
          l1_ratios.push_back(ratio_guarded(st.l1_female, st.l1_male));
          ppl_ratios.push_back(ratio_guarded(st.ppl_female, st.ppl_male));
        }
        files.disparity_vs_epoch += std::to_string(e + 1);
        files.disparity_vs_epoch += ',' + label;
        files.disparity_vs_epoch += ',' + format_double(ratio);
        files.disparity_vs_epoch += ',' + format_double(mean_or_nan(l1_ratios));
        files.disparity_vs_epoch += ',' + format_double(mean_or_nan(ppl_ratios));
        files.disparity_vs_epoch += '\n';
      }
    }
  }
  return files;
}

struct SharedSetup {
  GenderLexicon lexicon;
  Corpus base;
  Corpus validation;
  GenderSplits splits;
  Vocab vocab;
  ModelConfig model;
  MetricInputs inputs;
};

SharedSetup prepare_shared(const RunSpec& spec) {
  SharedSetup shared;
  shared.lexicon =
      GenderLexicon::load(join(spec.assets_dir, "gender_pairs.tsv"));
  if (!spec.corpus_file.empty()) {
    const Corpus full = load_corpus(spec.corpus_file);
    split_file_corpus(full, &shared.base, &shared.validation);
  } else {
    const std::vector<Occupation> occupations =
        load_occupations(join(spec.assets_dir, "occupations.tsv"));
    const std::vector<Descriptor> descriptors =
        load_descriptors(join(spec.assets_dir, "descriptors.tsv"));
    shared.base =
        generate_synthetic_corpus(spec.synth, occupations, descriptors);
    SkewSpec val_spec = spec.synth;
    val_spec.rho = 0.5;
    val_spec.n_sentences = spec.validation_sentences;
    val_spec.seed = mix_seed(spec.synth.seed, kValidationTag);
    shared.validation =
        generate_synthetic_corpus(val_spec, occupations, descriptors);
  }
  shared.splits =
      split_validation_by_gender(shared.validation, shared.lexicon, 5);
  shared.vocab = build_vocab(shared.base, 1, &shared.lexicon);
  shared.model = spec.model;
  shared.model.vocab_size = static_cast<int>(shared.vocab.size());
  shared.inputs = load_metric_inputs(spec.assets_dir, &shared.lexicon);
  return shared;
}

void execute_cell(const RunSpec& spec, const SharedSetup& shared,
                  const std::string& cell_dir, CellResult* cell) {
  const CellKey& key = cell->key;
  const Corpus training =
      augment(shared.base, key.ratio, shared.lexicon, key.seed);

  DPConfig dp = spec.dp;
  if (key.epsilon_label == kNonPrivateLabel) {
    dp.non_private = true;
  } else {
    dp.non_private = false;
    dp.sigma = std::numeric_limits<double>::quiet_NaN();
    dp.target_epsilon =
        parse_double_strict(key.epsilon_label, "epsilon label");
  }

  EvalSuite eval;
  eval.all = &shared.validation;
  eval.female = shared.splits.female.size() > 0 ? &shared.splits.female
                                                : nullptr;
  eval.male = shared.splits.male.size() > 0 ? &shared.splits.male : nullptr;

  TrainResult trained =
      train(training, shared.vocab, shared.model, dp, key.seed, eval);

  GenConfig gen = spec.gen;
  gen.seed = key.seed;
  BiasReport report = full_report(trained.params, shared.vocab, shared.inputs,
                                  gen, &shared.validation);
  report.epsilon_label = key.epsilon_label;
  report.mixing_ratio = key.ratio;
  report.seed = key.seed;

  ensure_directory(cell_dir);
  write_text(join(cell_dir, "report.csv"),
             BiasReport::csv_header() + "\n" + report.csv_row() + "\n");
  write_text(join(cell_dir, "training_log.csv"),
             training_log_to_csv(trained.log));
  write_text(join(cell_dir, "trace.csv"),
             disparity_trace(trained.log).to_csv());
  trained.params.save(join(cell_dir, "model.bin"));
  write_text(join(cell_dir, "done.txt"),
             done_marker(cell_dir, spec.content_hash()));

  cell->report = std::move(report);
  cell->log = std::move(trained.log);
  cell->ok = true;
}

}  // namespace

RunMatrixResult run_matrix(const RunSpec& spec) {
  spec.validate();
  ensure_directory(spec.output_dir);
  ensure_directory(join(spec.output_dir, "cells"));
  ensure_directory(join(spec.output_dir, "aggregates"));
  ensure_directory(join(spec.output_dir, "plots"));
  ensure_directory(join(spec.output_dir, "corpus"));

  const SharedSetup shared = prepare_shared(spec);
  const std::uint64_t spec_hash = spec.content_hash();
  write_text(join(spec.output_dir, "run_spec.txt"), spec.serialize());
  save_corpus(shared.base, join(spec.output_dir, "corpus/base.txt"));
  save_corpus(shared.validation,
              join(spec.output_dir, "corpus/validation.txt"));
  shared.vocab.save(join(spec.output_dir, "corpus/vocab.txt"));

  RunMatrixResult result;
  result.spec = spec;
  for (const std::string& label : spec.epsilon_labels) {
    for (const double ratio : spec.ratios) {
      for (const std::uint64_t seed : spec.seeds) {
        CellResult cell;
        cell.key = CellKey{label, ratio, seed};
        result.cells.push_back(std::move(cell));
      }
    }
  }

  const int n_workers = resolve_workers(spec.workers);
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= result.cells.size()) return;
      CellResult& cell = result.cells[i];
      const std::string cell_dir =
          join(join(spec.output_dir, "cells"), cell.key.dir_name());
      const auto t0 = std::chrono::steady_clock::now();
      try {
        if (!try_resume(cell_dir, spec_hash, &cell)) {
          execute_cell(spec, shared, cell_dir, &cell);
        }
      } catch (const std::exception& e) {
        cell.ok = false;
        cell.error = e.what();
      }
      cell.seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      std::lock_guard<std::mutex> guard(log_mutex);
      std::fprintf(stderr, "[%zu/%zu] %s %s (%.1fs)\n", i + 1,
                   result.cells.size(), cell.key.dir_name().c_str(),
                   cell.ok ? (cell.resumed ? "resumed" : "done") : "FAILED",
                   cell.seconds);
      if (!cell.ok) {
        std::fprintf(stderr, "    %s\n", cell.error.c_str());
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_workers));
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();

  const AggregateTables tables = aggregate(result);
  write_text(join(spec.output_dir, "aggregates/seed_mean.csv"),
             tables.seed_mean_csv);
  write_text(join(spec.output_dir, "aggregates/bias_increase.csv"),
             tables.bias_increase_csv);
  write_text(join(spec.output_dir, "aggregates/pearson.csv"),
             tables.pearson_csv);
  const PlotFiles plots = emit_plot_data(result);
  write_text(join(spec.output_dir, "plots/bias_vs_epsilon.csv"),
             plots.bias_vs_epsilon);
  write_text(join(spec.output_dir, "plots/disparity_vs_epoch.csv"),
             plots.disparity_vs_epoch);

  std::string manifest;
  auto add = [&](const std::string& rel, const std::string& role) {
    manifest += rel + '\t' + role + '\t' +
                hex64(hash_file(join(spec.output_dir, rel))) + '\n';
  };
  add("run_spec.txt", "run-spec");
  add("corpus/base.txt", "corpus-train");
  add("corpus/validation.txt", "corpus-validation");
  add("corpus/vocab.txt", "vocabulary");
  for (const CellResult& cell : result.cells) {
    if (!cell.ok) continue;
    for (const CellArtifact& a : kCellArtifacts) {
      add("cells/" + cell.key.dir_name() + "/" + a.name, a.role);
    }
  }
  add("aggregates/seed_mean.csv", "aggregate-seed-mean");
  add("aggregates/bias_increase.csv", "aggregate-bias-increase");
  add("aggregates/pearson.csv", "aggregate-pearson");
  add("plots/bias_vs_epsilon.csv", "plot-bias-vs-epsilon");
  add("plots/disparity_vs_epoch.csv", "plot-disparity-vs-epoch");
  for (const std::string& warning : plots.warnings) {
    manifest += "plots/bias_vs_epsilon.csv\twarning: " + warning + "\t-\n";
  }
  write_text(join(spec.output_dir, "manifest.txt"), manifest);
  return result;
}

}  // namespace dpbias
