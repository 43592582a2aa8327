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

#ifndef DPBIAS_RUNNER_HPP_
#define DPBIAS_RUNNER_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "dpbias/metrics.hpp"
#include "dpbias/synth.hpp"
#include "dpbias/trainer.hpp"

namespace dpbias {

inline constexpr const char* kNonPrivateLabel = "non-private";

// A full experiment: one corpus, a grid of privacy budgets x CDA mixing
// ratios x seeds, shared validation material, and an output directory that
// all artifacts land in.
struct RunSpec {
  SkewSpec synth;
  std::string corpus_file;  // overrides synthetic generation when set
  std::string assets_dir = "assets";
  std::string output_dir = "out";
  std::vector<std::string> epsilon_labels = {"3", "10", "20", "100",
                                             kNonPrivateLabel};
  std::vector<double> ratios = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  DPConfig dp;
  ModelConfig model;  // vocab_size is derived from the built vocabulary
  GenConfig gen;
  long validation_sentences = 2000;
  int workers = 0;  // 0: DPBIAS_WORKERS env var, else 1

  void validate() const;
  // Canonical text form; its hash marks artifacts as belonging to this spec.
  std::string serialize() const;
  std::uint64_t content_hash() const;
};

struct CellKey {
  std::string epsilon_label;
  double ratio = 0.0;
  std::uint64_t seed = 0;

  std::string dir_name() const;
};

struct CellResult {
  CellKey key;
  bool ok = false;
  bool resumed = false;
  std::string error;
  double seconds = 0.0;
  BiasReport report;
  std::vector<EpochStats> log;
};

struct RunMatrixResult {
  RunSpec spec;
  std::vector<CellResult> cells;

  bool all_ok() const;
  const CellResult* find(const std::string& epsilon_label, double ratio,
                         std::uint64_t seed) const;
};

// Executes every cell (skipping ones already completed under the same spec
// hash), persists per-cell artifacts, aggregate tables, plot data, and the
// manifest.  Per-cell failures are recorded, not thrown.
RunMatrixResult run_matrix(const RunSpec& spec);

// Sample Pearson correlation; throws ValidationError on degenerate variance
// or mismatched lengths.
double pearson(const std::vector<double>& xs, const std::vector<double>& ys);

struct AggregateTables {
  std::string seed_mean_csv;
  std::string bias_increase_csv;
  std::string pearson_csv;
};

AggregateTables aggregate(const RunMatrixResult& result);

// Reads the fixed-layout metric fixtures from the assets directory.  The
// lexicon pointer is stored in the returned struct and must outlive it.
MetricInputs load_metric_inputs(const std::string& assets_dir,
                                const GenderLexicon* lexicon);

// Round-trip helpers for persisted per-cell artifacts.
BiasReport parse_bias_report_csv(const std::string& text);
std::vector<EpochStats> parse_training_log_csv(const std::string& text);

}  // namespace dpbias

#endif  // DPBIAS_RUNNER_HPP_
