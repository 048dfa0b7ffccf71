#pragma once

#include <map>
#include <string>
#include <vector>

#include "swem/subspace.hpp"
#include "swem/trainer.hpp"

namespace swem {

struct DatasetSpec {
  std::string format = "csv";  // csv | tsv
  std::string train;
  std::string test;
  std::string validation;
  std::map<std::string, int> label_map;  // tsv only
  int max_tokens = 400;
};

struct EmbeddingFileSpec {
  std::string pretrained;  // embedding text file; empty = random initialization
};

struct SubspaceSweepSpec {
  std::vector<int> d_list = {0, 2, 5, 10, 20, 50, 100, 200, 500, 1000};
  double threshold_accuracy = 0.8;
};

struct AnalysisSpec {
  int histogram_bins = 100;
  double histogram_lo = -1.0;
  double histogram_hi = 1.0;
  int top_k = 5;
  std::vector<int> dimension_list = {3, 10, 30, 100, 300, 1000};
  std::vector<double> proportions = {0.001, 0.002, 0.006, 0.01, 0.1, 1.0};
  std::vector<std::string> encoders = {"concat", "cnn"};
  std::uint64_t shuffle_seed = 0x517F;
};

// The declarative description of one experiment: dataset, embedding source,
// classifier settings, grids and the analysis knobs. Mirrors the JSON
// configuration documents the CLI consumes.
struct ExperimentConfig {
  std::string task = "classify";  // classify | match
  DatasetSpec dataset;
  EmbeddingFileSpec embedding;
  ClassifierConfig classifier;
  GridSpec grid;
  SubspaceConfig subspace;
  SubspaceSweepSpec subspace_sweep;
  AnalysisSpec analysis;
  std::string out_dir = "runs/out";
};

// Parses a JSON configuration document. `overrides` are dotted-path
// assignments (training.learning_rate=3e-4) applied before materializing;
// values parse as JSON scalars, falling back to strings.
ExperimentConfig load_experiment_config(const std::string& path,
                                        const std::vector<std::string>& overrides = {});
ExperimentConfig parse_experiment_config(const std::string& json_text,
                                         const std::vector<std::string>& overrides = {});

// Stable short hash of the canonicalized configuration document.
std::string experiment_config_hash(const ExperimentConfig& config);

// Canonical JSON rendering (sorted keys) of a config.
std::string to_json_text(const ExperimentConfig& config);

}  // namespace swem
