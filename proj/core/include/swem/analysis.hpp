#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "swem/dataset.hpp"
#include "swem/embedding.hpp"
#include "swem/trainer.hpp"

namespace swem {

// Returns a copy of the dataset with every training example's tokens
// independently permuted (uniformly, seeded per example). Validation, test
// and labels stay untouched.
LabeledDataset shuffle_training_words(const LabeledDataset& dataset, std::uint64_t seed);

struct ShuffleExperimentReport {
  double original_accuracy = 0.0;
  double shuffled_accuracy = 0.0;
};

// Trains twice with identical seeds and configuration, differing only in the
// training-set word shuffle, and reports both test accuracies.
ShuffleExperimentReport run_shuffle_experiment(const ClassifierConfig& config,
                                               const LabeledDataset& dataset,
                                               const GloveLoadResult* pretrained = nullptr,
                                               std::uint64_t shuffle_seed = 0x517F);

struct HistogramSpec {
  std::vector<double> bin_edges;   // monotone, size = counts.size() + 1
  std::vector<long long> counts;
  std::string source_label;
};

// Tallies every component of every non-pad embedding row into uniform bins
// over [lo, hi]; out-of-range values land in the boundary bins so the counts
// always conserve (V-1)*K.
HistogramSpec embedding_histogram(const Tensor2& table, int bins = 100, double lo = -1.0,
                                  double hi = 1.0, const std::string& source_label = "");

// Fraction of components of non-pad rows with |value| < threshold; the
// sparsity figure the max-pooling interpretability analysis compares.
double near_zero_fraction(const Tensor2& table, double threshold = 0.01);

struct TopKEntry {
  std::string token;
  double value = 0.0;
};

struct TopKReport {
  int k = 0;
  // per_dimension[d] holds the k tokens with the largest component in
  // dimension d, sorted by value descending (ties: lower vocabulary index).
  std::vector<std::vector<TopKEntry>> per_dimension;
};

// Reserved rows (pad, oov) are excluded; k must be at most V-2.
TopKReport top_k_words(const Tensor2& table, const Vocabulary& vocab, int k);

struct DimensionSweepRow {
  int dim = 0;
  double test_accuracy = 0.0;
  double seconds = 0.0;
};

// Trains a concat-pooling model with randomly initialized embeddings for
// each requested dimension.
std::vector<DimensionSweepRow> dimension_sweep(const ClassifierConfig& config,
                                               const std::vector<int>& dims,
                                               const LabeledDataset& dataset);

struct SubsampleRow {
  EncoderVariant encoder = EncoderVariant::kConcat;
  double proportion = 1.0;
  double test_accuracy = 0.0;
};

// One trained model per (encoder, proportion). The stratified subsample for
// a given proportion is shared across encoders; the test set is fixed.
std::vector<SubsampleRow> subsample_experiment(const ClassifierConfig& config,
                                               const std::vector<EncoderConfig>& encoders,
                                               const LabeledDataset& dataset,
                                               const std::vector<double>& proportions,
                                               const GloveLoadResult* pretrained = nullptr);

struct LinearProbeReport {
  double mlp_accuracy = 0.0;
  double linear_accuracy = 0.0;
};

// Trains the same encoder with an MLP head and with a linear head under
// matched settings.
LinearProbeReport linear_probe(const ClassifierConfig& config, const LabeledDataset& dataset,
                               const GloveLoadResult* pretrained = nullptr);

}  // namespace swem
