#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swem/dataset.hpp"
#include "swem/embedding.hpp"
#include "swem/model.hpp"
#include "swem/subspace.hpp"

namespace swem {

struct ClassifierConfig {
  EncoderConfig encoder;
  HeadConfig head;
  double dropout_rate = 0.2;
  double learning_rate = 1e-3;
  int batch_size = 32;
  EmbeddingMode embedding_mode = EmbeddingMode::kDirect;
  bool embedding_trainable = true;
  int embedding_dim = 300;  // used for random initialization; pretrained files fix their own K
  int max_epochs = 30;
  int patience = 5;
  std::uint64_t seed = 1;
  bool binary_sigmoid = false;
  // Fraction of train carved into a validation split when none is provided.
  double validation_fraction = 0.1;
};

// Hyperparameter grids; the defaults are the standard search sets this
// training protocol sweeps.
struct GridSpec {
  std::vector<int> hidden_dims = {100, 300, 500, 1000};
  std::vector<double> learning_rates = {1e-3, 3e-4, 2e-4, 1e-5};
  std::vector<double> dropout_rates = {0.2, 0.5, 0.7};
  std::vector<int> batch_sizes = {2, 8, 32, 128, 512};
};

struct Metrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  long long correct = 0;
  long long total = 0;
};

// Accuracy and macro-averaged F1 from aligned label/prediction vectors.
Metrics metrics_from_predictions(std::span<const int> labels, std::span<const int> predictions,
                                 int num_classes);

struct EpochStat {
  int epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainReport {
  std::vector<EpochStat> epochs;
  int best_epoch = -1;
  double best_val_accuracy = 0.0;
  Metrics test;  // measured at the best-validation checkpoint
  double wall_seconds = 0.0;
  long long compositional_params = 0;
  long long total_params = 0;
  long long trainable_params = 0;
  EmbeddingMode embedding_mode_used = EmbeddingMode::kDirect;

  // Equality over everything the seed determines; wall-clock time excluded.
  bool deterministically_equal(const TrainReport& other) const;
};

struct FitResult {
  TrainReport report;
  Model model;
  Vocabulary vocab;
};

// Builds the vocabulary from the training split (unseen tokens map to the
// OOV row), assembles the embedding table from `pretrained` when given
// (uniform [-0.01, 0.01] rows otherwise), and runs mini-batch Adam with
// early stopping on validation accuracy. The best-validation parameters are
// restored before the test evaluation. embedding_mode kAuto fits both
// refinement strategies and keeps the better validation score.
FitResult fit(const ClassifierConfig& config, const LabeledDataset& dataset,
              const GloveLoadResult* pretrained = nullptr,
              const SubspaceConfig* subspace = nullptr);

// Pair-matching counterpart; the encoder is shared across both sentences.
FitResult fit_pairs(const ClassifierConfig& config, const PairDataset& dataset,
                    const GloveLoadResult* pretrained = nullptr);

Metrics evaluate(Model& model, const Vocabulary& vocab, std::span<const Example> examples,
                 int batch_size = 256);
Metrics evaluate_pairs(Model& model, const Vocabulary& vocab, std::span<const PairExample> examples,
                       int batch_size = 256);

struct GridPoint {
  ClassifierConfig config;
  TrainReport report;
};

struct GridResult {
  int best_index = -1;
  std::vector<GridPoint> points;
  const ClassifierConfig& best_config() const { return points.at(best_index).config; }
};

// Exhaustive search over the grid (hidden x learning rate x dropout x batch
// size), selected by validation accuracy; ties break toward the smaller
// hidden dimension, then the lower learning rate. `max_points`, when set,
// caps the search to a seeded random subset.
GridResult grid_select(const ClassifierConfig& base, const GridSpec& grid,
                       const LabeledDataset& dataset, const GloveLoadResult* pretrained = nullptr,
                       std::optional<int> max_points = std::nullopt);

// Shared helpers -----------------------------------------------------------

Vocabulary build_vocabulary(std::span<const Example> train);
Vocabulary build_vocabulary_pairs(std::span<const PairExample> train);

std::vector<std::vector<std::int32_t>> index_tokens(std::span<const Example> examples,
                                                    const Vocabulary& vocab);

// Embedding table for a training-split vocabulary: pretrained rows where
// available, per-word uniform [-0.01, 0.01] elsewhere (including the shared
// OOV row).
Tensor2 assemble_embedding_table(const Vocabulary& vocab, int dim, const GloveLoadResult* pretrained,
                                 Rng& rng);

}  // namespace swem
