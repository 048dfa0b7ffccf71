#include "swem/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "swem/common.hpp"

namespace swem {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<int> labels_of(std::span<const Example> examples) {
  std::vector<int> labels(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) labels[i] = examples[i].label;
  return labels;
}

Metrics metrics_from_confusion(const std::vector<std::vector<long long>>& confusion) {
  Metrics m;
  const int classes = static_cast<int>(confusion.size());
  double f1_sum = 0.0;
  for (int c = 0; c < classes; ++c) {
    long long tp = confusion[c][c];
    long long fp = 0;
    long long fn = 0;
    for (int o = 0; o < classes; ++o) {
      if (o == c) continue;
      fp += confusion[o][c];
      fn += confusion[c][o];
    }
    const double precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    const double recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    f1_sum += precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    m.correct += tp;
  }
  for (const auto& row : confusion) {
    m.total += std::accumulate(row.begin(), row.end(), 0LL);
  }
  m.accuracy = m.total > 0 ? static_cast<double>(m.correct) / m.total : 0.0;
  m.macro_f1 = classes > 0 ? f1_sum / classes : 0.0;
  return m;
}

// Snapshot/restore of parameter values for best-validation checkpointing.
std::map<std::string, Tensor2> snapshot_values(const ParameterStore& store) {
  std::map<std::string, Tensor2> snap;
  for (const auto& [name, e] : store.entries()) snap.emplace(name, e.value);
  return snap;
}

void restore_values(ParameterStore& store, const std::map<std::string, Tensor2>& snap) {
  for (auto& [name, e] : store.entries()) e.value = snap.at(name);
}

std::vector<std::vector<std::int32_t>> index_pair_side(std::span<const PairExample> examples,
                                                       bool second, const Vocabulary& vocab) {
  std::vector<std::vector<std::int32_t>> out(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& tokens = second ? examples[i].second : examples[i].first;
    out[i].reserve(tokens.size());
    for (const auto& tok : tokens) out[i].push_back(vocab.lookup(tok));
  }
  return out;
}

TokenBatch gather_batch(const std::vector<std::vector<std::int32_t>>& indexed,
                        std::span<const std::size_t> ids) {
  std::vector<std::vector<std::int32_t>> rows;
  rows.reserve(ids.size());
  for (std::size_t id : ids) rows.push_back(indexed[id]);
  return make_token_batch(rows);
}

}  // namespace

Metrics metrics_from_predictions(std::span<const int> labels, std::span<const int> predictions,
                                 int num_classes) {
  if (labels.size() != predictions.size()) {
    throw ConfigError("metrics_from_predictions: label/prediction count mismatch");
  }
  std::vector<std::vector<long long>> confusion(num_classes,
                                                std::vector<long long>(num_classes, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    confusion.at(labels[i]).at(predictions[i]) += 1;
  }
  return metrics_from_confusion(confusion);
}

bool TrainReport::deterministically_equal(const TrainReport& other) const {
  if (epochs.size() != other.epochs.size() || best_epoch != other.best_epoch ||
      best_val_accuracy != other.best_val_accuracy || test.accuracy != other.test.accuracy ||
      test.macro_f1 != other.test.macro_f1 || test.correct != other.test.correct ||
      test.total != other.test.total || compositional_params != other.compositional_params ||
      total_params != other.total_params || trainable_params != other.trainable_params ||
      embedding_mode_used != other.embedding_mode_used) {
    return false;
  }
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    if (epochs[i].epoch != other.epochs[i].epoch ||
        epochs[i].train_loss != other.epochs[i].train_loss ||
        epochs[i].val_accuracy != other.epochs[i].val_accuracy) {
      return false;
    }
  }
  return true;
}

Vocabulary build_vocabulary(std::span<const Example> train) {
  Vocabulary vocab;
  for (const auto& ex : train) {
    for (const auto& tok : ex.tokens) vocab.add(tok);
  }
  return vocab;
}

Vocabulary build_vocabulary_pairs(std::span<const PairExample> train) {
  Vocabulary vocab;
  for (const auto& ex : train) {
    for (const auto& tok : ex.first) vocab.add(tok);
    for (const auto& tok : ex.second) vocab.add(tok);
  }
  return vocab;
}

std::vector<std::vector<std::int32_t>> index_tokens(std::span<const Example> examples,
                                                    const Vocabulary& vocab) {
  std::vector<std::vector<std::int32_t>> out(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    out[i].reserve(examples[i].tokens.size());
    for (const auto& tok : examples[i].tokens) out[i].push_back(vocab.lookup(tok));
  }
  return out;
}

Tensor2 assemble_embedding_table(const Vocabulary& vocab, int dim, const GloveLoadResult* pretrained,
                                 Rng& rng) {
  const int table_dim = pretrained ? pretrained->embedding.dim : dim;
  if (table_dim <= 0) throw ConfigError("embedding dimension must be positive");
  Tensor2 table(vocab.size(), table_dim);
  for (int i = Vocabulary::kOovIndex; i < vocab.size(); ++i) {
    Real* row = table.row_ptr(i);
    const std::string& tok = vocab.token(i);
    if (pretrained && i >= 2 && pretrained->vocab.contains(tok)) {
      const int src = pretrained->vocab.lookup(tok);
      const Real* from = pretrained->embedding.table.row_ptr(src);
      std::copy(from, from + table_dim, row);
    } else {
      // Out-of-vocabulary law; also used for every row when training from
      // scratch.
      for (int k = 0; k < table_dim; ++k) row[k] = rng.uniform(-0.01, 0.01);
    }
  }
  return table;
}

namespace {

struct PreparedSplits {
  std::vector<Example> train;
  std::vector<Example> validation;
  const std::vector<Example>* test = nullptr;
};

PreparedSplits prepare_splits(const ClassifierConfig& config, const LabeledDataset& dataset,
                              Rng& root) {
  PreparedSplits splits;
  splits.train = dataset.train;
  splits.test = &dataset.test;
  if (!dataset.validation.empty()) {
    splits.validation = dataset.validation;
  } else if (config.validation_fraction > 0.0 && splits.train.size() >= 10) {
    Rng val_rng = root.split("val-split");
    splits.validation =
        stratified_split(splits.train, config.validation_fraction, dataset.num_classes, val_rng);
  }
  return splits;
}

FitResult fit_resolved(const ClassifierConfig& config, const LabeledDataset& dataset,
                       const GloveLoadResult* pretrained, const SubspaceConfig* subspace) {
  if (dataset.train.empty()) throw DataError("fit: empty training split");
  if (dataset.num_classes < 2) throw DataError("fit: dataset needs at least 2 classes");
  const auto start = Clock::now();
  Rng root(config.seed);

  PreparedSplits splits = prepare_splits(config, dataset, root);

  Vocabulary vocab = build_vocabulary(splits.train);
  Rng embed_rng = root.split("embedding-init");
  const Tensor2 table =
      assemble_embedding_table(vocab, config.embedding_dim, pretrained, embed_rng);

  ModelSpec spec;
  spec.encoder = config.encoder;
  spec.head = config.head;
  spec.num_classes = dataset.num_classes;
  spec.dropout_rate = config.dropout_rate;
  spec.binary_sigmoid = config.binary_sigmoid;
  spec.embedding_mode = config.embedding_mode;
  spec.embedding_trainable = config.embedding_trainable;
  Model model = Model::build(spec, table, root.split("param-init"));

  std::optional<SubspaceState> subspace_state;
  if (subspace) subspace_state = SubspaceState::attach(model.store, *subspace);

  const auto train_indexed = index_tokens(splits.train, vocab);
  const auto train_labels = labels_of(splits.train);
  const std::vector<Example>& val_examples =
      splits.validation.empty() ? splits.train : splits.validation;

  AdamConfig adam;
  adam.learning_rate = config.learning_rate;

  TrainReport report;
  report.embedding_mode_used = config.embedding_mode;
  report.compositional_params = model.compositional_params();
  report.total_params = model.total_params();
  report.trainable_params = model.trainable_params();

  std::map<std::string, Tensor2> best_values = snapshot_values(model.store);
  double best_val = -1.0;
  int best_epoch = -1;

  std::vector<std::size_t> order(train_indexed.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    Rng order_rng = root.split("batch-order", static_cast<std::uint64_t>(epoch));
    order_rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t seen = 0;
    const std::size_t batch_size = std::max(1, config.batch_size);
    for (std::size_t begin = 0, batch_id = 0; begin < order.size(); begin += batch_size, ++batch_id) {
      const std::size_t end = std::min(begin + batch_size, order.size());
      const std::span<const std::size_t> ids(order.data() + begin, end - begin);
      TokenBatch batch = gather_batch(train_indexed, ids);
      std::vector<int> labels(ids.size());
      for (std::size_t i = 0; i < ids.size(); ++i) labels[i] = train_labels[ids[i]];

      Rng drop_rng = root.split("dropout", static_cast<std::uint64_t>(epoch)).split(batch_id);
      const auto result = model.classify(batch, labels, /*training=*/true, drop_rng,
                                         /*with_grad=*/true);
      if (!std::isfinite(result.loss)) {
        throw NumericError("training diverged (non-finite loss) at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batch_id));
      }
      loss_sum += result.loss * static_cast<double>(ids.size());
      seen += ids.size();
      if (subspace_state) subspace_state->step(model.store, adam);
      adam_step(model.store, adam);
    }

    const Metrics val = evaluate(model, vocab, val_examples);
    report.epochs.push_back({epoch, loss_sum / static_cast<double>(seen), val.accuracy});

    if (val.accuracy > best_val) {
      best_val = val.accuracy;
      best_epoch = epoch;
      best_values = snapshot_values(model.store);
    } else if (epoch - best_epoch > config.patience) {
      break;
    }
  }

  restore_values(model.store, best_values);
  report.best_epoch = best_epoch;
  report.best_val_accuracy = best_val;
  report.test = splits.test->empty() ? Metrics{} : evaluate(model, vocab, *splits.test);
  report.wall_seconds = seconds_since(start);

  return FitResult{std::move(report), std::move(model), std::move(vocab)};
}

}  // namespace

FitResult fit(const ClassifierConfig& config, const LabeledDataset& dataset,
              const GloveLoadResult* pretrained, const SubspaceConfig* subspace) {
  if (config.embedding_mode != EmbeddingMode::kAuto) {
    return fit_resolved(config, dataset, pretrained, subspace);
  }
  // Auto mode: fit both refinement strategies and keep the better validation
  // score (direct wins ties).
  ClassifierConfig direct = config;
  direct.embedding_mode = EmbeddingMode::kDirect;
  ClassifierConfig refined = config;
  refined.embedding_mode = EmbeddingMode::kMlpRefined;
  FitResult a = fit_resolved(direct, dataset, pretrained, subspace);
  FitResult b = fit_resolved(refined, dataset, pretrained, subspace);
  return b.report.best_val_accuracy > a.report.best_val_accuracy ? std::move(b) : std::move(a);
}

Metrics evaluate(Model& model, const Vocabulary& vocab, std::span<const Example> examples,
                 int batch_size) {
  if (examples.empty()) throw DataError("evaluate: empty split");
  const auto indexed = index_tokens(examples, vocab);
  std::vector<std::vector<long long>> confusion(
      model.spec.num_classes, std::vector<long long>(model.spec.num_classes, 0));
  Rng unused(0);
  for (std::size_t begin = 0; begin < indexed.size(); begin += batch_size) {
    const std::size_t end = std::min(begin + static_cast<std::size_t>(batch_size), indexed.size());
    std::vector<std::size_t> ids(end - begin);
    std::iota(ids.begin(), ids.end(), begin);
    TokenBatch batch = gather_batch(indexed, ids);
    std::vector<int> labels(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) labels[i] = examples[ids[i]].label;
    const auto result =
        model.classify(batch, labels, /*training=*/false, unused, /*with_grad=*/false);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      confusion[labels[i]][result.predictions[i]] += 1;
    }
  }
  return metrics_from_confusion(confusion);
}

Metrics evaluate_pairs(Model& model, const Vocabulary& vocab,
                       std::span<const PairExample> examples, int batch_size) {
  if (examples.empty()) throw DataError("evaluate_pairs: empty split");
  const auto first = index_pair_side(examples, false, vocab);
  const auto second = index_pair_side(examples, true, vocab);
  std::vector<std::vector<long long>> confusion(
      model.spec.num_classes, std::vector<long long>(model.spec.num_classes, 0));
  Rng unused(0);
  for (std::size_t begin = 0; begin < first.size(); begin += batch_size) {
    const std::size_t end = std::min(begin + static_cast<std::size_t>(batch_size), first.size());
    std::vector<std::size_t> ids(end - begin);
    std::iota(ids.begin(), ids.end(), begin);
    TokenBatch batch_a = gather_batch(first, ids);
    TokenBatch batch_b = gather_batch(second, ids);
    std::vector<int> labels(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) labels[i] = examples[ids[i]].label;
    const auto result = model.match(batch_a, batch_b, labels, /*training=*/false, unused,
                                    /*with_grad=*/false);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      confusion[labels[i]][result.predictions[i]] += 1;
    }
  }
  return metrics_from_confusion(confusion);
}

FitResult fit_pairs(const ClassifierConfig& config, const PairDataset& dataset,
                    const GloveLoadResult* pretrained) {
  if (dataset.train.empty()) throw DataError("fit_pairs: empty training split");
  if (config.embedding_mode == EmbeddingMode::kAuto) {
    ClassifierConfig direct = config;
    direct.embedding_mode = EmbeddingMode::kDirect;
    ClassifierConfig refined = config;
    refined.embedding_mode = EmbeddingMode::kMlpRefined;
    FitResult a = fit_pairs(direct, dataset, pretrained);
    FitResult b = fit_pairs(refined, dataset, pretrained);
    return b.report.best_val_accuracy > a.report.best_val_accuracy ? std::move(b) : std::move(a);
  }
  const auto start = Clock::now();
  Rng root(config.seed);

  std::vector<PairExample> train = dataset.train;
  std::vector<PairExample> validation = dataset.validation;
  if (validation.empty() && config.validation_fraction > 0.0 && train.size() >= 10) {
    // Stratified carve mirroring the single-sequence path.
    Rng val_rng = root.split("val-split");
    std::vector<std::vector<std::size_t>> by_class(dataset.num_classes);
    for (std::size_t i = 0; i < train.size(); ++i) by_class.at(train[i].label).push_back(i);
    std::vector<char> take(train.size(), 0);
    for (auto& members : by_class) {
      const auto holdout = static_cast<std::size_t>(
          std::llround(static_cast<double>(members.size()) * config.validation_fraction));
      val_rng.shuffle(members);
      for (std::size_t i = 0; i < holdout && i < members.size(); ++i) take[members[i]] = 1;
    }
    std::vector<PairExample> kept;
    for (std::size_t i = 0; i < train.size(); ++i) {
      (take[i] ? validation : kept).push_back(std::move(train[i]));
    }
    train = std::move(kept);
  }

  Vocabulary vocab = build_vocabulary_pairs(train);
  Rng embed_rng = root.split("embedding-init");
  const Tensor2 table =
      assemble_embedding_table(vocab, config.embedding_dim, pretrained, embed_rng);

  ModelSpec spec;
  spec.encoder = config.encoder;
  spec.head = config.head;
  spec.num_classes = dataset.num_classes;
  spec.dropout_rate = config.dropout_rate;
  spec.binary_sigmoid = config.binary_sigmoid;
  spec.embedding_mode = config.embedding_mode;
  spec.embedding_trainable = config.embedding_trainable;
  spec.pair_model = true;
  Model model = Model::build(spec, table, root.split("param-init"));

  const auto first = index_pair_side(train, false, vocab);
  const auto second = index_pair_side(train, true, vocab);

  AdamConfig adam;
  adam.learning_rate = config.learning_rate;

  TrainReport report;
  report.embedding_mode_used = config.embedding_mode;
  report.compositional_params = model.compositional_params();
  report.total_params = model.total_params();
  report.trainable_params = model.trainable_params();

  std::map<std::string, Tensor2> best_values = snapshot_values(model.store);
  double best_val = -1.0;
  int best_epoch = -1;
  const std::span<const PairExample> val_examples =
      validation.empty() ? std::span<const PairExample>(train) : std::span<const PairExample>(validation);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    Rng order_rng = root.split("batch-order", static_cast<std::uint64_t>(epoch));
    order_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    const std::size_t batch_size = std::max(1, config.batch_size);
    for (std::size_t begin = 0, batch_id = 0; begin < order.size(); begin += batch_size, ++batch_id) {
      const std::size_t end = std::min(begin + batch_size, order.size());
      const std::span<const std::size_t> ids(order.data() + begin, end - begin);
      TokenBatch batch_a = gather_batch(first, ids);
      TokenBatch batch_b = gather_batch(second, ids);
      std::vector<int> labels(ids.size());
      for (std::size_t i = 0; i < ids.size(); ++i) labels[i] = train[ids[i]].label;
      Rng drop_rng = root.split("dropout", static_cast<std::uint64_t>(epoch)).split(batch_id);
      const auto result =
          model.match(batch_a, batch_b, labels, /*training=*/true, drop_rng, /*with_grad=*/true);
      if (!std::isfinite(result.loss)) {
        throw NumericError("training diverged (non-finite loss) at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batch_id));
      }
      loss_sum += result.loss * static_cast<double>(ids.size());
      seen += ids.size();
      adam_step(model.store, adam);
    }

    const Metrics val = evaluate_pairs(model, vocab, val_examples);
    report.epochs.push_back({epoch, loss_sum / static_cast<double>(seen), val.accuracy});
    if (val.accuracy > best_val) {
      best_val = val.accuracy;
      best_epoch = epoch;
      best_values = snapshot_values(model.store);
    } else if (epoch - best_epoch > config.patience) {
      break;
    }
  }

  restore_values(model.store, best_values);
  report.best_epoch = best_epoch;
  report.best_val_accuracy = best_val;
  report.test = dataset.test.empty() ? Metrics{} : evaluate_pairs(model, vocab, dataset.test);
  report.wall_seconds = seconds_since(start);
  return FitResult{std::move(report), std::move(model), std::move(vocab)};
}

GridResult grid_select(const ClassifierConfig& base, const GridSpec& grid,
                       const LabeledDataset& dataset, const GloveLoadResult* pretrained,
                       std::optional<int> max_points) {
  if (grid.hidden_dims.empty() || grid.learning_rates.empty() || grid.dropout_rates.empty() ||
      grid.batch_sizes.empty()) {
    throw ConfigError("grid_select: empty grid");
  }
  std::vector<ClassifierConfig> candidates;
  for (int hidden : grid.hidden_dims) {
    for (double lr : grid.learning_rates) {
      for (double dropout : grid.dropout_rates) {
        for (int batch : grid.batch_sizes) {
          ClassifierConfig c = base;
          c.head.hidden_dim = hidden;
          c.learning_rate = lr;
          c.dropout_rate = dropout;
          c.batch_size = batch;
          candidates.push_back(c);
        }
      }
    }
  }
  if (max_points && static_cast<int>(candidates.size()) > *max_points) {
    Rng rng(base.seed);
    Rng pick = rng.split("grid-subset");
    pick.shuffle(candidates);
    candidates.resize(*max_points);
  }

  GridResult result;
  for (const auto& candidate : candidates) {
    FitResult fitres = fit(candidate, dataset, pretrained);
    result.points.push_back({candidate, std::move(fitres.report)});
  }
  // Selection by validation accuracy; ties prefer the smaller hidden
  // dimension, then the lower learning rate.
  for (std::size_t i = 0; i < result.points.size(); ++i) {
    if (result.best_index < 0) {
      result.best_index = static_cast<int>(i);
      continue;
    }
    const auto& cur = result.points[i];
    const auto& best = result.points[result.best_index];
    const double a = cur.report.best_val_accuracy;
    const double b = best.report.best_val_accuracy;
    const auto key = [](const GridPoint& p) {
      return std::make_pair(p.config.head.hidden_dim, p.config.learning_rate);
    };
    if (a > b || (a == b && key(cur) < key(best))) {
      result.best_index = static_cast<int>(i);
    }
  }
  return result;
}

}  // namespace swem
