#include "swem/analysis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "swem/common.hpp"

namespace swem {

LabeledDataset shuffle_training_words(const LabeledDataset& dataset, std::uint64_t seed) {
  LabeledDataset out = dataset;
  Rng root(seed);
  for (std::size_t i = 0; i < out.train.size(); ++i) {
    Rng rng = root.split("shuffle-example", i);
    rng.shuffle(out.train[i].tokens);
  }
  return out;
}

ShuffleExperimentReport run_shuffle_experiment(const ClassifierConfig& config,
                                               const LabeledDataset& dataset,
                                               const GloveLoadResult* pretrained,
                                               std::uint64_t shuffle_seed) {
  ShuffleExperimentReport report;
  FitResult original = fit(config, dataset, pretrained);
  report.original_accuracy = original.report.test.accuracy;
  const LabeledDataset shuffled = shuffle_training_words(dataset, shuffle_seed);
  FitResult permuted = fit(config, shuffled, pretrained);
  report.shuffled_accuracy = permuted.report.test.accuracy;
  return report;
}

HistogramSpec embedding_histogram(const Tensor2& table, int bins, double lo, double hi,
                                  const std::string& source_label) {
  if (bins < 2) throw ConfigError("embedding_histogram: bins must be >= 2");
  if (!(lo < hi)) throw ConfigError("embedding_histogram: range must satisfy lo < hi");
  HistogramSpec spec;
  spec.source_label = source_label;
  spec.bin_edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b) {
    spec.bin_edges[b] = lo + (hi - lo) * static_cast<double>(b) / bins;
  }
  spec.counts.assign(bins, 0);
  const double width = (hi - lo) / bins;
  for (int i = 1; i < table.rows; ++i) {  // row 0 is the pad row
    const Real* row = table.row_ptr(i);
    for (int k = 0; k < table.cols; ++k) {
      int b = static_cast<int>(std::floor((row[k] - lo) / width));
      b = std::clamp(b, 0, bins - 1);  // out-of-range mass sticks to the edges
      spec.counts[b] += 1;
    }
  }
  return spec;
}

double near_zero_fraction(const Tensor2& table, double threshold) {
  long long near = 0;
  long long total = 0;
  for (int i = 1; i < table.rows; ++i) {
    const Real* row = table.row_ptr(i);
    for (int k = 0; k < table.cols; ++k) {
      near += std::abs(row[k]) < threshold ? 1 : 0;
      total += 1;
    }
  }
  return total > 0 ? static_cast<double>(near) / static_cast<double>(total) : 0.0;
}

TopKReport top_k_words(const Tensor2& table, const Vocabulary& vocab, int k) {
  if (table.rows != vocab.size()) {
    throw ConfigError("top_k_words: table rows do not match vocabulary size");
  }
  const int candidates = vocab.size() - 2;  // pad and oov are reserved
  if (k < 1 || k > candidates) {
    throw ConfigError("top_k_words: k must lie in [1, V-2], got " + std::to_string(k));
  }
  TopKReport report;
  report.k = k;
  report.per_dimension.resize(table.cols);
  std::vector<int> rows(candidates);
  for (int i = 0; i < candidates; ++i) rows[i] = i + 2;
  std::vector<int> selected(rows);
  for (int d = 0; d < table.cols; ++d) {
    selected = rows;
    // Sort by value descending; ties break toward the lower vocabulary index.
    std::partial_sort(selected.begin(), selected.begin() + k, selected.end(),
                      [&](int a, int b) {
                        const double va = table(a, d);
                        const double vb = table(b, d);
                        return va > vb || (va == vb && a < b);
                      });
    auto& out = report.per_dimension[d];
    out.reserve(k);
    for (int i = 0; i < k; ++i) {
      out.push_back({vocab.token(selected[i]), table(selected[i], d)});
    }
  }
  return report;
}

std::vector<DimensionSweepRow> dimension_sweep(const ClassifierConfig& config,
                                               const std::vector<int>& dims,
                                               const LabeledDataset& dataset) {
  std::vector<DimensionSweepRow> rows;
  for (int dim : dims) {
    if (dim < 1) throw ConfigError("dimension_sweep: dims must be positive");
    ClassifierConfig c = config;
    c.encoder.variant = EncoderVariant::kConcat;
    c.embedding_dim = dim;
    c.embedding_mode = EmbeddingMode::kDirect;
    const auto start = std::chrono::steady_clock::now();
    FitResult result = fit(c, dataset, /*pretrained=*/nullptr);
    DimensionSweepRow row;
    row.dim = dim;
    row.test_accuracy = result.report.test.accuracy;
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rows.push_back(row);
  }
  return rows;
}

std::vector<SubsampleRow> subsample_experiment(const ClassifierConfig& config,
                                               const std::vector<EncoderConfig>& encoders,
                                               const LabeledDataset& dataset,
                                               const std::vector<double>& proportions,
                                               const GloveLoadResult* pretrained) {
  std::vector<SubsampleRow> rows;
  Rng root(config.seed);
  for (std::size_t p = 0; p < proportions.size(); ++p) {
    const double proportion = proportions[p];
    LabeledDataset subset = dataset;
    Rng sub_rng = root.split("subsample", p);
    subset.train = stratified_subsample(dataset.train, proportion, dataset.num_classes, sub_rng);
    for (const auto& encoder : encoders) {
      ClassifierConfig c = config;
      c.encoder = encoder;
      FitResult result = fit(c, subset, pretrained);
      rows.push_back({encoder.variant, proportion, result.report.test.accuracy});
    }
  }
  return rows;
}

LinearProbeReport linear_probe(const ClassifierConfig& config, const LabeledDataset& dataset,
                               const GloveLoadResult* pretrained) {
  LinearProbeReport report;
  ClassifierConfig mlp = config;
  mlp.head.kind = HeadKind::kMlp;
  report.mlp_accuracy = fit(mlp, dataset, pretrained).report.test.accuracy;
  ClassifierConfig linear = config;
  linear.head.kind = HeadKind::kLinear;
  report.linear_accuracy = fit(linear, dataset, pretrained).report.test.accuracy;
  return report;
}

}  // namespace swem
