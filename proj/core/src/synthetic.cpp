#include "swem/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_set>

#include "swem/common.hpp"

namespace swem {

namespace {

std::string topic_token(int cls, int i) {
  return "topic" + std::to_string(cls) + "_" + std::to_string(i);
}
std::string filler_token(int i) { return "filler" + std::to_string(i); }
std::string pos_token(int i) { return "pos" + std::to_string(i); }
std::string neg_token(int i) { return "neg" + std::to_string(i); }

int len_between(Rng& rng, int lo, int hi) { return lo + rng.uniform_int(hi - lo + 1); }

}  // namespace

LabeledDataset make_topic_corpus(const TopicCorpusSpec& spec) {
  if (spec.num_classes < 2) throw ConfigError("topic corpus needs >= 2 classes");
  LabeledDataset ds;
  ds.num_classes = spec.num_classes;
  ds.provenance.source = "synthetic-topic";
  ds.provenance.format = "synthetic";
  Rng root(spec.seed);

  auto make_example = [&](int cls, Rng& rng) {
    Example ex;
    ex.label = cls;
    const int len = len_between(rng, spec.doc_len_min, spec.doc_len_max);
    const int keywords =
        std::min(len, len_between(rng, spec.keywords_min, spec.keywords_max));
    ex.tokens.reserve(len);
    for (int j = 0; j < len - keywords; ++j) {
      ex.tokens.push_back(filler_token(rng.uniform_int(spec.filler_vocab)));
    }
    for (int j = 0; j < keywords; ++j) {
      ex.tokens.push_back(topic_token(cls, rng.uniform_int(spec.keywords_per_class)));
    }
    rng.shuffle(ex.tokens);
    return ex;
  };

  Rng train_rng = root.split("train");
  for (int i = 0; i < spec.train_per_class * spec.num_classes; ++i) {
    ds.train.push_back(make_example(i % spec.num_classes, train_rng));
  }
  Rng test_rng = root.split("test");
  for (int i = 0; i < spec.test_per_class * spec.num_classes; ++i) {
    ds.test.push_back(make_example(i % spec.num_classes, test_rng));
  }
  ds.provenance.preprocessing_hash = hash_examples(ds.train) ^ hash_examples(ds.test);
  return ds;
}

LabeledDataset make_order_corpus(const OrderCorpusSpec& spec) {
  LabeledDataset ds;
  ds.num_classes = 2;
  ds.provenance.source = "synthetic-order";
  ds.provenance.format = "synthetic";
  Rng root(spec.seed);

  auto make_example = [&](int label, Rng& rng) {
    Example ex;
    ex.label = label;
    const int len = std::max(len_between(rng, spec.doc_len_min, spec.doc_len_max), 4);
    std::vector<std::string> fillers;
    for (int j = 0; j < len; ++j) {
      fillers.push_back(filler_token(rng.uniform_int(spec.filler_vocab)));
    }
    const bool plain = rng.uniform01() < spec.plain_fraction;
    if (plain) {
      // 1-3 polarity words matching the label, scattered anywhere.
      const int count = 1 + rng.uniform_int(3);
      for (int j = 0; j < count; ++j) {
        const int w = rng.uniform_int(spec.polarity_words);
        const std::size_t at = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(fillers.size())));
        fillers[at] = label == 1 ? pos_token(w) : neg_token(w);
      }
      ex.tokens = std::move(fillers);
      return ex;
    }
    // Negation example: "not X" plus a plain Y of the opposite polarity.
    // label = polarity(Y); the token multiset {not, X, Y, fillers} appears
    // in both classes, so only the adjacency decides.
    const std::string positive = pos_token(rng.uniform_int(spec.polarity_words));
    const std::string negative = neg_token(rng.uniform_int(spec.polarity_words));
    const std::string& negated = label == 1 ? negative : positive;  // "not bad" -> positive
    const std::string& kept = label == 1 ? positive : negative;
    // Place "not X" as an adjacent bigram and Y elsewhere.
    const int bigram_at = rng.uniform_int(static_cast<int>(fillers.size()) - 1);
    fillers[bigram_at] = "not";
    fillers[bigram_at + 1] = negated;
    int kept_at = rng.uniform_int(static_cast<int>(fillers.size()));
    while (kept_at == bigram_at || kept_at == bigram_at + 1) {
      kept_at = rng.uniform_int(static_cast<int>(fillers.size()));
    }
    fillers[kept_at] = kept;
    ex.tokens = std::move(fillers);
    return ex;
  };

  Rng train_rng = root.split("train");
  for (int i = 0; i < spec.train_total; ++i) ds.train.push_back(make_example(i % 2, train_rng));
  Rng test_rng = root.split("test");
  for (int i = 0; i < spec.test_total; ++i) ds.test.push_back(make_example(i % 2, test_rng));
  ds.provenance.preprocessing_hash = hash_examples(ds.train) ^ hash_examples(ds.test);
  return ds;
}

PairDataset make_pair_corpus(const PairCorpusSpec& spec) {
  PairDataset ds;
  ds.num_classes = 2;
  ds.provenance.source = "synthetic-pair";
  ds.provenance.format = "synthetic";
  Rng root(spec.seed);

  auto make_sentence = [&](int topic, Rng& rng) {
    std::vector<std::string> tokens;
    const int len = len_between(rng, spec.sent_len_min, spec.sent_len_max);
    for (int j = 0; j < len; ++j) {
      if (rng.uniform01() < 0.4) {
        tokens.push_back(topic_token(topic, rng.uniform_int(spec.keywords_per_topic)));
      } else {
        tokens.push_back(filler_token(rng.uniform_int(spec.filler_vocab)));
      }
    }
    return tokens;
  };
  auto make_example = [&](int label, Rng& rng) {
    PairExample ex;
    ex.label = label;
    const int t1 = rng.uniform_int(spec.num_topics);
    int t2 = t1;
    if (label == 0) {
      while (t2 == t1) t2 = rng.uniform_int(spec.num_topics);
    }
    ex.first = make_sentence(t1, rng);
    ex.second = make_sentence(t2, rng);
    return ex;
  };

  Rng train_rng = root.split("train");
  for (int i = 0; i < spec.train_total; ++i) ds.train.push_back(make_example(i % 2, train_rng));
  Rng test_rng = root.split("test");
  for (int i = 0; i < spec.test_total; ++i) ds.test.push_back(make_example(i % 2, test_rng));
  ds.provenance.preprocessing_hash = hash_examples(ds.train) ^ hash_examples(ds.test);
  return ds;
}

LabeledDataset make_separable_toy(int per_class, std::uint64_t seed) {
  LabeledDataset ds;
  ds.num_classes = 2;
  ds.provenance.source = "synthetic-toy";
  ds.provenance.format = "synthetic";
  Rng rng(seed);
  for (int i = 0; i < 2 * per_class; ++i) {
    Example ex;
    ex.label = i % 2;
    ex.tokens.push_back(filler_token(rng.uniform_int(6)));
    ex.tokens.push_back(ex.label == 0 ? "alpha" : "beta");
    ex.tokens.push_back(filler_token(rng.uniform_int(6)));
    ds.train.push_back(std::move(ex));
  }
  ds.test = ds.train;
  ds.provenance.preprocessing_hash = hash_examples(ds.train);
  return ds;
}

GloveLoadResult make_cluster_vectors(const std::vector<std::string>& tokens, int dim,
                                     std::uint64_t seed) {
  if (dim < 2) throw ConfigError("make_cluster_vectors: dim must be >= 2");
  GloveLoadResult result;
  result.embedding.dim = dim;
  Rng root(seed);

  auto unit_direction = [&](const std::string& label) {
    Rng rng = root.split(label);
    std::vector<Real> v(dim);
    double norm_sq = 0.0;
    for (int k = 0; k < dim; ++k) {
      v[k] = rng.normal();
      norm_sq += v[k] * v[k];
    }
    const double norm = std::sqrt(norm_sq);
    for (Real& x : v) x /= norm;
    return v;
  };

  std::vector<std::vector<Real>> rows;
  Rng noise = root.split("noise");
  for (const auto& token : tokens) {
    if (result.vocab.contains(token)) continue;
    std::vector<Real> v(dim);
    std::vector<Real> mu;
    double scale = 0.0;
    if (token.rfind("topic", 0) == 0) {
      const auto underscore = token.find('_');
      mu = unit_direction("topic-" + token.substr(5, underscore - 5));
      scale = 0.5;
    } else if (token.rfind("pos", 0) == 0) {
      mu = unit_direction("polarity");
      scale = 0.5;
    } else if (token.rfind("neg", 0) == 0) {
      mu = unit_direction("polarity");
      for (Real& x : mu) x = -x;
      scale = 0.5;
    } else if (token == "not") {
      mu = unit_direction("negator");
      scale = 0.6;
    } else {
      mu.assign(dim, 0.0);
      scale = 0.0;
    }
    for (int k = 0; k < dim; ++k) {
      v[k] = scale * (mu.empty() ? 0.0 : mu[k]) + 0.12 * noise.normal();
    }
    const int index = result.vocab.add(token);
    (void)index;
    rows.push_back(std::move(v));
  }
  result.embedding.table = Tensor2(result.vocab.size(), dim);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Real* dst = result.embedding.table.row_ptr(static_cast<int>(r) + 2);
    std::copy(rows[r].begin(), rows[r].end(), dst);
  }
  return result;
}

void write_embedding_file(const std::string& path, const Vocabulary& vocab, const Tensor2& table) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write embedding file: " + path);
  out.precision(17);
  for (int i = 2; i < vocab.size(); ++i) {
    out << vocab.token(i);
    const Real* row = table.row_ptr(i);
    for (int k = 0; k < table.cols; ++k) out << ' ' << row[k];
    out << '\n';
  }
}

std::vector<std::string> corpus_tokens(const LabeledDataset& dataset) {
  std::vector<std::string> tokens;
  std::unordered_set<std::string> seen;
  auto collect = [&](const std::vector<Example>& examples) {
    for (const auto& ex : examples) {
      for (const auto& tok : ex.tokens) {
        if (seen.insert(tok).second) tokens.push_back(tok);
      }
    }
  };
  collect(dataset.train);
  collect(dataset.validation);
  collect(dataset.test);
  return tokens;
}

}  // namespace swem
