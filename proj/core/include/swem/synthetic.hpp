#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "swem/dataset.hpp"
#include "swem/embedding.hpp"

namespace swem {

// Deterministic synthetic corpora. They let the experiment pipelines run at
// desk scale with controlled mechanisms: a topic task whose labels depend
// only on which keywords occur (order-free), and a polarity task whose
// hardest examples are decided purely by a local negation bigram
// (order-bound). Token names encode their role (topic<c>_<i>, filler<i>,
// pos<i>, neg<i>, not) so make_cluster_vectors can assign structured
// pretrained vectors.

struct TopicCorpusSpec {
  int num_classes = 4;
  int train_per_class = 500;
  int test_per_class = 125;
  int filler_vocab = 300;
  int keywords_per_class = 12;
  int doc_len_min = 12;
  int doc_len_max = 30;
  int keywords_min = 2;
  int keywords_max = 5;
  std::uint64_t seed = 7;
};

// Label = the class whose keyword set the document draws from. Word order
// carries no information.
LabeledDataset make_topic_corpus(const TopicCorpusSpec& spec);

struct OrderCorpusSpec {
  int train_total = 4000;
  int test_total = 1000;
  int filler_vocab = 200;
  int polarity_words = 6;  // per polarity
  int doc_len_min = 10;
  int doc_len_max = 24;
  // Fraction of examples labeled by plain polarity words; the rest carry one
  // negated and one plain polarity word of opposite signs, so their token
  // multiset is class-independent and only the "not X" adjacency decides.
  double plain_fraction = 0.55;
  std::uint64_t seed = 11;
};

// Binary polarity task; labels 0 = negative, 1 = positive.
LabeledDataset make_order_corpus(const OrderCorpusSpec& spec);

struct PairCorpusSpec {
  int num_topics = 5;
  int train_total = 2000;
  int test_total = 500;
  int filler_vocab = 150;
  int keywords_per_topic = 8;
  int sent_len_min = 4;
  int sent_len_max = 10;
  std::uint64_t seed = 13;
};

// Label 1 when both sentences draw keywords from the same topic, else 0.
PairDataset make_pair_corpus(const PairCorpusSpec& spec);

// Small linearly separable 2-class set (token "alpha" vs token "beta" plus
// fillers); sanity fodder for the training loop.
LabeledDataset make_separable_toy(int per_class = 10, std::uint64_t seed = 3);

// Structured "pretrained" vectors for the synthetic vocabularies: keywords
// of one topic share a direction, polarity words split into two opposite
// directions, fillers stay small and isotropic. Dense enough to stand in
// for a real pretrained table in sparsity comparisons.
GloveLoadResult make_cluster_vectors(const std::vector<std::string>& tokens, int dim,
                                     std::uint64_t seed);

// Writes the whitespace text embedding format (one token + values per line).
// Reserved rows (pad, oov) are skipped.
void write_embedding_file(const std::string& path, const Vocabulary& vocab, const Tensor2& table);

// Convenience: all distinct tokens of a dataset's splits, first-seen order.
std::vector<std::string> corpus_tokens(const LabeledDataset& dataset);

}  // namespace swem
