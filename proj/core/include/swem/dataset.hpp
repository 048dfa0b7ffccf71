#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "swem/rng.hpp"

namespace swem {

// Lowercases ASCII letters, splits punctuation characters into their own
// tokens, collapses whitespace and drops empties. Non-ASCII bytes pass
// through untouched.
std::vector<std::string> tokenize(std::string_view text);

// The punctuation characters split off as standalone tokens.
std::string_view tokenizer_punctuation();

struct Provenance {
  std::string source;
  std::string format;
  int max_tokens = 0;
  std::uint64_t preprocessing_hash = 0;
};

struct Example {
  int label = 0;
  std::vector<std::string> tokens;
};

struct LabeledDataset {
  std::vector<Example> train;
  std::vector<Example> validation;
  std::vector<Example> test;
  int num_classes = 0;
  Provenance provenance;
};

struct PairExample {
  int label = 0;
  std::vector<std::string> first;
  std::vector<std::string> second;
};

struct PairDataset {
  std::vector<PairExample> train;
  std::vector<PairExample> validation;
  std::vector<PairExample> test;
  int num_classes = 0;
  Provenance provenance;
};

// Quoted-CSV classification records: 1-based class index first, remaining
// fields joined with a space. Doubled quotes unescape; literal "\n" escapes
// become spaces. Tokenized text longer than max_tokens is tail-truncated.
LabeledDataset load_classification_csv(const std::string& path, int max_tokens = 400);

// Assembles train/test (and optional validation) files into one dataset.
LabeledDataset load_classification_dataset(const std::string& train_path,
                                           const std::string& test_path,
                                           const std::string& val_path = "", int max_tokens = 400);

// Tab-separated pair records: label, first sentence, second sentence. Labels
// map through `label_map`; anything absent from the map is a data error.
PairDataset load_pair_tsv(const std::string& path, const std::map<std::string, int>& label_map,
                          int max_tokens = 60);
PairDataset load_pair_dataset(const std::string& train_path, const std::string& test_path,
                              const std::string& val_path, const std::map<std::string, int>& label_map,
                              int max_tokens = 60);

// Order-sensitive FNV-1a content hash over labels and tokens.
std::uint64_t hash_examples(std::span<const Example> examples);
std::uint64_t hash_examples(std::span<const PairExample> examples);

// Moves a stratified `fraction` of `examples` into the returned holdout set,
// preserving relative order within both parts.
std::vector<Example> stratified_split(std::vector<Example>& examples, double fraction,
                                      int num_classes, Rng& rng);

// Stratified subsample keeping ceil(count * proportion) per class; throws
// DataError when any class would round to zero examples.
std::vector<Example> stratified_subsample(std::span<const Example> examples, double proportion,
                                          int num_classes, Rng& rng);

}  // namespace swem
