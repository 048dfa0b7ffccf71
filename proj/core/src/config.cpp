#include "swem/config.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "swem/common.hpp"

namespace swem {

using nlohmann::json;

namespace {

EmbeddingMode parse_embedding_mode(const std::string& name) {
  if (name == "direct") return EmbeddingMode::kDirect;
  if (name == "mlp-refined") return EmbeddingMode::kMlpRefined;
  if (name == "auto") return EmbeddingMode::kAuto;
  throw ConfigError("unknown embedding mode '" + name + "' (expected direct|mlp-refined|auto)");
}

std::string to_string(EmbeddingMode mode) {
  switch (mode) {
    case EmbeddingMode::kDirect: return "direct";
    case EmbeddingMode::kMlpRefined: return "mlp-refined";
    case EmbeddingMode::kAuto: return "auto";
  }
  return "?";
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override must look like section.key=value, got '" + assignment + "'");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string value_text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(value_text);
  } catch (const json::exception&) {
    value = value_text;  // bare strings are fine
  }
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (key.empty()) throw ConfigError("bad override path '" + path + "'");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      break;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

template <typename T>
void read_into(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

void check_known_keys(const json& obj, const std::vector<std::string>& known,
                      const std::string& section) {
  if (!obj.is_object()) throw ConfigError("config section '" + section + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown config key '" + section + "." + key + "'");
    }
  }
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text,
                                         const std::vector<std::string>& overrides) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config document: ") + e.what());
  }
  for (const auto& assignment : overrides) apply_override(doc, assignment);

  check_known_keys(doc,
                   {"task", "dataset", "embedding", "encoder", "head", "training", "grid",
                    "subspace", "analysis", "seed", "out_dir"},
                   "(top-level)");

  ExperimentConfig config;
  read_into(doc, "task", config.task);
  if (config.task != "classify" && config.task != "match") {
    throw ConfigError("task must be classify|match, got '" + config.task + "'");
  }
  read_into(doc, "out_dir", config.out_dir);

  if (doc.contains("dataset")) {
    const json& d = doc["dataset"];
    check_known_keys(d, {"format", "train", "test", "validation", "label_map", "max_tokens"},
                     "dataset");
    read_into(d, "format", config.dataset.format);
    if (config.dataset.format != "csv" && config.dataset.format != "tsv") {
      throw ConfigError("dataset.format must be csv|tsv");
    }
    read_into(d, "train", config.dataset.train);
    read_into(d, "test", config.dataset.test);
    read_into(d, "validation", config.dataset.validation);
    read_into(d, "max_tokens", config.dataset.max_tokens);
    if (d.contains("label_map")) {
      for (const auto& [name, id] : d["label_map"].items()) {
        config.dataset.label_map[name] = id.get<int>();
      }
    }
  }

  if (doc.contains("embedding")) {
    const json& e = doc["embedding"];
    check_known_keys(e, {"mode", "pretrained", "dim", "trainable"}, "embedding");
    std::string mode = to_string(config.classifier.embedding_mode);
    read_into(e, "mode", mode);
    config.classifier.embedding_mode = parse_embedding_mode(mode);
    read_into(e, "pretrained", config.embedding.pretrained);
    read_into(e, "dim", config.classifier.embedding_dim);
    read_into(e, "trainable", config.classifier.embedding_trainable);
  }

  if (doc.contains("encoder")) {
    const json& e = doc["encoder"];
    check_known_keys(e, {"variant", "hier_window", "cnn_widths", "cnn_filters"}, "encoder");
    std::string variant = to_string(config.classifier.encoder.variant);
    read_into(e, "variant", variant);
    config.classifier.encoder.variant = parse_encoder_variant(variant);
    read_into(e, "hier_window", config.classifier.encoder.hier_window);
    read_into(e, "cnn_widths", config.classifier.encoder.cnn_widths);
    read_into(e, "cnn_filters", config.classifier.encoder.cnn_filters);
    if (config.classifier.encoder.hier_window < 1) {
      throw ConfigError("encoder.hier_window must be >= 1");
    }
  }

  if (doc.contains("head")) {
    const json& h = doc["head"];
    check_known_keys(h, {"kind", "hidden"}, "head");
    std::string kind = to_string(config.classifier.head.kind);
    read_into(h, "kind", kind);
    config.classifier.head.kind = parse_head_kind(kind);
    read_into(h, "hidden", config.classifier.head.hidden_dim);
  }

  if (doc.contains("training")) {
    const json& t = doc["training"];
    check_known_keys(t,
                     {"learning_rate", "batch_size", "dropout", "max_epochs", "patience",
                      "binary_sigmoid", "validation_fraction"},
                     "training");
    read_into(t, "learning_rate", config.classifier.learning_rate);
    read_into(t, "batch_size", config.classifier.batch_size);
    read_into(t, "dropout", config.classifier.dropout_rate);
    read_into(t, "max_epochs", config.classifier.max_epochs);
    read_into(t, "patience", config.classifier.patience);
    read_into(t, "binary_sigmoid", config.classifier.binary_sigmoid);
    read_into(t, "validation_fraction", config.classifier.validation_fraction);
  }

  read_into(doc, "seed", config.classifier.seed);

  if (doc.contains("grid")) {
    const json& g = doc["grid"];
    check_known_keys(g, {"hidden", "learning_rate", "dropout", "batch_size"}, "grid");
    read_into(g, "hidden", config.grid.hidden_dims);
    read_into(g, "learning_rate", config.grid.learning_rates);
    read_into(g, "dropout", config.grid.dropout_rates);
    read_into(g, "batch_size", config.grid.batch_sizes);
  }

  if (doc.contains("subspace")) {
    const json& s = doc["subspace"];
    check_known_keys(
        s, {"d", "d_list", "scope", "normalize_columns", "projection_seed", "threshold_accuracy"},
        "subspace");
    read_into(s, "d", config.subspace.dim);
    read_into(s, "projection_seed", config.subspace.projection_seed);
    read_into(s, "normalize_columns", config.subspace.normalize_columns);
    std::string scope = to_string(config.subspace.scope);
    read_into(s, "scope", scope);
    config.subspace.scope = parse_subspace_scope(scope);
    read_into(s, "d_list", config.subspace_sweep.d_list);
    read_into(s, "threshold_accuracy", config.subspace_sweep.threshold_accuracy);
  }

  if (doc.contains("analysis")) {
    const json& a = doc["analysis"];
    check_known_keys(a,
                     {"histogram_bins", "histogram_lo", "histogram_hi", "top_k", "dimension_list",
                      "proportions", "encoders", "shuffle_seed"},
                     "analysis");
    read_into(a, "histogram_bins", config.analysis.histogram_bins);
    read_into(a, "histogram_lo", config.analysis.histogram_lo);
    read_into(a, "histogram_hi", config.analysis.histogram_hi);
    read_into(a, "top_k", config.analysis.top_k);
    read_into(a, "dimension_list", config.analysis.dimension_list);
    read_into(a, "proportions", config.analysis.proportions);
    read_into(a, "encoders", config.analysis.encoders);
    read_into(a, "shuffle_seed", config.analysis.shuffle_seed);
  }

  return config;
}

ExperimentConfig load_experiment_config(const std::string& path,
                                        const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_experiment_config(text, overrides);
}

std::string to_json_text(const ExperimentConfig& config) {
  json doc;
  doc["task"] = config.task;
  doc["out_dir"] = config.out_dir;
  doc["seed"] = config.classifier.seed;
  doc["dataset"] = {{"format", config.dataset.format},
                    {"train", config.dataset.train},
                    {"test", config.dataset.test},
                    {"validation", config.dataset.validation},
                    {"max_tokens", config.dataset.max_tokens}};
  if (!config.dataset.label_map.empty()) {
    doc["dataset"]["label_map"] = config.dataset.label_map;
  }
  doc["embedding"] = {{"mode", to_string(config.classifier.embedding_mode)},
                      {"pretrained", config.embedding.pretrained},
                      {"dim", config.classifier.embedding_dim},
                      {"trainable", config.classifier.embedding_trainable}};
  doc["encoder"] = {{"variant", swem::to_string(config.classifier.encoder.variant)},
                    {"hier_window", config.classifier.encoder.hier_window},
                    {"cnn_widths", config.classifier.encoder.cnn_widths},
                    {"cnn_filters", config.classifier.encoder.cnn_filters}};
  doc["head"] = {{"kind", swem::to_string(config.classifier.head.kind)},
                 {"hidden", config.classifier.head.hidden_dim}};
  doc["training"] = {{"learning_rate", config.classifier.learning_rate},
                     {"batch_size", config.classifier.batch_size},
                     {"dropout", config.classifier.dropout_rate},
                     {"max_epochs", config.classifier.max_epochs},
                     {"patience", config.classifier.patience},
                     {"binary_sigmoid", config.classifier.binary_sigmoid},
                     {"validation_fraction", config.classifier.validation_fraction}};
  doc["grid"] = {{"hidden", config.grid.hidden_dims},
                 {"learning_rate", config.grid.learning_rates},
                 {"dropout", config.grid.dropout_rates},
                 {"batch_size", config.grid.batch_sizes}};
  doc["subspace"] = {{"d", config.subspace.dim},
                     {"projection_seed", config.subspace.projection_seed},
                     {"scope", swem::to_string(config.subspace.scope)},
                     {"normalize_columns", config.subspace.normalize_columns},
                     {"d_list", config.subspace_sweep.d_list},
                     {"threshold_accuracy", config.subspace_sweep.threshold_accuracy}};
  doc["analysis"] = {{"histogram_bins", config.analysis.histogram_bins},
                     {"histogram_lo", config.analysis.histogram_lo},
                     {"histogram_hi", config.analysis.histogram_hi},
                     {"top_k", config.analysis.top_k},
                     {"dimension_list", config.analysis.dimension_list},
                     {"proportions", config.analysis.proportions},
                     {"encoders", config.analysis.encoders},
                     {"shuffle_seed", config.analysis.shuffle_seed}};
  return doc.dump(2);
}

std::string experiment_config_hash(const ExperimentConfig& config) {
  const std::string text = to_json_text(config);
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace swem
