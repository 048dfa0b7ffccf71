#include "swem/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "swem/common.hpp"

namespace swem {

namespace {

constexpr std::string_view kPunct = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";

bool is_punct(char c) { return kPunct.find(c) != std::string_view::npos; }

std::uint64_t fnv1a(std::uint64_t h, const void* bytes, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t fnv1a_str(std::uint64_t h, std::string_view s) { return fnv1a(h, s.data(), s.size()); }

void truncate_tokens(std::vector<std::string>& tokens, int max_tokens) {
  if (max_tokens > 0 && static_cast<int>(tokens.size()) > max_tokens) {
    tokens.resize(max_tokens);
  }
}

}  // namespace

std::string_view tokenizer_punctuation() { return kPunct; }

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back(current);
      current.clear();
    }
  };
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else if (is_punct(c)) {
      flush();
      tokens.emplace_back(1, c);
    } else {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  flush();
  return tokens;
}

namespace {

// Parses one quoted-CSV record. Records end at a newline outside quotes;
// doubled quotes inside a quoted field unescape to one quote.
struct CsvReader {
  std::ifstream in;
  std::size_t line_no = 0;
  std::string path;

  explicit CsvReader(const std::string& p) : in(p, std::ios::binary), path(p) {
    if (!in) throw FormatError("cannot open file: " + p);
  }

  // Returns false at end of input.
  bool next_record(std::vector<std::string>& fields) {
    fields.clear();
    int c = in.get();
    while (c == '\n' || c == '\r') {
      if (c == '\n') ++line_no;
      c = in.get();
    }
    if (c == EOF) return false;
    ++line_no;
    const std::size_t record_line = line_no;
    std::string field;
    bool in_quotes = false;
    bool field_was_quoted = false;
    while (true) {
      if (c == EOF) {
        if (in_quotes) {
          throw FormatError(path + ":" + std::to_string(record_line) + ": unterminated quoted field");
        }
        fields.push_back(field);
        return true;
      }
      const char ch = static_cast<char>(c);
      if (in_quotes) {
        if (ch == '"') {
          const int peek = in.peek();
          if (peek == '"') {
            field.push_back('"');
            in.get();
          } else {
            in_quotes = false;
          }
        } else {
          if (ch == '\n') ++line_no;
          if (ch != '\r') field.push_back(ch);
        }
      } else {
        if (ch == '"') {
          if (!field.empty()) {
            throw FormatError(path + ":" + std::to_string(record_line) +
                              ": quote inside unquoted field");
          }
          in_quotes = true;
          field_was_quoted = true;
        } else if (ch == ',') {
          fields.push_back(field);
          field.clear();
          field_was_quoted = false;
        } else if (ch == '\n') {
          fields.push_back(field);
          return true;
        } else if (ch != '\r') {
          if (field_was_quoted) {
            throw FormatError(path + ":" + std::to_string(record_line) +
                              ": content after closing quote");
          }
          field.push_back(ch);
        }
      }
      c = in.get();
    }
  }
};

// The source files escape newlines as the two characters '\' 'n'.
void unescape_newlines(std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\\' && i + 1 < text.size() && text[i + 1] == 'n') {
      out.push_back(' ');
      ++i;
    } else {
      out.push_back(text[i]);
    }
  }
  text = std::move(out);
}

}  // namespace

LabeledDataset load_classification_csv(const std::string& path, int max_tokens) {
  LabeledDataset ds;
  ds.provenance.source = path;
  ds.provenance.format = "classification-csv";
  ds.provenance.max_tokens = max_tokens;

  CsvReader reader(path);
  std::vector<std::string> fields;
  int max_label = -1;
  while (reader.next_record(fields)) {
    if (fields.size() < 2) {
      throw FormatError(path + ":" + std::to_string(reader.line_no) +
                        ": expected class and at least one text field");
    }
    int raw_label = 0;
    try {
      raw_label = std::stoi(fields[0]);
    } catch (const std::exception&) {
      throw FormatError(path + ":" + std::to_string(reader.line_no) + ": bad class index '" +
                        fields[0] + "'");
    }
    if (raw_label < 1) {
      throw DataError(path + ":" + std::to_string(reader.line_no) + ": class index " +
                      std::to_string(raw_label) + " must be >= 1");
    }
    std::string text;
    for (std::size_t i = 1; i < fields.size(); ++i) {
      if (i > 1) text.push_back(' ');
      text += fields[i];
    }
    unescape_newlines(text);
    Example ex;
    ex.label = raw_label - 1;
    ex.tokens = tokenize(text);
    truncate_tokens(ex.tokens, max_tokens);
    if (ex.tokens.empty()) {
      throw DataError(path + ":" + std::to_string(reader.line_no) + ": example empty after tokenization");
    }
    max_label = std::max(max_label, ex.label);
    ds.train.push_back(std::move(ex));
  }
  if (ds.train.empty()) throw FormatError(path + ": no records");
  ds.num_classes = max_label + 1;
  ds.provenance.preprocessing_hash = hash_examples(ds.train);
  return ds;
}

LabeledDataset load_classification_dataset(const std::string& train_path,
                                           const std::string& test_path, const std::string& val_path,
                                           int max_tokens) {
  LabeledDataset ds = load_classification_csv(train_path, max_tokens);
  LabeledDataset test = load_classification_csv(test_path, max_tokens);
  ds.test = std::move(test.train);
  ds.num_classes = std::max(ds.num_classes, test.num_classes);
  if (!val_path.empty()) {
    LabeledDataset val = load_classification_csv(val_path, max_tokens);
    ds.validation = std::move(val.train);
    ds.num_classes = std::max(ds.num_classes, val.num_classes);
  }
  ds.provenance.source = train_path;
  std::uint64_t h = ds.provenance.preprocessing_hash;
  h = fnv1a_str(h, "|test|");
  h ^= hash_examples(ds.test);
  if (!ds.validation.empty()) {
    h = fnv1a_str(h, "|val|");
    h ^= hash_examples(ds.validation);
  }
  ds.provenance.preprocessing_hash = h;
  return ds;
}

PairDataset load_pair_tsv(const std::string& path, const std::map<std::string, int>& label_map,
                          int max_tokens) {
  if (label_map.empty()) throw ConfigError("load_pair_tsv: empty label map");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open file: " + path);

  PairDataset ds;
  ds.provenance.source = path;
  ds.provenance.format = "pair-tsv";
  ds.provenance.max_tokens = max_tokens;
  int max_label = -1;
  for (const auto& [name, id] : label_map) max_label = std::max(max_label, id);
  ds.num_classes = max_label + 1;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
    if (tab1 == std::string::npos || tab2 == std::string::npos) {
      throw FormatError(path + ":" + std::to_string(line_no) +
                        ": expected 3 tab-separated columns (label, text1, text2)");
    }
    const std::string label = line.substr(0, tab1);
    auto it = label_map.find(label);
    if (it == label_map.end()) {
      std::string known;
      for (const auto& [name, id] : label_map) {
        if (!known.empty()) known += ", ";
        known += name;
      }
      throw DataError(path + ":" + std::to_string(line_no) + ": unknown label '" + label +
                      "' (declared: " + known + ")");
    }
    PairExample ex;
    ex.label = it->second;
    ex.first = tokenize(std::string_view(line).substr(tab1 + 1, tab2 - tab1 - 1));
    ex.second = tokenize(std::string_view(line).substr(tab2 + 1));
    truncate_tokens(ex.first, max_tokens);
    truncate_tokens(ex.second, max_tokens);
    if (ex.first.empty() || ex.second.empty()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": sentence empty after tokenization");
    }
    ds.train.push_back(std::move(ex));
  }
  if (ds.train.empty()) throw FormatError(path + ": no records");
  ds.provenance.preprocessing_hash = hash_examples(ds.train);
  return ds;
}

PairDataset load_pair_dataset(const std::string& train_path, const std::string& test_path,
                              const std::string& val_path,
                              const std::map<std::string, int>& label_map, int max_tokens) {
  PairDataset ds = load_pair_tsv(train_path, label_map, max_tokens);
  PairDataset test = load_pair_tsv(test_path, label_map, max_tokens);
  ds.test = std::move(test.train);
  if (!val_path.empty()) {
    PairDataset val = load_pair_tsv(val_path, label_map, max_tokens);
    ds.validation = std::move(val.train);
  }
  ds.provenance.source = train_path;
  ds.provenance.preprocessing_hash ^= hash_examples(ds.test) * 0x9E3779B97F4A7C15ULL;
  return ds;
}

std::uint64_t hash_examples(std::span<const Example> examples) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const auto& ex : examples) {
    h = fnv1a(h, &ex.label, sizeof(ex.label));
    for (const auto& tok : ex.tokens) {
      h = fnv1a_str(h, tok);
      h = fnv1a_str(h, "\x1f");
    }
    h = fnv1a_str(h, "\x1e");
  }
  return h;
}

std::uint64_t hash_examples(std::span<const PairExample> examples) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const auto& ex : examples) {
    h = fnv1a(h, &ex.label, sizeof(ex.label));
    for (const auto& tok : ex.first) h = fnv1a_str(fnv1a_str(h, tok), "\x1f");
    h = fnv1a_str(h, "\x1d");
    for (const auto& tok : ex.second) h = fnv1a_str(fnv1a_str(h, tok), "\x1f");
    h = fnv1a_str(h, "\x1e");
  }
  return h;
}

std::vector<Example> stratified_split(std::vector<Example>& examples, double fraction,
                                      int num_classes, Rng& rng) {
  if (fraction <= 0.0 || fraction >= 1.0) {
    throw ConfigError("stratified_split fraction must lie in (0,1)");
  }
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    by_class.at(examples[i].label).push_back(i);
  }
  std::vector<char> take(examples.size(), 0);
  for (auto& members : by_class) {
    const auto holdout =
        static_cast<std::size_t>(std::llround(static_cast<double>(members.size()) * fraction));
    rng.shuffle(members);
    for (std::size_t i = 0; i < holdout && i < members.size(); ++i) take[members[i]] = 1;
  }
  std::vector<Example> holdout;
  std::vector<Example> kept;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    (take[i] ? holdout : kept).push_back(std::move(examples[i]));
  }
  examples = std::move(kept);
  return holdout;
}

std::vector<Example> stratified_subsample(std::span<const Example> examples, double proportion,
                                          int num_classes, Rng& rng) {
  if (proportion <= 0.0 || proportion > 1.0) {
    throw ConfigError("subsample proportion must lie in (0,1]");
  }
  if (proportion == 1.0) return {examples.begin(), examples.end()};
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    by_class.at(examples[i].label).push_back(i);
  }
  std::vector<char> take(examples.size(), 0);
  for (int c = 0; c < num_classes; ++c) {
    auto& members = by_class[c];
    const auto want = static_cast<std::size_t>(
        std::ceil(static_cast<double>(members.size()) * proportion));
    if (want == 0 || members.empty()) {
      throw DataError("subsample proportion " + std::to_string(proportion) +
                      " leaves class " + std::to_string(c) + " empty");
    }
    rng.shuffle(members);
    for (std::size_t i = 0; i < want; ++i) take[members[i]] = 1;
  }
  std::vector<Example> out;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (take[i]) out.push_back(examples[i]);
  }
  return out;
}

}  // namespace swem
