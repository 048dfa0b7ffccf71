#include "swem/metrics.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <ctime>
#include <fstream>

#include "swem/common.hpp"

namespace swem {

using nlohmann::json;

std::string current_timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_metrics(const std::vector<MetricRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write metrics file: " + path);
  for (const auto& r : records) {
    json j;
    j["run_id"] = r.run_id;
    j["config_hash"] = r.config_hash;
    j["metric"] = r.metric;
    j["value"] = r.value;
    j["units"] = r.units;
    j["seed"] = r.seed;
    if (r.index) j["index"] = *r.index;
    j["timestamp"] = r.timestamp;
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("short write to metrics file: " + path);
}

std::vector<MetricRecord> read_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open metrics file: " + path);
  std::vector<MetricRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": bad metrics record: " + e.what());
    }
    MetricRecord r;
    r.run_id = j.value("run_id", "");
    r.config_hash = j.value("config_hash", "");
    r.metric = j.value("metric", "");
    r.value = j.value("value", 0.0);
    r.units = j.value("units", "");
    r.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("index")) r.index = j["index"].get<long long>();
    r.timestamp = j.value("timestamp", "");
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<MetricRecord> records_from_report(const TrainReport& report, const RunMeta& meta) {
  const std::string stamp = current_timestamp_utc();
  auto base = [&](const std::string& metric, double value, const std::string& units) {
    MetricRecord r;
    r.run_id = meta.run_id;
    r.config_hash = meta.config_hash;
    r.metric = metric;
    r.value = value;
    r.units = units;
    r.seed = meta.seed;
    r.timestamp = stamp;
    return r;
  };
  std::vector<MetricRecord> records;
  for (const auto& epoch : report.epochs) {
    MetricRecord loss = base("train_loss", epoch.train_loss, "nats");
    loss.index = epoch.epoch;
    records.push_back(loss);
    MetricRecord val = base("val_accuracy", epoch.val_accuracy, "fraction");
    val.index = epoch.epoch;
    records.push_back(val);
  }
  records.push_back(base("best_epoch", report.best_epoch, "epoch"));
  records.push_back(base("test_accuracy", report.test.accuracy, "fraction"));
  records.push_back(base("test_macro_f1", report.test.macro_f1, "fraction"));
  records.push_back(base("wall_seconds", report.wall_seconds, "s"));
  records.push_back(
      base("compositional_params", static_cast<double>(report.compositional_params), "count"));
  records.push_back(base("total_params", static_cast<double>(report.total_params), "count"));
  records.push_back(base("trainable_params", static_cast<double>(report.trainable_params), "count"));
  return records;
}

void emit_metrics(const TrainReport& report, const RunMeta& meta, const std::string& path) {
  write_metrics(records_from_report(report, meta), path);
}

void write_histogram_csv(const HistogramSpec& spec, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write histogram csv: " + path);
  out << "bin_lo,bin_hi,count\n";
  for (std::size_t b = 0; b < spec.counts.size(); ++b) {
    out << spec.bin_edges[b] << ',' << spec.bin_edges[b + 1] << ',' << spec.counts[b] << '\n';
  }
}

void write_topk_csv(const TopKReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write top-k csv: " + path);
  out << "dimension,rank,token,value\n";
  for (std::size_t d = 0; d < report.per_dimension.size(); ++d) {
    const auto& entries = report.per_dimension[d];
    for (std::size_t r = 0; r < entries.size(); ++r) {
      std::string token = entries[r].token;
      // CSV-escape tokens containing quotes or commas.
      if (token.find_first_of(",\"\n") != std::string::npos) {
        std::string escaped = "\"";
        for (char c : token) {
          if (c == '"') escaped += "\"\"";
          else escaped += c;
        }
        escaped += '"';
        token = escaped;
      }
      out << d << ',' << r + 1 << ',' << token << ',' << entries[r].value << '\n';
    }
  }
}

void write_sweep_csv(const SweepReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write sweep csv: " + path);
  out << "d,test_accuracy,seconds\n";
  for (const auto& row : report.rows) {
    out << row.dim << ',' << row.test_accuracy << ',' << row.seconds << '\n';
  }
}

}  // namespace swem
