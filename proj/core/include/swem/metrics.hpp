#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "swem/analysis.hpp"
#include "swem/subspace.hpp"
#include "swem/trainer.hpp"

namespace swem {

struct RunMeta {
  std::string run_id;
  std::string config_hash;
  std::uint64_t seed = 0;
};

// One line-delimited record of a metrics file. `index` carries the epoch,
// subspace dimension or embedding dimension where one applies.
struct MetricRecord {
  std::string run_id;
  std::string config_hash;
  std::string metric;
  double value = 0.0;
  std::string units;
  std::uint64_t seed = 0;
  std::optional<long long> index;
  std::string timestamp;  // RFC 3339 UTC
};

void write_metrics(const std::vector<MetricRecord>& records, const std::string& path);
std::vector<MetricRecord> read_metrics(const std::string& path);

// TrainReport -> one record per epoch (train_loss, val_accuracy) plus final
// test_accuracy / test_macro_f1 / wall_seconds / parameter counts.
std::vector<MetricRecord> records_from_report(const TrainReport& report, const RunMeta& meta);

void emit_metrics(const TrainReport& report, const RunMeta& meta, const std::string& path);

// CSV exports for the analysis reports (stable layouts, suitable for
// external plotting).
void write_histogram_csv(const HistogramSpec& spec, const std::string& path);
void write_topk_csv(const TopKReport& report, const std::string& path);
void write_sweep_csv(const SweepReport& report, const std::string& path);

std::string current_timestamp_utc();

}  // namespace swem
