#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

namespace gfn {

// One row of metrics.csv. Optional fields are written as empty cells (not
// applicable, e.g. L1 on a non-enumerable environment, or undefined, e.g. a
// correlation of constant values).
struct MetricRecord {
  std::uint64_t step = 0;  // batches completed
  std::uint64_t trajectories_seen = 0;
  std::optional<double> l1;
  std::size_t modes = 0;
  std::size_t distinct_states = 0;
  std::optional<double> spearman;
  std::optional<double> pearson;
  double loss = 0.0;  // mean batch loss since the previous row
  double log_z = 0.0;
};

std::string metrics_csv_header();
std::string to_csv_row(const MetricRecord& r);
nlohmann::json to_json(const MetricRecord& r);

// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

// Append-only metrics.csv writer (single writer).
class MetricsWriter {
 public:
  // Truncates unless `append`; writes the header when the file is new or empty.
  MetricsWriter(const std::filesystem::path& path, bool append);
  void write(const MetricRecord& r);

 private:
  std::ofstream out_;
};

}  // namespace gfn
