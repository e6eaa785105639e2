#include "gfn/runner/metrics.hpp"

#include <charconv>

#include "gfn/error.hpp"

namespace gfn {
namespace {

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string metrics_csv_header() {
  return "step,trajectories_seen,l1,modes,distinct_states,spearman,pearson,loss,log_z";
}

std::string to_csv_row(const MetricRecord& r) {
  return std::to_string(r.step) + "," + std::to_string(r.trajectories_seen) + "," + cell(r.l1) + "," +
         std::to_string(r.modes) + "," + std::to_string(r.distinct_states) + "," + cell(r.spearman) + "," +
         cell(r.pearson) + "," + format_double(r.loss) + "," + format_double(r.log_z);
}

nlohmann::json to_json(const MetricRecord& r) {
  const auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"step", r.step},         {"trajectories_seen", r.trajectories_seen},
          {"l1", opt(r.l1)},        {"modes", r.modes},
          {"distinct_states", r.distinct_states}, {"spearman", opt(r.spearman)},
          {"pearson", opt(r.pearson)}, {"loss", r.loss},
          {"log_z", r.log_z}};
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path, bool append) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const bool fresh = !append || !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  out_.open(path, append ? std::ios::app : std::ios::trunc);
  if (!out_) throw Error("cannot write " + path.string());
  if (fresh) out_ << metrics_csv_header() << '\n' << std::flush;
}

void MetricsWriter::write(const MetricRecord& r) { out_ << to_csv_row(r) << '\n' << std::flush; }

}  // namespace gfn
