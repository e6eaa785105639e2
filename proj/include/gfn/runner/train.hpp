#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <json.hpp>

#include "gfn/diffcore/adam.hpp"
#include "gfn/diffcore/checkpoint.hpp"
#include "gfn/evalsuite/history.hpp"
#include "gfn/evalsuite/target.hpp"
#include "gfn/params/paramset.hpp"
#include "gfn/runner/config.hpp"
#include "gfn/runner/metrics.hpp"

namespace gfn {

struct Scores {
  std::optional<double> l1;
  std::optional<double> spearman;
  std::optional<double> pearson;
};

// Metric computations that depend only on the environment and eval config:
// the exact target (enumerable environments) and the correlation test set.
class Evaluator {
 public:
  Evaluator(std::shared_ptr<const Environment> env, const EvalConfig& config);

  const std::optional<TargetDistribution>& target() const noexcept { return target_; }
  const std::vector<State>& test_set() const noexcept { return test_set_; }

  // Window L1 (when enumerable and the window is non-empty) and correlations
  // of log p_theta(x) against log R(x) on the test set. An undefined
  // correlation is left empty.
  Scores score(const ParamSet& params, const SampleWindow& window) const;
  // sum_x |p_theta(x) - p*(x)| with p_theta from the exact forward DP.
  std::optional<double> exact_l1(const ParamSet& params) const;

 private:
  std::shared_ptr<const Environment> env_;
  EvalConfig config_;
  std::optional<TargetDistribution> target_;
  std::vector<State> test_set_;
  std::vector<double> test_log_reward_;
};

// Training state of one run: parameters, optimizer, sample window and
// visit history. Batch b draws its trajectories from stream b of the
// exploration seed, so a run restored from a checkpoint continues exactly as
// the uninterrupted run would.
class Trainer {
 public:
  explicit Trainer(ExperimentConfig config);

  const ExperimentConfig& config() const noexcept { return config_; }
  const Environment& environment() const noexcept { return *env_; }
  ParamSet& params() noexcept { return *params_; }
  const ParamSet& params() const noexcept { return *params_; }
  const SampleWindow& window() const noexcept { return window_; }
  const VisitHistory& history() const noexcept { return history_; }
  const Evaluator& evaluator() const noexcept { return evaluator_; }
  std::uint64_t batches_done() const noexcept { return batches_; }
  std::uint64_t trajectories_seen() const noexcept { return batches_ * config_.optimizer.batch_size; }
  std::uint64_t skipped_steps() const noexcept { return skipped_; }

  // One sample-and-update iteration. Returns the batch loss, or nothing when
  // the step was skipped on a non-finite loss or gradient.
  std::optional<double> step();

  // Current metrics; the loss column averages the batches since the previous
  // record, which this call resets.
  MetricRecord record();

  Checkpoint checkpoint() const;
  void restore(const Checkpoint& checkpoint);

  // Skipped-step notices since the last drain.
  std::vector<nlohmann::json> drain_events();

 private:
  ExperimentConfig config_;
  std::shared_ptr<const Environment> env_;
  std::unique_ptr<ParamSet> params_;
  std::unique_ptr<Adam> adam_;
  SampleWindow window_;
  VisitHistory history_;
  Evaluator evaluator_;
  std::uint64_t batches_ = 0;
  std::uint64_t skipped_ = 0;
  double loss_sum_ = 0.0;
  std::uint64_t loss_count_ = 0;
  std::vector<nlohmann::json> events_;
};

struct TrainOptions {
  std::optional<std::filesystem::path> resume;  // checkpoint to continue from
  std::function<void(const MetricRecord&)> on_record;
};

struct TrainResult {
  std::vector<MetricRecord> records;  // rows written by this invocation
  std::filesystem::path final_checkpoint;
  std::uint64_t skipped_steps = 0;
};

// Runs a full training job into config.output_dir: metrics.csv, events.jsonl,
// checkpoints/step_<n>.json and run.json.
TrainResult train(const ExperimentConfig& config, const TrainOptions& options = {});

std::filesystem::path checkpoint_path(const std::filesystem::path& output_dir, std::uint64_t step);

// Writes `j` to `path` atomically (temporary file plus rename).
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace gfn
