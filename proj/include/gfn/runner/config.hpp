#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gfn/diffcore/adam.hpp"
#include "gfn/envcore/environment.hpp"
#include "gfn/graddiag/per_trajectory.hpp"
#include "gfn/objectives/losses.hpp"
#include "gfn/params/paramset.hpp"
#include "gfn/sampler/sampler.hpp"

namespace gfn {

struct EnvConfig {
  std::string kind = "hypergrid";  // "hypergrid" | "bitseq"
  std::string reward = "standard";  // hypergrid: "standard" | "harder" | "custom"
  HypergridConfig grid;
  BitSequenceConfig bitseq;
};

struct OptimizerConfig {
  double lr = 1e-3;
  double log_z_lr_multiplier = 10.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t batch_size = 16;
  std::uint64_t total_trajectories = 1000000;

  AdamConfig adam() const;
  std::uint64_t total_batches() const { return total_trajectories / batch_size; }
};

struct EvalConfig {
  std::size_t window = 200000;
  std::size_t interval = 100;  // batches between metric rows
  bool correlations = true;
  std::size_t test_set_size = 1000;
  std::uint64_t test_set_seed = 0;
};

struct DiagnosticsConfig {
  std::size_t interval = 500;          // training iterations between recordings
  std::size_t training_batches = 5000;
  std::size_t batch_log2 = 10;         // 2^10 trajectories per recording
  std::vector<ObjectiveKind> objectives = {ObjectiveKind::DB, ObjectiveKind::SubTB, ObjectiveKind::TB};
  std::vector<FlowSource> flow_sources = {FlowSource::Learned};
  std::uint64_t seed = 0;              // stream key for the diagnostic batches
};

struct CheckpointConfig {
  std::size_t interval = 0;  // batches between checkpoints; 0 writes only the initial and final ones
};

struct ExperimentConfig {
  EnvConfig env;
  ParamsConfig params;
  ObjectiveConfig objective;
  ExplorationConfig exploration;
  OptimizerConfig optimizer;
  EvalConfig eval;
  DiagnosticsConfig diagnostics;
  CheckpointConfig checkpoint;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "run";

  void validate() const;
};

// Parses and validates a config document. Unknown keys are rejected. Seeds
// not given explicitly derive from the top-level seed.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
// The fully resolved config; parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const ExperimentConfig& config);

std::shared_ptr<const Environment> make_environment(const EnvConfig& config);

}  // namespace gfn
