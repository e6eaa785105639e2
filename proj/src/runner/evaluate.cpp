#include "gfn/runner/evaluate.hpp"

#include "gfn/error.hpp"
#include "gfn/runner/train.hpp"

namespace gfn {

nlohmann::json evaluate_checkpoint(const ExperimentConfig& config, const Checkpoint& checkpoint) {
  const auto env = make_environment(config.env);
  const auto params = make_paramset(env, config.params);
  const auto& m = checkpoint.metadata;
  if (m.contains("env_signature") && m["env_signature"] != env->signature())
    throw CheckpointError("checkpoint: environment mismatch (checkpoint " + m["env_signature"].get<std::string>() +
                          ", config " + env->signature() + ")");
  if (m.contains("param_kind") && m["param_kind"] != param_kind_name(params->kind()))
    throw CheckpointError("checkpoint: parameterization mismatch (checkpoint " + m["param_kind"].get<std::string>() +
                          ", config " + param_kind_name(params->kind()) + ")");
  params->import_from(checkpoint);

  EvalConfig eval = config.eval;
  eval.correlations = true;
  const Evaluator evaluator(env, eval);
  SampleWindow window(config.eval.window);
  const bool has_window = m.contains("window");
  if (has_window) {
    for (const auto& cells : m["window"]) window.push(State{cells.get<std::vector<int>>(), true});
  }
  const Scores s = evaluator.score(*params, window);
  const auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };

  nlohmann::json out = {
      {"env_signature", env->signature()},
      {"param_kind", param_kind_name(params->kind())},
      {"log_z", params->log_z()},
      {"l1_exact", opt(evaluator.exact_l1(*params))},
      {"l1_window", has_window ? opt(s.l1) : nlohmann::json(nullptr)},
      {"spearman", opt(s.spearman)},
      {"spearman_defined", s.spearman.has_value()},
      {"pearson", opt(s.pearson)},
      {"pearson_defined", s.pearson.has_value()},
      {"test_set_size", evaluator.test_set().size()},
      {"log_z_true", evaluator.target() ? nlohmann::json(evaluator.target()->log_z) : nlohmann::json(nullptr)},
  };
  if (m.contains("visited")) {
    VisitHistory history;
    for (const auto& cells : m["visited"]) history.record(*env, State{cells.get<std::vector<int>>(), true});
    out["modes"] = history.modes_found();
    out["distinct_states"] = history.distinct_states();
  } else {
    out["modes"] = nullptr;
    out["distinct_states"] = nullptr;
  }
  if (m.contains("batches_done")) out["step"] = m["batches_done"];
  if (m.contains("trajectories_seen")) out["trajectories_seen"] = m["trajectories_seen"];
  return out;
}

nlohmann::json evaluate_checkpoint(const ExperimentConfig& config, const std::filesystem::path& checkpoint) {
  return evaluate_checkpoint(config, load_checkpoint(checkpoint));
}

}  // namespace gfn
