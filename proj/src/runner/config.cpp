#include "gfn/runner/config.hpp"

#include <fstream>
#include <set>

#include "gfn/error.hpp"

namespace gfn {
namespace {

using nlohmann::json;

// Reads one JSON object, remembering which keys were consumed so unknown
// keys can be reported.
class Block {
 public:
  Block(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where_ + "." + key + ": wrong type");
    }
  }

  template <class T>
  std::optional<T> optional(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return get<T>(key, T{});
  }

  Block child(const std::string& key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Block(j_.contains(key) ? j_.at(key) : empty, where_ + "." + key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(where_ + ": unknown key '" + key + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

EnvConfig parse_env(Block b) {
  EnvConfig e;
  e.kind = b.get<std::string>("kind", e.kind);
  e.grid.beta = e.bitseq.beta = b.get<double>("beta", 1.0);
  if (e.kind == "hypergrid") {
    e.grid.dim = b.get<int>("dim", e.grid.dim);
    e.grid.size = b.get<int>("size", e.grid.size);
    e.reward = b.get<std::string>("reward", e.reward);
    HypergridConfig base;
    if (e.reward == "standard") {
      base = HypergridConfig::standard(e.grid.dim, e.grid.size);
    } else if (e.reward == "harder") {
      base = HypergridConfig::harder(e.grid.dim, e.grid.size);
    } else if (e.reward != "custom") {
      throw ConfigError("env.reward: expected standard, harder or custom");
    }
    if (e.reward != "custom") {
      e.grid.r0 = base.r0;
      e.grid.r1 = base.r1;
      e.grid.r2 = base.r2;
    }
    e.grid.r0 = b.get<double>("r0", e.grid.r0);
    e.grid.r1 = b.get<double>("r1", e.grid.r1);
    e.grid.r2 = b.get<double>("r2", e.grid.r2);
    e.grid.enumeration_budget = b.get<std::size_t>("enumeration_budget", e.grid.enumeration_budget);
  } else if (e.kind == "bitseq") {
    e.bitseq.length = b.get<int>("length", e.bitseq.length);
    e.bitseq.bits_per_token = b.get<int>("bits_per_token", e.bitseq.bits_per_token);
    e.bitseq.num_modes = b.get<int>("num_modes", e.bitseq.num_modes);
    e.bitseq.mode_seed = b.get<std::uint64_t>("mode_seed", e.bitseq.mode_seed);
    e.bitseq.enumeration_budget = b.get<std::size_t>("enumeration_budget", e.bitseq.enumeration_budget);
  } else {
    throw ConfigError("env.kind: expected hypergrid or bitseq, got '" + e.kind + "'");
  }
  b.finish();
  return e;
}

ParamsConfig parse_params(Block b, std::uint64_t seed) {
  ParamsConfig p;
  p.kind = parse_param_kind(b.get<std::string>("kind", "tabular"));
  const std::string backward = b.get<std::string>("backward", "learned");
  if (backward == "learned") {
    p.backward = BackwardPolicy::Learned;
  } else if (backward == "uniform") {
    p.backward = BackwardPolicy::Uniform;
  } else {
    throw ConfigError("params.backward: expected learned or uniform");
  }
  p.hidden = b.get<std::vector<std::size_t>>("hidden", p.hidden);
  p.activation = parse_activation(b.get<std::string>("activation", "leaky_relu"));
  p.leaky_slope = b.get<double>("leaky_slope", p.leaky_slope);
  p.edge_flow_table = b.get<bool>("edge_flow_table", p.edge_flow_table);
  p.init_seed = b.get<std::uint64_t>("init_seed", seed);
  b.finish();
  return p;
}

ObjectiveConfig parse_objective_block(Block b) {
  ObjectiveConfig o;
  o.kind = parse_objective(b.get<std::string>("kind", "subtb"));
  o.subtb.lambda = b.get<double>("lambda", o.subtb.lambda);
  o.subtb.max_length = b.optional<std::size_t>("max_length");
  o.subtb.scope = parse_scope(b.get<std::string>("scope", "per_batch"));
  o.fm_epsilon = b.get<double>("fm_epsilon", o.fm_epsilon);
  b.finish();
  return o;
}

ExplorationConfig parse_exploration(Block b, std::uint64_t seed) {
  ExplorationConfig x;
  x.epsilon = b.get<double>("epsilon", x.epsilon);
  x.temperature = b.get<double>("temperature", x.temperature);
  x.seed = b.get<std::uint64_t>("seed", seed + 1);
  b.finish();
  return x;
}

OptimizerConfig parse_optimizer(Block b) {
  OptimizerConfig o;
  o.lr = b.get<double>("lr", o.lr);
  o.log_z_lr_multiplier = b.get<double>("log_z_lr_multiplier", o.log_z_lr_multiplier);
  o.beta1 = b.get<double>("beta1", o.beta1);
  o.beta2 = b.get<double>("beta2", o.beta2);
  o.eps = b.get<double>("eps", o.eps);
  o.batch_size = b.get<std::size_t>("batch_size", o.batch_size);
  o.total_trajectories = b.get<std::uint64_t>("total_trajectories", o.total_trajectories);
  b.finish();
  return o;
}

EvalConfig parse_eval(Block b) {
  EvalConfig e;
  e.window = b.get<std::size_t>("window", e.window);
  e.interval = b.get<std::size_t>("interval", e.interval);
  e.correlations = b.get<bool>("correlations", e.correlations);
  e.test_set_size = b.get<std::size_t>("test_set_size", e.test_set_size);
  e.test_set_seed = b.get<std::uint64_t>("test_set_seed", e.test_set_seed);
  b.finish();
  return e;
}

DiagnosticsConfig parse_diagnostics(Block b, std::uint64_t seed) {
  DiagnosticsConfig d;
  d.interval = b.get<std::size_t>("interval", d.interval);
  d.training_batches = b.get<std::size_t>("training_batches", d.training_batches);
  d.batch_log2 = b.get<std::size_t>("batch_log2", d.batch_log2);
  if (b.has("objectives")) {
    d.objectives.clear();
    for (const auto& name : b.get<std::vector<std::string>>("objectives", {})) d.objectives.push_back(parse_objective(name));
  }
  if (b.has("flow_sources")) {
    d.flow_sources.clear();
    for (const auto& name : b.get<std::vector<std::string>>("flow_sources", {}))
      d.flow_sources.push_back(parse_flow_source(name));
  }
  d.seed = b.get<std::uint64_t>("seed", seed + 2);
  b.finish();
  return d;
}

}  // namespace

AdamConfig OptimizerConfig::adam() const {
  AdamConfig a{.lr = lr, .beta1 = beta1, .beta2 = beta2, .eps = eps};
  a.group_multipliers[ParamSet::kLogZGroup] = log_z_lr_multiplier;
  return a;
}

void ExperimentConfig::validate() const {
  params.validate();
  objective.validate();
  exploration.validate();
  if (!(optimizer.lr > 0)) throw ConfigError("optimizer.lr must be positive");
  if (!(optimizer.log_z_lr_multiplier > 0)) throw ConfigError("optimizer.log_z_lr_multiplier must be positive");
  if (!(optimizer.beta1 >= 0 && optimizer.beta1 < 1 && optimizer.beta2 >= 0 && optimizer.beta2 < 1))
    throw ConfigError("optimizer betas must lie in [0, 1)");
  if (!(optimizer.eps > 0)) throw ConfigError("optimizer.eps must be positive");
  if (optimizer.batch_size == 0) throw ConfigError("optimizer.batch_size must be positive");
  if (optimizer.total_trajectories % optimizer.batch_size != 0)
    throw ConfigError("optimizer.total_trajectories must be divisible by batch_size");
  if (eval.window == 0) throw ConfigError("eval.window must be positive");
  if (eval.interval == 0) throw ConfigError("eval.interval must be positive");
  if (eval.test_set_size == 0) throw ConfigError("eval.test_set_size must be positive");
  if (diagnostics.interval == 0) throw ConfigError("diagnostics.interval must be positive");
  if (diagnostics.batch_log2 > 16) throw ConfigError("diagnostics.batch_log2 must be at most 16");
  if (env.kind == "hypergrid") {
    if (env.grid.dim < 1 || env.grid.size < 2) throw ConfigError("env: hypergrid needs dim >= 1 and size >= 2");
  }
  if (objective.kind == ObjectiveKind::FM && params.kind != ParamKind::EdgeFlow)
    throw ConfigError("objective fm needs params.kind edge_flow");
  if (objective.kind != ObjectiveKind::FM && params.kind == ParamKind::EdgeFlow)
    throw ConfigError("params.kind edge_flow is only trained with objective fm");
}

ExperimentConfig parse_config(const json& j) {
  Block root(j, "config");
  ExperimentConfig c;
  c.seed = root.get<std::uint64_t>("seed", 0);
  c.output_dir = root.get<std::string>("output_dir", "run");
  c.env = parse_env(root.child("env"));
  c.params = parse_params(root.child("params"), c.seed);
  c.objective = parse_objective_block(root.child("objective"));
  c.exploration = parse_exploration(root.child("exploration"), c.seed);
  c.optimizer = parse_optimizer(root.child("optimizer"));
  c.eval = parse_eval(root.child("eval"));
  c.diagnostics = parse_diagnostics(root.child("diagnostics"), c.seed);
  {
    Block b = root.child("checkpoint");
    c.checkpoint.interval = b.get<std::size_t>("interval", 0);
    b.finish();
  }
  root.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  json env;
  env["kind"] = c.env.kind;
  if (c.env.kind == "hypergrid") {
    env["dim"] = c.env.grid.dim;
    env["size"] = c.env.grid.size;
    env["reward"] = c.env.reward;
    env["r0"] = c.env.grid.r0;
    env["r1"] = c.env.grid.r1;
    env["r2"] = c.env.grid.r2;
    env["beta"] = c.env.grid.beta;
    env["enumeration_budget"] = c.env.grid.enumeration_budget;
  } else {
    env["length"] = c.env.bitseq.length;
    env["bits_per_token"] = c.env.bitseq.bits_per_token;
    env["num_modes"] = c.env.bitseq.num_modes;
    env["mode_seed"] = c.env.bitseq.mode_seed;
    env["beta"] = c.env.bitseq.beta;
    env["enumeration_budget"] = c.env.bitseq.enumeration_budget;
  }
  json diag_objectives = json::array(), diag_sources = json::array();
  for (auto k : c.diagnostics.objectives) diag_objectives.push_back(objective_name(k));
  for (auto s : c.diagnostics.flow_sources) diag_sources.push_back(flow_source_name(s));
  return json{
      {"seed", c.seed},
      {"output_dir", c.output_dir.string()},
      {"env", env},
      {"params",
       {{"kind", param_kind_name(c.params.kind)},
        {"backward", c.params.backward == BackwardPolicy::Learned ? "learned" : "uniform"},
        {"hidden", c.params.hidden},
        {"activation", activation_name(c.params.activation)},
        {"leaky_slope", c.params.leaky_slope},
        {"edge_flow_table", c.params.edge_flow_table},
        {"init_seed", c.params.init_seed}}},
      {"objective",
       {{"kind", objective_name(c.objective.kind)},
        {"lambda", c.objective.subtb.lambda},
        {"max_length", c.objective.subtb.max_length ? json(*c.objective.subtb.max_length) : json(nullptr)},
        {"scope", scope_name(c.objective.subtb.scope)},
        {"fm_epsilon", c.objective.fm_epsilon}}},
      {"exploration",
       {{"epsilon", c.exploration.epsilon}, {"temperature", c.exploration.temperature}, {"seed", c.exploration.seed}}},
      {"optimizer",
       {{"lr", c.optimizer.lr},
        {"log_z_lr_multiplier", c.optimizer.log_z_lr_multiplier},
        {"beta1", c.optimizer.beta1},
        {"beta2", c.optimizer.beta2},
        {"eps", c.optimizer.eps},
        {"batch_size", c.optimizer.batch_size},
        {"total_trajectories", c.optimizer.total_trajectories}}},
      {"eval",
       {{"window", c.eval.window},
        {"interval", c.eval.interval},
        {"correlations", c.eval.correlations},
        {"test_set_size", c.eval.test_set_size},
        {"test_set_seed", c.eval.test_set_seed}}},
      {"diagnostics",
       {{"interval", c.diagnostics.interval},
        {"training_batches", c.diagnostics.training_batches},
        {"batch_log2", c.diagnostics.batch_log2},
        {"objectives", diag_objectives},
        {"flow_sources", diag_sources},
        {"seed", c.diagnostics.seed}}},
      {"checkpoint", {{"interval", c.checkpoint.interval}}},
  };
}

std::shared_ptr<const Environment> make_environment(const EnvConfig& config) {
  if (config.kind == "hypergrid") return make_hypergrid(config.grid);
  if (config.kind == "bitseq") return make_bit_sequence(config.bitseq);
  throw ConfigError("env.kind: unknown environment '" + config.kind + "'");
}

}  // namespace gfn
