#include "gfn/runner/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gfn/error.hpp"
#include "gfn/evalsuite/marginal.hpp"
#include "gfn/evalsuite/statistics.hpp"
#include "gfn/kernels/kernels.hpp"
#include "gfn/objectives/gradient.hpp"
#include "gfn/sampler/sampler.hpp"

namespace gfn {
namespace {

nlohmann::json states_to_json(const std::vector<State>& states) {
  auto j = nlohmann::json::array();
  for (const State& s : states) j.push_back(s.cells);
  return j;
}

std::vector<State> terminal_states_from_json(const nlohmann::json& j) {
  std::vector<State> out;
  for (const auto& cells : j) out.push_back(State{cells.get<std::vector<int>>(), true});
  return out;
}

template <class F>
std::optional<double> defined(F&& f) {
  try {
    return f();
  } catch (const UndefinedStatistic&) {
    return std::nullopt;
  }
}

}  // namespace

Evaluator::Evaluator(std::shared_ptr<const Environment> env, const EvalConfig& config)
    : env_(std::move(env)), config_(config) {
  if (env_->enumerable()) target_ = exact_target(*env_);
  if (config_.correlations && config_.test_set_size > 0) {
    test_set_ = correlation_test_set(*env_, config_.test_set_size, config_.test_set_seed);
    for (const State& x : test_set_) test_log_reward_.push_back(env_->log_reward(x));
  }
}

Scores Evaluator::score(const ParamSet& params, const SampleWindow& window) const {
  Scores s;
  if (target_ && !window.empty()) s.l1 = empirical_l1(window, *target_);
  if (!test_set_.empty()) {
    const std::vector<double> logp = marginal_logliks(params, test_set_);
    s.spearman = defined([&] { return spearman(logp, test_log_reward_); });
    s.pearson = defined([&] { return pearson_loglog(logp, test_log_reward_); });
  }
  return s;
}

std::optional<double> Evaluator::exact_l1(const ParamSet& params) const {
  if (!target_) return std::nullopt;
  const std::vector<double> logp = terminal_log_probabilities(params);
  double l1 = 0.0;
  for (std::size_t i = 0; i < logp.size(); ++i) l1 += std::abs(std::exp(logp[i]) - target_->probability[i]);
  return l1;
}

Trainer::Trainer(ExperimentConfig config)
    : config_(std::move(config)),
      env_(make_environment(config_.env)),
      params_(make_paramset(env_, config_.params)),
      window_(config_.eval.window),
      evaluator_(env_, config_.eval) {
  config_.validate();
  const auto ps = params_->parameters();
  adam_ = std::make_unique<Adam>(config_.optimizer.adam(), ps);
}

std::optional<double> Trainer::step() {
  const std::vector<Trajectory> batch =
      sample_batch(*params_, config_.exploration, config_.optimizer.batch_size, batches_);
  for (const Trajectory& t : batch) {
    window_.push(t.terminal_state());
    history_.record(*env_, t.terminal_state());
  }
  const std::uint64_t index = batches_++;
  double loss = 0.0;
  try {
    loss = objective_gradient(*params_, batch, config_.objective).loss;
  } catch (const NonFiniteError& e) {
    ++skipped_;
    events_.push_back({{"batch", index}, {"event", "skipped_step"}, {"reason", e.what()}});
    return std::nullopt;
  }
  if (!adam_->step()) {
    ++skipped_;
    events_.push_back({{"batch", index}, {"event", "skipped_step"}, {"reason", "non-finite gradient"}});
    return std::nullopt;
  }
  loss_sum_ += loss;
  ++loss_count_;
  return loss;
}

MetricRecord Trainer::record() {
  MetricRecord r;
  r.step = batches_;
  r.trajectories_seen = trajectories_seen();
  r.modes = history_.modes_found();
  r.distinct_states = history_.distinct_states();
  const Scores s = evaluator_.score(*params_, window_);
  r.l1 = s.l1;
  r.spearman = s.spearman;
  r.pearson = s.pearson;
  r.loss = loss_count_ ? loss_sum_ / static_cast<double>(loss_count_) : std::nan("");
  r.log_z = params_->log_z();
  loss_sum_ = 0.0;
  loss_count_ = 0;
  return r;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  params_->export_to(c);
  const AdamState& st = adam_->state();
  const auto ps = params_->parameters();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    c.arrays.push_back({"adam.m." + ps[i]->name, ps[i]->value.shape(), st.first_moment[i]});
    c.arrays.push_back({"adam.v." + ps[i]->name, ps[i]->value.shape(), st.second_moment[i]});
  }
  std::vector<State> visited(history_.visited().begin(), history_.visited().end());
  std::sort(visited.begin(), visited.end(), [](const State& a, const State& b) { return a.cells < b.cells; });
  c.metadata = {
      {"kind", "training_state"},
      {"env_signature", env_->signature()},
      {"param_kind", param_kind_name(params_->kind())},
      {"batches_done", batches_},
      {"trajectories_seen", trajectories_seen()},
      {"skipped_steps", skipped_},
      {"adam_step", st.step},
      {"adam_skipped", st.skipped},
      {"loss_sum", loss_sum_},
      {"loss_count", loss_count_},
      {"log_z", params_->log_z()},
      {"window", states_to_json(window_.contents())},
      {"visited", states_to_json(visited)},
      {"config", to_json(config_)},
  };
  return c;
}

void Trainer::restore(const Checkpoint& c) {
  const auto& m = c.metadata;
  try {
    if (m.at("env_signature").get<std::string>() != env_->signature())
      throw CheckpointError("checkpoint: environment mismatch (checkpoint " + m.at("env_signature").get<std::string>() +
                            ", config " + env_->signature() + ")");
    if (m.at("param_kind").get<std::string>() != param_kind_name(params_->kind()))
      throw CheckpointError("checkpoint: parameterization mismatch");
    params_->import_from(c);
    AdamState st;
    for (const Parameter* p : params_->parameters()) {
      for (const char* which : {"adam.m.", "adam.v."}) {
        const NamedArray& a = c.array(which + p->name);
        if (a.shape != p->value.shape()) throw CheckpointError("checkpoint: shape mismatch for '" + a.name + "'");
        (which[5] == 'm' ? st.first_moment : st.second_moment).push_back(a.data);
      }
    }
    st.step = m.at("adam_step").get<std::uint64_t>();
    st.skipped = m.at("adam_skipped").get<std::uint64_t>();
    adam_->restore(std::move(st));
    batches_ = m.at("batches_done").get<std::uint64_t>();
    skipped_ = m.at("skipped_steps").get<std::uint64_t>();
    loss_sum_ = m.at("loss_sum").get<double>();
    loss_count_ = m.at("loss_count").get<std::uint64_t>();
    window_ = SampleWindow(config_.eval.window);
    for (const State& x : terminal_states_from_json(m.at("window"))) window_.push(x);
    history_.clear();
    for (const State& x : terminal_states_from_json(m.at("visited"))) history_.record(*env_, x);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint: missing training state: ") + e.what());
  }
}

std::vector<nlohmann::json> Trainer::drain_events() { return std::exchange(events_, {}); }

std::filesystem::path checkpoint_path(const std::filesystem::path& output_dir, std::uint64_t step) {
  return output_dir / "checkpoints" / ("step_" + std::to_string(step) + ".json");
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error("cannot write " + tmp);
    out << j.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

namespace {

// Keeps the metrics.csv rows at or before `step` (a resumed run rewrites the rest).
void truncate_metrics(const std::filesystem::path& path, std::uint64_t step) {
  std::ifstream in(path);
  if (!in) return;
  std::vector<std::string> keep;
  std::string line;
  while (std::getline(in, line)) {
    if (keep.empty()) {
      keep.push_back(line);
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    if (std::stoull(line.substr(0, comma)) <= step) keep.push_back(line);
  }
  in.close();
  std::ofstream out(path, std::ios::trunc);
  for (const auto& l : keep) out << l << '\n';
}

}  // namespace

TrainResult train(const ExperimentConfig& config, const TrainOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  Trainer trainer(config);
  const auto& dir = config.output_dir;
  std::filesystem::create_directories(dir);

  nlohmann::json manifest = {
      {"config", to_json(config)},
      {"env_signature", trainer.environment().signature()},
      {"kernel_backend", std::string(kernels::backend_name(kernels::active_backend()))},
      {"parameter_count", trainer.params().parameter_count()},
      {"total_batches", config.optimizer.total_batches()},
      {"status", "running"},
  };
  if (options.resume) {
    trainer.restore(load_checkpoint(*options.resume));
    truncate_metrics(dir / "metrics.csv", trainer.batches_done());
    manifest["resumed_from"] = options.resume->string();
  }
  write_json_file(dir / "run.json", manifest);

  MetricsWriter metrics(dir / "metrics.csv", options.resume.has_value());
  std::ofstream events(dir / "events.jsonl", options.resume ? std::ios::app : std::ios::trunc);
  TrainResult result;
  std::filesystem::path last = checkpoint_path(dir, trainer.batches_done());
  if (!options.resume) save_checkpoint(trainer.checkpoint(), last);

  const std::uint64_t total = config.optimizer.total_batches();
  const std::size_t eval_every = config.eval.interval;
  const std::size_t ckpt_every = config.checkpoint.interval;
  while (trainer.batches_done() < total) {
    trainer.step();
    for (const auto& e : trainer.drain_events()) events << e.dump() << '\n';
    events.flush();
    const std::uint64_t done = trainer.batches_done();
    if (done % eval_every == 0 || done == total) {
      const MetricRecord r = trainer.record();
      metrics.write(r);
      if (options.on_record) options.on_record(r);
      result.records.push_back(r);
    }
    if ((ckpt_every && done % ckpt_every == 0) || done == total) {
      last = checkpoint_path(dir, done);
      save_checkpoint(trainer.checkpoint(), last);
    }
  }

  result.final_checkpoint = last;
  result.skipped_steps = trainer.skipped_steps();
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;
  manifest["status"] = "complete";
  manifest["final_checkpoint"] = last.string();
  manifest["batches_done"] = trainer.batches_done();
  manifest["skipped_steps"] = trainer.skipped_steps();
  manifest["wall_seconds"] = elapsed.count();
  write_json_file(dir / "run.json", manifest);
  return result;
}

}  // namespace gfn
