#include "gfn/runner/graddiag_run.hpp"

#include <cmath>
#include <fstream>

#include "gfn/error.hpp"
#include "gfn/graddiag/per_trajectory.hpp"
#include "gfn/runner/metrics.hpp"
#include "gfn/runner/train.hpp"
#include "gfn/sampler/rng.hpp"
#include "gfn/sampler/sampler.hpp"

namespace gfn {

std::vector<double> similarity_values(std::span<const GradVector> grads, std::span<const double> reference) {
  std::size_t total = 0;
  while ((std::size_t{1} << total) < grads.size()) ++total;
  std::vector<double> out;
  for (std::size_t k = 0; k <= total; ++k) {
    try {
      out.push_back(subbatch_similarity(grads, k, reference));
    } catch (const UndefinedStatistic&) {
      out.push_back(std::nan(""));
    }
  }
  return out;
}

GraddiagResult run_graddiag(const ExperimentConfig& config) {
  const DiagnosticsConfig& diag = config.diagnostics;
  if (config.params.kind != ParamKind::Tabular)
    throw ConfigError("graddiag: gradient diagnostics need tabular parameters");
  if (diag.interval == 0) throw ConfigError("diagnostics.interval must be positive");
  Trainer trainer(config);
  const auto& dir = config.output_dir;
  std::filesystem::create_directories(dir);
  write_json_file(dir / "run.json", {{"config", to_json(config)},
                                     {"env_signature", trainer.environment().signature()},
                                     {"mode", "graddiag"}});

  const auto objective_for = [&](ObjectiveKind kind) {
    ObjectiveConfig o = config.objective;
    o.kind = kind;
    return o;
  };
  const std::size_t diag_batch = std::size_t{1} << diag.batch_log2;
  GraddiagResult result;

  const auto record = [&](std::size_t iteration) {
    CounterRng rng(diag.seed, iteration);
    const std::vector<Trajectory> batch = sample_batch(trainer.params(), config.exploration, diag_batch, rng);
    for (FlowSource source : diag.flow_sources) {
      const std::string suffix = source == FlowSource::Learned ? "" : std::string("_") + flow_source_name(source);
      const auto tb = substituted_gradients(trainer.params(), batch, objective_for(ObjectiveKind::TB), source);
      const GradVector tb_mean = mean_gradient(tb, 0, tb.size());
      for (ObjectiveKind kind : diag.objectives) {
        const std::string name = objective_name(kind);
        const auto grads =
            kind == ObjectiveKind::TB ? tb : substituted_gradients(trainer.params(), batch, objective_for(kind), source);
        const GradVector own = mean_gradient(grads, 0, grads.size());
        result.curves[name + "_self" + suffix].push_back({iteration, name + "_self" + suffix, similarity_values(grads, own)});
        result.curves[name + "_vs_tb" + suffix].push_back(
            {iteration, name + "_vs_tb" + suffix, similarity_values(grads, tb_mean)});
      }
    }
  };

  for (std::size_t it = 0;; ++it) {
    if (it % diag.interval == 0) record(it);
    if (it == diag.training_batches) break;
    trainer.step();
  }

  for (const auto& [pair, curves] : result.curves) {
    std::ofstream out(dir / ("similarity_" + pair + ".csv"), std::ios::trunc);
    if (!out) throw Error("cannot write similarity_" + pair + ".csv");
    out << "iteration,objective_pair,k,mean_cosine\n";
    for (const SimilarityCurve& c : curves) {
      for (std::size_t k = 0; k < c.values.size(); ++k) {
        out << c.iteration << ',' << c.pair << ',' << k << ',';
        if (!std::isnan(c.values[k])) out << format_double(c.values[k]);
        out << '\n';
      }
    }
  }
  return result;
}

}  // namespace gfn
