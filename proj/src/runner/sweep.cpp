#include "gfn/runner/sweep.hpp"

#include <cstdio>
#include <string>

namespace gfn {
namespace {

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::vector<double> sweep_learning_rates() { return {0.0005, 0.00075, 0.001, 0.003, 0.005, 0.0075, 0.01}; }

std::vector<double> sweep_lambdas() { return {0.8, 0.9, 0.99}; }

std::vector<SweepPoint> expand_sweep(const ExperimentConfig& base, std::span<const double> lrs,
                                     std::span<const double> lambdas) {
  std::vector<SweepPoint> out;
  const bool subtb = base.objective.kind == ObjectiveKind::SubTB;
  for (double lr : lrs) {
    if (!subtb || lambdas.empty()) {
      SweepPoint p{"lr" + label(lr), base};
      p.config.optimizer.lr = lr;
      p.config.output_dir = base.output_dir / p.name;
      out.push_back(std::move(p));
      continue;
    }
    for (double lambda : lambdas) {
      SweepPoint p{"lr" + label(lr) + "_lambda" + label(lambda), base};
      p.config.optimizer.lr = lr;
      p.config.objective.subtb.lambda = lambda;
      p.config.output_dir = base.output_dir / p.name;
      out.push_back(std::move(p));
    }
  }
  for (const auto& p : out) p.config.validate();
  return out;
}

}  // namespace gfn
