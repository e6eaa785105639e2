// gfn: train, evaluate and diagnose GFlowNets from JSON configs.
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gfn/error.hpp"
#include "gfn/evalsuite/target.hpp"
#include "gfn/runner/config.hpp"
#include "gfn/runner/evaluate.hpp"
#include "gfn/runner/graddiag_run.hpp"
#include "gfn/runner/metrics.hpp"
#include "gfn/runner/sweep.hpp"
#include "gfn/runner/train.hpp"

namespace {

int fail(const char* kind, const std::string& message, int code) {
  const nlohmann::json record = {{"error", {{"kind", kind}, {"message", message}}}};
  std::cerr << record.dump() << std::endl;
  return code;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw gfn::ConfigError("sweep: '" + item + "' is not a number");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GFlowNet training and diagnostics"};
  app.require_subcommand(1);

  std::string config_path, checkpoint_path, resume, output, lrs, lambdas;
  bool run_sweep = false;

  auto* train = app.add_subcommand("train", "Train a sampler; writes metrics.csv, checkpoints and run.json");
  train->add_option("config", config_path, "JSON config")->required();
  train->add_option("--resume", resume, "Continue from a training checkpoint");
  train->add_option("--output", output, "Override output_dir");

  auto* evaluate = app.add_subcommand("evaluate", "Print evaluation metrics of a checkpoint as JSON");
  evaluate->add_option("checkpoint", checkpoint_path, "Checkpoint file")->required();
  evaluate->add_option("config", config_path, "JSON config")->required();

  auto* graddiag = app.add_subcommand("graddiag", "Gradient similarity diagnostics; writes similarity_<pair>.csv");
  graddiag->add_option("config", config_path, "JSON config")->required();
  graddiag->add_option("--output", output, "Override output_dir");

  auto* enumerate = app.add_subcommand("enumerate", "Print the exact target distribution as JSON");
  enumerate->add_option("config", config_path, "JSON config")->required();

  auto* sweep = app.add_subcommand("sweep", "Expand a learning-rate / lambda grid into configs");
  sweep->add_option("config", config_path, "Base JSON config")->required();
  sweep->add_option("--lrs", lrs, "Comma-separated learning rates (default preset)");
  sweep->add_option("--lambdas", lambdas, "Comma-separated SubTB lambdas (default preset)");
  sweep->add_flag("--run", run_sweep, "Train every point after writing its config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    gfn::ExperimentConfig config = gfn::load_config(config_path);
    if (!output.empty()) config.output_dir = output;

    if (*train) {
      gfn::TrainOptions options;
      if (!resume.empty()) options.resume = resume;
      const auto result = gfn::train(config, options);
      std::cout << nlohmann::json{{"output_dir", config.output_dir.string()},
                                  {"final_checkpoint", result.final_checkpoint.string()},
                                  {"rows", result.records.size()},
                                  {"skipped_steps", result.skipped_steps}}
                       .dump()
                << std::endl;
    } else if (*evaluate) {
      std::cout << gfn::evaluate_checkpoint(config, std::filesystem::path(checkpoint_path)).dump(2) << std::endl;
    } else if (*graddiag) {
      const auto result = gfn::run_graddiag(config);
      auto files = nlohmann::json::array();
      for (const auto& [pair, curves] : result.curves) files.push_back("similarity_" + pair + ".csv");
      std::cout << nlohmann::json{{"output_dir", config.output_dir.string()}, {"files", files}}.dump() << std::endl;
    } else if (*enumerate) {
      const auto env = gfn::make_environment(config.env);
      const gfn::TargetDistribution target = gfn::exact_target(*env);
      auto states = nlohmann::json::array();
      for (std::size_t i = 0; i < target.states.size(); ++i) {
        states.push_back({{"state", target.states[i].cells},
                          {"log_reward", target.log_reward[i]},
                          {"probability", target.probability[i]}});
      }
      std::cout << nlohmann::json{{"env_signature", env->signature()},
                                  {"state_count", env->state_count()},
                                  {"terminal_count", target.states.size()},
                                  {"mode_count", env->mode_count()},
                                  {"log_z", target.log_z},
                                  {"terminals", states}}
                       .dump(2)
                << std::endl;
    } else if (*sweep) {
      const auto lr_list = lrs.empty() ? gfn::sweep_learning_rates() : parse_list(lrs);
      const auto lambda_list = lambdas.empty() ? gfn::sweep_lambdas() : parse_list(lambdas);
      auto points = nlohmann::json::array();
      for (const auto& p : gfn::expand_sweep(config, lr_list, lambda_list)) {
        gfn::write_json_file(p.config.output_dir / "config.json", gfn::to_json(p.config));
        if (run_sweep) gfn::train(p.config);
        points.push_back({{"name", p.name}, {"output_dir", p.config.output_dir.string()}});
      }
      std::cout << points.dump(2) << std::endl;
    }
    return 0;
  } catch (const gfn::Error& e) {
    return fail(e.kind(), e.what(), 1);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
}
