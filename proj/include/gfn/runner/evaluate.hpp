#pragma once

#include <filesystem>

#include <json.hpp>

#include "gfn/diffcore/checkpoint.hpp"
#include "gfn/runner/config.hpp"

namespace gfn {

// Metrics of the parameters stored in `checkpoint` under the environment of
// `config`. Fields that do not apply (exact L1 on a non-enumerable
// environment, window statistics of a parameter-only checkpoint) are null;
// an undefined correlation is null with "<name>_defined": false.
//
// Throws CheckpointError when the checkpoint was written for a different
// environment or parameterization.
nlohmann::json evaluate_checkpoint(const ExperimentConfig& config, const Checkpoint& checkpoint);
nlohmann::json evaluate_checkpoint(const ExperimentConfig& config, const std::filesystem::path& checkpoint);

}  // namespace gfn
