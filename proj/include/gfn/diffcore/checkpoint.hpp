#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gfn/diffcore/tape.hpp"

namespace gfn {

// Self-describing checkpoint container, serialized as JSON:
//
//   {
//     "format": "gfn-checkpoint",
//     "version": 1,
//     "metadata": { ... free-form ... },
//     "arrays": [ {"name": "...", "shape": [..], "data": [..]}, ... ]
//   }
//
// Doubles are written with round-trip precision, so save/load is exact.
struct NamedArray {
  std::string name;
  Tensor::Shape shape;
  std::vector<double> data;
};

struct Checkpoint {
  static constexpr const char* kFormat = "gfn-checkpoint";
  static constexpr int kVersion = 1;

  nlohmann::json metadata = nlohmann::json::object();
  std::vector<NamedArray> arrays;

  const NamedArray& array(const std::string& name) const;
  bool has_array(const std::string& name) const;
};

nlohmann::json to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies parameter values into / out of named arrays, checking shapes.
void export_parameters(std::span<const Parameter> params, Checkpoint& checkpoint);
void import_parameters(const Checkpoint& checkpoint, std::span<Parameter> params);

}  // namespace gfn
