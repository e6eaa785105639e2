#include "gfn/diffcore/checkpoint.hpp"

#include <fstream>

#include "gfn/error.hpp"

namespace gfn {

const NamedArray& Checkpoint::array(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return a;
  }
  throw CheckpointError("checkpoint: missing array '" + name + "'");
}

bool Checkpoint::has_array(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return true;
  }
  return false;
}

nlohmann::json to_json(const Checkpoint& checkpoint) {
  nlohmann::json j;
  j["format"] = Checkpoint::kFormat;
  j["version"] = Checkpoint::kVersion;
  j["metadata"] = checkpoint.metadata;
  auto& arrays = j["arrays"] = nlohmann::json::array();
  for (const auto& a : checkpoint.arrays) {
    arrays.push_back({{"name", a.name}, {"shape", a.shape}, {"data", a.data}});
  }
  return j;
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != Checkpoint::kFormat)
      throw CheckpointError("checkpoint: unrecognized format tag");
    const int version = j.at("version").get<int>();
    if (version != Checkpoint::kVersion)
      throw CheckpointError("checkpoint: unsupported version " + std::to_string(version));
    Checkpoint c;
    c.metadata = j.value("metadata", nlohmann::json::object());
    for (const auto& a : j.at("arrays")) {
      NamedArray arr{a.at("name").get<std::string>(), a.at("shape").get<Tensor::Shape>(),
                     a.at("data").get<std::vector<double>>()};
      if (arr.data.size() != element_count(arr.shape))
        throw CheckpointError("checkpoint: array '" + arr.name + "' data does not match its shape");
      c.arrays.push_back(std::move(arr));
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint: malformed document: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw CheckpointError("checkpoint: cannot write " + tmp);
    out << to_json(checkpoint).dump();
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("checkpoint: cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("checkpoint: " + path.string() + " is not valid JSON: " + e.what());
  }
  return checkpoint_from_json(j);
}

void export_parameters(std::span<const Parameter> params, Checkpoint& checkpoint) {
  for (const auto& p : params) {
    const auto data = p.value.data();
    checkpoint.arrays.push_back({p.name, p.value.shape(), std::vector<double>(data.begin(), data.end())});
  }
}

void import_parameters(const Checkpoint& checkpoint, std::span<Parameter> params) {
  for (auto& p : params) {
    const NamedArray& a = checkpoint.array(p.name);
    if (a.shape != p.value.shape())
      throw CheckpointError("checkpoint: parameter '" + p.name + "' has shape " + shape_string(a.shape) +
                            ", expected " + shape_string(p.value.shape()));
    p.value = Tensor(a.shape, a.data);
    p.zero_grad();
  }
}

}  // namespace gfn
