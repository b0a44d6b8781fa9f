#include "oransim/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "oransim/common.hpp"

namespace oransim::nn {

using json = nlohmann::json;

void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& tensors) {
  json root;
  root["magic"] = kCheckpointMagic;
  json arr = json::array();
  for (const auto& t : tensors) {
    json jt;
    jt["name"] = t.name;
    jt["shape"] = t.shape;
    jt["data"] = t.data;
    arr.push_back(std::move(jt));
  }
  root["tensors"] = std::move(arr);
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write checkpoint: " + path);
  out << root.dump();
}

std::vector<NamedTensor> load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read checkpoint: " + path);
  json root = json::parse(in);
  if (!root.contains("magic") || root["magic"] != kCheckpointMagic)
    throw ConfigError("checkpoint magic mismatch in " + path);
  std::vector<NamedTensor> out;
  for (const auto& jt : root["tensors"]) {
    NamedTensor t;
    t.name = jt["name"].get<std::string>();
    t.shape = jt["shape"].get<std::vector<int>>();
    t.data = jt["data"].get<Vec>();
    size_t n = 1;
    for (int d : t.shape) n *= static_cast<size_t>(d);
    if (n != t.data.size())
      throw ConfigError("checkpoint tensor " + t.name + " shape/data mismatch");
    out.push_back(std::move(t));
  }
  return out;
}

const NamedTensor& find_tensor(const std::vector<NamedTensor>& ts, const std::string& name) {
  for (const auto& t : ts)
    if (t.name == name) return t;
  throw ConfigError("checkpoint missing tensor: " + name);
}

}  // namespace oransim::nn
