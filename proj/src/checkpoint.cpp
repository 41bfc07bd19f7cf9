#include "sciml/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "sciml/rng.hpp"

namespace sciml {

using nlohmann::json;

void save_model_checkpoint(const std::filesystem::path& path, const DiffModel& m,
                           const ParamVector& params, std::uint64_t seed) {
  validate(m);
  if (params.size() != param_count(m))
    throw std::invalid_argument("save_model_checkpoint: parameter length mismatch");

  json doc;
  doc["schema"] = "model-checkpoint/v1";
  doc["kind"] = std::string(to_string(m.kind));
  doc["seed"] = seed;
  if (m.kind == ModelKind::Ude)
    doc["known"] = {{"alpha", m.known_alpha}, {"delta", m.known_delta}};

  json nets = json::array();
  std::size_t off = 0;
  for (std::size_t i = 0; i < m.nets.size(); ++i) {
    const MlpSpec& spec = m.nets[i];
    const std::size_t count = param_count(spec);
    json net;
    net["widths"] = spec.widths;
    net["activation"] = std::string(to_string(spec.activation));
    net["seed"] = Rng::derive(seed, i);
    net["count"] = count;
    net["params"] = std::vector<double>(params.begin() + off, params.begin() + off + count);
    nets.push_back(std::move(net));
    off += count;
  }
  doc["nets"] = std::move(nets);

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
  f << doc.dump(2) << '\n';
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

LoadedModel load_model_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path.string());
  json doc = json::parse(f);

  if (doc.value("schema", "") != "model-checkpoint/v1")
    throw std::runtime_error("checkpoint: unknown schema");

  LoadedModel out;
  out.model.kind = model_kind_from_string(doc.at("kind").get<std::string>());
  out.seed = doc.at("seed").get<std::uint64_t>();
  if (out.model.kind == ModelKind::Ude) {
    out.model.known_alpha = doc.at("known").at("alpha").get<double>();
    out.model.known_delta = doc.at("known").at("delta").get<double>();
  }

  for (const json& net : doc.at("nets")) {
    MlpSpec spec;
    spec.widths = net.at("widths").get<std::vector<int>>();
    spec.activation = activation_from_string(net.at("activation").get<std::string>());
    out.model.nets.push_back(spec);
    const auto vals = net.at("params").get<std::vector<double>>();
    if (vals.size() != net.at("count").get<std::size_t>() ||
        vals.size() != param_count(spec))
      throw std::runtime_error("checkpoint: parameter count mismatch");
    out.params.insert(out.params.end(), vals.begin(), vals.end());
  }
  validate(out.model);
  return out;
}

}  // namespace sciml
