#include "irse/checkpoint.hpp"

#include <fstream>
#include <set>

namespace irse {

using nlohmann::json;

json dims_to_json(const ModelDims& d) {
  return {{"embed", d.embed},
          {"lstm_hidden", d.lstm_hidden},
          {"entity", d.entity},
          {"global", d.global},
          {"mlp", d.mlp},
          {"decoder_hidden", d.decoder_hidden},
          {"attention", d.attention},
          {"grn_layers", d.grn_layers},
          {"tie_directions", d.tie_directions}};
}

ModelDims dims_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("dims: expected an object");
  ModelDims d;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "embed") d.embed = value.get<std::size_t>();
      else if (key == "lstm_hidden") d.lstm_hidden = value.get<std::size_t>();
      else if (key == "entity") d.entity = value.get<std::size_t>();
      else if (key == "global") d.global = value.get<std::size_t>();
      else if (key == "mlp") d.mlp = value.get<std::size_t>();
      else if (key == "decoder_hidden") d.decoder_hidden = value.get<std::size_t>();
      else if (key == "attention") d.attention = value.get<std::size_t>();
      else if (key == "grn_layers") d.grn_layers = value.get<int>();
      else if (key == "tie_directions") d.tie_directions = value.get<bool>();
      else throw ConfigError("dims: unknown key '" + key + "'");
    } catch (const json::exception& e) {
      throw ConfigError("dims." + key + ": " + e.what());
    }
  }
  d.validate();
  return d;
}

json params_to_json(const ParamStore& store) {
  json out = json::object();
  for (const Parameter* p : store.all()) {
    out[p->name] = {{"shape", {p->value.rows(), p->value.cols()}},
                    {"values", std::vector<double>(p->value.values().begin(), p->value.values().end())}};
  }
  return out;
}

void params_from_json(ParamStore& store, const json& j) {
  if (!j.is_object()) throw ValidationError("checkpoint: params must be an object");
  std::set<std::string> seen;
  for (Parameter* p : store.all()) {
    auto it = j.find(p->name);
    if (it == j.end()) throw ValidationError("checkpoint: missing parameter '" + p->name + "'");
    auto shape = it->at("shape").get<std::vector<std::size_t>>();
    auto values = it->at("values").get<std::vector<double>>();
    if (shape.size() != 2 || shape[0] != p->value.rows() || shape[1] != p->value.cols()) {
      std::string got;
      for (std::size_t k = 0; k < shape.size(); ++k) got += (k ? "x" : "") + std::to_string(shape[k]);
      throw ShapeError("checkpoint: parameter '" + p->name + "' has shape " + got + ", expected " +
                       p->value.shape_string());
    }
    if (values.size() != p->value.size()) {
      throw ShapeError("checkpoint: parameter '" + p->name + "' has " + std::to_string(values.size()) +
                       " values for shape " + p->value.shape_string());
    }
    std::copy(values.begin(), values.end(), p->value.values().begin());
    seen.insert(p->name);
  }
  for (const auto& [name, value] : j.items()) {
    if (!seen.count(name)) throw ValidationError("checkpoint: unexpected parameter '" + name + "'");
  }
}

void save_checkpoint(const std::string& path, const Model& model, const json& meta) {
  json j = {{"format_version", kCheckpointFormatVersion},
            {"dims", dims_to_json(model.dims())},
            {"vocabulary", model.vocab().tokens()},
            {"meta", meta},
            {"params", params_to_json(model.params())}};
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write checkpoint '" + path + "'");
  out << j.dump() << '\n';
  if (!out) throw ConfigError("failed writing checkpoint '" + path + "'");
}

Model load_checkpoint(const std::string& path, json* meta) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open checkpoint '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("checkpoint '" + path + "': " + e.what());
  }
  try {
    int version = j.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw ValidationError("checkpoint '" + path + "': unsupported format_version " + std::to_string(version));
    }
    Model model(dims_from_json(j.at("dims")), Vocabulary(j.at("vocabulary").get<std::vector<std::string>>()));
    params_from_json(model.params(), j.at("params"));
    if (meta) *meta = j.value("meta", json::object());
    return model;
  } catch (const json::exception& e) {
    throw ValidationError("checkpoint '" + path + "': " + e.what());
  }
}

}  // namespace irse
