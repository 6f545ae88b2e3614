#pragma once

#include <string>

#include <json.hpp>

#include "irse/dims.hpp"
#include "irse/model.hpp"

namespace irse {

inline constexpr int kCheckpointFormatVersion = 1;

nlohmann::json dims_to_json(const ModelDims& dims);
/// Missing keys keep their defaults; unknown keys throw ConfigError.
ModelDims dims_from_json(const nlohmann::json& j);

/// {name: {"shape": [r, c], "values": [...]}}
nlohmann::json params_to_json(const ParamStore& store);
/// Every stored parameter must be present with its exact shape and no
/// extra names may appear (ValidationError / ShapeError otherwise).
void params_from_json(ParamStore& store, const nlohmann::json& j);

/// `meta` is stored verbatim under "meta" (training config, phase, ...).
void save_checkpoint(const std::string& path, const Model& model, const nlohmann::json& meta = nlohmann::json::object());
Model load_checkpoint(const std::string& path, nlohmann::json* meta = nullptr);

}  // namespace irse
