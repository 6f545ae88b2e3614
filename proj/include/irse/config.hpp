#pragma once

#include <array>
#include <cstdint>
#include <string>

#include <json.hpp>

#include "irse/data.hpp"
#include "irse/decode.hpp"
#include "irse/dims.hpp"
#include "irse/refine.hpp"
#include "irse/train.hpp"

namespace irse {

struct PathsConfig {
  std::string corpus;           // JSONL corpus; split into train/val/test
  std::string output_dir = "run";
  std::string embeddings;       // optional pretrained vectors
};

struct EvalSection {
  DecodeMode decode = DecodeMode::kGreedy;
  int beam_width = 4;
  std::uint64_t order_seed = 11;
};

/// Everything a CLI run needs. JSON sections: dims, train, refine, synth,
/// eval, split, paths, plus a top-level seed that drives initialization,
/// splitting and training.
struct RunConfig {
  ModelDims dims;
  TrainConfig train;
  RefineConfig refine;
  SynthConfig synth;
  EvalSection eval;
  std::array<double, 3> split_ratios{8.0, 1.0, 1.0};
  PathsConfig paths;
  std::uint64_t seed = 7;
  // Set when the document carried a "dims" section; a checkpoint whose dims
  // differ is then rejected.
  bool dims_explicit = false;

  /// Unknown keys at any level throw ConfigError; absent keys keep defaults.
  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
  /// Applies the top-level seed to the training configuration.
  TrainConfig effective_train() const;
};

RunConfig load_run_config(const std::string& path);

}  // namespace irse
