#pragma once

#include <cstdint>
#include <string>

#include "irse/decode.hpp"
#include "irse/dims.hpp"
#include "irse/encode.hpp"
#include "irse/grn.hpp"
#include "irse/refine.hpp"

namespace irse {

/// Encoder plus graph recurrent network.
struct Tower {
  EncoderParams encoder;
  GrnParams grn;

  static Tower create(ParamStore& store, const std::string& prefix, const ModelDims& dims, std::size_t vocab_size);
};

/// How ss-edge weights are produced before ordering: the full iterative
/// procedure, the initial pass alone, or no refinement (all weights 0.5).
enum class RefineMode { kFull, kInitialOnly, kNone };

std::string to_string(RefineMode mode);
RefineMode refine_mode_from_string(const std::string& s);  // throws ConfigError

/// All trainable state. The initial classifier, the iterative classifier and
/// the ordering decoder each read their own tower, so refinement during
/// ordering training sees frozen classifier inputs.
class Model {
 public:
  static constexpr const char* kInitialTower = "initial.";
  static constexpr const char* kIterativeTower = "iterative.";
  static constexpr const char* kOrderingTower = "ordering.";

  Model(const ModelDims& dims, Vocabulary vocab);
  Model(Model&&) = default;

  void init_uniform(std::uint64_t seed, double scale = 0.08) { store_.init_uniform(seed, scale); }

  const ModelDims& dims() const { return dims_; }
  const Vocabulary& vocab() const { return vocab_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }

  const Tower& initial_tower() const { return initial_; }
  const Tower& iterative_tower() const { return iterative_; }
  const Tower& ordering_tower() const { return ordering_; }
  const ClassifierParams& initial_classifier() const { return initial_mlp_; }
  const ClassifierParams& iterative_classifier() const { return iterative_mlp_; }
  const DecoderParams& decoder() const { return decoder_; }

  /// Layer-L states of g under the given tower, recorded on `tape`.
  GrnState encode(Tape& tape, const IrseGraph& g, const Tower& tower) const;
  /// Top-layer sentence states, forward only.
  Tensor top_sentence_states(const IrseGraph& g, const Tower& tower) const;

  PairClassifier initial_pair_classifier() const;
  PairClassifier iterative_pair_classifier() const;

  /// Expects a fresh graph. kNone leaves it untouched and reports 0
  /// iterations with every pair uncertain.
  RefineResult refine(IrseGraph& g, RefineMode mode, const RefineConfig& cfg,
                      const RefineObserver& observer = nullptr) const;

  /// Orders an already refined graph with the ordering tower and decoder.
  DecodeResult order(const IrseGraph& refined, DecodeMode mode, int width) const;

  std::vector<int> token_ids(const std::vector<std::string>& tokens) const { return vocab_.lookup(tokens); }

 private:
  ModelDims dims_;
  Vocabulary vocab_;
  ParamStore store_;
  Tower initial_;
  Tower iterative_;
  Tower ordering_;
  ClassifierParams initial_mlp_;
  ClassifierParams iterative_mlp_;
  DecoderParams decoder_;
};

}  // namespace irse
