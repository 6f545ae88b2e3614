#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "irse/autodiff.hpp"
#include "irse/graph.hpp"
#include "irse/layers.hpp"

namespace irse {

/// Pairwise precedence MLP: sigmoid(affine(tanh(affine([k_i; k_j])))).
struct ClassifierParams {
  AffineParams hidden;  // 2 * sentence -> mlp
  AffineParams output;  // mlp -> 1

  static ClassifierParams create(ParamStore& store, const std::string& name, std::size_t sentence_size,
                                 std::size_t mlp_size);
};

/// Scores every (i, j) in `pairs` against rows of `states`; P x 1
/// probabilities that i precedes j. Dropout (training only) hits the hidden
/// layer when rng is given.
Var pair_scores(Var states, const std::vector<std::pair<int, int>>& pairs, const ClassifierParams& c,
                double dropout = 0.0, Rng* rng = nullptr);
double pair_score(const Tensor& k_i, const Tensor& k_j, const ClassifierParams& c);

/// (p_fwd, p_bwd) -> (w_fwd, 1 - w_fwd); falls back to (0.5, 0.5) when both
/// are (numerically) zero.
std::pair<double, double> normalize_pair(double p_fwd, double p_bwd);

struct RefineConfig {
  double delta_min = 0.2;
  double delta_max = 0.8;
  int k_max = 10;

  void validate() const;  // throws ConfigError
  bool uncertain(double w) const { return delta_min <= w && w <= delta_max; }
};

/// A classifier bound to the encoder that produces its input states: encode
/// returns the top-layer sentence states of a graph.
struct PairClassifier {
  std::function<Tensor(const IrseGraph&)> encode;
  const ClassifierParams* mlp = nullptr;
};

/// Scores both directions of every listed pair on the current graph and
/// writes the normalized weights. Returns the pairs that fell inside
/// [delta_min, delta_max]; those are reset to 0.5.
PairSet score_and_commit(IrseGraph& g, const std::vector<SentencePair>& pairs, const PairClassifier& c,
                         const RefineConfig& cfg);

/// Requires a fresh graph (all weights 0.5, else StateError). Returns VP(0).
PairSet initial_pass(IrseGraph& g, const PairClassifier& c, const RefineConfig& cfg);

/// Re-encodes g and re-scores only the pairs in vp (each must be 0.5).
PairSet iterative_pass(IrseGraph& g, const PairSet& vp, const PairClassifier& c, const RefineConfig& cfg);

struct RefineResult {
  int iterations = 0;
  PairSet initial_uncertain;
  PairSet final_uncertain;
  std::vector<std::size_t> sizes;  // |VP(k)| for k = 0..iterations
};

/// Observer called after the initial pass (k = 0) and after each iterative
/// pass with the graph and the set just produced.
using RefineObserver = std::function<void(int k, const IrseGraph&, const PairSet&)>;

RefineResult construct_irse_graph(IrseGraph& g, const PairClassifier& initial, const PairClassifier& iterative,
                                  const RefineConfig& cfg, const RefineObserver& observer = nullptr);

}  // namespace irse
