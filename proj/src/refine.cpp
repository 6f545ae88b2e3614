#include "irse/refine.hpp"

#include <cmath>

namespace irse {

ClassifierParams ClassifierParams::create(ParamStore& store, const std::string& name, std::size_t sentence_size,
                                          std::size_t mlp_size) {
  return {AffineParams::create(store, name + ".hidden", 2 * sentence_size, mlp_size),
          AffineParams::create(store, name + ".out", mlp_size, 1)};
}

Var pair_scores(Var states, const std::vector<std::pair<int, int>>& pairs, const ClassifierParams& c,
                double dropout_rate, Rng* rng) {
  std::vector<int> left, right;
  left.reserve(pairs.size());
  right.reserve(pairs.size());
  for (const auto& [i, j] : pairs) {
    left.push_back(i);
    right.push_back(j);
  }
  Var x = concat_cols({gather_rows(states, left), gather_rows(states, right)});
  Var h = tanh(affine(x, c.hidden));
  if (rng && dropout_rate > 0.0) h = dropout(h, dropout_rate, *rng);
  return sigmoid(affine(h, c.output));
}

double pair_score(const Tensor& k_i, const Tensor& k_j, const ClassifierParams& c) {
  if (k_i.rows() != 1 || !k_i.same_shape(k_j)) {
    throw ShapeError("pair_score: expected two equal row vectors, got " + k_i.shape_string() + " and " +
                     k_j.shape_string());
  }
  Tape tape(false);
  Var a = tape.constant(k_i), b = tape.constant(k_j);
  Var both[] = {a, b};
  return pair_scores(concat_rows(both), {{0, 1}}, c).value().item();
}

std::pair<double, double> normalize_pair(double p_fwd, double p_bwd) {
  double total = p_fwd + p_bwd;
  if (total < 1e-12) return {0.5, 0.5};
  double w = p_fwd / total;
  return {w, 1.0 - w};
}

void RefineConfig::validate() const {
  if (!(delta_min > 0.0 && delta_min <= 0.5)) {
    throw ConfigError("refine.delta_min must lie in (0, 0.5], got " + std::to_string(delta_min));
  }
  if (!(delta_max >= 0.5 && delta_max < 1.0)) {
    throw ConfigError("refine.delta_max must lie in [0.5, 1), got " + std::to_string(delta_max));
  }
  if (k_max < 1) throw ConfigError("refine.k_max must be >= 1, got " + std::to_string(k_max));
}

PairSet score_and_commit(IrseGraph& g, const std::vector<SentencePair>& pairs, const PairClassifier& c,
                         const RefineConfig& cfg) {
  PairSet uncertain;
  if (pairs.empty()) return uncertain;
  Tensor states = c.encode(g);
  std::vector<std::pair<int, int>> directed;
  directed.reserve(2 * pairs.size());
  for (const auto& p : pairs) {
    directed.emplace_back(p.first, p.second);
    directed.emplace_back(p.second, p.first);
  }
  Tape tape(false);
  Tensor probs = pair_scores(tape.constant(states), directed, *c.mlp).value();
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    auto [w, w_rev] = normalize_pair(probs[2 * k], probs[2 * k + 1]);
    (void)w_rev;
    const SentencePair& p = pairs[k];
    if (cfg.uncertain(w)) {
      uncertain.insert(p);
      g.set_pair_weight(p.first, p.second, 0.5);
    } else {
      g.set_pair_weight(p.first, p.second, w);
    }
  }
  return uncertain;
}

PairSet initial_pass(IrseGraph& g, const PairClassifier& c, const RefineConfig& cfg) {
  if (!g.all_weights_equal(0.5)) throw StateError("initial_pass: graph weights must all be 0.5");
  return score_and_commit(g, g.ss_pairs(), c, cfg);
}

PairSet iterative_pass(IrseGraph& g, const PairSet& vp, const PairClassifier& c, const RefineConfig& cfg) {
  for (const auto& p : vp) {
    if (!g.has_edge(p.first, p.second)) {
      throw NoEdgeError("iterative_pass: no ss-edge between " + std::to_string(p.first) + " and " +
                        std::to_string(p.second));
    }
    if (g.weight(p.first, p.second) != 0.5) {
      throw StateError("iterative_pass: pending pair (" + std::to_string(p.first) + ", " +
                       std::to_string(p.second) + ") is not at 0.5");
    }
  }
  return score_and_commit(g, std::vector<SentencePair>(vp.begin(), vp.end()), c, cfg);
}

RefineResult construct_irse_graph(IrseGraph& g, const PairClassifier& initial, const PairClassifier& iterative,
                                  const RefineConfig& cfg, const RefineObserver& observer) {
  cfg.validate();
  RefineResult r;
  PairSet vp = initial_pass(g, initial, cfg);
  r.initial_uncertain = vp;
  r.sizes.push_back(vp.size());
  if (observer) observer(0, g, vp);
  while (!vp.empty() && r.iterations < cfg.k_max) {
    PairSet next = iterative_pass(g, vp, iterative, cfg);
    ++r.iterations;
    r.sizes.push_back(next.size());
    if (observer) observer(r.iterations, g, next);
    bool stable = next == vp;
    vp = std::move(next);
    if (stable) break;
  }
  r.final_uncertain = vp;
  return r;
}

}  // namespace irse
