#pragma once

#include <span>
#include <string>
#include <vector>

#include "irse/autodiff.hpp"
#include "irse/dims.hpp"
#include "irse/graph.hpp"
#include "irse/layers.hpp"

namespace irse {

/// Gated graph recurrent encoder parameters. Projections bridging sentence,
/// entity and global sizes are shared across layers.
struct GrnParams {
  AffineParams ss_gate;           // [k_i; k_j] -> sentence
  AffineParams se_gate_sentence;  // [k_i; P e_j; role] -> sentence
  AffineParams entity_to_sentence;
  AffineParams se_gate_entity;    // [e_j; P k_i; role] -> entity
  AffineParams sentence_to_entity;
  AffineParams ee_gate;           // [e_j; e_j'] -> entity
  AffineParams global_to_entity;
  AffineParams global_from_sentences;
  AffineParams global_from_entities;
  GruParams sentence_gru;         // [k0; m; m_hat; g] -> sentence
  GruParams entity_gru;           // [emb; m; m_hat; P g] -> entity
  GruParams global_gru;           // [P mean k; P mean e] -> global

  static GrnParams create(ParamStore& store, const std::string& prefix, const ModelDims& dims);
};

struct GrnState {
  Var sentences0;  // I x sentence, layer-0 sentence states
  Var entities0;   // J x entity, layer-0 entity states (the projected embeddings)
  Var sentences;   // I x sentence
  Var entities;    // J x entity (0 rows when the graph has no entities)
  Var global;      // 1 x global
  int layer = 0;
};

struct SentenceMessages {
  Var from_sentences;  // m_i
  Var from_entities;   // m_hat_i
};

/// m_i = sum_j w(i,j) * sigmoid(W_g [k_i; k_j]) * k_j over linked sentences j,
/// with w taken from the graph; m_hat_i aggregates gated projected entities.
SentenceMessages sentence_messages(const GrnState& state, const IrseGraph& g, const GrnParams& p);

/// Same, with one explicit weight per entry of g.directed_edges(). Passing all
/// ones gives the unweighted aggregation.
SentenceMessages sentence_messages(const GrnState& state, const IrseGraph& g, const GrnParams& p,
                                   std::span<const double> edge_weights);

Var update_sentence(const GrnState& state, const SentenceMessages& messages, const GrnParams& p);
Var update_entity(const GrnState& state, const IrseGraph& g, const GrnParams& p);
Var update_global(const GrnState& state, const GrnParams& p);

/// One synchronous layer: every update reads only the previous layer.
GrnState grn_layer(const GrnState& state, const IrseGraph& g, const GrnParams& p);
GrnState grn_encode(const GrnState& initial, const IrseGraph& g, const GrnParams& p, int layers);

}  // namespace irse
