#include "irse/grn.hpp"

namespace irse {

namespace {

constexpr std::size_t kRoles = 3;

Tensor role_one_hot(const std::vector<SeEdge>& edges) {
  Tensor t(edges.size(), kRoles);
  for (std::size_t k = 0; k < edges.size(); ++k) t(k, static_cast<std::size_t>(edges[k].role)) = 1.0;
  return t;
}

}  // namespace

GrnParams GrnParams::create(ParamStore& store, const std::string& prefix, const ModelDims& dims) {
  const std::size_t ds = dims.sentence(), de = dims.entity, dg = dims.global_size();
  GrnParams p;
  p.ss_gate = AffineParams::create(store, prefix + "ss_gate", 2 * ds, ds);
  p.se_gate_sentence = AffineParams::create(store, prefix + "se_gate_sentence", 2 * ds + kRoles, ds);
  p.entity_to_sentence = AffineParams::create(store, prefix + "entity_to_sentence", de, ds);
  p.se_gate_entity = AffineParams::create(store, prefix + "se_gate_entity", 2 * de + kRoles, de);
  p.sentence_to_entity = AffineParams::create(store, prefix + "sentence_to_entity", ds, de);
  p.ee_gate = AffineParams::create(store, prefix + "ee_gate", 2 * de, de);
  p.global_to_entity = AffineParams::create(store, prefix + "global_to_entity", dg, de);
  p.global_from_sentences = AffineParams::create(store, prefix + "global_from_sentences", ds, dg);
  p.global_from_entities = AffineParams::create(store, prefix + "global_from_entities", de, dg);
  p.sentence_gru = GruParams::create(store, prefix + "sentence_gru", 3 * ds + dg, ds);
  p.entity_gru = GruParams::create(store, prefix + "entity_gru", 4 * de, de);
  p.global_gru = GruParams::create(store, prefix + "global_gru", 2 * dg, dg);
  return p;
}

SentenceMessages sentence_messages(const GrnState& state, const IrseGraph& g, const GrnParams& p) {
  auto edges = g.directed_edges();
  std::vector<double> w;
  w.reserve(edges.size());
  for (const auto& e : edges) w.push_back(e.weight);
  return sentence_messages(state, g, p, w);
}

SentenceMessages sentence_messages(const GrnState& state, const IrseGraph& g, const GrnParams& p,
                                   std::span<const double> edge_weights) {
  Tape& tape = state.sentences.tape();
  const std::size_t n = state.sentences.rows();
  const std::size_t ds = state.sentences.cols();
  auto edges = g.directed_edges();
  if (edge_weights.size() != edges.size()) {
    throw ShapeError("sentence_messages: " + std::to_string(edge_weights.size()) + " weights for " +
                     std::to_string(edges.size()) + " directed edges");
  }

  SentenceMessages out;
  if (edges.empty()) {
    out.from_sentences = tape.constant(Tensor(n, ds));
  } else {
    std::vector<int> targets, sources;
    for (const auto& e : edges) {
      targets.push_back(e.target);
      sources.push_back(e.source);
    }
    Var k_target = gather_rows(state.sentences, targets);
    Var k_source = gather_rows(state.sentences, sources);
    Var gate = sigmoid(affine(concat_cols({k_target, k_source}), p.ss_gate));
    Var msg = scale_rows(mul(gate, k_source), edge_weights);
    out.from_sentences = scatter_add_rows(msg, targets, n);
  }

  const auto& se = g.se_edges();
  if (se.empty() || state.entities.rows() == 0) {
    out.from_entities = tape.constant(Tensor(n, ds));
  } else {
    std::vector<int> sent, ent;
    for (const auto& e : se) {
      sent.push_back(e.sentence);
      ent.push_back(e.entity);
    }
    Var projected = gather_rows(affine(state.entities, p.entity_to_sentence), ent);
    Var k = gather_rows(state.sentences, sent);
    Var roles = tape.constant(role_one_hot(se));
    Var gate = sigmoid(affine(concat_cols({k, projected, roles}), p.se_gate_sentence));
    out.from_entities = scatter_add_rows(mul(gate, projected), sent, n);
  }
  return out;
}

Var update_sentence(const GrnState& state, const SentenceMessages& messages, const GrnParams& p) {
  const std::size_t n = state.sentences.rows();
  Var xi = concat_cols({state.sentences0, messages.from_sentences, messages.from_entities,
                        repeat_rows(state.global, n)});
  return gru_cell(xi, state.sentences, p.sentence_gru);
}

Var update_entity(const GrnState& state, const IrseGraph& g, const GrnParams& p) {
  const std::size_t m = state.entities.rows();
  if (m == 0) return state.entities;
  Tape& tape = state.entities.tape();
  const std::size_t de = state.entities.cols();

  Var from_sentences;
  const auto& se = g.se_edges();
  if (se.empty()) {
    from_sentences = tape.constant(Tensor(m, de));
  } else {
    std::vector<int> sent, ent;
    for (const auto& e : se) {
      sent.push_back(e.sentence);
      ent.push_back(e.entity);
    }
    Var projected = gather_rows(affine(state.sentences, p.sentence_to_entity), sent);
    Var e = gather_rows(state.entities, ent);
    Var roles = tape.constant(role_one_hot(se));
    Var gate = sigmoid(affine(concat_cols({e, projected, roles}), p.se_gate_entity));
    from_sentences = scatter_add_rows(mul(gate, projected), ent, m);
  }

  Var from_entities;
  const auto& ee = g.ee_edges();
  if (ee.empty()) {
    from_entities = tape.constant(Tensor(m, de));
  } else {
    std::vector<int> targets, sources;
    for (const auto& [a, b] : ee) {
      targets.push_back(a);
      sources.push_back(b);
      targets.push_back(b);
      sources.push_back(a);
    }
    Var e_t = gather_rows(state.entities, targets);
    Var e_s = gather_rows(state.entities, sources);
    Var gate = sigmoid(affine(concat_cols({e_t, e_s}), p.ee_gate));
    from_entities = scatter_add_rows(mul(gate, e_s), targets, m);
  }

  Var g_proj = repeat_rows(affine(state.global, p.global_to_entity), m);
  Var xi = concat_cols({state.entities0, from_sentences, from_entities, g_proj});
  return gru_cell(xi, state.entities, p.entity_gru);
}

Var update_global(const GrnState& state, const GrnParams& p) {
  Tape& tape = state.global.tape();
  Var sentence_mean = affine(mean_rows(state.sentences), p.global_from_sentences);
  Var entity_mean = state.entities.rows() > 0
                        ? mean_rows(state.entities)
                        : tape.constant(Tensor(1, p.global_from_entities.in()));
  Var x = concat_cols({sentence_mean, affine(entity_mean, p.global_from_entities)});
  return gru_cell(x, state.global, p.global_gru);
}

GrnState grn_layer(const GrnState& state, const IrseGraph& g, const GrnParams& p) {
  GrnState next = state;
  SentenceMessages messages = sentence_messages(state, g, p);
  next.sentences = update_sentence(state, messages, p);
  next.entities = update_entity(state, g, p);
  next.global = update_global(state, p);
  next.layer = state.layer + 1;
  return next;
}

GrnState grn_encode(const GrnState& initial, const IrseGraph& g, const GrnParams& p, int layers) {
  if (layers < 1) throw ConfigError("grn_encode: layer count must be >= 1");
  if (initial.sentences.rows() != g.num_sentences()) {
    throw ShapeError("grn_encode: " + std::to_string(initial.sentences.rows()) + " sentence states for " +
                     std::to_string(g.num_sentences()) + " sentence nodes");
  }
  GrnState state = initial;
  for (int l = 0; l < layers; ++l) state = grn_layer(state, g, p);
  return state;
}

}  // namespace irse
