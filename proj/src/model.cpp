#include "irse/model.hpp"

namespace irse {

void ModelDims::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string("dims.") + name + " must be positive");
  };
  positive(embed, "embed");
  positive(lstm_hidden, "lstm_hidden");
  positive(entity, "entity");
  positive(mlp, "mlp");
  if (grn_layers < 1) throw ConfigError("dims.grn_layers must be >= 1, got " + std::to_string(grn_layers));
}

Tower Tower::create(ParamStore& store, const std::string& prefix, const ModelDims& dims, std::size_t vocab_size) {
  return {EncoderParams::create(store, prefix + "enc.", dims, vocab_size),
          GrnParams::create(store, prefix + "grn.", dims)};
}

std::string to_string(RefineMode mode) {
  switch (mode) {
    case RefineMode::kFull: return "full";
    case RefineMode::kInitialOnly: return "initial-only";
    case RefineMode::kNone: return "none";
  }
  return "full";
}

RefineMode refine_mode_from_string(const std::string& s) {
  if (s == "full") return RefineMode::kFull;
  if (s == "initial-only") return RefineMode::kInitialOnly;
  if (s == "none") return RefineMode::kNone;
  throw ConfigError("unknown refine mode '" + s + "' (expected full, initial-only or none)");
}

Model::Model(const ModelDims& dims, Vocabulary vocab) : dims_(dims), vocab_(std::move(vocab)) {
  dims_.validate();
  const std::size_t v = vocab_.size();
  initial_ = Tower::create(store_, kInitialTower, dims_, v);
  iterative_ = Tower::create(store_, kIterativeTower, dims_, v);
  ordering_ = Tower::create(store_, kOrderingTower, dims_, v);
  initial_mlp_ = ClassifierParams::create(store_, "initial_cls", dims_.sentence(), dims_.mlp);
  iterative_mlp_ = ClassifierParams::create(store_, "iterative_cls", dims_.sentence(), dims_.mlp);
  decoder_ = DecoderParams::create(store_, "decoder.", dims_);
}

GrnState Model::encode(Tape& tape, const IrseGraph& g, const Tower& tower) const {
  std::vector<std::vector<int>> sentences;
  sentences.reserve(g.num_sentences());
  for (const auto& s : g.sentences()) sentences.push_back(vocab_.lookup(s));
  std::vector<std::vector<int>> surfaces;
  surfaces.reserve(g.num_entities());
  for (const auto& e : g.entities()) surfaces.push_back(vocab_.lookup(split_whitespace(e)));

  GrnState s;
  s.sentences0 = encode_sentences(tape, sentences, tower.encoder);
  s.entities0 = init_entities(tape, surfaces, tower.encoder, dims_.entity);
  s.global = init_global(s.sentences0, s.entities0, tower.encoder);
  s.sentences = s.sentences0;
  s.entities = s.entities0;
  return grn_encode(s, g, tower.grn, dims_.grn_layers);
}

Tensor Model::top_sentence_states(const IrseGraph& g, const Tower& tower) const {
  Tape tape(false);
  return encode(tape, g, tower).sentences.value();
}

PairClassifier Model::initial_pair_classifier() const {
  return {[this](const IrseGraph& g) { return top_sentence_states(g, initial_); }, &initial_mlp_};
}

PairClassifier Model::iterative_pair_classifier() const {
  return {[this](const IrseGraph& g) { return top_sentence_states(g, iterative_); }, &iterative_mlp_};
}

RefineResult Model::refine(IrseGraph& g, RefineMode mode, const RefineConfig& cfg,
                           const RefineObserver& observer) const {
  switch (mode) {
    case RefineMode::kFull:
      return construct_irse_graph(g, initial_pair_classifier(), iterative_pair_classifier(), cfg, observer);
    case RefineMode::kInitialOnly: {
      cfg.validate();
      RefineResult r;
      r.initial_uncertain = initial_pass(g, initial_pair_classifier(), cfg);
      r.final_uncertain = r.initial_uncertain;
      r.sizes.push_back(r.initial_uncertain.size());
      if (observer) observer(0, g, r.initial_uncertain);
      return r;
    }
    case RefineMode::kNone: {
      if (!g.all_weights_equal(0.5)) throw StateError("refine: graph weights must all be 0.5");
      RefineResult r;
      auto pairs = g.ss_pairs();
      r.initial_uncertain = PairSet(pairs.begin(), pairs.end());
      r.final_uncertain = r.initial_uncertain;
      r.sizes.push_back(pairs.size());
      return r;
    }
  }
  throw StateError("refine: unknown mode");
}

DecodeResult Model::order(const IrseGraph& refined, DecodeMode mode, int width) const {
  Tape tape(false);
  GrnState s = encode(tape, refined, ordering_);
  return decode(s, decoder_, mode, width);
}

}  // namespace irse
