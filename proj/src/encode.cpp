#include "irse/encode.hpp"

#include <fstream>
#include <sstream>

namespace irse {

Vocabulary::Vocabulary() { add(kOovToken); }

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) {
  if (tokens.empty() || tokens[0] != kOovToken) {
    throw ValidationError("vocabulary: first token must be " + std::string(kOovToken));
  }
  for (const auto& t : tokens) {
    if (index_.count(t)) throw ValidationError("vocabulary: duplicate token '" + t + "'");
    index_[t] = static_cast<int>(tokens_.size());
    tokens_.push_back(t);
  }
}

int Vocabulary::add(const std::string& token) {
  std::string key = token == kOovToken ? token : canonical_surface(token);
  auto [it, inserted] = index_.emplace(key, static_cast<int>(tokens_.size()));
  if (inserted) tokens_.push_back(key);
  return it->second;
}

int Vocabulary::lookup(const std::string& token) const {
  auto it = index_.find(canonical_surface(token));
  return it == index_.end() ? kOov : it->second;
}

std::vector<int> Vocabulary::lookup(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(lookup(t));
  return ids;
}

std::vector<std::string> split_whitespace(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

Vocabulary build_vocabulary(const std::vector<ParagraphRecord>& records) {
  Vocabulary v;
  for (const auto& r : records) {
    for (const auto& s : r.sentences) {
      for (const auto& t : s) v.add(t);
    }
    for (const auto& m : r.entities) {
      for (const auto& t : split_whitespace(m.surface)) v.add(t);
    }
  }
  return v;
}

EncoderParams EncoderParams::create(ParamStore& store, const std::string& prefix, const ModelDims& dims,
                                    std::size_t vocab_size) {
  EncoderParams p;
  p.embedding = &store.add(prefix + "embedding", vocab_size, dims.embed);
  p.forward = LstmParams::create(store, prefix + "lstm_fwd", dims.embed, dims.lstm_hidden);
  p.backward = dims.tie_directions ? p.forward
                                   : LstmParams::create(store, prefix + "lstm_bwd", dims.embed, dims.lstm_hidden);
  p.entity_proj = AffineParams::create(store, prefix + "entity_proj", dims.embed, dims.entity);
  p.global_entity_proj = AffineParams::create(store, prefix + "global_entity_proj", dims.entity, dims.sentence());
  p.global_init = AffineParams::create(store, prefix + "global_init", dims.sentence(), dims.global_size());
  return p;
}

std::size_t load_pretrained_embeddings(const std::string& path, const Vocabulary& vocab, Parameter& table) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open embedding file '" + path + "'");
  std::string line;
  std::size_t line_no = 0, set = 0;
  const std::size_t dim = table.value.cols();
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string token;
    if (!(ls >> token)) continue;
    std::vector<double> vals;
    double v;
    while (ls >> v) vals.push_back(v);
    if (vals.size() != dim) {
      throw ParseError(line_no, "vector", "expected " + std::to_string(dim) + " values, got " +
                                              std::to_string(vals.size()));
    }
    int id = vocab.lookup(token);
    if (id == Vocabulary::kOov && canonical_surface(token) != Vocabulary::kOovToken) continue;
    for (std::size_t c = 0; c < dim; ++c) table.value(id, c) = vals[c];
    ++set;
  }
  return set;
}

namespace {

// Runs one LSTM over every sentence in lock-step. Sentences shorter than the
// current step keep their state, so each row ends on its last real token.
Var run_lstm(Tape& tape, Var embedded, const std::vector<std::vector<int>>& rows_per_step,
             const std::vector<std::size_t>& lengths, const LstmParams& p) {
  const std::size_t n = lengths.size();
  const std::size_t hidden = p.hidden();
  Var proj = affine(embedded, tape.param(*p.input_weight), tape.param(*p.bias));
  LstmState state{tape.constant(Tensor(n, hidden)), tape.constant(Tensor(n, hidden))};
  for (std::size_t t = 0; t < rows_per_step.size(); ++t) {
    Var x = gather_rows(proj, rows_per_step[t]);
    LstmState next = lstm_step_projected(x, state, p);
    std::vector<bool> active(n);
    bool all = true;
    for (std::size_t i = 0; i < n; ++i) {
      active[i] = t < lengths[i];
      all = all && active[i];
    }
    if (all) {
      state = next;
    } else {
      state = {select_rows(next.h, state.h, active), select_rows(next.c, state.c, active)};
    }
  }
  return state.h;
}

}  // namespace

Var encode_sentences(Tape& tape, const std::vector<std::vector<int>>& sentences, const EncoderParams& p) {
  if (sentences.empty()) throw ValidationError("sentences: nothing to encode");
  std::vector<int> flat;
  std::vector<std::size_t> offsets, lengths;
  std::size_t max_len = 0;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (sentences[i].empty()) throw ValidationError("sentences: sentence " + std::to_string(i) + " is empty");
    offsets.push_back(flat.size());
    lengths.push_back(sentences[i].size());
    max_len = std::max(max_len, sentences[i].size());
    flat.insert(flat.end(), sentences[i].begin(), sentences[i].end());
  }
  Var embedded = gather_rows(tape.param(*p.embedding), flat);

  // Row of the flat token matrix feeding sentence i at step t; padded steps
  // reuse the last token (their result is discarded by the mask).
  std::vector<std::vector<int>> fwd_rows(max_len), bwd_rows(max_len);
  for (std::size_t t = 0; t < max_len; ++t) {
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      std::size_t len = lengths[i];
      std::size_t k = std::min(t, len - 1);
      fwd_rows[t].push_back(static_cast<int>(offsets[i] + k));
      bwd_rows[t].push_back(static_cast<int>(offsets[i] + (len - 1 - k)));
    }
  }
  Var h_fwd = run_lstm(tape, embedded, fwd_rows, lengths, p.forward);
  Var h_bwd = run_lstm(tape, embedded, bwd_rows, lengths, p.backward);
  return concat_cols({h_fwd, h_bwd});
}

Var encode_sentence(Tape& tape, const std::vector<int>& token_ids, const EncoderParams& p) {
  if (token_ids.empty()) throw ValidationError("sentence: empty token list");
  return encode_sentences(tape, {token_ids}, p);
}

Var init_entity(Tape& tape, const std::vector<int>& surface_ids, const EncoderParams& p) {
  std::vector<int> ids = surface_ids.empty() ? std::vector<int>{Vocabulary::kOov} : surface_ids;
  Var mean = mean_rows(gather_rows(tape.param(*p.embedding), ids));
  return affine(mean, p.entity_proj);
}

Var init_entities(Tape& tape, const std::vector<std::vector<int>>& surfaces, const EncoderParams& p,
                  std::size_t entity_size) {
  if (surfaces.empty()) return tape.constant(Tensor(0, entity_size));
  // Per-entity mean: gather token rows, weight by 1/len, scatter-sum.
  std::vector<int> flat, owner;
  std::vector<double> inv_len;
  for (std::size_t j = 0; j < surfaces.size(); ++j) {
    const auto& ids = surfaces[j].empty() ? std::vector<int>{Vocabulary::kOov} : surfaces[j];
    for (int id : ids) {
      flat.push_back(id);
      owner.push_back(static_cast<int>(j));
      inv_len.push_back(1.0 / static_cast<double>(ids.size()));
    }
  }
  Var rows = scale_rows(gather_rows(tape.param(*p.embedding), flat), inv_len);
  Var means = scatter_add_rows(rows, owner, surfaces.size());
  return affine(means, p.entity_proj);
}

Var init_global(Var sentences, Var entities, const EncoderParams& p) {
  Var pooled = sentences;
  if (entities.valid() && entities.rows() > 0) {
    Var projected = affine(entities, p.global_entity_proj);
    Var both[] = {sentences, projected};
    pooled = concat_rows(both);
  }
  return affine(mean_rows(pooled), p.global_init);
}

}  // namespace irse
