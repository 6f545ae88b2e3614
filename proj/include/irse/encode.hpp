#pragma once

#include <map>
#include <string>
#include <vector>

#include "irse/autodiff.hpp"
#include "irse/dims.hpp"
#include "irse/graph.hpp"
#include "irse/layers.hpp"

namespace irse {

/// Token -> embedding row. Row 0 is reserved for out-of-vocabulary tokens.
/// Tokens are matched after lowercasing.
class Vocabulary {
 public:
  static constexpr int kOov = 0;
  static constexpr const char* kOovToken = "<unk>";

  Vocabulary();
  explicit Vocabulary(const std::vector<std::string>& tokens);

  int add(const std::string& token);
  int lookup(const std::string& token) const;
  std::vector<int> lookup(const std::vector<std::string>& tokens) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> index_;
};

/// Every sentence token and entity-surface token of the records.
Vocabulary build_vocabulary(const std::vector<ParagraphRecord>& records);

std::vector<std::string> split_whitespace(const std::string& s);

/// Sentence encoder parameters: embeddings, a Bi-LSTM, and the projections
/// used to initialize entity and global states.
struct EncoderParams {
  Parameter* embedding = nullptr;  // V x embed
  LstmParams forward;
  LstmParams backward;             // aliases forward when directions are tied
  AffineParams entity_proj;        // embed -> entity
  AffineParams global_entity_proj; // entity -> sentence
  AffineParams global_init;        // sentence -> global

  static EncoderParams create(ParamStore& store, const std::string& prefix, const ModelDims& dims,
                              std::size_t vocab_size);
};

/// Plain-text embedding file: `token v1 ... vd` per line. Rows for tokens
/// absent from the vocabulary are skipped; returns how many rows were set.
std::size_t load_pretrained_embeddings(const std::string& path, const Vocabulary& vocab, Parameter& table);

/// [h_fwd_last ; h_bwd_last] for one non-empty sentence (1 x 2*hidden).
Var encode_sentence(Tape& tape, const std::vector<int>& token_ids, const EncoderParams& p);

/// All sentences at once (I x 2*hidden); row i only depends on sentence i.
Var encode_sentences(Tape& tape, const std::vector<std::vector<int>>& sentences, const EncoderParams& p);

/// Projected mean embedding of the surface's whitespace tokens (1 x entity).
Var init_entity(Tape& tape, const std::vector<int>& surface_ids, const EncoderParams& p);
/// One row per entity; a 0-row tensor when there are none.
Var init_entities(Tape& tape, const std::vector<std::vector<int>>& surfaces, const EncoderParams& p,
                  std::size_t entity_size);

/// Affine map of the mean over sentence states and projected entity states.
Var init_global(Var sentences, Var entities, const EncoderParams& p);

}  // namespace irse
