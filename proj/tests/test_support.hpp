#pragma once

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "irse/data.hpp"
#include "irse/encode.hpp"
#include "irse/graph.hpp"
#include "irse/model.hpp"
#include "irse/random.hpp"
#include "irse/tensor.hpp"

namespace irse::testing {

inline void expect_tensor_near(const Tensor& actual, const Tensor& expected, double tol) {
  ASSERT_EQ(actual.rows(), expected.rows());
  ASSERT_EQ(actual.cols(), expected.cols());
  for (std::size_t k = 0; k < actual.size(); ++k) {
    EXPECT_NEAR(actual[k], expected[k], tol) << "at flat index " << k;
  }
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

inline Tensor random_tensor(Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
  Tensor t(rows, cols);
  for (double& v : t.values()) v = uniform(rng, -scale, scale);
  return t;
}

// Builds a record from sentence strings and (surface, sentence, role) triples.
inline ParagraphRecord make_record(const std::string& id, const std::vector<std::string>& sentences,
                                   const std::vector<Mention>& mentions,
                                   const std::vector<std::pair<std::string, std::string>>& relations = {}) {
  ParagraphRecord r;
  r.id = id;
  for (const std::string& s : sentences) r.sentences.push_back(split_whitespace(s));
  r.entities = mentions;
  r.relations = relations;
  return r;
}

// Four sentences whose entity sharing links exactly (0,1), (1,2), (1,3), (2,3).
inline ParagraphRecord figure3_record() {
  return make_record("figure3",
                     {"the pilot checks the engine", "the engine warns the tower and the harbor",
                      "the tower calls the comet", "the harbor watches the comet"},
                     {{"pilot", 0, Role::kSubject},
                      {"engine", 0, Role::kObject},
                      {"engine", 1, Role::kSubject},
                      {"tower", 1, Role::kObject},
                      {"harbor", 1, Role::kOther},
                      {"tower", 2, Role::kSubject},
                      {"comet", 2, Role::kObject},
                      {"harbor", 3, Role::kSubject},
                      {"comet", 3, Role::kObject}});
}

// n sentences, sentence t mentions entity t (subject) and t+1 (object).
inline ParagraphRecord chain_record(int n) {
  std::vector<std::string> sentences;
  std::vector<Mention> mentions;
  for (int t = 0; t < n; ++t) {
    std::string a = "node" + std::to_string(t), b = "node" + std::to_string(t + 1);
    sentences.push_back("the " + a + " meets the " + b);
    mentions.push_back({a, t, Role::kSubject});
    mentions.push_back({b, t, Role::kObject});
  }
  return make_record("chain" + std::to_string(n), sentences, mentions);
}

// Random topology: each sentence mentions a random subset of a small cast.
inline ParagraphRecord random_record(Rng& rng, int n_sentences, int n_entities, double mention_p) {
  std::vector<std::string> sentences;
  std::vector<Mention> mentions;
  for (int t = 0; t < n_sentences; ++t) {
    std::string text = "word" + std::to_string(uniform_index(rng, 5));
    bool any = false;
    for (int e = 0; e < n_entities; ++e) {
      if (!bernoulli(rng, mention_p)) continue;
      std::string name = "ent" + std::to_string(e);
      text += " " + name;
      mentions.push_back({name, t, static_cast<Role>(uniform_index(rng, 3))});
      any = true;
    }
    if (!any) text += " filler";
    sentences.push_back(text);
  }
  std::vector<std::pair<std::string, std::string>> relations;
  auto mentioned = [&](const std::string& name) {
    return std::any_of(mentions.begin(), mentions.end(), [&](const Mention& m) { return m.surface == name; });
  };
  if (mentioned("ent0") && mentioned("ent1") && bernoulli(rng, 0.5)) relations.emplace_back("ent0", "ent1");
  return make_record("random", sentences, mentions, relations);
}

inline std::vector<int> identity_order(std::size_t n) {
  std::vector<int> v(n);
  for (std::size_t k = 0; k < n; ++k) v[k] = static_cast<int>(k);
  return v;
}

// Small sizes keep finite-difference checks fast.
inline ModelDims tiny_dims() {
  ModelDims d;
  d.embed = 4;
  d.lstm_hidden = 3;
  d.entity = 3;
  d.global = 4;
  d.mlp = 5;
  d.decoder_hidden = 4;
  d.attention = 3;
  d.grn_layers = 2;
  return d;
}

inline Model tiny_model(const std::vector<ParagraphRecord>& records, std::uint64_t seed, double scale = 0.5,
                        const ModelDims& dims = tiny_dims()) {
  Model m(dims, build_vocabulary(records));
  m.init_uniform(seed, scale);
  return m;
}

}  // namespace irse::testing
