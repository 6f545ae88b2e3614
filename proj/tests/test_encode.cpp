#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "irse/encode.hpp"
#include "test_support.hpp"

namespace irse {
namespace {

using testing::expect_tensor_near;
using testing::max_abs_diff;

ModelDims scalar_dims() {
  ModelDims d;
  d.embed = 1;
  d.lstm_hidden = 1;
  d.entity = 1;
  d.global = 1;
  return d;
}

Vocabulary vocab_of(const std::vector<std::string>& tokens) {
  Vocabulary v;
  for (const std::string& t : tokens) v.add(t);
  return v;
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Plain scalar LSTM step with packed (i, f, o, g) parameters.
void scalar_lstm(const LstmParams& p, double x, double& h, double& c) {
  double z[4];
  for (int k = 0; k < 4; ++k) z[k] = p.input_weight->value[k] * x + p.recurrent->value[k] * h + p.bias->value[k];
  double i = sig(z[0]), f = sig(z[1]), o = sig(z[2]), g = std::tanh(z[3]);
  c = f * c + i * g;
  h = o * std::tanh(c);
}

TEST(Vocabulary, OovAndCase) {
  Vocabulary v = vocab_of({"Cat", "dog"});
  EXPECT_EQ(v.lookup("cat"), v.lookup("CAT"));
  EXPECT_NE(v.lookup("cat"), Vocabulary::kOov);
  EXPECT_EQ(v.lookup("zebra"), Vocabulary::kOov);
  EXPECT_EQ(v.tokens()[0], Vocabulary::kOovToken);
}

TEST(EncodeSentence, ZeroParamsGiveZeroVector) {
  ParamStore s;
  ModelDims d = testing::tiny_dims();
  EncoderParams p = EncoderParams::create(s, "enc.", d, 10);
  Tape t;
  Var k = encode_sentence(t, {1, 2, 3}, p);
  EXPECT_EQ(k.value(), Tensor(1, 2 * d.lstm_hidden, 0.0));
}

TEST(EncodeSentence, EmptyThrows) {
  ParamStore s;
  EncoderParams p = EncoderParams::create(s, "enc.", testing::tiny_dims(), 10);
  Tape t;
  EXPECT_THROW(encode_sentence(t, {}, p), ValidationError);
}

TEST(EncodeSentence, SingleTokenUsesOneStepPerDirection) {
  ParamStore s;
  ModelDims d = testing::tiny_dims();
  EncoderParams p = EncoderParams::create(s, "enc.", d, 6);
  s.init_uniform(4, 0.7);
  Tape t;
  Tensor k = encode_sentence(t, {3}, p).value();
  Var emb = gather_rows(t.param(*p.embedding), std::vector<int>{3});
  LstmState zero{t.constant(Tensor(1, d.lstm_hidden)), t.constant(Tensor(1, d.lstm_hidden))};
  Tensor fwd = lstm_step(emb, zero, p.forward).h.value();
  Tensor bwd = lstm_step(emb, zero, p.backward).h.value();
  for (std::size_t c = 0; c < d.lstm_hidden; ++c) {
    EXPECT_NEAR(k[c], fwd[c], 1e-15);
    EXPECT_NEAR(k[d.lstm_hidden + c], bwd[c], 1e-15);
  }
}

TEST(EncodeSentence, TwoTokenHandTrace) {
  ParamStore s;
  EncoderParams p = EncoderParams::create(s, "enc.", scalar_dims(), 3);
  p.embedding->value[1] = 0.7;
  p.embedding->value[2] = -1.3;
  const double fw[3][4] = {{0.5, -0.2, 0.3, 0.9}, {0.1, 0.4, -0.6, 0.2}, {0.0, 0.3, 0.1, -0.4}};
  const double bw[3][4] = {{-0.3, 0.6, 0.2, -0.8}, {0.5, -0.1, 0.3, 0.7}, {0.2, 0.0, -0.2, 0.1}};
  for (int k = 0; k < 4; ++k) {
    p.forward.input_weight->value[k] = fw[0][k];
    p.forward.recurrent->value[k] = fw[1][k];
    p.forward.bias->value[k] = fw[2][k];
    p.backward.input_weight->value[k] = bw[0][k];
    p.backward.recurrent->value[k] = bw[1][k];
    p.backward.bias->value[k] = bw[2][k];
  }
  double hf = 0, cf = 0, hb = 0, cb = 0;
  scalar_lstm(p.forward, 0.7, hf, cf);
  scalar_lstm(p.forward, -1.3, hf, cf);
  scalar_lstm(p.backward, -1.3, hb, cb);
  scalar_lstm(p.backward, 0.7, hb, cb);
  Tape t;
  Tensor k = encode_sentence(t, {1, 2}, p).value();
  EXPECT_NEAR(k[0], hf, 1e-14);
  EXPECT_NEAR(k[1], hb, 1e-14);
}

TEST(EncodeSentences, RowsIndependentOfOtherSentences) {
  ParamStore s;
  EncoderParams p = EncoderParams::create(s, "enc.", testing::tiny_dims(), 12);
  s.init_uniform(8, 0.5);
  std::vector<std::vector<int>> batch = {{1, 2, 3, 4}, {5}, {6, 7}, {8, 9, 10, 11, 1, 2}};
  Tape t;
  Tensor all = encode_sentences(t, batch, p).value();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Tape t1;
    Tensor alone = encode_sentence(t1, batch[i], p).value();
    for (std::size_t c = 0; c < alone.cols(); ++c) EXPECT_NEAR(all(i, c), alone[c], 1e-13);
  }
}

TEST(EncodeSentence, ReversalSwapsHalvesWhenTied) {
  ModelDims d = testing::tiny_dims();
  d.tie_directions = true;
  ParamStore s;
  EncoderParams p = EncoderParams::create(s, "enc.", d, 9);
  s.init_uniform(21, 0.6);
  std::vector<int> tokens{1, 4, 2, 8, 5};
  std::vector<int> reversed(tokens.rbegin(), tokens.rend());
  Tape t;
  Tensor a = encode_sentence(t, tokens, p).value();
  Tensor b = encode_sentence(t, reversed, p).value();
  const std::size_t h = d.lstm_hidden;
  for (std::size_t c = 0; c < h; ++c) {
    EXPECT_NEAR(a[c], b[h + c], 1e-14);
    EXPECT_NEAR(a[h + c], b[c], 1e-14);
  }
}

TEST(InitEntity, IdentityProjectionReturnsRow) {
  ModelDims d = scalar_dims();
  d.embed = 2;
  d.entity = 2;
  ParamStore s;
  EncoderParams p = EncoderParams::create(s, "enc.", d, 4);
  p.embedding->value = Tensor(4, 2, {9, 9, 1, 2, 3, 5, -1, 4});
  p.entity_proj.weight->value = Tensor(2, 2, {1, 0, 0, 1});
  Tape t;
  EXPECT_EQ(init_entity(t, {2}, p).value(), Tensor::row({3, 5}));
  // Two tokens: mean (2, 3.5), then projection with a bias.
  p.entity_proj.weight->value = Tensor(2, 2, {2, 0, 1, -1});
  p.entity_proj.bias->value = Tensor::row({0.5, 0.0});
  Tensor two = init_entity(t, {1, 2}, p).value();
  expect_tensor_near(two, Tensor::row({2 * 2 + 3.5 * 1 + 0.5, -3.5}), 1e-15);
  // All-OOV surface falls back to the OOV row.
  Vocabulary v = vocab_of({"known"});
  Tensor oov = init_entity(t, v.lookup(split_whitespace("mystery thing")), p).value();
  expect_tensor_near(oov, Tensor::row({9 * 2 + 9 * 1 + 0.5, -9}), 1e-15);
}

TEST(InitGlobal, Examples) {
  ModelDims d = scalar_dims();
  ParamStore s;
  EncoderParams p = EncoderParams::create(s, "enc.", d, 2);
  Tape t;
  Var k1 = t.constant(Tensor(1, 2, {0.3, -0.4}));
  EXPECT_EQ(init_global(k1, t.constant(Tensor(0, 1)), p).value(), Tensor(1, 1, 0.0));

  // Identical sentence states pool to the same vector.
  p.global_init.weight->value = Tensor(2, 1, {1.0, 2.0});
  Var twice = t.constant(Tensor(2, 2, {0.3, -0.4, 0.3, -0.4}));
  EXPECT_NEAR(init_global(twice, t.constant(Tensor(0, 1)), p).value().item(),
              init_global(k1, t.constant(Tensor(0, 1)), p).value().item(), 1e-15);

  // One sentence and one entity: mean of k and the projected entity.
  p.global_entity_proj.weight->value = Tensor(1, 2, {2.0, -1.0});
  p.global_entity_proj.bias->value = Tensor::row({0.1, 0.0});
  p.global_init.bias->value = Tensor::scalar(0.25);
  Var e = t.constant(Tensor::scalar(0.5));
  double pe0 = 0.5 * 2.0 + 0.1, pe1 = -0.5;
  double m0 = (0.3 + pe0) / 2, m1 = (-0.4 + pe1) / 2;
  EXPECT_NEAR(init_global(k1, e, p).value().item(), m0 * 1.0 + m1 * 2.0 + 0.25, 1e-15);
}

TEST(InitEntities, InvariantToMentionOrder) {
  ParagraphRecord r = testing::figure3_record();
  ParagraphRecord shuffled = r;
  Rng rng(5);
  shuffle_in_place(shuffled.entities, rng);
  Vocabulary v = build_vocabulary({r});
  ParamStore s;
  EncoderParams p = EncoderParams::create(s, "enc.", testing::tiny_dims(), v.size());
  s.init_uniform(2, 0.5);
  auto states = [&](const ParagraphRecord& rec) {
    IrseGraph g = build_graph_presented(rec, testing::identity_order(4));
    std::vector<std::vector<int>> surfaces;
    for (const std::string& e : g.entities()) surfaces.push_back(v.lookup(split_whitespace(e)));
    Tape t;
    Tensor out = init_entities(t, surfaces, p, 3).value();
    std::map<std::string, std::vector<double>> by_name;
    for (std::size_t j = 0; j < g.entities().size(); ++j) by_name[g.entities()[j]] = out.row_values(j);
    return by_name;
  };
  EXPECT_EQ(states(r), states(shuffled));
}

TEST(InitEntities, MatchesSingleEntityPath) {
  ParamStore s;
  EncoderParams p = EncoderParams::create(s, "enc.", testing::tiny_dims(), 7);
  s.init_uniform(3, 0.5);
  std::vector<std::vector<int>> surfaces = {{1}, {2, 3}, {4, 5, 6}};
  Tape t;
  Tensor batch = init_entities(t, surfaces, p, 3).value();
  for (std::size_t j = 0; j < surfaces.size(); ++j) {
    Tensor one = init_entity(t, surfaces[j], p).value();
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(batch(j, c), one[c], 1e-15);
  }
  EXPECT_EQ(init_entities(t, {}, p, 3).value().rows(), 0u);
}

TEST(PretrainedEmbeddings, LoadsKnownRows) {
  std::string path = ::testing::TempDir() + "/vectors.txt";
  {
    std::ofstream out(path);
    out << "cat 1 2 3 4\nunknown 5 5 5 5\n\nDOG 0.5 0.5 0.5 0.5\n";
  }
  Vocabulary v = vocab_of({"cat", "dog"});
  ParamStore s;
  EncoderParams p = EncoderParams::create(s, "enc.", testing::tiny_dims(), v.size());
  EXPECT_EQ(load_pretrained_embeddings(path, v, *p.embedding), 2u);
  EXPECT_EQ(p.embedding->value.row_values(v.lookup("cat")), (std::vector<double>{1, 2, 3, 4}));
  EXPECT_EQ(p.embedding->value.row_values(v.lookup("dog")), (std::vector<double>{0.5, 0.5, 0.5, 0.5}));
  {
    std::ofstream out(path);
    out << "cat 1 2\n";
  }
  EXPECT_THROW(load_pretrained_embeddings(path, v, *p.embedding), ParseError);
}

}  // namespace
}  // namespace irse
