#include <gtest/gtest.h>

#include <climits>
#include <cmath>

#include "irse/model.hpp"
#include "irse/refine.hpp"
#include "test_support.hpp"

namespace irse {
namespace {

// Sentence states are scalars; the MLP computes sigmoid(gain * tanh(k_i - k_j)).
struct DifferenceClassifier {
  ParamStore store;
  ClassifierParams mlp;
  Tensor states;
  explicit DifferenceClassifier(std::vector<double> scalars, double gain = 3.0) {
    mlp = ClassifierParams::create(store, "c", 1, 1);
    mlp.hidden.weight->value = Tensor(2, 1, {1.0, -1.0});
    mlp.output.weight->value = Tensor::scalar(gain);
    const std::size_t n = scalars.size();
    states = Tensor(n, 1, std::move(scalars));
  }
  PairClassifier bind() const {
    return {[this](const IrseGraph&) { return states; }, &mlp};
  }
};

double logit(double p) { return std::log(p / (1.0 - p)); }

TEST(PairScore, ZeroParamsGiveHalf) {
  ParamStore s;
  ClassifierParams c = ClassifierParams::create(s, "c", 3, 4);
  EXPECT_EQ(pair_score(Tensor::row({1, 2, 3}), Tensor::row({-1, 0, 5}), c), 0.5);
}

TEST(PairScore, DirectionsScoredIndependently) {
  ParamStore s;
  ClassifierParams c = ClassifierParams::create(s, "c", 2, 3);
  s.init_uniform(5, 1.0);
  Tensor a = Tensor::row({0.4, -0.9}), b = Tensor::row({1.2, 0.3});
  double ab = pair_score(a, b, c), ba = pair_score(b, a, c);
  EXPECT_NE(ab + ba, 1.0);
  EXPECT_GT(ab, 0.0);
  EXPECT_LT(ab, 1.0);
}

TEST(PairScore, OneHiddenUnitHandTrace) {
  ParamStore s;
  ClassifierParams c = ClassifierParams::create(s, "c", 1, 1);
  c.hidden.weight->value = Tensor(2, 1, {0.7, -0.4});
  c.hidden.bias->value = Tensor::scalar(0.1);
  c.output.weight->value = Tensor::scalar(2.0);
  c.output.bias->value = Tensor::scalar(-0.3);
  double h = std::tanh(0.7 * 1.5 - 0.4 * -2.0 + 0.1);
  double expected = 1.0 / (1.0 + std::exp(-(2.0 * h - 0.3)));
  EXPECT_NEAR(pair_score(Tensor::scalar(1.5), Tensor::scalar(-2.0), c), expected, 1e-15);
}

TEST(NormalizePair, Examples) {
  EXPECT_EQ(normalize_pair(0.5, 0.5), std::make_pair(0.5, 0.5));
  auto [a, b] = normalize_pair(0.9, 0.1);
  EXPECT_NEAR(a, 0.9, 1e-15);
  EXPECT_NEAR(b, 0.1, 1e-15);
  auto [c, d] = normalize_pair(0.6, 0.2);
  EXPECT_NEAR(c, 0.75, 1e-15);
  EXPECT_NEAR(d, 0.25, 1e-15);
  EXPECT_EQ(normalize_pair(0.0, 1e-13), std::make_pair(0.5, 0.5));
}

TEST(RefineConfig, Validation) {
  RefineConfig c;
  EXPECT_NO_THROW(c.validate());
  c.delta_min = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = RefineConfig{};
  c.delta_max = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = RefineConfig{};
  c.k_max = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(InitialPass, ZeroClassifierMarksEverythingUncertain) {
  IrseGraph g = build_graph_presented(testing::figure3_record(), testing::identity_order(4));
  ParamStore s;
  ClassifierParams mlp = ClassifierParams::create(s, "c", 1, 2);
  PairClassifier c{[](const IrseGraph& gr) { return Tensor(gr.num_sentences(), 1, 0.3); }, &mlp};
  PairSet vp = initial_pass(g, c, RefineConfig{});
  EXPECT_EQ(vp.size(), 4u);
  EXPECT_TRUE(g.all_weights_equal(0.5));
}

TEST(InitialPass, ConfidentPairIsKept) {
  ParagraphRecord r = testing::make_record("p", {"a cat", "the cat"}, {{"cat", 0, Role::kSubject}, {"cat", 1, Role::kObject}});
  IrseGraph g = build_graph_presented(r, {0, 1});
  double d = std::atanh(logit(0.85) / 3.0);
  DifferenceClassifier c({d, 0.0});
  PairSet vp = initial_pass(g, c.bind(), RefineConfig{});
  EXPECT_TRUE(vp.empty());
  EXPECT_NEAR(g.weight(0, 1), 0.85, 1e-12);
}

TEST(InitialPass, NoSsEdges) {
  ParagraphRecord r = testing::make_record("iso", {"a cat", "a dog"}, {});
  IrseGraph g = build_graph_presented(r, {0, 1});
  bool called = false;
  ParamStore s;
  ClassifierParams mlp = ClassifierParams::create(s, "c", 1, 2);
  PairClassifier c{[&](const IrseGraph& gr) {
                     called = true;
                     return Tensor(gr.num_sentences(), 1);
                   },
                   &mlp};
  EXPECT_TRUE(initial_pass(g, c, RefineConfig{}).empty());
  EXPECT_FALSE(called);
}

TEST(InitialPass, RequiresFreshGraph) {
  IrseGraph g = build_graph_presented(testing::figure3_record(), testing::identity_order(4));
  set_pair_weight(g, 0, 1, 0.9);
  DifferenceClassifier c({0, 0, 0, 0});
  EXPECT_THROW(initial_pass(g, c.bind(), RefineConfig{}), StateError);
}

TEST(IterativePass, EmptySetLeavesGraph) {
  IrseGraph g = build_graph_presented(testing::figure3_record(), testing::identity_order(4));
  set_pair_weight(g, 0, 1, 0.9);
  DifferenceClassifier c({1, 0, 0, 0});
  EXPECT_TRUE(iterative_pass(g, {}, c.bind(), RefineConfig{}).empty());
  EXPECT_EQ(g.weight(0, 1), 0.9);
}

TEST(IterativePass, ZeroClassifierReturnsInput) {
  IrseGraph g = build_graph_presented(testing::figure3_record(), testing::identity_order(4));
  ParamStore s;
  ClassifierParams mlp = ClassifierParams::create(s, "c", 1, 2);
  PairClassifier c{[](const IrseGraph& gr) { return Tensor(gr.num_sentences(), 1, 1.0); }, &mlp};
  PairSet vp{SentencePair(0, 1), SentencePair(2, 3)};
  EXPECT_EQ(iterative_pass(g, vp, c, RefineConfig{}), vp);
}

TEST(IterativePass, ConfidentPairCommits) {
  IrseGraph g = build_graph_presented(testing::figure3_record(), testing::identity_order(4));
  double d = std::atanh(logit(0.95) / 3.0);
  // Sentence 2 precedes 3 with probability 0.95; other states tie.
  DifferenceClassifier c({0.0, 0.0, d, 0.0});
  PairSet next = iterative_pass(g, {SentencePair(2, 3), SentencePair(0, 1)}, c.bind(), RefineConfig{});
  EXPECT_EQ(next, PairSet{SentencePair(0, 1)});
  EXPECT_NEAR(g.weight(2, 3), 0.95, 1e-12);
  EXPECT_EQ(g.weight(0, 1), 0.5);
}

TEST(IterativePass, Errors) {
  IrseGraph g = build_graph_presented(testing::figure3_record(), testing::identity_order(4));
  DifferenceClassifier c({0, 0, 0, 0});
  EXPECT_THROW(iterative_pass(g, {SentencePair(0, 2)}, c.bind(), RefineConfig{}), NoEdgeError);
  set_pair_weight(g, 0, 1, 0.9);
  EXPECT_THROW(iterative_pass(g, {SentencePair(0, 1)}, c.bind(), RefineConfig{}), StateError);
}

TEST(Construct, NoSsEdgesRunsZeroIterations) {
  ParagraphRecord r = testing::make_record("iso", {"a cat", "a dog", "a fox"}, {});
  IrseGraph g = build_graph_presented(r, {0, 1, 2});
  DifferenceClassifier c({0, 1, 2});
  RefineResult res = construct_irse_graph(g, c.bind(), c.bind(), RefineConfig{});
  EXPECT_EQ(res.iterations, 0);
  EXPECT_TRUE(res.final_uncertain.empty());
}

TEST(Construct, ZeroClassifiersStopAfterOneIteration) {
  IrseGraph g = build_graph_presented(testing::figure3_record(), testing::identity_order(4));
  ParamStore s;
  ClassifierParams mlp = ClassifierParams::create(s, "c", 1, 2);
  PairClassifier c{[](const IrseGraph& gr) { return Tensor(gr.num_sentences(), 1, 0.2); }, &mlp};
  RefineResult res = construct_irse_graph(g, c, c, RefineConfig{});
  EXPECT_EQ(res.iterations, 1);
  EXPECT_EQ(res.initial_uncertain.size(), 4u);
  EXPECT_EQ(res.final_uncertain, res.initial_uncertain);
  EXPECT_EQ(res.sizes, (std::vector<std::size_t>{4, 4}));
  EXPECT_TRUE(g.all_weights_equal(0.5));
}

TEST(Construct, KMaxBoundsIterations) {
  IrseGraph g = build_graph_presented(testing::chain_record(6), testing::identity_order(6));
  // The iterative classifier resolves exactly one more pair per pass.
  ParamStore s;
  ClassifierParams mlp = ClassifierParams::create(s, "c", 1, 1);
  mlp.hidden.weight->value = Tensor(2, 1, {1.0, -1.0});
  mlp.output.weight->value = Tensor::scalar(3.0);
  PairClassifier initial{[](const IrseGraph& gr) { return Tensor(gr.num_sentences(), 1); }, &mlp};
  PairClassifier iterative{[](const IrseGraph& gr) {
                             Tensor k(gr.num_sentences(), 1);
                             for (const SentencePair& p : gr.ss_pairs()) {
                               if (gr.weight(p.first, p.second) == 0.5) {
                                 k(p.first, 0) = 2.0;
                                 break;
                               }
                             }
                             return k;
                           },
                           &mlp};
  RefineConfig cfg;
  cfg.k_max = 2;
  RefineResult res = construct_irse_graph(g, initial, iterative, cfg);
  EXPECT_EQ(res.iterations, 2);
  EXPECT_EQ(res.final_uncertain.size(), 3u);
  cfg.k_max = INT_MAX;
  IrseGraph fresh = build_graph_presented(testing::chain_record(6), testing::identity_order(6));
  res = construct_irse_graph(fresh, initial, iterative, cfg);
  EXPECT_EQ(res.initial_uncertain.size(), 5u);
  EXPECT_TRUE(res.final_uncertain.empty());
  EXPECT_LE(res.iterations, 6);
}

// Random models on the Figure-3 topology and on random topologies.
TEST(Construct, FuzzInvariants) {
  std::vector<ParagraphRecord> corpus{testing::figure3_record()};
  Rng rng(99);
  for (int k = 0; k < 4; ++k) corpus.push_back(testing::random_record(rng, 3 + k, 4, 0.5));
  RefineConfig cfg;
  cfg.k_max = INT_MAX;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const ParagraphRecord& r = corpus[seed % corpus.size()];
    Model m = testing::tiny_model(corpus, seed, 1.5);
    auto [g, order] = build_graph(r, seed);
    std::vector<PairSet> seen;
    RefineResult res = m.refine(g, RefineMode::kFull, cfg, [&](int, const IrseGraph& gr, const PairSet& vp) {
      for (const SentencePair& p : gr.ss_pairs()) {
        double w = gr.weight(p.first, p.second);
        EXPECT_EQ(w + gr.weight(p.second, p.first), 1.0);
        if (vp.count(p)) {
          EXPECT_EQ(w, 0.5);
        } else {
          EXPECT_TRUE(w < cfg.delta_min || w > cfg.delta_max) << w;
        }
      }
      if (!seen.empty()) {
        EXPECT_TRUE(std::includes(seen.back().begin(), seen.back().end(), vp.begin(), vp.end()));
      }
      seen.push_back(vp);
    });
    EXPECT_LE(static_cast<std::size_t>(res.iterations), res.initial_uncertain.size() + 1);
    for (const SentencePair& p : res.final_uncertain) EXPECT_EQ(g.weight(p.first, p.second), 0.5);

    // Same input, same result.
    auto [g2, order2] = build_graph(r, seed);
    RefineResult again = m.refine(g2, RefineMode::kFull, cfg);
    EXPECT_EQ(again.sizes, res.sizes);
    for (const SentencePair& p : g.ss_pairs()) EXPECT_EQ(g.weight(p.first, p.second), g2.weight(p.first, p.second));
  }
}

TEST(ModelRefine, Modes) {
  std::vector<ParagraphRecord> corpus{testing::figure3_record()};
  Model m = testing::tiny_model(corpus, 3, 1.5);
  IrseGraph g = build_graph_presented(corpus[0], testing::identity_order(4));
  RefineResult none = m.refine(g, RefineMode::kNone, RefineConfig{});
  EXPECT_EQ(none.iterations, 0);
  EXPECT_EQ(none.final_uncertain.size(), 4u);
  EXPECT_TRUE(g.all_weights_equal(0.5));
  RefineResult initial = m.refine(g, RefineMode::kInitialOnly, RefineConfig{});
  EXPECT_EQ(initial.iterations, 0);
  EXPECT_EQ(initial.final_uncertain, initial.initial_uncertain);
  EXPECT_EQ(refine_mode_from_string("initial-only"), RefineMode::kInitialOnly);
  EXPECT_EQ(to_string(RefineMode::kNone), "none");
  EXPECT_THROW(refine_mode_from_string("partial"), ConfigError);
}

}  // namespace
}  // namespace irse
