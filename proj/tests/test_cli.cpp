#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "commands.hpp"
#include "irse/data.hpp"
#include "test_support.hpp"

namespace irse {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;

  json last_json() const {
    std::istringstream in(out);
    std::string line, last;
    while (std::getline(in, line)) {
      if (!line.empty()) last = line;
    }
    return json::parse(last);
  }
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::path(::testing::TempDir()) /
           ("irse_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    write("small.json", json{{"seed", 3},
                             {"dims", {{"embed", 4}, {"lstm_hidden", 3}, {"entity", 3}, {"global", 4},
                                       {"mlp", 5}, {"decoder_hidden", 4}, {"attention", 3}, {"grn_layers", 1}}},
                             {"train", {{"epochs_a", 1}, {"epochs_b", 1}, {"epochs_c", 1}, {"batch_size", 4}}},
                             {"synth", {{"n_paragraphs", 12}}}}
                            .dump());
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }
  std::string read(const std::string& name) const {
    std::ifstream in(path(name));
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }

  Outcome run(std::vector<std::string> args) const {
    std::ostringstream out, err;
    Outcome o;
    o.code = cli::run(args, out, err);
    o.out = out.str();
    o.err = err.str();
    return o;
  }
  Outcome small(std::vector<std::string> args) const {
    args.insert(args.begin(), {"--config", path("small.json")});
    return run(args);
  }
  void train_small(const std::string& out_dir) const {
    ASSERT_EQ(small({"gen-data", "--out", path("corpus.jsonl")}).code, 0);
    Outcome o = small({"train", "--corpus", path("corpus.jsonl"), "--out-dir", path(out_dir)});
    ASSERT_EQ(o.code, 0) << o.err;
  }

  fs::path dir_;
};

std::size_t count_lines(const std::string& text) { return std::count(text.begin(), text.end(), '\n'); }

TEST_F(Cli, GenDataWritesRequestedRecords) {
  Outcome o = small({"gen-data", "--out", path("c.jsonl"), "--n", "7"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(o.last_json()["records"], 7);
  EXPECT_EQ(count_lines(read("c.jsonl")), 7u);
  EXPECT_EQ(load_corpus(path("c.jsonl")).size(), 7u);
}

TEST_F(Cli, GenDataIsByteIdentical) {
  ASSERT_EQ(small({"gen-data", "--out", path("a.jsonl")}).code, 0);
  ASSERT_EQ(small({"gen-data", "--out", path("b.jsonl")}).code, 0);
  EXPECT_EQ(read("a.jsonl"), read("b.jsonl"));
  EXPECT_FALSE(read("a.jsonl").empty());
}

TEST_F(Cli, BadConfigsExitTwo) {
  write("broken.json", "{\"seed\": ");
  Outcome o = run({"--config", path("broken.json"), "gen-data", "--out", path("x.jsonl")});
  EXPECT_EQ(o.code, 2);
  EXPECT_FALSE(o.err.empty());
  EXPECT_TRUE(o.out.empty());

  write("unknown.json", R"({"train": {"epochs": 3}})");
  o = run({"--config", path("unknown.json"), "gen-data", "--out", path("x.jsonl")});
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("epochs"), std::string::npos);

  EXPECT_EQ(small({"gen-data", "--out", path("no_dir/x.jsonl")}).code, 2);
  EXPECT_EQ(run({"gen-data"}).code, 2);
  EXPECT_EQ(run({"no-such-command"}).code, 2);
}

TEST_F(Cli, ConfigFromEnvironment) {
  ::setenv(cli::kConfigEnv, path("small.json").c_str(), 1);
  Outcome o = run({"gen-data", "--out", path("env.jsonl")});
  ::unsetenv(cli::kConfigEnv);
  ASSERT_EQ(o.code, 0);
  EXPECT_EQ(o.last_json()["records"], 12);
}

TEST_F(Cli, TrainSmokeWritesThreeCheckpoints) {
  train_small("run");
  for (const char* name : {"run/phase_a.json", "run/phase_b.json", "run/phase_c.json"}) {
    EXPECT_TRUE(fs::exists(path(name))) << name;
  }
  std::istringstream log(read("run/train_log.jsonl"));
  std::string line;
  std::set<std::string> phases;
  while (std::getline(log, line)) {
    json j = json::parse(line);
    for (const char* key : {"phase", "epoch", "train_loss", "val_metric", "wall_seconds"}) {
      EXPECT_TRUE(j.contains(key)) << key;
    }
    phases.insert(j["phase"].get<std::string>());
  }
  EXPECT_EQ(phases, (std::set<std::string>{"A", "B", "C"}));
}

TEST_F(Cli, ResumeSkipsFinishedPhases) {
  train_small("run");
  fs::remove(path("run/phase_b.json"));
  Outcome o = small({"train", "--resume", "--corpus", path("corpus.jsonl"), "--out-dir", path("run")});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(o.last_json()["skipped"]["A"], true);
  EXPECT_EQ(o.last_json()["skipped"]["B"], false);
  EXPECT_EQ(o.err.find("phase A"), std::string::npos);
  EXPECT_NE(o.err.find("phase B"), std::string::npos);
}

TEST_F(Cli, FixedSeedGivesSameFirstLoss) {
  train_small("one");
  train_small("two");
  auto first = [&](const std::string& name) {
    std::istringstream in(read(name));
    std::string line;
    std::getline(in, line);
    return json::parse(line)["train_loss"].get<double>();
  };
  EXPECT_EQ(first("one/train_log.jsonl"), first("two/train_log.jsonl"));
  EXPECT_EQ(read("one/phase_c.json"), read("two/phase_c.json"));
}

TEST_F(Cli, NonFiniteLossExitsThree) {
  ASSERT_EQ(small({"gen-data", "--out", path("corpus.jsonl")}).code, 0);
  write("hot.json", json{{"train", {{"epochs_a", 3}, {"learning_rate", 1e300}, {"dropout", 0.0}}},
                         {"dims", {{"embed", 4}, {"lstm_hidden", 3}, {"entity", 3}, {"global", 4}, {"mlp", 5},
                                   {"decoder_hidden", 4}, {"attention", 3}, {"grn_layers", 1}}}}
                        .dump());
  Outcome o = run({"--config", path("hot.json"), "train", "--corpus", path("corpus.jsonl"), "--out-dir", path("hot")});
  EXPECT_EQ(o.code, 3) << o.err;
  EXPECT_NE(o.err.find("step"), std::string::npos);
}

TEST_F(Cli, MissingCorpusExitsTwo) {
  EXPECT_EQ(small({"train", "--corpus", path("absent.jsonl"), "--out-dir", path("run")}).code, 2);
  EXPECT_EQ(small({"train", "--out-dir", path("run")}).code, 2);
}

TEST_F(Cli, EvalReportsWellFormedMetrics) {
  train_small("run");
  for (const char* mode : {"full", "initial-only", "none"}) {
    Outcome o = small({"eval", "--checkpoint", path("run/phase_a.json"), "--corpus", path("corpus.jsonl"),
                       "--split", "all", "--refine", mode});
    ASSERT_EQ(o.code, 0) << o.err;
    json r = o.last_json();
    EXPECT_EQ(r["n_paragraphs"], 12);
    for (const char* key : {"tau", "pmr", "acc"}) {
      ASSERT_TRUE(r[key].is_number()) << key;
      EXPECT_GE(r[key].get<double>(), key == std::string("tau") ? -1.0 : 0.0);
      EXPECT_LE(r[key].get<double>(), 1.0);
    }
    EXPECT_TRUE(r.contains("pairwise_acc"));
    EXPECT_FALSE(r.contains("head_acc"));
  }
  Outcome ht = small({"--head-tail", "eval", "--checkpoint", path("run/phase_c.json"), "--corpus",
                      path("corpus.jsonl"), "--decode", "beam"});
  ASSERT_EQ(ht.code, 0) << ht.err;
  EXPECT_TRUE(ht.last_json().contains("head_acc"));
  EXPECT_TRUE(ht.last_json().contains("tail_acc"));
}

TEST_F(Cli, EvalRejectsDimensionMismatch) {
  train_small("run");
  write("wide.json", R"({"dims": {"embed": 6}})");
  Outcome o = run({"--config", path("wide.json"), "eval", "--checkpoint", path("run/phase_c.json"), "--corpus",
                   path("corpus.jsonl")});
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("dimensions"), std::string::npos);
  EXPECT_EQ(small({"eval", "--checkpoint", path("missing.json"), "--corpus", path("corpus.jsonl")}).code, 2);
}

TEST_F(Cli, PredictAndRefineStats) {
  train_small("run");
  Outcome o = small({"predict", "--checkpoint", path("run/phase_c.json"), "--corpus", path("corpus.jsonl"),
                     "--split", "all", "--steps"});
  ASSERT_EQ(o.code, 0) << o.err;
  std::istringstream in(o.out);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    json p = json::parse(line);
    auto pred = p["predicted_order"].get<std::vector<int>>();
    EXPECT_TRUE(is_permutation_of_range(pred));
    EXPECT_EQ(p["gold_order"].size(), pred.size());
    EXPECT_EQ(p["step_probabilities"].size(), pred.size());
    ++lines;
  }
  EXPECT_EQ(lines, 12u);

  o = small({"refine-stats", "--checkpoint", path("run/phase_c.json"), "--corpus", path("corpus.jsonl")});
  ASSERT_EQ(o.code, 0) << o.err;
  json s = o.last_json();
  for (const char* key : {"id", "vp0", "sizes", "iterations_run", "final_uncertain"}) EXPECT_TRUE(s.contains(key));
}

TEST_F(Cli, InspectGraphFigure3) {
  std::ofstream(path("fig3.jsonl")) << record_to_json(testing::figure3_record()).dump() << '\n';
  Outcome o = small({"inspect-graph", "--corpus", path("fig3.jsonl"), "--index", "0"});
  ASSERT_EQ(o.code, 0) << o.err;
  json r = o.last_json();
  EXPECT_EQ(r["sentence_nodes"], 4);
  EXPECT_EQ(r["ss_pairs"], 4);
  ASSERT_EQ(r["weights_before"].size(), 4u);
  for (const json& row : r["weights_before"]) {
    EXPECT_EQ(row["w_fwd"], 0.5);
    EXPECT_EQ(row["w_bwd"], 0.5);
  }
  EXPECT_FALSE(r.contains("weights_after"));

  EXPECT_EQ(small({"inspect-graph", "--corpus", path("fig3.jsonl"), "--index", "1"}).code, 2);
  EXPECT_EQ(small({"inspect-graph", "--corpus", path("fig3.jsonl"), "--index", "-1"}).code, 2);
}

TEST_F(Cli, InspectGraphAfterRefinement) {
  train_small("run");
  Outcome o = small({"inspect-graph", "--corpus", path("corpus.jsonl"), "--index", "2", "--checkpoint",
                     path("run/phase_c.json")});
  ASSERT_EQ(o.code, 0) << o.err;
  json r = o.last_json();
  ASSERT_TRUE(r.contains("weights_after"));
  const RefineConfig band;
  for (const json& row : r["weights_after"]) {
    double w = row["w_fwd"];
    EXPECT_TRUE(w == 0.5 || !band.uncertain(w)) << w;
    EXPECT_EQ(w + row["w_bwd"].get<double>(), 1.0);
  }
}

}  // namespace
}  // namespace irse
