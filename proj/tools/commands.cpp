#include "commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "irse/checkpoint.hpp"
#include "irse/config.hpp"
#include "irse/data.hpp"
#include "irse/eval.hpp"
#include "irse/model.hpp"
#include "irse/train.hpp"

namespace irse::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::optional<int> beam_width;
  bool head_tail = false;
};

RunConfig resolve_config(const Globals& g) {
  std::string path = g.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv(kConfigEnv)) path = env;
  }
  RunConfig c = path.empty() ? RunConfig{} : load_run_config(path);
  if (g.seed) c.seed = *g.seed;
  if (g.beam_width) c.eval.beam_width = *g.beam_width;
  if (g.jobs < 1) throw ConfigError("--jobs must be >= 1");
  c.validate();
  return c;
}

std::string corpus_path(const RunConfig& c, const std::string& flag) {
  std::string p = flag.empty() ? c.paths.corpus : flag;
  if (p.empty()) throw ConfigError("no corpus given (use --corpus or paths.corpus)");
  return p;
}

std::vector<ParagraphRecord> select_split(const RunConfig& c, const std::vector<ParagraphRecord>& records,
                                          const std::string& split) {
  if (split == "all") return records;
  CorpusSplit s = split_corpus(records, c.split_ratios, c.seed);
  if (split == "train") return s.train;
  if (split == "val") return s.val;
  if (split == "test") return s.test;
  throw ConfigError("unknown split '" + split + "' (expected all, train, val or test)");
}

Model load_model(const RunConfig& c, const std::string& path) {
  Model m = load_checkpoint(path);
  if (c.dims_explicit && !(m.dims() == c.dims)) {
    throw ConfigError("checkpoint '" + path + "' dimensions " + dims_to_json(m.dims()).dump() +
                      " do not match the configured " + dims_to_json(c.dims).dump());
  }
  return m;
}

EvalOptions eval_options(const RunConfig& c, const Globals& g, RefineMode mode) {
  EvalOptions o;
  o.refine = mode;
  o.refine_cfg = c.refine;
  o.decode = c.eval.decode;
  o.beam_width = c.eval.beam_width;
  o.order_seed = c.eval.order_seed;
  o.jobs = g.jobs;
  return o;
}

json weight_table(const IrseGraph& g) {
  json rows = json::array();
  for (const SentencePair& p : g.ss_pairs()) {
    rows.push_back({{"pair", {p.first, p.second}},
                    {"w_fwd", g.weight(p.first, p.second)},
                    {"w_bwd", g.weight(p.second, p.first)}});
  }
  return rows;
}

json pair_list(const PairSet& s) {
  json out = json::array();
  for (const auto& p : s) out.push_back({p.first, p.second});
  return out;
}

// --- commands ---------------------------------------------------------------

int cmd_gen_data(const Globals& g, const std::string& out_path, std::optional<std::size_t> n, std::ostream& out) {
  RunConfig c = resolve_config(g);
  if (g.seed) c.synth.seed = *g.seed;
  if (n) c.synth.n_paragraphs = *n;
  auto records = generate_synthetic(c.synth);
  save_corpus(out_path, records);
  out << json{{"records", records.size()}, {"path", out_path}}.dump() << '\n';
  return kOk;
}

int cmd_train(const Globals& g, const std::string& corpus_flag, const std::string& out_dir_flag, bool resume,
              const std::string& mode_name, std::ostream& out, std::ostream& err) {
  RunConfig c = resolve_config(g);
  RefineMode mode = refine_mode_from_string(mode_name);
  auto records = load_corpus(corpus_path(c, corpus_flag));
  CorpusSplit split = split_corpus(records, c.split_ratios, c.seed);
  fs::path dir = out_dir_flag.empty() ? fs::path(c.paths.output_dir) : fs::path(out_dir_flag);
  fs::create_directories(dir);
  const fs::path ckpt_a = dir / "phase_a.json", ckpt_b = dir / "phase_b.json", ckpt_c = dir / "phase_c.json";

  TrainConfig tc = c.effective_train();
  std::optional<Model> model;
  bool have_a = false, have_b = false;
  if (resume && fs::exists(ckpt_b)) {
    model.emplace(load_model(c, ckpt_b.string()));
    have_a = have_b = true;
  } else if (resume && fs::exists(ckpt_a)) {
    model.emplace(load_model(c, ckpt_a.string()));
    have_a = true;
  } else {
    model.emplace(c.dims, build_vocabulary(split.train));
    model->init_uniform(mix_seed(c.seed, 0x696e6974));
    if (!c.paths.embeddings.empty()) {
      Parameter& table = *model->initial_tower().encoder.embedding;
      std::size_t set = load_pretrained_embeddings(c.paths.embeddings, model->vocab(), table);
      err << "loaded " << set << " pretrained embedding rows\n";
    }
  }

  std::ofstream log(dir / "train_log.jsonl", resume ? std::ios::app : std::ios::trunc);
  if (!log) throw ConfigError("cannot write training log in '" + dir.string() + "'");
  json meta_base = {{"config", c.to_json()}, {"refine_mode", to_string(mode)}};
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochLog& e) {
    json line = {{"phase", e.phase}, {"epoch", e.epoch}, {"train_loss", e.train_loss},
                 {"val_metric", e.val_metric}, {"wall_seconds", e.seconds}};
    log << line.dump() << '\n';
    log.flush();
    err << "phase " << e.phase << " epoch " << e.epoch << " loss " << e.train_loss << " val " << e.val_metric
        << " (" << e.seconds << "s)\n";
  };
  hooks.on_phase_end = [&](const std::string& phase, const Model& m) {
    json meta = meta_base;
    meta["phase"] = phase;
    fs::path p = phase == "A" ? ckpt_a : phase == "B" ? ckpt_b : ckpt_c;
    save_checkpoint(p.string(), m, meta);
  };

  if (!have_a) train_phase_a(*model, split.train, split.val, tc, c.refine, hooks);
  if (!have_b) train_phase_b(*model, split.train, split.val, tc, c.refine, hooks);
  train_phase_c(*model, split.train, split.val, tc, c.refine, mode, hooks);

  out << json{{"phase_a", ckpt_a.string()},
              {"phase_b", ckpt_b.string()},
              {"phase_c", ckpt_c.string()},
              {"skipped", {{"A", have_a}, {"B", have_b}}},
              {"train_size", split.train.size()},
              {"val_size", split.val.size()},
              {"test_size", split.test.size()}}
             .dump()
      << '\n';
  return kOk;
}

int cmd_eval(const Globals& g, const std::string& checkpoint, const std::string& corpus_flag,
             const std::string& split, const std::string& refine_name, const std::string& decode_name,
             std::ostream& out) {
  RunConfig c = resolve_config(g);
  if (!decode_name.empty()) c.eval.decode = decode_mode_from_string(decode_name);
  RefineMode mode = refine_mode_from_string(refine_name);
  Model model = load_model(c, checkpoint);
  auto records = select_split(c, load_corpus(corpus_path(c, corpus_flag)), split);
  MetricReport r = evaluate_model(model, records, eval_options(c, g, mode));
  out << r.to_json(g.head_tail).dump() << '\n';
  return kOk;
}

int cmd_predict(const Globals& g, const std::string& checkpoint, const std::string& corpus_flag,
                const std::string& split, const std::string& out_path, bool steps, std::ostream& out) {
  RunConfig c = resolve_config(g);
  Model model = load_model(c, checkpoint);
  auto records = select_split(c, load_corpus(corpus_path(c, corpus_flag)), split);
  auto preds = predict_corpus(model, records, eval_options(c, g, RefineMode::kFull));
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw ConfigError("cannot write predictions to '" + out_path + "'");
  }
  std::ostream& sink = out_path.empty() ? out : file;
  for (const auto& p : preds) {
    json line = {{"id", p.id}, {"predicted_order", p.predicted_order}, {"gold_order", p.gold_order}};
    if (steps) {
      json probs = json::array();
      for (const Tensor& t : p.steps) probs.push_back(std::vector<double>(t.values().begin(), t.values().end()));
      line["step_probabilities"] = probs;
    }
    sink << line.dump() << '\n';
  }
  if (!out_path.empty()) out << json{{"predictions", preds.size()}, {"path", out_path}}.dump() << '\n';
  return kOk;
}

int cmd_inspect_graph(const Globals& g, const std::string& corpus_flag, long index, const std::string& checkpoint,
                      std::ostream& out) {
  RunConfig c = resolve_config(g);
  auto records = load_corpus(corpus_path(c, corpus_flag));
  if (index < 0 || static_cast<std::size_t>(index) >= records.size()) {
    throw RangeError("--index " + std::to_string(index) + " outside [0, " + std::to_string(records.size()) + ")");
  }
  const ParagraphRecord& r = records[index];
  // Gold presentation, so node ids read as gold positions.
  std::vector<int> identity(r.sentences.size());
  for (std::size_t k = 0; k < identity.size(); ++k) identity[k] = static_cast<int>(k);
  IrseGraph graph = build_graph_presented(r, identity);

  json se = json::array();
  for (const SeEdge& e : graph.se_edges()) se.push_back({e.sentence, e.entity, to_string(e.role)});
  json ee = json::array();
  for (const auto& [a, b] : graph.ee_edges()) ee.push_back({a, b});
  json report = {{"id", r.id},
                 {"sentence_nodes", graph.num_sentences()},
                 {"entity_nodes", graph.num_entities()},
                 {"entities", graph.entities()},
                 {"ss_pairs", graph.num_ss_pairs()},
                 {"se_edges", se},
                 {"ee_edges", ee},
                 {"weights_before", weight_table(graph)}};
  if (!checkpoint.empty()) {
    Model model = load_model(c, checkpoint);
    json trajectory = json::array();
    RefineResult res = model.refine(graph, RefineMode::kFull, c.refine,
                                    [&](int, const IrseGraph&, const PairSet& vp) { trajectory.push_back(pair_list(vp)); });
    report["weights_after"] = weight_table(graph);
    report["vp_trajectory"] = trajectory;
    report["iterations"] = res.iterations;
  }
  out << report.dump() << '\n';
  return kOk;
}

int cmd_refine_stats(const Globals& g, const std::string& checkpoint, const std::string& corpus_flag,
                     const std::string& split, std::ostream& out) {
  RunConfig c = resolve_config(g);
  Model model = load_model(c, checkpoint);
  auto records = select_split(c, load_corpus(corpus_path(c, corpus_flag)), split);
  EvalOptions o = eval_options(c, g, RefineMode::kFull);
  o.decode_orders = false;
  for (const auto& p : predict_corpus(model, records, o)) {
    out << json{{"id", p.id},
                {"vp0", p.refinement.initial_uncertain.size()},
                {"sizes", p.refinement.sizes},
                {"iterations_run", p.refinement.iterations},
                {"final_uncertain", p.refinement.final_uncertain.size()}}
               .dump()
        << '\n';
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sentence ordering with iteratively refined graph edge weights", "irse"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, std::string("Run configuration JSON (default: $") + kConfigEnv + ")");
  app.add_option("--seed", g.seed, "Override the configured seed");
  app.add_option("--jobs", g.jobs, "Paragraphs evaluated in parallel")->check(CLI::PositiveNumber);
  app.add_option("--beam-width", g.beam_width, "Beam width for beam decoding")->check(CLI::PositiveNumber);
  app.add_flag("--head-tail", g.head_tail, "Include head/tail accuracy in metric reports");

  std::string out_path, corpus, out_dir, checkpoint, split = "test", refine = "full", decode, mode = "full";
  std::optional<std::size_t> n;
  bool resume = false, steps = false;
  long index = 0;

  auto* gen = app.add_subcommand("gen-data", "Write a synthetic annotated corpus");
  gen->add_option("--out", out_path, "Output JSONL path")->required();
  gen->add_option("--n", n, "Number of paragraphs");

  auto* train = app.add_subcommand("train", "Run the three training phases");
  train->add_option("--corpus", corpus, "Corpus JSONL (split into train/val/test)");
  train->add_option("--out-dir", out_dir, "Directory for checkpoints and logs");
  train->add_flag("--resume", resume, "Reuse phase checkpoints already in the output directory");
  train->add_option("--refine", mode, "Refinement used for ordering training: full, initial-only, none");

  auto* eval = app.add_subcommand("eval", "Refine, decode and report metrics");
  auto* predict = app.add_subcommand("predict", "Write per-paragraph predicted orders");
  auto* stats = app.add_subcommand("refine-stats", "Per-paragraph uncertain-set trajectory");
  for (auto* sub : {eval, predict, stats}) {
    sub->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
    sub->add_option("--corpus", corpus, "Corpus JSONL");
    sub->add_option("--split", split, "all, train, val or test");
  }
  eval->add_option("--refine", refine, "full, initial-only or none");
  eval->add_option("--decode", decode, "greedy or beam");
  predict->add_option("--out", out_path, "Output JSONL (default stdout)");
  predict->add_flag("--steps", steps, "Include per-step probabilities");

  auto* inspect = app.add_subcommand("inspect-graph", "Print one paragraph's graph and weights");
  inspect->add_option("--corpus", corpus, "Corpus JSONL");
  inspect->add_option("--index", index, "Record index")->required();
  inspect->add_option("--checkpoint", checkpoint, "Refine with this checkpoint");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "irse: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (*gen) return cmd_gen_data(g, out_path, n, out);
    if (*train) return cmd_train(g, corpus, out_dir, resume, mode, out, err);
    if (*eval) return cmd_eval(g, checkpoint, corpus, split, refine, decode, out);
    if (*predict) return cmd_predict(g, checkpoint, corpus, split, out_path, steps, out);
    if (*inspect) return cmd_inspect_graph(g, corpus, index, checkpoint, out);
    if (*stats) return cmd_refine_stats(g, checkpoint, corpus, split, out);
  } catch (const NumericError& e) {
    err << "irse: numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const ParseError& e) {
    err << "irse: line " << e.line() << ", field '" << e.field() << "': " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "irse: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace irse::cli
