#include "irse/train.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "irse/data.hpp"

namespace irse {

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("train." + msg); };
  if (epochs_a < 0 || epochs_b < 0 || epochs_c < 0) fail("epochs must be non-negative");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (!(l2 >= 0.0)) fail("l2 must be non-negative");
  if (!(eta >= 0.0 && eta <= 1.0)) fail("eta must lie in [0, 1]");
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
  if (!(rho > 0.0 && rho < 1.0)) fail("rho must lie in (0, 1)");
  if (!(epsilon > 0.0)) fail("epsilon must be positive");
  if (patience < 1) fail("patience must be >= 1");
  if (!(reset_min >= 0.0 && reset_min <= reset_max && reset_max <= 1.0)) {
    fail("reset fraction range must satisfy 0 <= reset_min <= reset_max <= 1");
  }
}

double loss_pointer(const std::vector<Tensor>& steps, const std::vector<int>& gold_order) {
  if (steps.size() != gold_order.size()) throw ShapeError("loss_pointer: steps and gold order differ in length");
  double loss = 0.0;
  for (std::size_t t = 0; t < steps.size(); ++t) {
    double p = steps[t](0, gold_order[t]);
    if (p < 1e-12) p = 1e-12;
    loss -= std::log(p);
  }
  return loss;
}

Var loss_pointer(const std::vector<Var>& steps, const std::vector<int>& gold_order) {
  if (steps.empty() || steps.size() != gold_order.size()) {
    throw ShapeError("loss_pointer: steps and gold order differ in length");
  }
  Var total;
  for (std::size_t t = 0; t < steps.size(); ++t) {
    Var term = neg_log_pick(steps[t], 0, gold_order[t]);
    total = total.valid() ? add(total, term) : term;
  }
  return total;
}

double loss_pairwise(double p, double label) {
  p = std::clamp(p, 1e-12, 1.0 - 1e-12);
  return -(label * std::log(p) + (1.0 - label) * std::log(1.0 - p));
}

Var loss_pairwise(Var probs, std::span<const double> labels) { return binary_cross_entropy(probs, labels, 1e-12); }

void adadelta_step(std::span<Parameter* const> params, const TrainConfig& cfg) {
  const double rho = cfg.rho, eps = cfg.epsilon;
  for (Parameter* p : params) {
    double* theta = p->value.data();
    double* grad = p->grad.data();
    double* eg = p->sq_grad_avg.data();
    double* ed = p->sq_update_avg.data();
    for (std::size_t k = 0; k < p->value.size(); ++k) {
      double g = grad[k] + cfg.l2 * theta[k];
      eg[k] = rho * eg[k] + (1.0 - rho) * g * g;
      double delta = -cfg.learning_rate * std::sqrt(ed[k] + eps) / std::sqrt(eg[k] + eps) * g;
      ed[k] = rho * ed[k] + (1.0 - rho) * delta * delta;
      theta[k] += delta;
      grad[k] = 0.0;
    }
  }
}

namespace {

using Clock = std::chrono::steady_clock;

// Sub-seed streams, kept apart so phases never share draws.
enum Stream : std::uint64_t { kShuffle = 1, kDropout = 2, kNoise = 3, kTrainOrder = 4, kValOrder = 5 };

std::uint64_t stream_seed(const TrainConfig& cfg, const std::string& phase, Stream s, std::uint64_t epoch = 0) {
  std::uint64_t h = cfg.seed;
  for (char c : phase) h = mix_seed(h, static_cast<unsigned char>(c));
  return mix_seed(mix_seed(h, s), epoch);
}

struct Example {
  IrseGraph graph;
  std::vector<int> gold_positions;
  std::vector<int> gold_order;
};

std::vector<Example> fresh_examples(const std::vector<ParagraphRecord>& records, std::uint64_t order_seed) {
  std::vector<Example> out;
  out.reserve(records.size());
  for (std::size_t k = 0; k < records.size(); ++k) {
    auto [g, presented] = build_graph(records[k], presentation_seed(order_seed, k));
    out.push_back({std::move(g), presented, gold_order(presented)});
  }
  return out;
}

std::vector<Parameter*> concat_params(std::vector<Parameter*> a, const std::vector<Parameter*>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

struct Phase {
  std::string name;
  int epochs = 0;
  std::vector<Parameter*> trainable;
  std::size_t n_examples = 0;
  // Per-example loss; an invalid Var skips the example.
  std::function<Var(Tape&, std::size_t, Rng& dropout_rng, Rng& noise_rng)> loss;
  std::function<double()> validate;
};

std::vector<EpochLog> run_phase(const Phase& phase, const TrainConfig& cfg, const TrainHooks& hooks) {
  std::vector<EpochLog> logs;
  if (phase.n_examples == 0) throw ConfigError("phase " + phase.name + ": empty training split");
  for (Parameter* p : phase.trainable) {
    p->zero_grad();
    p->reset_optimizer_state();
  }
  double best = -std::numeric_limits<double>::infinity();
  std::vector<Tensor> snapshot;
  int stale = 0;
  for (int epoch = 0; epoch < phase.epochs; ++epoch) {
    auto t0 = Clock::now();
    Rng shuffle_rng(stream_seed(cfg, phase.name, kShuffle, epoch));
    Rng dropout_rng(stream_seed(cfg, phase.name, kDropout, epoch));
    Rng noise_rng(stream_seed(cfg, phase.name, kNoise, epoch));
    std::vector<int> order = random_permutation(shuffle_rng, phase.n_examples);
    double loss_sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::size_t used = 0;
      for (std::size_t b = start; b < end; ++b) {
        auto where = [&] {
          return "phase " + phase.name + " epoch " + std::to_string(epoch) + " step " +
                 std::to_string(start / cfg.batch_size);
        };
        Tape tape;
        Var loss;
        try {
          loss = phase.loss(tape, order[b], dropout_rng, noise_rng);
        } catch (const NumericError& e) {
          throw NumericError(where() + ": " + e.what());
        }
        if (!loss.valid()) continue;
        double value = loss.value().item();
        if (!std::isfinite(value)) throw NumericError(where() + ": non-finite loss");
        loss_sum += value;
        ++counted;
        ++used;
        tape.backward(scale(loss, 1.0 / static_cast<double>(end - start)));
      }
      if (used) adadelta_step(phase.trainable, cfg);
    }
    EpochLog log;
    log.phase = phase.name;
    log.epoch = epoch;
    log.train_loss = counted ? loss_sum / static_cast<double>(counted) : 0.0;
    try {
      log.val_metric = phase.validate();
    } catch (const NumericError& e) {
      const std::size_t steps = (order.size() + cfg.batch_size - 1) / cfg.batch_size;
      throw NumericError("phase " + phase.name + " epoch " + std::to_string(epoch) + " validation after step " +
                         std::to_string(steps - 1) + ": " + e.what());
    }
    log.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    logs.push_back(log);
    if (hooks.on_epoch) hooks.on_epoch(log);
    if (log.val_metric > best) {
      best = log.val_metric;
      snapshot.clear();
      for (Parameter* p : phase.trainable) snapshot.push_back(p->value);
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  if (!snapshot.empty()) {
    for (std::size_t k = 0; k < phase.trainable.size(); ++k) phase.trainable[k]->value = snapshot[k];
  }
  for (Parameter* p : phase.trainable) p->reset_optimizer_state();
  return logs;
}

double pairwise_metric(const Model& model, const std::vector<ParagraphRecord>& val, RefineMode mode,
                       const TrainConfig& cfg, const RefineConfig& refine, const std::string& phase) {
  if (val.empty()) throw ConfigError("phase " + phase + ": empty validation split");
  EvalOptions opts;
  opts.refine = mode;
  opts.refine_cfg = refine;
  opts.decode_orders = false;
  opts.order_seed = stream_seed(cfg, "val", kValOrder);
  return evaluate_model(model, val, opts).pairwise_acc.value_or(0.0);
}

std::vector<std::pair<int, int>> both_directions(const std::vector<SentencePair>& pairs, const std::vector<int>& gold,
                                                 std::vector<double>& labels) {
  std::vector<std::pair<int, int>> out;
  labels.clear();
  for (const auto& p : pairs) {
    double fwd = gold[p.first] < gold[p.second] ? 1.0 : 0.0;
    out.emplace_back(p.first, p.second);
    labels.push_back(fwd);
    out.emplace_back(p.second, p.first);
    labels.push_back(1.0 - fwd);
  }
  return out;
}

}  // namespace

std::vector<EpochLog> train_phase_a(Model& model, const std::vector<ParagraphRecord>& train,
                                    const std::vector<ParagraphRecord>& val, const TrainConfig& cfg,
                                    const RefineConfig& refine, const TrainHooks& hooks) {
  cfg.validate();
  auto examples = fresh_examples(train, stream_seed(cfg, "train", kTrainOrder));
  ParamStore& store = model.params();
  Phase phase;
  phase.name = "A";
  phase.epochs = cfg.epochs_a;
  phase.trainable = concat_params(store.with_prefix(Model::kInitialTower), store.with_prefix("initial_cls."));
  phase.n_examples = examples.size();
  phase.loss = [&](Tape& tape, std::size_t k, Rng& drop, Rng&) -> Var {
    const Example& ex = examples[k];
    if (ex.graph.num_ss_pairs() == 0) return {};
    std::vector<double> labels;
    auto pairs = both_directions(ex.graph.ss_pairs(), ex.gold_positions, labels);
    Var states = model.encode(tape, ex.graph, model.initial_tower()).sentences;
    Var probs = pair_scores(states, pairs, model.initial_classifier(), cfg.dropout, &drop);
    return loss_pairwise(probs, labels);
  };
  phase.validate = [&] { return pairwise_metric(model, val, RefineMode::kInitialOnly, cfg, refine, "A"); };
  auto logs = run_phase(phase, cfg, hooks);
  if (hooks.on_phase_end) hooks.on_phase_end("A", model);
  return logs;
}

std::vector<EpochLog> train_phase_b(Model& model, const std::vector<ParagraphRecord>& train,
                                    const std::vector<ParagraphRecord>& val, const TrainConfig& cfg,
                                    const RefineConfig& refine, const TrainHooks& hooks) {
  cfg.validate();
  ParamStore& store = model.params();
  copy_prefix(store, Model::kInitialTower, Model::kIterativeTower);
  auto examples = fresh_examples(train, stream_seed(cfg, "train", kTrainOrder));
  Phase phase;
  phase.name = "B";
  phase.epochs = cfg.epochs_b;
  phase.trainable = store.with_prefix("iterative_cls.");
  if (!cfg.freeze_encoder) phase.trainable = concat_params(store.with_prefix(Model::kIterativeTower), phase.trainable);
  phase.n_examples = examples.size();
  phase.loss = [&](Tape& tape, std::size_t k, Rng& drop, Rng& noise) -> Var {
    const Example& ex = examples[k];
    const std::size_t n = ex.graph.num_ss_pairs();
    if (n == 0) return {};
    IrseGraph g = ex.graph;
    assign_gold_weights(g, ex.gold_positions);
    inject_noise(g, cfg.eta, noise);
    double fraction = uniform(noise, cfg.reset_min, cfg.reset_max);
    auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))));
    std::vector<SentencePair> pairs = g.ss_pairs();
    for (std::size_t i = 0; i < count; ++i) std::swap(pairs[i], pairs[i + uniform_index(noise, n - i)]);
    pairs.resize(count);
    uncertain_reset(g, PairSet(pairs.begin(), pairs.end()));
    std::vector<double> labels;
    auto directed = both_directions(pairs, ex.gold_positions, labels);
    Var states = model.encode(tape, g, model.iterative_tower()).sentences;
    Var probs = pair_scores(states, directed, model.iterative_classifier(), cfg.dropout, &drop);
    return loss_pairwise(probs, labels);
  };
  phase.validate = [&] { return pairwise_metric(model, val, RefineMode::kFull, cfg, refine, "B"); };
  auto logs = run_phase(phase, cfg, hooks);
  if (hooks.on_phase_end) hooks.on_phase_end("B", model);
  return logs;
}

std::vector<EpochLog> train_phase_c(Model& model, const std::vector<ParagraphRecord>& train,
                                    const std::vector<ParagraphRecord>& val, const TrainConfig& cfg,
                                    const RefineConfig& refine, RefineMode mode, const TrainHooks& hooks) {
  cfg.validate();
  if (val.empty()) throw ConfigError("phase C: empty validation split");
  ParamStore& store = model.params();
  copy_prefix(store, Model::kIterativeTower, Model::kOrderingTower);
  // The classifiers and their towers are frozen from here on, so every
  // graph is refined once up front.
  auto examples = fresh_examples(train, stream_seed(cfg, "train", kTrainOrder));
  for (auto& ex : examples) model.refine(ex.graph, mode, refine);
  auto val_examples = fresh_examples(val, stream_seed(cfg, "val", kValOrder));
  for (auto& ex : val_examples) model.refine(ex.graph, mode, refine);

  Phase phase;
  phase.name = "C";
  phase.epochs = cfg.epochs_c;
  phase.trainable = store.with_prefix("decoder.");
  if (!cfg.freeze_encoder) phase.trainable = concat_params(store.with_prefix(Model::kOrderingTower), phase.trainable);
  phase.n_examples = examples.size();
  phase.loss = [&](Tape& tape, std::size_t k, Rng& drop, Rng&) -> Var {
    const Example& ex = examples[k];
    GrnState s = model.encode(tape, ex.graph, model.ordering_tower());
    auto steps = teacher_forced_steps(s, model.decoder(), ex.gold_order, cfg.dropout, &drop);
    return loss_pointer(steps, ex.gold_order);
  };
  phase.validate = [&] {
    double sum = 0.0;
    for (const auto& ex : val_examples) {
      sum += kendall_tau(model.order(ex.graph, DecodeMode::kGreedy, 1).order, ex.gold_order);
    }
    return sum / static_cast<double>(val_examples.size());
  };
  auto logs = run_phase(phase, cfg, hooks);
  if (hooks.on_phase_end) hooks.on_phase_end("C", model);
  return logs;
}

std::vector<EpochLog> train_pipeline(Model& model, const std::vector<ParagraphRecord>& train,
                                     const std::vector<ParagraphRecord>& val, const TrainConfig& cfg,
                                     const RefineConfig& refine, const PipelineOptions& opts,
                                     const TrainHooks& hooks) {
  cfg.validate();
  refine.validate();
  if (train.empty()) throw ConfigError("training split is empty");
  if (val.empty()) throw ConfigError("validation split is empty");
  std::vector<EpochLog> logs;
  auto append = [&](std::vector<EpochLog> more) { logs.insert(logs.end(), more.begin(), more.end()); };
  if (!opts.skip_phase_a) append(train_phase_a(model, train, val, cfg, refine, hooks));
  append(train_phase_b(model, train, val, cfg, refine, hooks));
  append(train_phase_c(model, train, val, cfg, refine, opts.mode, hooks));
  return logs;
}

}  // namespace irse
