#include "irse/eval.hpp"

#include <algorithm>
#include <thread>

#include "irse/data.hpp"

namespace irse {

namespace {

void check_same_length(const std::vector<int>& pred, const std::vector<int>& gold, const char* what) {
  if (pred.size() != gold.size()) {
    throw ValidationError(std::string(what) + ": prediction has " + std::to_string(pred.size()) +
                          " entries, gold has " + std::to_string(gold.size()));
  }
}

}  // namespace

std::size_t count_inversions(const std::vector<int>& pred, const std::vector<int>& gold) {
  check_same_length(pred, gold, "kendall_tau");
  if (!is_permutation_of_range(pred) || !is_permutation_of_range(gold)) {
    throw ValidationError("kendall_tau: inputs must be permutations of 0..I-1");
  }
  std::vector<std::size_t> pos(pred.size());
  for (std::size_t t = 0; t < pred.size(); ++t) pos[pred[t]] = t;
  // Gold order mapped to predicted positions; inversions of that sequence.
  std::size_t inversions = 0;
  for (std::size_t a = 0; a < gold.size(); ++a) {
    for (std::size_t b = a + 1; b < gold.size(); ++b) {
      if (pos[gold[a]] > pos[gold[b]]) ++inversions;
    }
  }
  return inversions;
}

double kendall_tau(const std::vector<int>& pred, const std::vector<int>& gold) {
  std::size_t inv = count_inversions(pred, gold);
  const double n = static_cast<double>(pred.size());
  if (pred.size() < 2) return 1.0;
  return 1.0 - 2.0 * static_cast<double>(inv) / (n * (n - 1.0) / 2.0);
}

double pmr(const std::vector<std::vector<int>>& preds, const std::vector<std::vector<int>>& golds) {
  if (preds.size() != golds.size()) {
    throw ValidationError("pmr: " + std::to_string(preds.size()) + " predictions for " +
                          std::to_string(golds.size()) + " gold orders");
  }
  if (preds.empty()) return 0.0;
  std::size_t exact = 0;
  for (std::size_t k = 0; k < preds.size(); ++k) exact += preds[k] == golds[k];
  return static_cast<double>(exact) / static_cast<double>(preds.size());
}

double accuracy(const std::vector<int>& pred, const std::vector<int>& gold) {
  check_same_length(pred, gold, "accuracy");
  if (pred.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t t = 0; t < pred.size(); ++t) hit += pred[t] == gold[t];
  return static_cast<double>(hit) / static_cast<double>(pred.size());
}

std::pair<bool, bool> head_tail(const std::vector<int>& pred, const std::vector<int>& gold) {
  check_same_length(pred, gold, "head_tail");
  if (pred.empty()) return {false, false};
  return {pred.front() == gold.front(), pred.back() == gold.back()};
}

PairwiseCounts pairwise_counts(const IrseGraph& g, const std::vector<int>& gold_positions) {
  if (gold_positions.size() != g.num_sentences()) {
    throw ValidationError("pairwise_accuracy: gold positions do not match the graph");
  }
  PairwiseCounts c;
  for (const SentencePair& p : g.ss_pairs()) {
    double w = g.weight(p.first, p.second);
    bool first_precedes = gold_positions[p.first] < gold_positions[p.second];
    if ((w > 0.5 && first_precedes) || (w < 0.5 && !first_precedes)) ++c.correct;
    ++c.total;
  }
  return c;
}

double pairwise_accuracy(const IrseGraph& g, const std::vector<int>& gold_positions) {
  return pairwise_counts(g, gold_positions).ratio();
}

std::vector<int> oracle_best_order(const GrnState& state, const DecoderParams& p) {
  const std::size_t n = state.sentences.rows();
  if (n > 7) throw SizeError("oracle_best_order: " + std::to_string(n) + " sentences exceed the limit of 7");
  std::vector<int> perm(n);
  for (std::size_t k = 0; k < n; ++k) perm[k] = static_cast<int>(k);
  std::vector<int> best;
  double best_lp = 0.0;
  // next_permutation visits orders lexicographically, so a strict > keeps
  // the smallest order among ties.
  do {
    double lp = sequence_log_prob(state, p, perm);
    if (best.empty() || lp > best_lp) {
      best = perm;
      best_lp = lp;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

nlohmann::json MetricReport::to_json(bool include_head_tail) const {
  nlohmann::json j = {{"tau", tau}, {"pmr", pmr}, {"acc", acc}, {"n_paragraphs", n_paragraphs}};
  if (include_head_tail) {
    j["head_acc"] = head_acc;
    j["tail_acc"] = tail_acc;
  }
  j["pairwise_acc"] = pairwise_acc ? nlohmann::json(*pairwise_acc) : nlohmann::json(nullptr);
  return j;
}

std::uint64_t presentation_seed(std::uint64_t order_seed, std::size_t index) { return mix_seed(order_seed, index); }

ParagraphPrediction predict_paragraph(const Model& model, const ParagraphRecord& record, std::uint64_t seed,
                                      const EvalOptions& opts) {
  ParagraphPrediction out;
  out.id = record.id;
  auto [g, presented] = build_graph(record, seed);
  out.gold_positions = presented;
  out.gold_order = gold_order(presented);
  out.refinement = model.refine(g, opts.refine, opts.refine_cfg);
  out.pairwise = pairwise_counts(g, out.gold_positions);
  if (opts.decode_orders) {
    DecodeResult d = model.order(g, opts.decode, opts.beam_width);
    out.predicted_order = std::move(d.order);
    out.steps = std::move(d.steps);
  }
  out.graph = std::move(g);
  return out;
}

std::vector<ParagraphPrediction> predict_corpus(const Model& model, const std::vector<ParagraphRecord>& records,
                                                const EvalOptions& opts) {
  std::vector<ParagraphPrediction> out(records.size());
  auto work = [&](std::size_t k) { out[k] = predict_paragraph(model, records[k], presentation_seed(opts.order_seed, k), opts); };
  const std::size_t jobs = std::max(1, opts.jobs);
  if (jobs == 1 || records.size() < 2) {
    for (std::size_t k = 0; k < records.size(); ++k) work(k);
    return out;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(jobs);
  for (std::size_t t = 0; t < jobs; ++t) {
    threads.emplace_back([&, t] {
      try {
        for (std::size_t k = t; k < records.size(); k += jobs) work(k);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

MetricReport summarize(const std::vector<ParagraphPrediction>& preds) {
  MetricReport r;
  r.n_paragraphs = preds.size();
  PairwiseCounts pw;
  std::size_t decoded = 0, exact = 0, heads = 0, tails = 0;
  double tau_sum = 0.0, acc_sum = 0.0;
  for (const auto& p : preds) {
    pw += p.pairwise;
    if (p.predicted_order.empty()) continue;
    ++decoded;
    tau_sum += kendall_tau(p.predicted_order, p.gold_order);
    acc_sum += accuracy(p.predicted_order, p.gold_order);
    exact += p.predicted_order == p.gold_order;
    auto [h, t] = head_tail(p.predicted_order, p.gold_order);
    heads += h;
    tails += t;
  }
  if (decoded) {
    const double n = static_cast<double>(decoded);
    r.tau = tau_sum / n;
    r.acc = acc_sum / n;
    r.pmr = static_cast<double>(exact) / n;
    r.head_acc = static_cast<double>(heads) / n;
    r.tail_acc = static_cast<double>(tails) / n;
  }
  if (pw.total) r.pairwise_acc = pw.ratio();
  return r;
}

MetricReport evaluate_model(const Model& model, const std::vector<ParagraphRecord>& records, const EvalOptions& opts) {
  return summarize(predict_corpus(model, records, opts));
}

}  // namespace irse
