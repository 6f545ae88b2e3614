#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "irse/decode.hpp"
#include "irse/graph.hpp"
#include "irse/model.hpp"
#include "irse/refine.hpp"

namespace irse {

/// Pairs ordered differently in pred and gold (both permutations of the same
/// items). Throws ValidationError on length or content mismatch.
std::size_t count_inversions(const std::vector<int>& pred, const std::vector<int>& gold);
/// 1 - 2 * inversions / C(I, 2); 1 when I < 2.
double kendall_tau(const std::vector<int>& pred, const std::vector<int>& gold);
double pmr(const std::vector<std::vector<int>>& preds, const std::vector<std::vector<int>>& golds);
double accuracy(const std::vector<int>& pred, const std::vector<int>& gold);
std::pair<bool, bool> head_tail(const std::vector<int>& pred, const std::vector<int>& gold);

struct PairwiseCounts {
  std::size_t correct = 0;
  std::size_t total = 0;

  double ratio() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
  PairwiseCounts& operator+=(const PairwiseCounts& o) {
    correct += o.correct;
    total += o.total;
    return *this;
  }
};

/// A pair counts as correct when w(i, i') > 0.5 agrees with gold precedence;
/// pairs at exactly 0.5 count as incorrect.
PairwiseCounts pairwise_counts(const IrseGraph& g, const std::vector<int>& gold_positions);
double pairwise_accuracy(const IrseGraph& g, const std::vector<int>& gold_positions);

/// Exhaustive search over all I! orders by summed teacher-forced
/// log-probability; ties go to the lexicographically smallest order.
/// Throws SizeError when I > 7.
std::vector<int> oracle_best_order(const GrnState& state, const DecoderParams& p);

struct MetricReport {
  double tau = 0.0;
  double pmr = 0.0;
  double acc = 0.0;
  double head_acc = 0.0;
  double tail_acc = 0.0;
  std::optional<double> pairwise_acc;
  std::size_t n_paragraphs = 0;

  nlohmann::json to_json(bool include_head_tail = true) const;
  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

struct EvalOptions {
  RefineMode refine = RefineMode::kFull;
  RefineConfig refine_cfg;
  DecodeMode decode = DecodeMode::kGreedy;
  int beam_width = 4;
  std::uint64_t order_seed = 0;  // paragraph k is presented with mix_seed(order_seed, k)
  bool decode_orders = true;     // false: refinement and pairwise accuracy only
  int jobs = 1;
};

struct ParagraphPrediction {
  std::string id;
  std::vector<int> gold_positions;   // gold index of each presented sentence
  std::vector<int> gold_order;       // presented indices in gold order
  std::vector<int> predicted_order;  // presented indices, empty when not decoded
  std::vector<Tensor> steps;
  RefineResult refinement;
  PairwiseCounts pairwise;
  IrseGraph graph;                   // after refinement
};

std::uint64_t presentation_seed(std::uint64_t order_seed, std::size_t index);

ParagraphPrediction predict_paragraph(const Model& model, const ParagraphRecord& record, std::uint64_t seed,
                                      const EvalOptions& opts);
/// Output order matches the input regardless of `jobs`.
std::vector<ParagraphPrediction> predict_corpus(const Model& model, const std::vector<ParagraphRecord>& records,
                                                const EvalOptions& opts);
MetricReport summarize(const std::vector<ParagraphPrediction>& preds);
MetricReport evaluate_model(const Model& model, const std::vector<ParagraphRecord>& records, const EvalOptions& opts);

}  // namespace irse
