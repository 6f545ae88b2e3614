#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "irse/eval.hpp"
#include "irse/graph.hpp"
#include "irse/model.hpp"
#include "irse/refine.hpp"

namespace irse {

struct TrainConfig {
  int epochs_a = 6;
  int epochs_b = 6;
  int epochs_c = 12;
  int batch_size = 16;
  double dropout = 0.5;
  double l2 = 1e-5;
  double eta = 0.2;
  double learning_rate = 1.0;
  double rho = 0.95;
  double epsilon = 1e-6;
  int patience = 3;
  // Fraction of pairs reset to 0.5 per phase-B example, drawn uniformly.
  double reset_min = 0.2;
  double reset_max = 0.6;
  // Phases B and C then train only their classifier / decoder heads.
  bool freeze_encoder = false;
  std::uint64_t seed = 1;

  void validate() const;  // throws ConfigError
};

/// -sum_t log P(gold_t at step t), each probability floored at 1e-12.
double loss_pointer(const std::vector<Tensor>& steps, const std::vector<int>& gold_order);
Var loss_pointer(const std::vector<Var>& steps, const std::vector<int>& gold_order);

/// Binary cross-entropy with p clamped to [1e-12, 1 - 1e-12].
double loss_pairwise(double p, double label);
Var loss_pairwise(Var probs, std::span<const double> labels);

/// Adds l2 * theta to each gradient, applies one Adadelta update, and zeroes
/// the gradients.
void adadelta_step(std::span<Parameter* const> params, const TrainConfig& cfg);

struct EpochLog {
  std::string phase;
  int epoch = 0;
  double train_loss = 0.0;
  double val_metric = 0.0;
  double seconds = 0.0;
};

struct TrainHooks {
  std::function<void(const EpochLog&)> on_epoch;
  std::function<void(const std::string& phase, const Model&)> on_phase_end;
};

/// Phase A: initial tower + initial classifier on fresh graphs.
std::vector<EpochLog> train_phase_a(Model& model, const std::vector<ParagraphRecord>& train,
                                    const std::vector<ParagraphRecord>& val, const TrainConfig& cfg,
                                    const RefineConfig& refine, const TrainHooks& hooks = {});
/// Phase B: iterative tower (initialized from the initial tower) + iterative
/// classifier on gold-weighted, noised, partially reset graphs.
std::vector<EpochLog> train_phase_b(Model& model, const std::vector<ParagraphRecord>& train,
                                    const std::vector<ParagraphRecord>& val, const TrainConfig& cfg,
                                    const RefineConfig& refine, const TrainHooks& hooks = {});
/// Phase C: ordering tower (initialized from the iterative tower) + decoder
/// on graphs refined with the frozen classifiers under `mode`.
std::vector<EpochLog> train_phase_c(Model& model, const std::vector<ParagraphRecord>& train,
                                    const std::vector<ParagraphRecord>& val, const TrainConfig& cfg,
                                    const RefineConfig& refine, RefineMode mode, const TrainHooks& hooks = {});

struct PipelineOptions {
  RefineMode mode = RefineMode::kFull;
  bool skip_phase_a = false;  // the model already holds phase-A weights
};

std::vector<EpochLog> train_pipeline(Model& model, const std::vector<ParagraphRecord>& train,
                                     const std::vector<ParagraphRecord>& val, const TrainConfig& cfg,
                                     const RefineConfig& refine, const PipelineOptions& opts = {},
                                     const TrainHooks& hooks = {});

}  // namespace irse
