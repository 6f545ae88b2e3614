#pragma once

#include <optional>
#include <string>
#include <vector>

#include "irse/autodiff.hpp"
#include "irse/dims.hpp"
#include "irse/grn.hpp"
#include "irse/layers.hpp"

namespace irse {

struct DecoderParams {
  LstmParams lstm;          // sentence -> decoder
  AffineParams init_state;  // global -> decoder
  Parameter* start = nullptr;  // 1 x sentence, input at step 1
  Parameter* w = nullptr;      // decoder x attention
  Parameter* u = nullptr;      // sentence x attention
  Parameter* q = nullptr;      // attention x 1

  static DecoderParams create(ParamStore& store, const std::string& prefix, const ModelDims& dims);
};

/// softmax(q^T tanh(W h + U k_i)) over the rows of `states`, visited rows
/// masked to exactly 0. Throws StateError when every row is visited.
Var pointer_step(Var h_d, Var states, const std::vector<bool>& visited, const DecoderParams& p);

enum class DecodeMode { kGreedy, kBeam };

std::string to_string(DecodeMode mode);
DecodeMode decode_mode_from_string(const std::string& s);  // throws ConfigError

struct DecodeResult {
  std::vector<int> order;
  std::vector<Tensor> steps;  // 1 x I distribution per step
  double log_prob = 0.0;      // summed log-probability of `order`
};

/// Greedy (ties -> lowest index) or beam search (summed log-probability,
/// ties -> lexicographically smaller order). With `teacher`, selections
/// follow it while distributions are recorded.
DecodeResult decode(const GrnState& state, const DecoderParams& p, DecodeMode mode, int width = 1,
                    const std::optional<std::vector<int>>& teacher = std::nullopt);

/// Teacher-forced step distributions as differentiable values, for the
/// pointer loss. Dropout on decoder inputs applies when rng is given.
std::vector<Var> teacher_forced_steps(const GrnState& state, const DecoderParams& p, const std::vector<int>& order,
                                      double dropout = 0.0, Rng* rng = nullptr);

/// Summed step log-probabilities of `order` under teacher forcing.
double sequence_log_prob(const GrnState& state, const DecoderParams& p, const std::vector<int>& order);

}  // namespace irse
