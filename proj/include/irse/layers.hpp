#pragma once

#include <string>

#include "irse/autodiff.hpp"

namespace irse {

struct AffineParams {
  Parameter* weight = nullptr;  // in x out
  Parameter* bias = nullptr;    // 1 x out

  static AffineParams create(ParamStore& store, const std::string& name, std::size_t in, std::size_t out);
  std::size_t in() const { return weight->value.rows(); }
  std::size_t out() const { return weight->value.cols(); }
};

Var affine(Var x, const AffineParams& p);

/// Gate order in the packed matrices: update z, reset r, candidate.
struct GruParams {
  Parameter* input_weight = nullptr;     // in x 3h
  Parameter* recurrent_zr = nullptr;     // h x 2h
  Parameter* recurrent_cand = nullptr;   // h x h
  Parameter* bias = nullptr;             // 1 x 3h

  static GruParams create(ParamStore& store, const std::string& name, std::size_t in, std::size_t hidden);
  std::size_t in() const { return input_weight->value.rows(); }
  std::size_t hidden() const { return recurrent_cand->value.rows(); }
};

/// Standard GRU on every row of x / h_prev:
///   z = sigmoid(x W_z + h U_z + b_z), r = sigmoid(x W_r + h U_r + b_r)
///   cand = tanh(x W_h + (r * h) U_h + b_h), h' = (1 - z) * h + z * cand
Var gru_cell(Var x, Var h_prev, const GruParams& p);

/// Gate order in the packed matrices: input i, forget f, output o, candidate g.
struct LstmParams {
  Parameter* input_weight = nullptr;  // in x 4h
  Parameter* recurrent = nullptr;     // h x 4h
  Parameter* bias = nullptr;          // 1 x 4h

  static LstmParams create(ParamStore& store, const std::string& name, std::size_t in, std::size_t hidden);
  std::size_t in() const { return input_weight->value.rows(); }
  std::size_t hidden() const { return recurrent->value.rows(); }
};

struct LstmState {
  Var h;
  Var c;
};

LstmState lstm_step(Var x, const LstmState& state, const LstmParams& p);
/// Same step when x W_x + b has already been computed (used when a whole
/// sequence's input projections are batched).
LstmState lstm_step_projected(Var x_proj, const LstmState& state, const LstmParams& p);

}  // namespace irse
