#include "irse/layers.hpp"

namespace irse {

AffineParams AffineParams::create(ParamStore& store, const std::string& name, std::size_t in,
                                  std::size_t out) {
  return {&store.add(name + ".w", in, out), &store.add(name + ".b", 1, out)};
}

Var affine(Var x, const AffineParams& p) {
  Tape& t = x.tape();
  return affine(x, t.param(*p.weight), t.param(*p.bias));
}

GruParams GruParams::create(ParamStore& store, const std::string& name, std::size_t in,
                            std::size_t hidden) {
  return {&store.add(name + ".wx", in, 3 * hidden), &store.add(name + ".uzr", hidden, 2 * hidden),
          &store.add(name + ".uh", hidden, hidden), &store.add(name + ".b", 1, 3 * hidden)};
}

Var gru_cell(Var x, Var h_prev, const GruParams& p) {
  const std::size_t n = p.hidden();
  if (x.cols() != p.in() || h_prev.cols() != n || x.rows() != h_prev.rows()) {
    throw ShapeError("gru_cell: input " + x.value().shape_string() + " and state " +
                     h_prev.value().shape_string() + " do not match a GRU of " + std::to_string(p.in()) +
                     " -> " + std::to_string(n));
  }
  Tape& t = x.tape();
  Var xw = affine(x, t.param(*p.input_weight), t.param(*p.bias));
  Var hu = matmul(h_prev, t.param(*p.recurrent_zr));
  Var z = sigmoid(add(slice_cols(xw, 0, n), slice_cols(hu, 0, n)));
  Var r = sigmoid(add(slice_cols(xw, n, n), slice_cols(hu, n, n)));
  Var cand = tanh(add(slice_cols(xw, 2 * n, n), matmul(mul(r, h_prev), t.param(*p.recurrent_cand))));
  // (1 - z) * h + z * cand == h + z * (cand - h)
  return add(h_prev, mul(z, sub(cand, h_prev)));
}

LstmParams LstmParams::create(ParamStore& store, const std::string& name, std::size_t in,
                              std::size_t hidden) {
  return {&store.add(name + ".wx", in, 4 * hidden), &store.add(name + ".u", hidden, 4 * hidden),
          &store.add(name + ".b", 1, 4 * hidden)};
}

LstmState lstm_step_projected(Var x_proj, const LstmState& state, const LstmParams& p) {
  const std::size_t n = p.hidden();
  if (x_proj.cols() != 4 * n || state.h.cols() != n || state.c.cols() != n) {
    throw ShapeError("lstm_step: projected input " + x_proj.value().shape_string() + " and state " +
                     state.h.value().shape_string() + " do not match hidden size " + std::to_string(n));
  }
  Tape& t = x_proj.tape();
  Var pre = add(x_proj, matmul(state.h, t.param(*p.recurrent)));
  Var i = sigmoid(slice_cols(pre, 0, n));
  Var f = sigmoid(slice_cols(pre, n, n));
  Var o = sigmoid(slice_cols(pre, 2 * n, n));
  Var g = tanh(slice_cols(pre, 3 * n, n));
  Var c = add(mul(f, state.c), mul(i, g));
  Var h = mul(o, tanh(c));
  return {h, c};
}

LstmState lstm_step(Var x, const LstmState& state, const LstmParams& p) {
  if (x.cols() != p.in()) {
    throw ShapeError("lstm_step: input " + x.value().shape_string() + " for an LSTM with input size " +
                     std::to_string(p.in()));
  }
  Tape& t = x.tape();
  return lstm_step_projected(affine(x, t.param(*p.input_weight), t.param(*p.bias)), state, p);
}

}  // namespace irse
