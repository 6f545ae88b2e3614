#pragma once

#include <deque>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "irse/random.hpp"
#include "irse/tensor.hpp"

namespace irse {

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Records forward operations in order so backward() can replay them in
/// reverse. Gradients land in Parameter::grad and accumulate across calls.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var param(Parameter& p);
  // A leaf that accumulates gradient on the tape itself (see grad()).
  Var input(Tensor value);

  const Tensor& value(std::size_t id) const;
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  Tensor& grad(std::size_t id);
  const Tensor& grad_of(Var v) const;
  bool recording() const { return recording_; }
  std::size_t size() const { return nodes_.size(); }

  // Used by op implementations.
  Var push(Tensor value, bool needs_grad, BackwardFn backward);

  void backward(Var loss);

 private:
  struct Node {
    Tensor value;
    Parameter* param = nullptr;
    Tensor grad;
    bool needs_grad = false;
    BackwardFn backward;
  };

  bool recording_;
  std::deque<Node> nodes_;
  std::unordered_map<Parameter*, std::size_t> param_ids_;
};

void backward(Var loss);

// --- primitive operations -------------------------------------------------

Var matmul(Var a, Var b);
/// x W + b, with b (1 x out) broadcast over the rows of x.
Var affine(Var x, Var w, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
/// Adds a 1 x n row to every row of a.
Var add_row(Var a, Var row);
/// Multiplies row r of a by the constant weights[r].
Var scale_rows(Var a, std::span<const double> weights);

enum class Activation { kSigmoid, kTanh, kSoftmax };
Var activation(Activation kind, Var x);
Var sigmoid(Var x);
Var tanh(Var x);
/// Row-wise softmax over the last dimension.
Var softmax(Var x);
/// Softmax of a 1 x n row where masked entries (mask[k] == true) get
/// probability exactly 0.
Var masked_softmax(Var x, const std::vector<bool>& masked);

Var concat_cols(std::span<const Var> parts);
Var concat_cols(std::initializer_list<Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
Var gather_rows(Var a, std::span<const int> index);
/// out[index[k]] += a[k]; out has n_rows rows.
Var scatter_add_rows(Var a, std::span<const int> index, std::size_t n_rows);
Var repeat_rows(Var row, std::size_t n);
/// Row r comes from a when take_a[r], otherwise from b.
Var select_rows(Var a, Var b, const std::vector<bool>& take_a);
Var transpose(Var a);
Var mean_rows(Var a);
Var sum_all(Var a);
Var pick(Var a, std::size_t r, std::size_t c);
/// -log(max(p, floor)) for the single entry (r, c); increments the clamp
/// counter when the floor is active.
Var neg_log_pick(Var a, std::size_t r, std::size_t c, double floor = 1e-12);
/// Mean binary cross-entropy of probabilities against 0/1 labels.
Var binary_cross_entropy(Var probs, std::span<const double> labels, double clamp = 1e-12);
/// Inverted dropout; identity when rate == 0.
Var dropout(Var a, double rate, Rng& rng);

std::size_t clamp_warning_count();
void reset_clamp_warning_count();

// --- gradient checking ----------------------------------------------------

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t coordinates = 0;
};

/// Central finite differences against reverse-mode gradients. The relative
/// error denominator is max(|analytic|, |numeric|, 1e-8).
GradCheckResult grad_check(const std::function<Var(Tape&)>& loss_fn,
                           std::span<Parameter* const> params, double eps = 1e-5);

}  // namespace irse
