#include "irse/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <atomic>
#include <cmath>

namespace irse {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

ConstMap cmap(const Tensor& t) {
  return ConstMap(t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}
MutMap mmap(Tensor& t) {
  return MutMap(t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}

std::atomic<std::size_t> g_clamp_warnings{0};

bool any_needs(Tape& t, std::initializer_list<Var> vs) {
  if (!t.recording()) return false;
  for (const Var& v : vs) {
    if (t.needs_grad(v.id())) return true;
  }
  return false;
}

[[noreturn]] void shape_fail(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_string() + " and " +
                   b.shape_string());
}

void check_same(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) shape_fail(op, a, b);
}

void check_finite(const char* op, const Tensor& x) {
  if (!x.all_finite()) throw NumericError(std::string(op) + ": non-finite input");
}

}  // namespace

const Tensor& Var::value() const { return tape_->value(id_); }

Var Tape::constant(Tensor value) { return push(std::move(value), false, nullptr); }

Var Tape::input(Tensor value) {
  nodes_.push_back(Node{std::move(value), nullptr, {}, recording_, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& p) {
  auto it = param_ids_.find(&p);
  if (it != param_ids_.end()) return Var(this, it->second);
  nodes_.push_back(Node{Tensor{}, &p, {}, recording_, nullptr});
  std::size_t id = nodes_.size() - 1;
  param_ids_[&p] = id;
  return Var(this, id);
}

const Tensor& Tape::value(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.param ? n.param->value : n.value;
}

Tensor& Tape::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) {
    const Tensor& v = value(id);
    n.grad = Tensor(v.rows(), v.cols());
  }
  return n.grad;
}

const Tensor& Tape::grad_of(Var v) const { return nodes_[v.id()].grad; }

Var Tape::push(Tensor value, bool needs_grad, BackwardFn backward) {
  bool keep = recording_ && needs_grad;
  nodes_.push_back(Node{std::move(value), nullptr, {}, keep, keep ? std::move(backward) : nullptr});
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var loss) {
  const Tensor& lv = value(loss.id());
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ShapeError("backward: loss must be a 1x1 scalar, got " + lv.shape_string());
  }
  if (!nodes_[loss.id()].needs_grad) return;
  grad(loss.id())[0] += 1.0;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.grad.empty() || !n.needs_grad) continue;
    if (n.param) {
      mmap(n.param->grad) += cmap(n.grad);
    } else if (n.backward) {
      n.backward(*this, id);
    }
  }
}

void backward(Var loss) { loss.tape().backward(loss); }

// ---------------------------------------------------------------------------

Var matmul(Var a, Var b) {
  Tape& t = a.tape();
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) shape_fail("matmul", av, bv);
  Tensor out(av.rows(), bv.cols());
  mmap(out).noalias() = cmap(av) * cmap(bv);
  std::size_t ia = a.id(), ib = b.id();
  return t.push(std::move(out), any_needs(t, {a, b}), [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.needs_grad(ia)) mmap(t.grad(ia)).noalias() += cmap(g) * cmap(t.value(ib)).transpose();
    if (t.needs_grad(ib)) mmap(t.grad(ib)).noalias() += cmap(t.value(ia)).transpose() * cmap(g);
  });
}

Var affine(Var x, Var w, Var b) {
  Tape& t = x.tape();
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  const Tensor& bv = b.value();
  if (xv.cols() != wv.rows()) shape_fail("affine", xv, wv);
  if (bv.rows() != 1 || bv.cols() != wv.cols()) shape_fail("affine bias", wv, bv);
  Tensor out(xv.rows(), wv.cols());
  auto o = mmap(out);
  o.noalias() = cmap(xv) * cmap(wv);
  o.rowwise() += cmap(bv).row(0);
  std::size_t ix = x.id(), iw = w.id(), ib = b.id();
  return t.push(std::move(out), any_needs(t, {x, w, b}), [ix, iw, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.needs_grad(ix)) mmap(t.grad(ix)).noalias() += cmap(g) * cmap(t.value(iw)).transpose();
    if (t.needs_grad(iw)) mmap(t.grad(iw)).noalias() += cmap(t.value(ix)).transpose() * cmap(g);
    if (t.needs_grad(ib)) mmap(t.grad(ib)) += cmap(g).colwise().sum();
  });
}

Var add(Var a, Var b) {
  Tape& t = a.tape();
  check_same("add", a.value(), b.value());
  Tensor out = a.value();
  mmap(out) += cmap(b.value());
  std::size_t ia = a.id(), ib = b.id();
  return t.push(std::move(out), any_needs(t, {a, b}), [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.needs_grad(ia)) mmap(t.grad(ia)) += cmap(g);
    if (t.needs_grad(ib)) mmap(t.grad(ib)) += cmap(g);
  });
}

Var sub(Var a, Var b) {
  Tape& t = a.tape();
  check_same("sub", a.value(), b.value());
  Tensor out = a.value();
  mmap(out) -= cmap(b.value());
  std::size_t ia = a.id(), ib = b.id();
  return t.push(std::move(out), any_needs(t, {a, b}), [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.needs_grad(ia)) mmap(t.grad(ia)) += cmap(g);
    if (t.needs_grad(ib)) mmap(t.grad(ib)) -= cmap(g);
  });
}

Var mul(Var a, Var b) {
  Tape& t = a.tape();
  check_same("mul", a.value(), b.value());
  Tensor out = a.value();
  mmap(out).array() *= cmap(b.value()).array();
  std::size_t ia = a.id(), ib = b.id();
  return t.push(std::move(out), any_needs(t, {a, b}), [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.needs_grad(ia)) mmap(t.grad(ia)).array() += cmap(g).array() * cmap(t.value(ib)).array();
    if (t.needs_grad(ib)) mmap(t.grad(ib)).array() += cmap(g).array() * cmap(t.value(ia)).array();
  });
}

Var scale(Var a, double s) {
  Tape& t = a.tape();
  Tensor out = a.value();
  mmap(out) *= s;
  std::size_t ia = a.id();
  return t.push(std::move(out), any_needs(t, {a}), [ia, s](Tape& t, std::size_t self) {
    mmap(t.grad(ia)) += s * cmap(t.grad(self));
  });
}

Var add_row(Var a, Var row) {
  Tape& t = a.tape();
  const Tensor& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != a.cols()) shape_fail("add_row", a.value(), rv);
  Tensor out = a.value();
  mmap(out).rowwise() += cmap(rv).row(0);
  std::size_t ia = a.id(), ir = row.id();
  return t.push(std::move(out), any_needs(t, {a, row}), [ia, ir](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.needs_grad(ia)) mmap(t.grad(ia)) += cmap(g);
    if (t.needs_grad(ir)) mmap(t.grad(ir)) += cmap(g).colwise().sum();
  });
}

Var scale_rows(Var a, std::span<const double> weights) {
  Tape& t = a.tape();
  const Tensor& av = a.value();
  if (weights.size() != av.rows()) {
    throw ShapeError("scale_rows: " + std::to_string(weights.size()) + " weights for " +
                     av.shape_string());
  }
  Tensor out = av;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) *= weights[r];
  }
  std::size_t ia = a.id();
  std::vector<double> w(weights.begin(), weights.end());
  return t.push(std::move(out), any_needs(t, {a}), [ia, w = std::move(w)](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(ia);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t c = 0; c < g.cols(); ++c) ga(r, c) += g(r, c) * w[r];
    }
  });
}

Var sigmoid(Var x) {
  Tape& t = x.tape();
  check_finite("sigmoid", x.value());
  Tensor out = x.value();
  for (double& v : out.values()) v = 1.0 / (1.0 + std::exp(-v));
  std::size_t ix = x.id();
  return t.push(std::move(out), any_needs(t, {x}), [ix](Tape& t, std::size_t self) {
    const Tensor& y = t.value(self);
    mmap(t.grad(ix)).array() += cmap(t.grad(self)).array() * cmap(y).array() * (1.0 - cmap(y).array());
  });
}

Var tanh(Var x) {
  Tape& t = x.tape();
  check_finite("tanh", x.value());
  Tensor out = x.value();
  for (double& v : out.values()) v = std::tanh(v);
  std::size_t ix = x.id();
  return t.push(std::move(out), any_needs(t, {x}), [ix](Tape& t, std::size_t self) {
    const Tensor& y = t.value(self);
    mmap(t.grad(ix)).array() += cmap(t.grad(self)).array() * (1.0 - cmap(y).array().square());
  });
}

namespace {

void softmax_row(const double* in, double* out, std::size_t n, const std::vector<bool>* masked) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    if (masked && (*masked)[k]) continue;
    mx = std::max(mx, in[k]);
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (masked && (*masked)[k]) {
      out[k] = 0.0;
    } else {
      out[k] = std::exp(in[k] - mx);
      sum += out[k];
    }
  }
  for (std::size_t k = 0; k < n; ++k) out[k] /= sum;
}

void softmax_backward(Tape& t, std::size_t ix, std::size_t self) {
  const Tensor& y = t.value(self);
  const Tensor& g = t.grad(self);
  Tensor& gx = t.grad(ix);
  for (std::size_t r = 0; r < y.rows(); ++r) {
    double dot = 0.0;
    for (std::size_t c = 0; c < y.cols(); ++c) dot += y(r, c) * g(r, c);
    for (std::size_t c = 0; c < y.cols(); ++c) gx(r, c) += y(r, c) * (g(r, c) - dot);
  }
}

}  // namespace

Var softmax(Var x) {
  Tape& t = x.tape();
  check_finite("softmax", x.value());
  const Tensor& xv = x.value();
  Tensor out(xv.rows(), xv.cols());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    softmax_row(xv.data() + r * xv.cols(), out.data() + r * xv.cols(), xv.cols(), nullptr);
  }
  std::size_t ix = x.id();
  return t.push(std::move(out), any_needs(t, {x}),
                [ix](Tape& t, std::size_t self) { softmax_backward(t, ix, self); });
}

Var masked_softmax(Var x, const std::vector<bool>& masked) {
  Tape& t = x.tape();
  const Tensor& xv = x.value();
  if (xv.rows() != 1 || masked.size() != xv.cols()) {
    throw ShapeError("masked_softmax: mask of " + std::to_string(masked.size()) + " for " +
                     xv.shape_string());
  }
  if (std::all_of(masked.begin(), masked.end(), [](bool m) { return m; })) {
    throw StateError("masked_softmax: every entry is masked");
  }
  check_finite("masked_softmax", xv);
  Tensor out(1, xv.cols());
  softmax_row(xv.data(), out.data(), xv.cols(), &masked);
  std::size_t ix = x.id();
  return t.push(std::move(out), any_needs(t, {x}),
                [ix](Tape& t, std::size_t self) { softmax_backward(t, ix, self); });
}

Var activation(Activation kind, Var x) {
  switch (kind) {
    case Activation::kSigmoid:
      return sigmoid(x);
    case Activation::kTanh:
      return tanh(x);
    case Activation::kSoftmax:
      return softmax(x);
  }
  throw ConfigError("unknown activation");
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  Tape& t = parts[0].tape();
  std::size_t rows = parts[0].rows(), cols = 0;
  bool needs = false;
  for (const Var& p : parts) {
    if (p.rows() != rows) shape_fail("concat_cols", parts[0].value(), p.value());
    cols += p.cols();
    needs = needs || (t.recording() && t.needs_grad(p.id()));
  }
  Tensor out(rows, cols);
  std::vector<std::size_t> ids, offsets;
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(v.data() + r * v.cols(), v.data() + (r + 1) * v.cols(), out.data() + r * cols + off);
    }
    ids.push_back(p.id());
    offsets.push_back(off);
    off += v.cols();
  }
  return t.push(std::move(out), needs, [ids, offsets](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!t.needs_grad(ids[k])) continue;
      Tensor& gk = t.grad(ids[k]);
      for (std::size_t r = 0; r < gk.rows(); ++r) {
        for (std::size_t c = 0; c < gk.cols(); ++c) gk(r, c) += g(r, offsets[k] + c);
      }
    }
  });
}

Var concat_cols(std::initializer_list<Var> parts) {
  return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  Tape& t = parts[0].tape();
  std::size_t cols = parts[0].cols(), rows = 0;
  bool needs = false;
  for (const Var& p : parts) {
    if (p.cols() != cols) shape_fail("concat_rows", parts[0].value(), p.value());
    rows += p.rows();
    needs = needs || (t.recording() && t.needs_grad(p.id()));
  }
  Tensor out(rows, cols);
  std::vector<std::size_t> ids, offsets;
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    std::copy(v.data(), v.data() + v.size(), out.data() + off * cols);
    ids.push_back(p.id());
    offsets.push_back(off);
    off += v.rows();
  }
  return t.push(std::move(out), needs, [ids, offsets](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!t.needs_grad(ids[k])) continue;
      Tensor& gk = t.grad(ids[k]);
      const double* src = g.data() + offsets[k] * g.cols();
      for (std::size_t i = 0; i < gk.size(); ++i) gk[i] += src[i];
    }
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  Tape& t = a.tape();
  const Tensor& av = a.value();
  if (begin + count > av.cols()) {
    throw ShapeError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") out of " + av.shape_string());
  }
  Tensor out(av.rows(), count);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    for (std::size_t c = 0; c < count; ++c) out(r, c) = av(r, begin + c);
  }
  std::size_t ia = a.id();
  return t.push(std::move(out), any_needs(t, {a}), [ia, begin](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(ia);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t c = 0; c < g.cols(); ++c) ga(r, begin + c) += g(r, c);
    }
  });
}

Var gather_rows(Var a, std::span<const int> index) {
  Tape& t = a.tape();
  const Tensor& av = a.value();
  Tensor out(index.size(), av.cols());
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] < 0 || static_cast<std::size_t>(index[k]) >= av.rows()) {
      throw ShapeError("gather_rows: row " + std::to_string(index[k]) + " out of " + av.shape_string());
    }
    std::copy(av.data() + index[k] * av.cols(), av.data() + (index[k] + 1) * av.cols(),
              out.data() + k * av.cols());
  }
  std::size_t ia = a.id();
  std::vector<int> idx(index.begin(), index.end());
  return t.push(std::move(out), any_needs(t, {a}), [ia, idx = std::move(idx)](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(ia);
    std::size_t cols = g.cols();
    for (std::size_t k = 0; k < idx.size(); ++k) {
      for (std::size_t c = 0; c < cols; ++c) ga(idx[k], c) += g(k, c);
    }
  });
}

Var scatter_add_rows(Var a, std::span<const int> index, std::size_t n_rows) {
  Tape& t = a.tape();
  const Tensor& av = a.value();
  if (index.size() != av.rows()) {
    throw ShapeError("scatter_add_rows: " + std::to_string(index.size()) + " indices for " +
                     av.shape_string());
  }
  Tensor out(n_rows, av.cols());
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] < 0 || static_cast<std::size_t>(index[k]) >= n_rows) {
      throw ShapeError("scatter_add_rows: target row " + std::to_string(index[k]) + " out of " +
                       std::to_string(n_rows));
    }
    for (std::size_t c = 0; c < av.cols(); ++c) out(index[k], c) += av(k, c);
  }
  std::size_t ia = a.id();
  std::vector<int> idx(index.begin(), index.end());
  return t.push(std::move(out), any_needs(t, {a}), [ia, idx = std::move(idx)](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(ia);
    std::size_t cols = g.cols();
    for (std::size_t k = 0; k < idx.size(); ++k) {
      for (std::size_t c = 0; c < cols; ++c) ga(k, c) += g(idx[k], c);
    }
  });
}

Var repeat_rows(Var row, std::size_t n) {
  Tape& t = row.tape();
  const Tensor& rv = row.value();
  if (rv.rows() != 1) throw ShapeError("repeat_rows: expected a row, got " + rv.shape_string());
  Tensor out(n, rv.cols());
  for (std::size_t r = 0; r < n; ++r) std::copy(rv.data(), rv.data() + rv.cols(), out.data() + r * rv.cols());
  std::size_t ir = row.id();
  return t.push(std::move(out), any_needs(t, {row}), [ir](Tape& t, std::size_t self) {
    mmap(t.grad(ir)) += cmap(t.grad(self)).colwise().sum();
  });
}

Var select_rows(Var a, Var b, const std::vector<bool>& take_a) {
  Tape& t = a.tape();
  check_same("select_rows", a.value(), b.value());
  if (take_a.size() != a.rows()) {
    throw ShapeError("select_rows: mask of " + std::to_string(take_a.size()) + " for " +
                     a.value().shape_string());
  }
  Tensor out = b.value();
  const Tensor& av = a.value();
  for (std::size_t r = 0; r < out.rows(); ++r) {
    if (take_a[r]) std::copy(av.data() + r * av.cols(), av.data() + (r + 1) * av.cols(), out.data() + r * av.cols());
  }
  std::size_t ia = a.id(), ib = b.id();
  return t.push(std::move(out), any_needs(t, {a, b}), [ia, ib, take_a](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      std::size_t target = take_a[r] ? ia : ib;
      if (!t.needs_grad(target)) continue;
      Tensor& gt = t.grad(target);
      for (std::size_t c = 0; c < g.cols(); ++c) gt(r, c) += g(r, c);
    }
  });
}

Var transpose(Var a) {
  Tape& t = a.tape();
  const Tensor& av = a.value();
  Tensor out(av.cols(), av.rows());
  mmap(out) = cmap(av).transpose();
  std::size_t ia = a.id();
  return t.push(std::move(out), any_needs(t, {a}), [ia](Tape& t, std::size_t self) {
    mmap(t.grad(ia)) += cmap(t.grad(self)).transpose();
  });
}

Var mean_rows(Var a) {
  Tape& t = a.tape();
  const Tensor& av = a.value();
  if (av.rows() == 0) throw ShapeError("mean_rows: no rows");
  Tensor out(1, av.cols());
  mmap(out) = cmap(av).colwise().mean();
  std::size_t ia = a.id();
  double inv = 1.0 / static_cast<double>(av.rows());
  return t.push(std::move(out), any_needs(t, {a}), [ia, inv](Tape& t, std::size_t self) {
    mmap(t.grad(ia)).rowwise() += inv * cmap(t.grad(self)).row(0);
  });
}

Var sum_all(Var a) {
  Tape& t = a.tape();
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  std::size_t ia = a.id();
  return t.push(Tensor::scalar(s), any_needs(t, {a}), [ia](Tape& t, std::size_t self) {
    double g = t.grad(self)[0];
    for (double& v : t.grad(ia).values()) v += g;
  });
}

Var pick(Var a, std::size_t r, std::size_t c) {
  Tape& t = a.tape();
  const Tensor& av = a.value();
  if (r >= av.rows() || c >= av.cols()) {
    throw ShapeError("pick: (" + std::to_string(r) + "," + std::to_string(c) + ") out of " + av.shape_string());
  }
  std::size_t ia = a.id();
  return t.push(Tensor::scalar(av(r, c)), any_needs(t, {a}), [ia, r, c](Tape& t, std::size_t self) {
    t.grad(ia)(r, c) += t.grad(self)[0];
  });
}

Var neg_log_pick(Var a, std::size_t r, std::size_t c, double floor) {
  Tape& t = a.tape();
  const Tensor& av = a.value();
  if (r >= av.rows() || c >= av.cols()) {
    throw ShapeError("neg_log_pick: (" + std::to_string(r) + "," + std::to_string(c) + ") out of " +
                     av.shape_string());
  }
  double p = av(r, c);
  bool clamped = !(p > floor);
  if (clamped) ++g_clamp_warnings;
  double val = -std::log(clamped ? floor : p);
  std::size_t ia = a.id();
  return t.push(Tensor::scalar(val), any_needs(t, {a}), [ia, r, c, p, clamped](Tape& t, std::size_t self) {
    if (!clamped) t.grad(ia)(r, c) += -t.grad(self)[0] / p;
  });
}

Var binary_cross_entropy(Var probs, std::span<const double> labels, double clamp) {
  Tape& t = probs.tape();
  const Tensor& pv = probs.value();
  if (labels.size() != pv.size() || pv.size() == 0) {
    throw ShapeError("binary_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                     pv.shape_string());
  }
  double n = static_cast<double>(pv.size());
  double loss = 0.0;
  for (std::size_t k = 0; k < pv.size(); ++k) {
    double p = std::clamp(pv[k], clamp, 1.0 - clamp);
    loss -= labels[k] * std::log(p) + (1.0 - labels[k]) * std::log(1.0 - p);
  }
  std::size_t ip = probs.id();
  std::vector<double> y(labels.begin(), labels.end());
  return t.push(Tensor::scalar(loss / n), any_needs(t, {probs}),
                [ip, y = std::move(y), n, clamp](Tape& t, std::size_t self) {
                  double g = t.grad(self)[0] / n;
                  const Tensor& pv = t.value(ip);
                  Tensor& gp = t.grad(ip);
                  for (std::size_t k = 0; k < pv.size(); ++k) {
                    double p = pv[k];
                    if (p <= clamp || p >= 1.0 - clamp) continue;
                    gp[k] += g * (-y[k] / p + (1.0 - y[k]) / (1.0 - p));
                  }
                });
}

Var dropout(Var a, double rate, Rng& rng) {
  if (rate <= 0.0) return a;
  if (rate >= 1.0) throw ConfigError("dropout rate must be < 1");
  Tape& t = a.tape();
  const Tensor& av = a.value();
  Tensor mask(av.rows(), av.cols());
  double keep = 1.0 - rate;
  for (double& m : mask.values()) m = bernoulli(rng, keep) ? 1.0 / keep : 0.0;
  return mul(a, t.constant(std::move(mask)));
}

std::size_t clamp_warning_count() { return g_clamp_warnings.load(); }
void reset_clamp_warning_count() { g_clamp_warnings = 0; }

// ---------------------------------------------------------------------------

GradCheckResult grad_check(const std::function<Var(Tape&)>& loss_fn,
                           std::span<Parameter* const> params, double eps) {
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    Var loss = loss_fn(tape);
    tape.backward(loss);
  }
  auto evaluate = [&]() {
    Tape tape(false);
    return loss_fn(tape).value().item();
  };

  GradCheckResult result;
  for (Parameter* p : params) {
    for (std::size_t k = 0; k < p->value.size(); ++k) {
      double orig = p->value[k];
      p->value[k] = orig + eps;
      double up = evaluate();
      p->value[k] = orig - eps;
      double down = evaluate();
      p->value[k] = orig;
      double numeric = (up - down) / (2.0 * eps);
      double analytic = p->grad[k];
      double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      double rel = std::abs(analytic - numeric) / denom;
      ++result.coordinates;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_param = p->name;
        result.worst_index = k;
      }
    }
  }
  return result;
}

}  // namespace irse
