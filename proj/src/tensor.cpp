#include "irse/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "irse/random.hpp"

namespace irse {

ParseError::ParseError(std::size_t line, std::string field, const std::string& what)
    : Error("line " + std::to_string(line) + ": field '" + field + "': " + what),
      line_(line),
      field_(std::move(field)) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw ShapeError("tensor " + shape_string() + " given " + std::to_string(values_.size()) +
                     " values");
  }
}

Tensor Tensor::row(std::vector<double> values) {
  std::size_t n = values.size();
  return Tensor(1, n, std::move(values));
}

std::string Tensor::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

double Tensor::item() const {
  if (values_.size() != 1) throw ShapeError("item() on non-scalar tensor " + shape_string());
  return values_[0];
}

std::vector<double> Tensor::row_values(std::size_t r) const {
  return {values_.begin() + static_cast<std::ptrdiff_t>(r * cols_),
          values_.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols_)};
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Parameter::Parameter(std::string n, std::size_t rows, std::size_t cols)
    : name(std::move(n)),
      value(rows, cols),
      grad(rows, cols),
      sq_grad_avg(rows, cols),
      sq_update_avg(rows, cols) {}

void Parameter::reset_optimizer_state() {
  sq_grad_avg.fill(0.0);
  sq_update_avg.fill(0.0);
}

Parameter& ParamStore::add(const std::string& name, std::size_t rows, std::size_t cols) {
  if (by_name_.count(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  params_.push_back(std::make_unique<Parameter>(name, rows, cols));
  by_name_[name] = params_.back().get();
  return *params_.back();
}

Parameter& ParamStore::get(const std::string& name) {
  auto* p = find(name);
  if (!p) throw ConfigError("unknown parameter '" + name + "'");
  return *p;
}

const Parameter& ParamStore::get(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw ConfigError("unknown parameter '" + name + "'");
  return *it->second;
}

Parameter* ParamStore::find(const std::string& name) {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

std::vector<Parameter*> ParamStore::all() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParamStore::all() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<Parameter*> ParamStore::with_prefix(const std::string& prefix) {
  std::vector<Parameter*> out;
  for (auto& p : params_) {
    if (p->name.compare(0, prefix.size(), prefix) == 0) out.push_back(p.get());
  }
  return out;
}

void ParamStore::init_uniform(unsigned long long seed, double scale) {
  Rng rng(seed);
  for (auto& p : params_) {
    for (double& v : p->value.values()) v = uniform(rng, -scale, scale);
  }
}

void ParamStore::zero_grads() {
  for (auto& p : params_) p->zero_grad();
}

void ParamStore::zero_values() {
  for (auto& p : params_) p->value.fill(0.0);
}

std::size_t ParamStore::num_scalars() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void copy_prefix(ParamStore& store, const std::string& from_prefix, const std::string& to_prefix) {
  for (Parameter* src : store.with_prefix(from_prefix)) {
    std::string target = to_prefix + src->name.substr(from_prefix.size());
    Parameter& dst = store.get(target);
    if (!dst.value.same_shape(src->value)) {
      throw ShapeError("cannot copy " + src->name + " (" + src->value.shape_string() + ") into " +
                       target + " (" + dst.value.shape_string() + ")");
    }
    dst.value = src->value;
    dst.reset_optimizer_state();
  }
}

// ---------------------------------------------------------------------------

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

std::size_t uniform_index(Rng& rng, std::size_t n) {
  if (n <= 1) return 0;
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % n);
}

bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

std::vector<int> random_permutation(Rng& rng, std::size_t n) {
  std::vector<int> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<int>(i);
  shuffle_in_place(perm, rng);
  return perm;
}

std::vector<int> seeded_permutation(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  return random_permutation(rng, n);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a ^ ((b << 32) | (b >> 32)) ^ 0x9e3779b97f4a7c15ULL;
  z += 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace irse
