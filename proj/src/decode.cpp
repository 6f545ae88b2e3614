#include "irse/decode.hpp"

#include <algorithm>
#include <cmath>

namespace irse {

DecoderParams DecoderParams::create(ParamStore& store, const std::string& prefix, const ModelDims& dims) {
  const std::size_t ds = dims.sentence(), dh = dims.decoder_size(), da = dims.attention_size();
  DecoderParams p;
  p.lstm = LstmParams::create(store, prefix + "lstm", ds, dh);
  p.init_state = AffineParams::create(store, prefix + "init", dims.global_size(), dh);
  p.start = &store.add(prefix + "start", 1, ds);
  p.w = &store.add(prefix + "attn_w", dh, da);
  p.u = &store.add(prefix + "attn_u", ds, da);
  p.q = &store.add(prefix + "attn_q", da, 1);
  return p;
}

std::string to_string(DecodeMode mode) { return mode == DecodeMode::kGreedy ? "greedy" : "beam"; }

DecodeMode decode_mode_from_string(const std::string& s) {
  if (s == "greedy") return DecodeMode::kGreedy;
  if (s == "beam") return DecodeMode::kBeam;
  throw ConfigError("unknown decode mode '" + s + "' (expected greedy or beam)");
}

namespace {

// Shared by every decoding path so teacher-forced scores and search scores
// are computed by identical operation sequences.
class Pointer {
 public:
  Pointer(const GrnState& state, const DecoderParams& p)
      : tape_(state.sentences.tape()), p_(p), inputs_(state.sentences0), keys_(state.sentences) {
    if (keys_.rows() != inputs_.rows()) throw ShapeError("decode: layer-0 and top-layer sentence counts differ");
    projected_keys_ = matmul(keys_, tape_.param(*p.u));
    Var h0 = affine(state.global, p.init_state);
    initial_ = {h0, tape_.constant(Tensor(1, p.lstm.hidden()))};
  }

  std::size_t size() const { return keys_.rows(); }
  const LstmState& initial() const { return initial_; }

  Var input(int prev) const {
    return prev < 0 ? tape_.param(*p_.start) : gather_rows(inputs_, std::vector<int>{prev});
  }

  LstmState advance(const LstmState& s, Var x) const { return lstm_step(x, s, p_.lstm); }

  Var distribution(Var h, const std::vector<bool>& visited) const {
    return scores_to_distribution(h, projected_keys_, visited, p_);
  }

  static Var scores_to_distribution(Var h, Var projected_keys, const std::vector<bool>& visited,
                                    const DecoderParams& p) {
    Tape& t = h.tape();
    if (std::all_of(visited.begin(), visited.end(), [](bool v) { return v; })) {
      throw StateError("pointer_step: every sentence is already visited");
    }
    Var hw = matmul(h, t.param(*p.w));
    Var e = matmul(tanh(add_row(projected_keys, hw)), t.param(*p.q));  // I x 1
    return masked_softmax(transpose(e), visited);
  }

 private:
  Tape& tape_;
  const DecoderParams& p_;
  Var inputs_;
  Var keys_;
  Var projected_keys_;
  LstmState initial_;
};

void check_order(const std::vector<int>& order, std::size_t n) {
  if (order.size() != n || !is_permutation_of_range(order)) {
    throw ValidationError("decode: teacher order is not a permutation of " + std::to_string(n) + " sentences");
  }
}

std::size_t argmax_lowest(const Tensor& row) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < row.cols(); ++k) {
    if (row(0, k) > row(0, best)) best = k;
  }
  return best;
}

struct Hypothesis {
  std::vector<int> order;
  std::vector<bool> visited;
  LstmState state;
  std::vector<Tensor> steps;
  double log_prob = 0.0;
};

bool better(double lp_a, const std::vector<int>& a, double lp_b, const std::vector<int>& b) {
  if (lp_a != lp_b) return lp_a > lp_b;
  return a < b;
}

DecodeResult follow(const Pointer& ptr, const std::vector<int>* fixed) {
  const std::size_t n = ptr.size();
  DecodeResult r;
  std::vector<bool> visited(n, false);
  LstmState s = ptr.initial();
  int prev = -1;
  for (std::size_t t = 0; t < n; ++t) {
    s = ptr.advance(s, ptr.input(prev));
    Tensor dist = ptr.distribution(s.h, visited).value();
    int pick = fixed ? (*fixed)[t] : static_cast<int>(argmax_lowest(dist));
    r.log_prob += std::log(dist(0, pick));
    r.steps.push_back(std::move(dist));
    r.order.push_back(pick);
    visited[pick] = true;
    prev = pick;
  }
  return r;
}

DecodeResult beam_search(const Pointer& ptr, int width) {
  const std::size_t n = ptr.size();
  std::vector<Hypothesis> beam(1);
  beam[0].visited.assign(n, false);
  beam[0].state = ptr.initial();
  for (std::size_t t = 0; t < n; ++t) {
    struct Candidate {
      std::size_t parent;
      int pick;
      double log_prob;
      std::vector<int> order;
    };
    std::vector<Candidate> candidates;
    std::vector<LstmState> advanced(beam.size());
    std::vector<Tensor> dists(beam.size());
    for (std::size_t b = 0; b < beam.size(); ++b) {
      const Hypothesis& h = beam[b];
      int prev = h.order.empty() ? -1 : h.order.back();
      advanced[b] = ptr.advance(h.state, ptr.input(prev));
      dists[b] = ptr.distribution(advanced[b].h, h.visited).value();
      for (std::size_t k = 0; k < n; ++k) {
        if (h.visited[k]) continue;
        Candidate c{b, static_cast<int>(k), h.log_prob + std::log(dists[b](0, k)), h.order};
        c.order.push_back(static_cast<int>(k));
        candidates.push_back(std::move(c));
      }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      return better(a.log_prob, a.order, b.log_prob, b.order);
    });
    if (candidates.size() > static_cast<std::size_t>(width)) candidates.resize(width);
    std::vector<Hypothesis> next;
    next.reserve(candidates.size());
    for (auto& c : candidates) {
      Hypothesis h;
      const Hypothesis& parent = beam[c.parent];
      h.order = std::move(c.order);
      h.visited = parent.visited;
      h.visited[c.pick] = true;
      h.state = advanced[c.parent];
      h.steps = parent.steps;
      h.steps.push_back(dists[c.parent]);
      h.log_prob = c.log_prob;
      next.push_back(std::move(h));
    }
    beam = std::move(next);
  }
  // Candidates were sorted, so the front hypothesis is the best complete one.
  Hypothesis& best = beam.front();
  return {std::move(best.order), std::move(best.steps), best.log_prob};
}

}  // namespace

Var pointer_step(Var h_d, Var states, const std::vector<bool>& visited, const DecoderParams& p) {
  if (visited.size() != states.rows()) {
    throw ShapeError("pointer_step: mask of " + std::to_string(visited.size()) + " for " +
                     std::to_string(states.rows()) + " sentences");
  }
  Var projected = matmul(states, h_d.tape().param(*p.u));
  return Pointer::scores_to_distribution(h_d, projected, visited, p);
}

DecodeResult decode(const GrnState& state, const DecoderParams& p, DecodeMode mode, int width,
                    const std::optional<std::vector<int>>& teacher) {
  if (mode == DecodeMode::kBeam && width < 1) {
    throw ConfigError("beam width must be >= 1, got " + std::to_string(width));
  }
  Pointer ptr(state, p);
  if (teacher) {
    check_order(*teacher, ptr.size());
    return follow(ptr, &*teacher);
  }
  if (mode == DecodeMode::kGreedy) return follow(ptr, nullptr);
  return beam_search(ptr, width);
}

std::vector<Var> teacher_forced_steps(const GrnState& state, const DecoderParams& p, const std::vector<int>& order,
                                      double dropout_rate, Rng* rng) {
  Pointer ptr(state, p);
  check_order(order, ptr.size());
  std::vector<Var> steps;
  std::vector<bool> visited(ptr.size(), false);
  LstmState s = ptr.initial();
  int prev = -1;
  for (int pick : order) {
    Var x = ptr.input(prev);
    if (rng && dropout_rate > 0.0) x = dropout(x, dropout_rate, *rng);
    s = ptr.advance(s, x);
    steps.push_back(ptr.distribution(s.h, visited));
    visited[pick] = true;
    prev = pick;
  }
  return steps;
}

double sequence_log_prob(const GrnState& state, const DecoderParams& p, const std::vector<int>& order) {
  return decode(state, p, DecodeMode::kGreedy, 1, order).log_prob;
}

}  // namespace irse
