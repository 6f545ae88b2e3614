#include "irse/graph.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace irse {

std::string to_string(Role role) {
  switch (role) {
    case Role::kSubject:
      return "subject";
    case Role::kObject:
      return "object";
    case Role::kOther:
      return "other";
  }
  return "other";
}

Role role_from_string(const std::string& s) {
  if (s == "subject") return Role::kSubject;
  if (s == "object") return Role::kObject;
  if (s == "other") return Role::kOther;
  throw ValidationError("role: unknown value '" + s + "' (expected subject, object or other)");
}

std::string canonical_surface(const std::string& surface) {
  std::string out = surface;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

void ParagraphRecord::validate() const {
  if (sentences.size() < 2) {
    throw ValidationError("sentences: paragraph '" + id + "' has " + std::to_string(sentences.size()) +
                          " sentences, at least 2 required");
  }
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (sentences[i].empty()) {
      throw ValidationError("sentences: sentence " + std::to_string(i) + " of '" + id + "' is empty");
    }
  }
  std::set<std::string> known;
  for (const Mention& m : entities) {
    if (m.sentence_index < 0 || static_cast<std::size_t>(m.sentence_index) >= sentences.size()) {
      throw ValidationError("sentence_index: mention '" + m.surface + "' points at sentence " +
                            std::to_string(m.sentence_index) + " of " + std::to_string(sentences.size()));
    }
    if (m.surface.empty()) throw ValidationError("surface: empty entity surface in '" + id + "'");
    known.insert(canonical_surface(m.surface));
  }
  for (const auto& [a, b] : relations) {
    if (!known.count(canonical_surface(a)) || !known.count(canonical_surface(b))) {
      throw ValidationError("relations: pair (" + a + ", " + b + ") names an entity without mentions");
    }
  }
}

bool IrseGraph::has_edge(int i, int j) const {
  if (i == j) return false;
  return ss_weights_.count(SentencePair(i, j)) > 0;
}

double IrseGraph::weight(int i, int j) const {
  auto it = ss_weights_.find(SentencePair(i, j));
  if (i == j || it == ss_weights_.end()) {
    throw NoEdgeError("no ss-edge between sentences " + std::to_string(i) + " and " + std::to_string(j));
  }
  return i < j ? it->second : 1.0 - it->second;
}

void IrseGraph::set_pair_weight(int i, int j, double w) {
  auto it = ss_weights_.find(SentencePair(i, j));
  if (i == j || it == ss_weights_.end()) {
    throw NoEdgeError("no ss-edge between sentences " + std::to_string(i) + " and " + std::to_string(j));
  }
  if (!(w >= 0.0 && w <= 1.0)) throw RangeError("ss-edge weight " + std::to_string(w) + " outside [0, 1]");
  it->second = i < j ? w : 1.0 - w;
}

std::vector<SentencePair> IrseGraph::ss_pairs() const {
  std::vector<SentencePair> out;
  out.reserve(ss_weights_.size());
  for (const auto& [pair, w] : ss_weights_) out.push_back(pair);
  return out;
}

bool IrseGraph::all_weights_equal(double w) const {
  return std::all_of(ss_weights_.begin(), ss_weights_.end(), [w](const auto& kv) { return kv.second == w; });
}

std::vector<IrseGraph::DirectedEdge> IrseGraph::directed_edges() const {
  std::vector<DirectedEdge> out;
  out.reserve(2 * ss_weights_.size());
  for (const auto& [pair, w] : ss_weights_) {
    out.push_back({pair.first, pair.second, w});
    out.push_back({pair.second, pair.first, 1.0 - w});
  }
  return out;
}

bool is_permutation_of_range(const std::vector<int>& perm) {
  std::vector<bool> seen(perm.size(), false);
  for (int v : perm) {
    if (v < 0 || static_cast<std::size_t>(v) >= perm.size() || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

IrseGraph build_graph_presented(const ParagraphRecord& record, const std::vector<int>& presented_order) {
  record.validate();
  const std::size_t n = record.sentences.size();
  if (presented_order.size() != n || !is_permutation_of_range(presented_order)) {
    throw ValidationError("presented_order: not a permutation of the record's sentences");
  }
  std::vector<int> presented_of_gold(n);
  for (std::size_t k = 0; k < n; ++k) presented_of_gold[presented_order[k]] = static_cast<int>(k);

  IrseGraph g;
  g.sentences_.reserve(n);
  for (int gold : presented_order) g.sentences_.push_back(record.sentences[gold]);

  // Entities sorted by canonical surface so node ids never depend on the
  // presentation order.
  std::map<std::string, int> entity_ids;
  for (const Mention& m : record.entities) entity_ids.emplace(canonical_surface(m.surface), 0);
  for (auto& [surface, id] : entity_ids) {
    id = static_cast<int>(g.entities_.size());
    g.entities_.push_back(surface);
  }

  // (sentence, entity) -> best role; subject < object < other in priority.
  std::map<std::pair<int, int>, Role> roles;
  for (const Mention& m : record.entities) {
    int s = presented_of_gold[m.sentence_index];
    int e = entity_ids.at(canonical_surface(m.surface));
    auto [it, inserted] = roles.emplace(std::make_pair(s, e), m.role);
    if (!inserted && static_cast<int>(m.role) < static_cast<int>(it->second)) it->second = m.role;
  }
  for (const auto& [key, role] : roles) g.se_edges_.push_back({key.first, key.second, role});

  std::vector<std::set<int>> sentence_entities(n);
  for (const auto& [key, role] : roles) sentence_entities[key.first].insert(key.second);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const auto& ea = sentence_entities[a];
      const auto& eb = sentence_entities[b];
      bool shared = std::any_of(ea.begin(), ea.end(), [&](int e) { return eb.count(e) > 0; });
      if (shared) g.ss_weights_[SentencePair(static_cast<int>(a), static_cast<int>(b))] = 0.5;
    }
  }

  std::set<std::pair<int, int>> ee;
  for (const auto& [a, b] : record.relations) {
    int ja = entity_ids.at(canonical_surface(a));
    int jb = entity_ids.at(canonical_surface(b));
    if (ja != jb) ee.emplace(std::min(ja, jb), std::max(ja, jb));
  }
  g.ee_edges_.assign(ee.begin(), ee.end());
  return g;
}

std::pair<IrseGraph, std::vector<int>> build_graph(const ParagraphRecord& record, std::uint64_t order_seed) {
  std::vector<int> order = seeded_permutation(order_seed, record.sentences.size());
  IrseGraph g = build_graph_presented(record, order);
  return {std::move(g), std::move(order)};
}

void set_pair_weight(IrseGraph& g, int i, int j, double w) { g.set_pair_weight(i, j, w); }

void assign_gold_weights(IrseGraph& g, const std::vector<int>& gold_positions) {
  if (gold_positions.size() != g.num_sentences() || !is_permutation_of_range(gold_positions)) {
    throw ValidationError("gold_positions: not a permutation of " + std::to_string(g.num_sentences()) +
                          " sentences");
  }
  for (const SentencePair& p : g.ss_pairs()) {
    g.set_pair_weight(p.first, p.second, gold_positions[p.first] < gold_positions[p.second] ? 1.0 : 0.0);
  }
}

std::size_t inject_noise(IrseGraph& g, double eta, Rng& rng) {
  std::vector<SentencePair> pairs = g.ss_pairs();
  auto count = static_cast<std::size_t>(std::llround(std::clamp(eta, 0.0, 1.0) * pairs.size()));
  // Partial Fisher-Yates: the first `count` slots become the sample.
  for (std::size_t k = 0; k < count; ++k) {
    std::size_t j = k + uniform_index(rng, pairs.size() - k);
    std::swap(pairs[k], pairs[j]);
    const SentencePair& p = pairs[k];
    double u = uniform(rng, 0.0, 0.5);
    if (g.weight(p.first, p.second) >= 0.5) {
      g.set_pair_weight(p.first, p.second, u);
    } else {
      g.set_pair_weight(p.second, p.first, u);
    }
  }
  return count;
}

void uncertain_reset(IrseGraph& g, const PairSet& pairs) {
  for (const SentencePair& p : pairs) {
    if (!g.has_edge(p.first, p.second)) {
      throw NoEdgeError("no ss-edge between sentences " + std::to_string(p.first) + " and " +
                        std::to_string(p.second));
    }
  }
  for (const SentencePair& p : pairs) g.set_pair_weight(p.first, p.second, 0.5);
}

}  // namespace irse
