#pragma once

#include <cstdint>
#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "irse/random.hpp"
#include "irse/tensor.hpp"

namespace irse {

enum class Role { kSubject = 0, kObject = 1, kOther = 2 };

std::string to_string(Role role);
Role role_from_string(const std::string& s);  // throws ValidationError

struct Mention {
  std::string surface;
  int sentence_index = 0;
  Role role = Role::kOther;

  friend bool operator==(const Mention&, const Mention&) = default;
};

/// One paragraph: sentences in gold order plus entity annotations.
struct ParagraphRecord {
  std::string id;
  std::vector<std::vector<std::string>> sentences;
  std::vector<Mention> entities;
  std::vector<std::pair<std::string, std::string>> relations;

  /// Throws ValidationError naming the offending field.
  void validate() const;

  friend bool operator==(const ParagraphRecord&, const ParagraphRecord&) = default;
};

std::string canonical_surface(const std::string& surface);

/// Unordered sentence pair stored as (first < second).
struct SentencePair {
  int first = 0;
  int second = 0;

  SentencePair() = default;
  SentencePair(int a, int b) : first(std::min(a, b)), second(std::max(a, b)) {}
  friend auto operator<=>(const SentencePair&, const SentencePair&) = default;
};

/// Sentence pairs whose ordering is still uncertain at some refinement step.
using PairSet = std::set<SentencePair>;

struct SeEdge {
  int sentence = 0;
  int entity = 0;
  Role role = Role::kOther;
};

/// Sentence-entity graph whose sentence-sentence links carry directed,
/// complementary precedence weights. Each linked pair stores w(first, second);
/// w(second, first) is derived as 1 - w(first, second).
class IrseGraph {
 public:
  IrseGraph() = default;

  std::size_t num_sentences() const { return sentences_.size(); }
  std::size_t num_entities() const { return entities_.size(); }
  const std::vector<std::vector<std::string>>& sentences() const { return sentences_; }
  const std::vector<std::string>& entities() const { return entities_; }
  const std::vector<SeEdge>& se_edges() const { return se_edges_; }
  const std::vector<std::pair<int, int>>& ee_edges() const { return ee_edges_; }

  bool has_edge(int i, int j) const;
  /// Directed weight w(i, j): modeled probability that sentence i precedes j.
  double weight(int i, int j) const;
  /// Stores w for (i, j) and 1 - w for (j, i).
  void set_pair_weight(int i, int j, double w);

  std::vector<SentencePair> ss_pairs() const;
  std::size_t num_ss_pairs() const { return ss_weights_.size(); }
  bool all_weights_equal(double w) const;

  /// All directed edges (target i, source j) with weight w(i, j), in a
  /// deterministic order: for each stored pair, (first, second) then
  /// (second, first).
  struct DirectedEdge {
    int target;
    int source;
    double weight;
  };
  std::vector<DirectedEdge> directed_edges() const;

 private:
  friend std::pair<IrseGraph, std::vector<int>> build_graph(const ParagraphRecord&, std::uint64_t);
  friend IrseGraph build_graph_presented(const ParagraphRecord&, const std::vector<int>&);

  std::vector<std::vector<std::string>> sentences_;
  std::vector<std::string> entities_;
  std::vector<SeEdge> se_edges_;
  std::vector<std::pair<int, int>> ee_edges_;
  std::map<SentencePair, double> ss_weights_;
};

/// Presents the record's sentences in a seeded random order and builds the
/// graph over presented indices. presented_order[k] is the gold position of
/// presented sentence k (so it doubles as gold_positions).
std::pair<IrseGraph, std::vector<int>> build_graph(const ParagraphRecord& record, std::uint64_t order_seed);

/// Builds the graph for an explicit presentation: presented_order[k] is the
/// gold index of the sentence shown at position k.
IrseGraph build_graph_presented(const ParagraphRecord& record, const std::vector<int>& presented_order);

void set_pair_weight(IrseGraph& g, int i, int j, double w);

/// w = 1 from the gold-earlier to the gold-later sentence of every linked pair.
void assign_gold_weights(IrseGraph& g, const std::vector<int>& gold_positions);

/// Corrupts round(eta * |pairs|) pairs chosen uniformly without replacement:
/// the gold-preferred direction gets u ~ U[0, 0.5). Returns the count.
std::size_t inject_noise(IrseGraph& g, double eta, Rng& rng);

/// Resets both directed weights of every listed pair to 0.5.
void uncertain_reset(IrseGraph& g, const PairSet& pairs);

bool is_permutation_of_range(const std::vector<int>& perm);

}  // namespace irse
