#include "irse/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>

namespace irse {

using nlohmann::json;

json record_to_json(const ParagraphRecord& r) {
  json entities = json::array();
  for (const Mention& m : r.entities) {
    entities.push_back({{"surface", m.surface}, {"sentence_index", m.sentence_index}, {"role", to_string(m.role)}});
  }
  json out = {{"id", r.id}, {"sentences", r.sentences}, {"entities", entities}};
  if (!r.relations.empty()) {
    json rel = json::array();
    for (const auto& [a, b] : r.relations) rel.push_back({a, b});
    out["relations"] = rel;
  }
  return out;
}

namespace {

template <typename T>
T field(const json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(line, key, "missing required key");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ParseError(line, key, e.what());
  }
}

}  // namespace

ParagraphRecord record_from_json(const json& j, std::size_t line) {
  if (!j.is_object()) throw ParseError(line, "record", "expected a JSON object");
  ParagraphRecord r;
  r.id = field<std::string>(j, "id", line);
  r.sentences = field<std::vector<std::vector<std::string>>>(j, "sentences", line);
  auto entities = field<json>(j, "entities", line);
  if (!entities.is_array()) throw ParseError(line, "entities", "expected an array");
  for (const json& e : entities) {
    if (!e.is_object()) throw ParseError(line, "entities", "expected mention objects");
    Mention m;
    m.surface = field<std::string>(e, "surface", line);
    m.sentence_index = field<int>(e, "sentence_index", line);
    try {
      m.role = role_from_string(field<std::string>(e, "role", line));
    } catch (const ValidationError& err) {
      throw ParseError(line, "role", err.what());
    }
    r.entities.push_back(std::move(m));
  }
  if (j.contains("relations")) {
    auto rel = field<std::vector<std::vector<std::string>>>(j, "relations", line);
    for (const auto& pair : rel) {
      if (pair.size() != 2) throw ParseError(line, "relations", "each relation must be a pair of surfaces");
      r.relations.emplace_back(pair[0], pair[1]);
    }
  }
  try {
    r.validate();
  } catch (const ValidationError& err) {
    std::string what = err.what();
    throw ParseError(line, what.substr(0, what.find(':')), what);
  }
  return r;
}

std::vector<ParagraphRecord> read_corpus(std::istream& in) {
  std::vector<ParagraphRecord> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw ParseError(line, "json", e.what());
    }
    out.push_back(record_from_json(j, line));
  }
  return out;
}

std::vector<ParagraphRecord> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open corpus '" + path + "'");
  return read_corpus(in);
}

void write_corpus(std::ostream& out, const std::vector<ParagraphRecord>& records) {
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

void save_corpus(const std::string& path, const std::vector<ParagraphRecord>& records) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write corpus '" + path + "'");
  write_corpus(out, records);
  if (!out) throw ConfigError("failed writing corpus '" + path + "'");
}

CorpusSplit split_corpus(const std::vector<ParagraphRecord>& records, std::array<double, 3> ratios,
                         std::uint64_t seed) {
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0)) throw ConfigError("split ratios must be positive");
    sum += r;
  }
  const std::size_t n = records.size();
  if (n < ratios.size()) {
    throw SizeError("cannot split " + std::to_string(n) + " records into " + std::to_string(ratios.size()) +
                    " parts");
  }
  auto share = [&](double r) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(static_cast<double>(n) * r / sum)));
  };
  std::size_t n_val = share(ratios[1]), n_test = share(ratios[2]);
  if (n_val + n_test >= n) throw SizeError("split leaves no training records");
  std::size_t n_train = n - n_val - n_test;

  std::vector<int> perm = seeded_permutation(seed, n);
  CorpusSplit s;
  for (std::size_t k = 0; k < n; ++k) {
    const ParagraphRecord& r = records[perm[k]];
    if (k < n_train) s.train.push_back(r);
    else if (k < n_train + n_val) s.val.push_back(r);
    else s.test.push_back(r);
  }
  return s;
}

void SynthConfig::validate() const {
  if (n_paragraphs == 0) throw ConfigError("synth.n_paragraphs must be positive");
  if (min_sentences < 2 || max_sentences < min_sentences) {
    throw ConfigError("synth sentence range must satisfy 2 <= min_sentences <= max_sentences");
  }
  if (min_entities < 2 || max_entities < min_entities) {
    throw ConfigError("synth entity range must satisfy 2 <= min_entities <= max_entities");
  }
  if (entity_pool < static_cast<std::size_t>(max_entities)) {
    throw ConfigError("synth.entity_pool must be at least max_entities");
  }
  if (!(cue_probability >= 0.0 && cue_probability <= 1.0)) {
    throw ConfigError("synth.cue_probability must lie in [0, 1]");
  }
}

namespace {

const std::vector<std::string> kNouns = {
    "network", "robot",   "river",    "engine",  "village", "doctor",   "sensor",  "teacher", "bridge",  "garden",
    "pilot",   "library", "farmer",   "machine", "harbor",  "student",  "signal",  "market",  "painter", "tower",
    "council", "storm",   "merchant", "camera",  "forest",  "engineer", "lantern", "captain", "museum",  "satellite",
    "baker",   "crystal", "soldier",  "valley",  "printer", "dancer",   "glacier", "wizard",  "server",  "planet",
    "courier", "temple",  "island",   "drone",   "scholar", "factory",  "violin",  "castle",  "comet",   "nurse",
    "hunter",  "rocket",  "lake",     "poet",    "wagon",   "orchard",  "mirror",  "monk",    "tunnel",  "falcon"};

const std::vector<std::string> kVerbs = {"finds",   "builds",   "repairs", "visits",  "follows", "warns",
                                         "watches", "paints",   "carries", "studies", "guards",  "greets",
                                         "measures", "protects", "calls",   "moves",   "checks",  "helps"};

const std::vector<std::string> kPlaces = {"near", "behind", "beside", "above", "under"};

const std::vector<std::vector<std::string>> kOpening = {{"first"}, {"initially"}, {"to", "begin"}};
const std::vector<std::vector<std::string>> kClosing = {{"finally"}, {"lastly"}, {"in", "the", "end"}};
const std::vector<std::vector<std::string>> kMiddle = {{"then"}, {"next"}, {"after", "that"}, {"later"}};
const std::vector<std::string> kOrdinals = {"first", "second", "third", "fourth", "fifth", "sixth", "seventh",
                                            "eighth", "ninth", "tenth"};

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[uniform_index(rng, v.size())];
}

// Pools larger than the noun list reuse nouns with a numeric suffix.
std::string entity_name(std::size_t k) {
  std::string name = kNouns[k % kNouns.size()];
  if (k >= kNouns.size()) name += std::to_string(k / kNouns.size());
  return name;
}

std::vector<std::string> cue_tokens(int t, int n, Rng& rng) {
  if (t == 0) return pick(kOpening, rng);
  if (t == n - 1) return pick(kClosing, rng);
  if (bernoulli(rng, 0.5) && static_cast<std::size_t>(t) < kOrdinals.size()) return {kOrdinals[t]};
  return pick(kMiddle, rng);
}

ParagraphRecord make_paragraph(const SynthConfig& cfg, std::size_t index, Rng& rng) {
  const int n = cfg.min_sentences + static_cast<int>(uniform_index(rng, cfg.max_sentences - cfg.min_sentences + 1));
  const int j = cfg.min_entities + static_cast<int>(uniform_index(rng, cfg.max_entities - cfg.min_entities + 1));
  std::vector<int> pool = random_permutation(rng, cfg.entity_pool);
  std::vector<std::string> cast;
  for (int k = 0; k < j; ++k) cast.push_back(entity_name(static_cast<std::size_t>(pool[k])));

  ParagraphRecord r;
  r.id = "synth-" + std::to_string(index);
  std::set<int> introduced;
  int next_new = 1;
  int subject = 0;
  // No indefinite article on first mention; otherwise "a" alone gives the
  // order away.
  auto mention = [&](int e, std::vector<std::string>& tokens) {
    tokens.push_back("the");
    tokens.push_back(cast[e]);
    introduced.insert(e);
  };
  for (int t = 0; t < n; ++t) {
    std::vector<std::string> tokens;
    if (bernoulli(rng, cfg.cue_probability)) tokens = cue_tokens(t, n, rng);
    // Introduce unseen cast members first so every entity appears; then
    // revisit earlier ones.
    int object;
    if (next_new < j) {
      object = next_new++;
    } else {
      do {
        object = static_cast<int>(uniform_index(rng, j));
      } while (object == subject);
    }
    mention(subject, tokens);
    tokens.push_back(pick(kVerbs, rng));
    mention(object, tokens);
    r.entities.push_back({cast[subject], t, Role::kSubject});
    r.entities.push_back({cast[object], t, Role::kObject});
    if (j > 2 && bernoulli(rng, 0.3)) {
      int other;
      do {
        other = static_cast<int>(uniform_index(rng, j));
      } while (other == subject || other == object);
      if (introduced.count(other)) {
        tokens.push_back(pick(kPlaces, rng));
        mention(other, tokens);
        r.entities.push_back({cast[other], t, Role::kOther});
      }
    }
    r.sentences.push_back(std::move(tokens));
    subject = object;
  }

  std::map<std::string, std::set<int>> where;
  for (const Mention& m : r.entities) where[m.surface].insert(m.sentence_index);
  for (auto a = where.begin(); a != where.end(); ++a) {
    for (auto b = std::next(a); b != where.end(); ++b) {
      std::size_t common = std::count_if(a->second.begin(), a->second.end(),
                                         [&](int s) { return b->second.count(s) > 0; });
      if (common >= 2) r.relations.emplace_back(a->first, b->first);
    }
  }
  return r;
}

}  // namespace

std::vector<ParagraphRecord> generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  std::vector<ParagraphRecord> out;
  out.reserve(cfg.n_paragraphs);
  for (std::size_t k = 0; k < cfg.n_paragraphs; ++k) out.push_back(make_paragraph(cfg, k, rng));
  return out;
}

ShuffledParagraph shuffle_paragraph(const ParagraphRecord& record, std::uint64_t seed) {
  ShuffledParagraph s;
  s.gold_positions = seeded_permutation(seed, record.sentences.size());
  for (int gold : s.gold_positions) s.presented.push_back(record.sentences[gold]);
  return s;
}

std::vector<int> gold_order(const std::vector<int>& gold_positions) {
  if (!is_permutation_of_range(gold_positions)) throw ValidationError("gold_positions: not a permutation");
  std::vector<int> order(gold_positions.size());
  for (std::size_t k = 0; k < gold_positions.size(); ++k) order[gold_positions[k]] = static_cast<int>(k);
  return order;
}

}  // namespace irse
