#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "irse/graph.hpp"

namespace irse {

nlohmann::json record_to_json(const ParagraphRecord& r);
/// Throws ParseError(line, field) on schema violations. Unknown keys are
/// ignored.
ParagraphRecord record_from_json(const nlohmann::json& j, std::size_t line);

std::vector<ParagraphRecord> read_corpus(std::istream& in);
std::vector<ParagraphRecord> load_corpus(const std::string& path);
void write_corpus(std::ostream& out, const std::vector<ParagraphRecord>& records);
void save_corpus(const std::string& path, const std::vector<ParagraphRecord>& records);

struct CorpusSplit {
  std::vector<ParagraphRecord> train;
  std::vector<ParagraphRecord> val;
  std::vector<ParagraphRecord> test;
};

/// Seeded shuffle, then contiguous partition. Validation and test get
/// max(1, floor(n * r / sum)) records each; train keeps the remainder.
CorpusSplit split_corpus(const std::vector<ParagraphRecord>& records, std::array<double, 3> ratios,
                         std::uint64_t seed);

struct SynthConfig {
  std::size_t n_paragraphs = 2000;
  int min_sentences = 4;
  int max_sentences = 6;
  std::size_t entity_pool = 48;
  int min_entities = 3;
  int max_entities = 5;
  double cue_probability = 0.8;
  std::uint64_t seed = 7;

  void validate() const;  // throws ConfigError
};

std::vector<ParagraphRecord> generate_synthetic(const SynthConfig& cfg);

struct ShuffledParagraph {
  std::vector<std::vector<std::string>> presented;
  std::vector<int> gold_positions;  // gold_positions[k]: gold index of presented sentence k
};

ShuffledParagraph shuffle_paragraph(const ParagraphRecord& record, std::uint64_t seed);

/// Presented indices listed in gold order (the inverse of gold_positions).
std::vector<int> gold_order(const std::vector<int>& gold_positions);

}  // namespace irse
