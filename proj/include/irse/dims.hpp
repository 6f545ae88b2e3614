#pragma once

#include <cstddef>

namespace irse {

/// Layer sizes. Zero for global/decoder/attention means "same as the
/// sentence state size" (2 x lstm_hidden).
struct ModelDims {
  std::size_t embed = 32;
  std::size_t lstm_hidden = 64;
  std::size_t entity = 32;
  std::size_t global = 0;
  std::size_t mlp = 128;
  std::size_t decoder_hidden = 0;
  std::size_t attention = 0;
  int grn_layers = 3;
  // Forward and backward sentence LSTMs share weights.
  bool tie_directions = false;

  std::size_t sentence() const { return 2 * lstm_hidden; }
  std::size_t global_size() const { return global ? global : sentence(); }
  std::size_t decoder_size() const { return decoder_hidden ? decoder_hidden : sentence(); }
  std::size_t attention_size() const { return attention ? attention : sentence(); }

  void validate() const;
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

}  // namespace irse
