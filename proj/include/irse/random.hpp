#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace irse {

// The standard distributions are implementation-defined; these helpers only
// consume raw mt19937_64 output so seeded draws are portable.
using Rng = std::mt19937_64;

double uniform01(Rng& rng);
double uniform(Rng& rng, double lo, double hi);
std::size_t uniform_index(Rng& rng, std::size_t n);
bool bernoulli(Rng& rng, double p);

/// Fisher-Yates permutation of 0..n-1.
std::vector<int> random_permutation(Rng& rng, std::size_t n);
std::vector<int> seeded_permutation(std::uint64_t seed, std::size_t n);

/// splitmix64 finalizer over a ^ rotated b; derives independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

template <typename T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = uniform_index(rng, i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace irse
