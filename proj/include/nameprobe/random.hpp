#pragma once

// Portable, seed-deterministic randomness. Standard distributions are
// implementation-defined, so bounded draws and shuffles are done here.

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace nameprobe {

std::uint64_t mix64(std::uint64_t x);
/// FNV-1a, 64-bit.
std::uint64_t hash_string(std::string_view s);
/// Independent stream seed for a (root seed, tag) pair, e.g. a record id.
std::uint64_t derive_seed(std::uint64_t root, std::string_view tag);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_index(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace nameprobe
