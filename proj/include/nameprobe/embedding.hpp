#pragma once

// Text embedders for similarity between free-text predictions.

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nameprobe/core.hpp"

namespace nameprobe {

class EmbedderUnavailable : public Error {
 public:
  using Error::Error;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<double> embed(std::string_view text) = 0;
};

/// Offline, deterministic embedder: lower-cased character trigrams hashed
/// into `dim` signed buckets. Equal strings embed identically and strings
/// sharing many trigrams land close together.
class HashEmbedder : public Embedder {
 public:
  explicit HashEmbedder(std::size_t dim = 64, std::uint64_t seed = 0) : dim_(dim), seed_(seed) {}
  std::vector<double> embed(std::string_view text) override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

/// OpenAI-compatible `POST <base_url>/embeddings`.
class RemoteEmbedder : public Embedder {
 public:
  RemoteEmbedder(std::string base_url, std::string model, std::string api_key_env,
                 std::chrono::seconds timeout = std::chrono::seconds(60));
  std::vector<double> embed(std::string_view text) override;

 private:
  std::string base_url_;
  std::string model_;
  std::string api_key_env_;
  std::chrono::seconds timeout_;
};

/// Memoizes another embedder by exact string; thread-safe.
class CachingEmbedder : public Embedder {
 public:
  explicit CachingEmbedder(std::shared_ptr<Embedder> inner) : inner_(std::move(inner)) {}
  std::vector<double> embed(std::string_view text) override;
  std::size_t cached() const;

 private:
  std::shared_ptr<Embedder> inner_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, std::vector<double>> cache_;
};

/// Cosine of the angle between a and b; 0 when either has zero norm.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

}  // namespace nameprobe
