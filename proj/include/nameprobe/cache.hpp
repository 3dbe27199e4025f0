#pragma once

// Content-addressed response cache backed by an append-only JSONL journal.

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>

namespace nameprobe {

struct CacheEntry {
  std::string key;
  std::string model;
  std::string text;
  std::int64_t ts = 0;  // seconds since the Unix epoch
};

/// SHA-256 over the canonical JSON of {model, prompt, temperature}.
std::string cache_key(std::string_view model_id, std::string_view prompt_text,
                      double temperature = 0.0);

/// Journal lines carry `key`, `model`, `text` and `ts`. When a key repeats
/// the last line wins. Replay fixtures use the same schema.
class ResponseCache {
 public:
  /// In-memory only.
  ResponseCache() = default;
  /// Loads an existing journal (if any) and appends new entries to it.
  explicit ResponseCache(std::filesystem::path journal);

  /// Loads a journal without attaching it for writes.
  static ResponseCache read_only(const std::filesystem::path& journal);

  ResponseCache(const ResponseCache&) = delete;
  ResponseCache& operator=(const ResponseCache&) = delete;
  ResponseCache(ResponseCache&&) noexcept;
  ResponseCache& operator=(ResponseCache&&) noexcept;

  std::optional<std::string> lookup(std::string_view key) const;
  /// Stores the entry, appending it to the journal under an exclusive lock.
  void store(const CacheEntry& entry);
  std::size_t size() const;

 private:
  void load(const std::filesystem::path& journal);

  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, CacheEntry> entries_;
  std::optional<std::filesystem::path> journal_;
};

std::string serialize_cache_entry(const CacheEntry& entry);

}  // namespace nameprobe
