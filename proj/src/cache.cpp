#include "nameprobe/cache.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <fstream>

#include <json.hpp>

#include "nameprobe/core.hpp"
#include "nameprobe/hash.hpp"

namespace nameprobe {

using nlohmann::json;

std::string cache_key(std::string_view model_id, std::string_view prompt_text,
                      double temperature) {
  // nlohmann::json objects serialize with sorted keys.
  const json canonical = {{"model", model_id}, {"prompt", prompt_text}, {"temperature", temperature}};
  return sha256_hex(canonical.dump());
}

std::string serialize_cache_entry(const CacheEntry& entry) {
  const json line = {{"key", entry.key}, {"model", entry.model}, {"text", entry.text},
                     {"ts", entry.ts}};
  return line.dump() + "\n";
}

ResponseCache::ResponseCache(std::filesystem::path journal) {
  load(journal);
  journal_ = std::move(journal);
}

ResponseCache ResponseCache::read_only(const std::filesystem::path& journal) {
  if (!std::filesystem::exists(journal)) {
    throw IoError("replay fixture file not found: " + journal.string());
  }
  ResponseCache cache;
  cache.load(journal);
  return cache;
}

ResponseCache::ResponseCache(ResponseCache&& other) noexcept {
  std::unique_lock lock(other.mutex_);
  entries_ = std::move(other.entries_);
  journal_ = std::move(other.journal_);
}

ResponseCache& ResponseCache::operator=(ResponseCache&& other) noexcept {
  if (this != &other) {
    std::scoped_lock lock(mutex_, other.mutex_);
    entries_ = std::move(other.entries_);
    journal_ = std::move(other.journal_);
  }
  return *this;
}

void ResponseCache::load(const std::filesystem::path& journal) {
  std::ifstream in(journal, std::ios::binary);
  if (!in) return;  // a missing journal is an empty cache
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      CacheEntry e{j.at("key").get<std::string>(), j.at("model").get<std::string>(),
                   j.at("text").get<std::string>(), j.value("ts", std::int64_t{0})};
      entries_[e.key] = std::move(e);
    } catch (const json::exception& e) {
      throw IoError(journal.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::optional<std::string> ResponseCache::lookup(std::string_view key) const {
  std::shared_lock lock(mutex_);
  const auto it = entries_.find(std::string(key));
  if (it == entries_.end()) return std::nullopt;
  return it->second.text;
}

void ResponseCache::store(const CacheEntry& entry) {
  std::unique_lock lock(mutex_);
  if (journal_) {
    const std::string line = serialize_cache_entry(entry);
    const int fd = ::open(journal_->c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd < 0) throw IoError("cannot open cache journal " + journal_->string());
    // Other processes appending to the same journal serialize on flock.
    ::flock(fd, LOCK_EX);
    std::size_t written = 0;
    while (written < line.size()) {
      const auto n = ::write(fd, line.data() + written, line.size() - written);
      if (n <= 0) break;
      written += static_cast<std::size_t>(n);
    }
    ::flock(fd, LOCK_UN);
    ::close(fd);
    if (written != line.size()) throw IoError("short write to " + journal_->string());
  }
  entries_[entry.key] = entry;
}

std::size_t ResponseCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

}  // namespace nameprobe
