#include "nameprobe/embedding.hpp"

#include <cmath>
#include <cstdlib>

#include <json.hpp>

#include "nameprobe/gateway.hpp"
#include "nameprobe/random.hpp"

namespace nameprobe {

using nlohmann::json;

std::vector<double> HashEmbedder::embed(std::string_view text) {
  std::vector<double> v(dim_, 0.0);
  if (dim_ == 0) return v;
  const std::string padded = "  " + to_lower_ascii(trim(text)) + "  ";
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
    const std::uint64_t h = mix64(hash_string(std::string_view(padded).substr(i, 3)) ^ seed_);
    const double sign = (h >> 63) ? -1.0 : 1.0;
    v[h % dim_] += sign;
  }
  return v;
}

RemoteEmbedder::RemoteEmbedder(std::string base_url, std::string model, std::string api_key_env,
                               std::chrono::seconds timeout)
    : base_url_(std::move(base_url)),
      model_(std::move(model)),
      api_key_env_(std::move(api_key_env)),
      timeout_(timeout) {}

std::vector<double> RemoteEmbedder::embed(std::string_view text) {
  std::string key;
  if (!api_key_env_.empty()) {
    const char* value = std::getenv(api_key_env_.c_str());
    if (value == nullptr || *value == '\0') {
      throw EmbedderUnavailable("embedding key variable '" + api_key_env_ + "' is not set");
    }
    key = value;
  }
  const json body = {{"model", model_}, {"input", text}};
  const auto res = http_post_json(base_url_, "/embeddings", key, body.dump(), timeout_);
  if (res.status != 200) {
    throw EmbedderUnavailable("embedding request failed: " +
                              (res.error.empty() ? "HTTP " + std::to_string(res.status) : res.error));
  }
  const json j = json::parse(res.body, nullptr, false);
  try {
    return j.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw EmbedderUnavailable(std::string("malformed embedding response: ") + e.what());
  }
}

std::vector<double> CachingEmbedder::embed(std::string_view text) {
  {
    std::lock_guard lock(mutex_);
    const auto it = cache_.find(std::string(text));
    if (it != cache_.end()) return it->second;
  }
  auto v = inner_->embed(text);
  std::lock_guard lock(mutex_);
  return cache_.try_emplace(std::string(text), std::move(v)).first->second;
}

std::size_t CachingEmbedder::cached() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("cosine_similarity: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace nameprobe
