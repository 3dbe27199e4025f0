#pragma once

// Chat-completion gateway: temperature-0 requests against OpenAI-compatible
// endpoints with retries, a content-addressed cache and bounded
// per-model concurrency.

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nameprobe/cache.hpp"
#include "nameprobe/core.hpp"
#include "nameprobe/prompting.hpp"

namespace nameprobe {

class AuthError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

enum class Openness { open, closed };

struct ModelSpec {
  std::string model_id;
  std::string base_url;     // e.g. https://api.openai.com/v1
  std::string api_key_env;  // name of the environment variable holding the key
  double vote_weight = 0.0;
  int max_parallel = 1;
  Openness openness = Openness::closed;

  /// Throws Error when vote_weight is outside [0, 1] or max_parallel < 1.
  void validate() const;
};

enum class ResponseStatus { ok, transport_error, refusal_empty };

std::string_view to_string(ResponseStatus s);
std::optional<ResponseStatus> parse_response_status(std::string_view s);

struct RawResponse {
  std::string record_id;
  std::string model_id;
  std::string text;  // non-empty iff status == ok
  ResponseStatus status = ResponseStatus::transport_error;
  std::int64_t latency_ms = 0;
  bool from_cache = false;
  int retry_count = 0;
  std::string error;
};

/// One attempt's outcome as seen on the wire.
struct ChatReply {
  int http_status = 0;  // 0 when the connection itself failed
  std::string content;
  std::string error;
};

/// Transport for a single chat-completion attempt.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatReply send(const ModelSpec& spec, const std::string& api_key,
                         const std::string& prompt) = 0;
  virtual bool needs_api_key() const { return true; }
};

/// POSTs `{model, messages:[{role:user,content}], temperature:0}` to
/// `<base_url>/chat/completions` and reads the first choice's message content.
class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(std::chrono::seconds timeout = std::chrono::seconds(120))
      : timeout_(timeout) {}
  ChatReply send(const ModelSpec& spec, const std::string& api_key,
                 const std::string& prompt) override;

 private:
  std::chrono::seconds timeout_;
};

/// Serves recorded responses from a fixture journal; never touches the network.
class ReplayBackend : public ChatBackend {
 public:
  explicit ReplayBackend(std::shared_ptr<const ResponseCache> fixtures)
      : fixtures_(std::move(fixtures)) {}
  ChatReply send(const ModelSpec& spec, const std::string& api_key,
                 const std::string& prompt) override;
  bool needs_api_key() const override { return false; }

 private:
  std::shared_ptr<const ResponseCache> fixtures_;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double multiplier = 2.0;
  /// Each wait is scaled by a factor drawn from [1 - jitter, 1 + jitter].
  double jitter = 0.2;
};

/// Request body sent for a prompt; temperature is always 0.
std::string chat_request_body(std::string_view model_id, std::string_view prompt);
/// Extracts choices[0].message.content; empty when absent or null.
std::optional<std::string> chat_response_content(std::string_view body);

class Gateway {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  Gateway(std::shared_ptr<ChatBackend> backend, std::shared_ptr<ResponseCache> cache,
          RetryPolicy retry = {});

  /// Cache first; on a miss one request (plus retries). Successful replies
  /// are stored in the cache before returning. Throws AuthError for a
  /// missing key or a 401/403, TransportError once retries are exhausted or
  /// on a non-retryable status.
  RawResponse complete(const ModelSpec& spec, const PromptText& prompt);

  /// Every (spec, prompt) pair; result index = spec_index * prompts.size() +
  /// prompt_index. At most spec.max_parallel requests per spec are in flight.
  /// Failed pairs come back with status transport_error.
  std::vector<RawResponse> complete_batch(std::span<const ModelSpec> specs,
                                          std::span<const PromptText> prompts);

  void set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }

 private:
  std::shared_ptr<ChatBackend> backend_;
  std::shared_ptr<ResponseCache> cache_;
  RetryPolicy retry_;
  Sleeper sleeper_;
};

/// Names of API-key variables required by `specs` that are unset.
std::vector<std::string> missing_api_keys(std::span<const ModelSpec> specs);

// Minimal HTTP plumbing shared with the embedding client.
struct HttpResult {
  int status = 0;
  std::string body;
  std::string error;
};
HttpResult http_post_json(const std::string& base_url, std::string_view path,
                          const std::string& bearer_token, const std::string& body,
                          std::chrono::seconds timeout);

}  // namespace nameprobe
