#include "nameprobe/gateway.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <ctime>
#include <thread>

#include <json.hpp>

#include "nameprobe/random.hpp"

namespace nameprobe {

using nlohmann::json;

void ModelSpec::validate() const {
  if (model_id.empty()) throw Error("model spec has an empty model_id");
  if (!(vote_weight >= 0.0 && vote_weight <= 1.0)) {
    throw Error("model '" + model_id + "': vote_weight must lie in [0, 1]");
  }
  if (max_parallel < 1) throw Error("model '" + model_id + "': max_parallel must be >= 1");
}

std::string_view to_string(ResponseStatus s) {
  switch (s) {
    case ResponseStatus::ok: return "ok";
    case ResponseStatus::transport_error: return "transport_error";
    case ResponseStatus::refusal_empty: return "refusal_empty";
  }
  return "transport_error";
}

std::optional<ResponseStatus> parse_response_status(std::string_view s) {
  for (auto st : {ResponseStatus::ok, ResponseStatus::transport_error,
                  ResponseStatus::refusal_empty}) {
    if (s == to_string(st)) return st;
  }
  return std::nullopt;
}

std::string chat_request_body(std::string_view model_id, std::string_view prompt) {
  const json body = {
      {"model", model_id},
      {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", 0},
  };
  return body.dump();
}

std::optional<std::string> chat_response_content(std::string_view body) {
  const json j = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  const auto choices = j.find("choices");
  if (choices == j.end() || !choices->is_array() || choices->empty()) return std::nullopt;
  const auto& first = (*choices)[0];
  if (!first.is_object() || !first.contains("message")) return std::nullopt;
  const auto& message = first["message"];
  if (!message.is_object()) return std::nullopt;
  const auto content = message.find("content");
  if (content == message.end() || content->is_null()) return std::string();
  if (!content->is_string()) return std::nullopt;
  return content->get<std::string>();
}

ChatReply ReplayBackend::send(const ModelSpec& spec, const std::string&,
                              const std::string& prompt) {
  if (auto text = fixtures_->lookup(cache_key(spec.model_id, prompt))) {
    return {200, std::move(*text), {}};
  }
  return {404, {}, "no replay fixture for model '" + spec.model_id + "'"};
}

Gateway::Gateway(std::shared_ptr<ChatBackend> backend, std::shared_ptr<ResponseCache> cache,
                 RetryPolicy retry)
    : backend_(std::move(backend)), cache_(std::move(cache)), retry_(retry) {
  if (!backend_) throw Error("gateway needs a backend");
  if (retry_.max_attempts < 1) retry_.max_attempts = 1;
  sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

namespace {

bool is_retryable(int http_status) {
  return http_status == 0 || http_status == 408 || http_status == 429 || http_status >= 500;
}

}  // namespace

RawResponse Gateway::complete(const ModelSpec& spec, const PromptText& prompt) {
  const auto started = std::chrono::steady_clock::now();
  RawResponse out;
  out.record_id = prompt.record_id;
  out.model_id = spec.model_id;

  auto elapsed_ms = [&] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - started)
        .count();
  };

  const std::string key = cache_key(spec.model_id, prompt.text);
  if (cache_) {
    if (auto hit = cache_->lookup(key)) {
      out.text = std::move(*hit);
      out.status = ResponseStatus::ok;
      out.from_cache = true;
      out.latency_ms = elapsed_ms();
      return out;
    }
  }

  std::string api_key;
  // An empty api_key_env means the endpoint takes no credentials.
  if (backend_->needs_api_key() && !spec.api_key_env.empty()) {
    const char* value = std::getenv(spec.api_key_env.c_str());
    if (value == nullptr || *value == '\0') {
      throw AuthError("API key environment variable '" + spec.api_key_env +
                      "' is not set (model '" + spec.model_id + "')");
    }
    api_key = value;
  }

  Rng jitter_rng(derive_seed(static_cast<std::uint64_t>(started.time_since_epoch().count()), key));
  auto backoff = std::chrono::duration<double, std::milli>(retry_.initial_backoff);
  ChatReply reply;
  for (int attempt = 1;; ++attempt) {
    reply = backend_->send(spec, api_key, prompt.text);
    out.retry_count = attempt - 1;
    if (reply.http_status == 200) break;
    if (reply.http_status == 401 || reply.http_status == 403) {
      throw AuthError("model '" + spec.model_id + "' rejected credentials: " + reply.error);
    }
    if (!is_retryable(reply.http_status) || attempt >= retry_.max_attempts) {
      throw TransportError("model '" + spec.model_id + "' failed after " +
                           std::to_string(attempt) + " attempt(s): " + reply.error);
    }
    const double scale = 1.0 + retry_.jitter * (2.0 * jitter_rng.uniform01() - 1.0);
    sleeper_(std::chrono::milliseconds(static_cast<std::int64_t>(backoff.count() * scale)));
    backoff *= retry_.multiplier;
  }

  out.latency_ms = elapsed_ms();
  if (reply.content.empty()) {
    out.status = ResponseStatus::refusal_empty;
    return out;
  }
  if (cache_) {
    cache_->store({key, spec.model_id, reply.content, static_cast<std::int64_t>(std::time(nullptr))});
  }
  out.text = std::move(reply.content);
  out.status = ResponseStatus::ok;
  return out;
}

std::vector<RawResponse> Gateway::complete_batch(std::span<const ModelSpec> specs,
                                                 std::span<const PromptText> prompts) {
  std::vector<RawResponse> results(specs.size() * prompts.size());
  if (results.empty()) return results;

  std::vector<std::atomic<std::size_t>> cursors(specs.size());
  for (auto& c : cursors) c.store(0);

  auto worker = [&](std::size_t s) {
    const ModelSpec& spec = specs[s];
    while (true) {
      const std::size_t p = cursors[s].fetch_add(1);
      if (p >= prompts.size()) return;
      RawResponse& slot = results[s * prompts.size() + p];
      try {
        slot = complete(spec, prompts[p]);
      } catch (const std::exception& e) {
        slot = RawResponse{};
        slot.record_id = prompts[p].record_id;
        slot.model_id = spec.model_id;
        slot.status = ResponseStatus::transport_error;
        slot.error = e.what();
      }
    }
  };

  std::vector<std::jthread> threads;
  for (std::size_t s = 0; s < specs.size(); ++s) {
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, specs[s].max_parallel)),
                                         prompts.size());
    for (std::size_t t = 0; t < n; ++t) threads.emplace_back(worker, s);
  }
  threads.clear();  // joins
  return results;
}

std::vector<std::string> missing_api_keys(std::span<const ModelSpec> specs) {
  std::vector<std::string> missing;
  for (const auto& spec : specs) {
    if (spec.api_key_env.empty()) continue;
    const char* value = std::getenv(spec.api_key_env.c_str());
    if ((value == nullptr || *value == '\0') &&
        std::find(missing.begin(), missing.end(), spec.api_key_env) == missing.end()) {
      missing.push_back(spec.api_key_env);
    }
  }
  return missing;
}

}  // namespace nameprobe
