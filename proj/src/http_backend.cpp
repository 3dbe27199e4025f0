// Only translation unit that includes cpp-httplib.
#include <httplib.h>

#include "nameprobe/gateway.hpp"

namespace nameprobe {

HttpResult http_post_json(const std::string& base_url, std::string_view path,
                          const std::string& bearer_token, const std::string& body,
                          std::chrono::seconds timeout) {
  // Split "scheme://host[:port]/prefix" into the client origin and path prefix.
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    return {0, {}, "base_url '" + base_url + "' has no scheme"};
  }
  const auto path_start = base_url.find('/', scheme_end + 3);
  const std::string origin = base_url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

  httplib::Client client(origin);
  if (!client.is_valid()) return {0, {}, "unsupported base_url '" + base_url + "'"};
  client.set_connection_timeout(std::chrono::seconds(10));
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers headers;
  if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);

  auto res = client.Post(prefix + std::string(path), headers, body, "application/json");
  if (!res) return {0, {}, "http error: " + httplib::to_string(res.error())};
  return {res->status, res->body, {}};
}

ChatReply HttpChatBackend::send(const ModelSpec& spec, const std::string& api_key,
                                const std::string& prompt) {
  const auto result = http_post_json(spec.base_url, "/chat/completions", api_key,
                                     chat_request_body(spec.model_id, prompt), timeout_);
  ChatReply reply;
  reply.http_status = result.status;
  reply.error = result.error;
  if (result.status == 200) {
    const auto content = chat_response_content(result.body);
    if (!content) {
      reply.http_status = 502;
      reply.error = "malformed chat completion body";
    } else {
      reply.content = *content;
    }
  } else if (result.status != 0) {
    reply.error = "HTTP " + std::to_string(result.status) + ": " + result.body.substr(0, 200);
  }
  return reply;
}

}  // namespace nameprobe
