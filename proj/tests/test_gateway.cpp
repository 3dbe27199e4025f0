#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <mutex>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <json.hpp>

#include "nameprobe/gateway.hpp"

using namespace nameprobe;
using nlohmann::json;

namespace {

// Local chat-completions stub. The handler decides each reply from the
// request's prompt text.
class StubServer {
 public:
  using Handler = std::function<std::pair<int, std::string>(const std::string& prompt, const json& body,
                                                            const httplib::Request& req)>;

  explicit StubServer(Handler handler) : handler_(std::move(handler)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const json body = json::parse(req.body);
      const std::string prompt = body.at("messages").at(0).at("content");
      ++requests_;
      const auto [status, content] = handler_(prompt, body, req);
      res.status = status;
      if (status == 200) {
        const json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}};
        res.set_content(reply.dump(), "application/json");
      } else {
        res.set_content(R"({"error":"scripted"})", "application/json");
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  int requests() const { return requests_; }

 private:
  Handler handler_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
};

ModelSpec spec_for(const std::string& base_url, int parallel = 1) {
  ModelSpec s;
  s.model_id = "stub-model";
  s.base_url = base_url;
  s.max_parallel = parallel;
  return s;
}

Gateway quiet_gateway(std::shared_ptr<ChatBackend> backend, std::shared_ptr<ResponseCache> cache = nullptr,
                      std::vector<std::chrono::milliseconds>* sleeps = nullptr) {
  Gateway g(std::move(backend), cache ? cache : std::make_shared<ResponseCache>());
  g.set_sleeper([sleeps](std::chrono::milliseconds d) {
    if (sleeps) sleeps->push_back(d);
  });
  return g;
}

PromptText prompt(const std::string& text, const std::string& id = "r") { return {text, "test", id}; }

// Scripted in-process backend that records concurrency.
class CountingBackend : public ChatBackend {
 public:
  ChatReply send(const ModelSpec& spec, const std::string&, const std::string& p) override {
    {
      std::lock_guard lock(mutex_);
      const int now = ++in_flight_[spec.model_id];
      peak_[spec.model_id] = std::max(peak_[spec.model_id], now);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
    {
      std::lock_guard lock(mutex_);
      --in_flight_[spec.model_id];
    }
    ++calls_;
    if (p == "fail") return {503, {}, "down"};
    return {200, spec.model_id + ":" + p, {}};
  }
  bool needs_api_key() const override { return false; }

  int peak(const std::string& m) {
    std::lock_guard lock(mutex_);
    return peak_[m];
  }
  int calls() const { return calls_; }

 private:
  std::mutex mutex_;
  std::map<std::string, int> in_flight_;
  std::map<std::string, int> peak_;
  std::atomic<int> calls_{0};
};

}  // namespace

TEST(Wire, RequestBodyShape) {
  const json body = json::parse(chat_request_body("gpt-x", "Hello"));
  EXPECT_EQ(body.at("model"), "gpt-x");
  EXPECT_EQ(body.at("temperature"), 0);
  ASSERT_EQ(body.at("messages").size(), 1u);
  EXPECT_EQ(body.at("messages")[0].at("role"), "user");
  EXPECT_EQ(body.at("messages")[0].at("content"), "Hello");
  EXPECT_EQ(chat_response_content(R"({"choices":[{"message":{"content":"hi"}}]})"), "hi");
  EXPECT_EQ(chat_response_content(R"({"choices":[{"message":{"content":null}}]})").value_or(""), "");
  EXPECT_EQ(chat_response_content("garbage").value_or(""), "");
}

TEST(HttpGateway, RetriesTwoRateLimitsThenSucceeds) {
  std::atomic<int> n{0};
  std::string seen_auth;
  StubServer server([&](const std::string&, const json& body, const httplib::Request& req) {
    EXPECT_EQ(body.at("temperature"), 0);
    seen_auth = req.get_header_value("Authorization");
    return ++n <= 2 ? std::pair{429, std::string()} : std::pair{200, std::string("Gender: F")};
  });
  std::vector<std::chrono::milliseconds> sleeps;
  auto cache = std::make_shared<ResponseCache>();
  auto g = quiet_gateway(std::make_shared<HttpChatBackend>(std::chrono::seconds(5)), cache, &sleeps);
  auto spec = spec_for(server.base_url());
  ::setenv("NAMEPROBE_TEST_KEY", "sk-test", 1);
  spec.api_key_env = "NAMEPROBE_TEST_KEY";
  const auto r = g.complete(spec, prompt("Who?"));
  EXPECT_EQ(r.status, ResponseStatus::ok);
  EXPECT_EQ(r.text, "Gender: F");
  EXPECT_EQ(r.retry_count, 2);
  EXPECT_FALSE(r.from_cache);
  EXPECT_EQ(server.requests(), 3);
  EXPECT_EQ(seen_auth, "Bearer sk-test");
  // Backoff starts at 1s and doubles, each within +/-20%.
  ASSERT_EQ(sleeps.size(), 2u);
  EXPECT_GE(sleeps[0].count(), 800);
  EXPECT_LE(sleeps[0].count(), 1200);
  EXPECT_GE(sleeps[1].count(), 1600);
  EXPECT_LE(sleeps[1].count(), 2400);

  // Persisted before returning: the second call never reaches the server.
  const auto again = g.complete(spec, prompt("Who?"));
  EXPECT_TRUE(again.from_cache);
  EXPECT_EQ(again.text, "Gender: F");
  EXPECT_EQ(server.requests(), 3);
}

TEST(HttpGateway, ExhaustedRetriesAndNonRetryableStatuses) {
  StubServer server([](const std::string& p, const json&, const httplib::Request&) {
    if (p == "auth") return std::pair{401, std::string()};
    if (p == "bad") return std::pair{400, std::string()};
    if (p == "empty") return std::pair{200, std::string()};
    return std::pair{500, std::string()};
  });
  auto g = quiet_gateway(std::make_shared<HttpChatBackend>(std::chrono::seconds(5)));
  const auto spec = spec_for(server.base_url());
  EXPECT_THROW(g.complete(spec, prompt("down")), TransportError);
  EXPECT_EQ(server.requests(), 3);
  EXPECT_THROW(g.complete(spec, prompt("auth")), AuthError);
  EXPECT_EQ(server.requests(), 4);
  EXPECT_THROW(g.complete(spec, prompt("bad")), TransportError);
  EXPECT_EQ(server.requests(), 5);
  EXPECT_EQ(g.complete(spec, prompt("empty")).status, ResponseStatus::refusal_empty);
}

TEST(HttpGateway, ConnectionRefusedIsTransportError) {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  auto g = quiet_gateway(std::make_shared<HttpChatBackend>(std::chrono::seconds(2)));
  const auto spec = spec_for("http://127.0.0.1:" + std::to_string(port) + "/v1");
  EXPECT_THROW(g.complete(spec, prompt("x")), TransportError);
}

TEST(HttpGateway, MissingKeyIsAuthError) {
  ::unsetenv("NAMEPROBE_ABSENT_KEY");
  auto g = quiet_gateway(std::make_shared<HttpChatBackend>());
  auto spec = spec_for("http://127.0.0.1:9/v1");
  spec.api_key_env = "NAMEPROBE_ABSENT_KEY";
  try {
    g.complete(spec, prompt("x"));
    FAIL();
  } catch (const AuthError& e) {
    EXPECT_NE(std::string(e.what()).find("NAMEPROBE_ABSENT_KEY"), std::string::npos);
  }
  const std::vector<ModelSpec> specs = {spec, spec};
  EXPECT_EQ(missing_api_keys(specs), std::vector<std::string>{"NAMEPROBE_ABSENT_KEY"});
}

TEST(HttpGateway, BatchBoundsConcurrencyAndIsolatesFailures) {
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};
  StubServer server([&](const std::string& p, const json&, const httplib::Request&) {
    const int now = ++in_flight;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --in_flight;
    if (p == "prompt-37") return std::pair{503, std::string()};
    return std::pair{200, "echo " + p};
  });
  auto g = quiet_gateway(std::make_shared<HttpChatBackend>(std::chrono::seconds(5)));
  const std::vector<ModelSpec> specs = {spec_for(server.base_url(), 4)};
  std::vector<PromptText> prompts;
  for (int i = 0; i < 100; ++i) prompts.push_back(prompt("prompt-" + std::to_string(i), std::to_string(i)));
  const auto out = g.complete_batch(specs, prompts);
  ASSERT_EQ(out.size(), 100u);
  EXPECT_LE(peak.load(), 4);
  EXPECT_GE(peak.load(), 2);
  int ok = 0;
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(out[i].record_id, std::to_string(i));
    if (i == 37) {
      EXPECT_EQ(out[i].status, ResponseStatus::transport_error);
      EXPECT_FALSE(out[i].error.empty());
    } else {
      EXPECT_EQ(out[i].text, "echo prompt-" + std::to_string(i));
      ok += out[i].status == ResponseStatus::ok;
    }
  }
  EXPECT_EQ(ok, 99);
}

TEST(Batch, PerSpecPeakAndOrdering) {
  auto backend = std::make_shared<CountingBackend>();
  auto g = quiet_gateway(backend);
  ModelSpec a = spec_for("", 4);
  a.model_id = "a";
  ModelSpec b = spec_for("", 2);
  b.model_id = "b";
  const std::vector<ModelSpec> specs = {a, b};
  std::vector<PromptText> prompts;
  for (int i = 0; i < 40; ++i) prompts.push_back(prompt("p" + std::to_string(i), std::to_string(i)));
  const auto out = g.complete_batch(specs, prompts);
  ASSERT_EQ(out.size(), 80u);
  for (std::size_t s = 0; s < 2; ++s) {
    for (std::size_t p = 0; p < prompts.size(); ++p) {
      const auto& r = out[s * prompts.size() + p];
      EXPECT_EQ(r.model_id, specs[s].model_id);
      EXPECT_EQ(r.text, specs[s].model_id + ":p" + std::to_string(p));
    }
  }
  EXPECT_LE(backend->peak("a"), 4);
  EXPECT_LE(backend->peak("b"), 2);
  EXPECT_TRUE(g.complete_batch(specs, std::vector<PromptText>{}).empty());
}

TEST(Batch, WarmCacheMakesNoCalls) {
  auto backend = std::make_shared<CountingBackend>();
  auto cache = std::make_shared<ResponseCache>();
  auto g = quiet_gateway(backend, cache);
  ModelSpec a = spec_for("", 3);
  a.model_id = "a";
  const std::vector<ModelSpec> specs = {a};
  std::vector<PromptText> prompts;
  for (int i = 0; i < 10; ++i) prompts.push_back(prompt("p" + std::to_string(i)));
  const auto first = g.complete_batch(specs, prompts);
  const int calls = backend->calls();
  const auto second = g.complete_batch(specs, prompts);
  EXPECT_EQ(backend->calls(), calls);
  for (std::size_t i = 0; i < first.size(); ++i) {
    EXPECT_EQ(first[i].text, second[i].text);
    EXPECT_TRUE(second[i].from_cache);
  }
}

TEST(Replay, ServesFixturesByteExact) {
  auto fixtures = std::make_shared<ResponseCache>();
  const std::string text = "  Gender: **M**\r\nRace: Other  ";
  fixtures->store({cache_key("m", "prompt one"), "m", text, 0});
  auto g = quiet_gateway(std::make_shared<ReplayBackend>(fixtures));
  ModelSpec spec = spec_for("");
  spec.model_id = "m";
  spec.api_key_env = "NAMEPROBE_NEVER_SET";
  const auto r = g.complete(spec, prompt("prompt one"));
  EXPECT_EQ(r.status, ResponseStatus::ok);
  EXPECT_EQ(r.text, text);
  EXPECT_THROW(g.complete(spec, prompt("prompt two")), TransportError);
}

TEST(ModelSpec, Validation) {
  ModelSpec s = spec_for("");
  s.vote_weight = 1.5;
  EXPECT_THROW(s.validate(), Error);
  s.vote_weight = 0.5;
  s.max_parallel = 0;
  EXPECT_THROW(s.validate(), Error);
  s.max_parallel = 1;
  EXPECT_NO_THROW(s.validate());
}
