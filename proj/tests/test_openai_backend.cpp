#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "automcq/llm.hpp"
#include "automcq/prompt.hpp"
#include "support/test_support.hpp"

using namespace automcq;

namespace {

// A chat-completions endpoint on localhost whose reply is chosen per test.
class FakeProvider {
 public:
  using Reply = std::function<void(const httplib::Request &, httplib::Response &)>;

  explicit FakeProvider(Reply reply) : reply_(std::move(reply)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request &req, httplib::Response &res) {
      ++hits;
      last_body = req.body;
      last_auth = req.get_header_value("Authorization");
      reply_(req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeProvider() {
    server_.stop();
    thread_.join();
  }

  BackendConfig config() const {
    BackendConfig c;
    c.kind = BackendKind::openai_compatible;
    c.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1/";
    c.api_key_source = "AUTOMCQ_TEST_KEY";
    c.model_name = "test-model";
    c.timeout = std::chrono::milliseconds(2000);
    c.rate_limit_backoff = std::chrono::milliseconds(10);
    return c;
  }

  std::atomic<int> hits{0};
  std::string last_body;
  std::string last_auth;

 private:
  Reply reply_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

std::string completion(const std::string &content) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}
      .dump();
}

std::vector<PromptMessage> messages() {
  return {build_system_prompt(), build_user_prompt(automcq::testing::flat_request())};
}

BackendErrorCode failure_code(Backend &backend) {
  try {
    backend.complete(messages());
  } catch (const BackendError &e) {
    return e.code();
  }
  FAIL("expected BackendError");
  return BackendErrorCode::http_error;
}

struct KeySet {
  KeySet() { ::setenv("AUTOMCQ_TEST_KEY", "sk-test", 1); }
  ~KeySet() { ::unsetenv("AUTOMCQ_TEST_KEY"); }
};

}  // namespace

TEST_CASE("sends model, messages and bearer key; returns the content") {
  KeySet key;
  FakeProvider provider([](const httplib::Request &, httplib::Response &res) {
    res.set_content(completion("[1]"), "application/json");
  });
  OpenAiBackend backend(provider.config());
  CHECK(backend.complete(messages()) == "[1]");
  CHECK(provider.last_auth == "Bearer sk-test");
  const auto body = nlohmann::json::parse(provider.last_body);
  CHECK(body.at("model") == "test-model");
  CHECK(body.at("messages").size() == 2);
  CHECK(body.at("messages")[0].at("role") == "system");
  CHECK(body.at("messages")[0].at("content") == build_system_prompt().content);
  CHECK_FALSE(body.contains("temperature"));
}

TEST_CASE("temperature is sent only when configured") {
  KeySet key;
  FakeProvider provider([](const httplib::Request &, httplib::Response &res) {
    res.set_content(completion("ok"), "application/json");
  });
  auto config = provider.config();
  config.temperature = 0.25;
  OpenAiBackend backend(config);
  backend.complete(messages());
  CHECK(nlohmann::json::parse(provider.last_body).at("temperature") == 0.25);
}

TEST_CASE("HTTP errors keep their status") {
  KeySet key;
  FakeProvider provider([](const httplib::Request &, httplib::Response &res) {
    res.status = 401;
    res.set_content("{}", "application/json");
  });
  OpenAiBackend backend(provider.config());
  try {
    backend.complete(messages());
    FAIL("expected BackendError");
  } catch (const BackendError &e) {
    CHECK(e.code() == BackendErrorCode::http_error);
    CHECK(e.http_status() == 401);
  }
}

TEST_CASE("a single 429 is retried") {
  KeySet key;
  std::atomic<int> calls{0};
  FakeProvider provider([&calls](const httplib::Request &, httplib::Response &res) {
    if (calls++ == 0) {
      res.status = 429;
      return;
    }
    res.set_content(completion("after retry"), "application/json");
  });
  OpenAiBackend backend(provider.config());
  CHECK(backend.complete(messages()) == "after retry");
  CHECK(provider.hits == 2);
}

TEST_CASE("persistent 429 is rate limited") {
  KeySet key;
  FakeProvider provider([](const httplib::Request &, httplib::Response &res) { res.status = 429; });
  OpenAiBackend backend(provider.config());
  CHECK(failure_code(backend) == BackendErrorCode::rate_limited);
  CHECK(provider.hits == 2);
}

TEST_CASE("slow provider times out") {
  KeySet key;
  FakeProvider provider([](const httplib::Request &, httplib::Response &res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(600));
    res.set_content(completion("late"), "application/json");
  });
  auto config = provider.config();
  config.timeout = std::chrono::milliseconds(150);
  OpenAiBackend backend(config);
  CHECK(failure_code(backend) == BackendErrorCode::timeout);
}

TEST_CASE("bodies without a message content") {
  KeySet key;
  for (const std::string body : {"not json", "{}", R"({"choices":"x"})", R"({"choices":[]})",
                                 R"({"choices":[{"message":{"content":7}}]})"}) {
    FakeProvider provider([body](const httplib::Request &, httplib::Response &res) {
      res.set_content(body, "application/json");
    });
    OpenAiBackend backend(provider.config());
    CHECK(failure_code(backend) == BackendErrorCode::http_error);
  }
}

TEST_CASE("missing key is reported without contacting the provider") {
  ::unsetenv("AUTOMCQ_TEST_KEY");
  FakeProvider provider([](const httplib::Request &, httplib::Response &res) {
    res.set_content(completion("x"), "application/json");
  });
  OpenAiBackend backend(provider.config());
  CHECK(failure_code(backend) == BackendErrorCode::auth_missing);
  CHECK(provider.hits == 0);
}

TEST_CASE("generator over the HTTP backend") {
  KeySet key;
  const auto reply = mock_generate(automcq::testing::flat_request());
  FakeProvider provider([reply](const httplib::Request &, httplib::Response &res) {
    res.set_content(completion("```json\n" + reply + "\n```"), "application/json");
  });
  QuestionGenerator generator(provider.config());
  auto generation = generator.generate(automcq::testing::flat_request());
  CHECK(generation.questions.size() == 2);
  CHECK(generation.exchange.parse_outcome == ParseOutcome::ok);
}
