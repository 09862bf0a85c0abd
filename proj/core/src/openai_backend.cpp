#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "automcq/llm.hpp"

namespace automcq {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // no trailing slash
};

Endpoint split_base_url(const std::string &base_url) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw BackendError(BackendErrorCode::http_error, "base_url '" + base_url + "' has no scheme");
  }
  const auto path_start = base_url.find('/', scheme_end + 3);
  Endpoint endpoint;
  endpoint.origin = base_url.substr(0, path_start);
  endpoint.path = path_start == std::string::npos ? "" : base_url.substr(path_start);
  while (!endpoint.path.empty() && endpoint.path.back() == '/') endpoint.path.pop_back();
  return endpoint;
}

}  // namespace

OpenAiBackend::OpenAiBackend(BackendConfig config) : config_(std::move(config)) {}

std::string OpenAiBackend::complete(std::span<const PromptMessage> messages) {
  const char *key = std::getenv(config_.api_key_source.c_str());
  if (key == nullptr || *key == '\0') {
    throw BackendError(BackendErrorCode::auth_missing,
                       "environment variable " + config_.api_key_source + " is not set");
  }
  const auto endpoint = split_base_url(config_.base_url);

  nlohmann::json body{{"model", config_.model_name}, {"messages", nlohmann::json::array()}};
  for (const auto &message : messages) {
    body["messages"].push_back({{"role", to_string(message.role)}, {"content", message.content}});
  }
  if (config_.temperature) body["temperature"] = *config_.temperature;
  const auto payload = body.dump();

  httplib::Client client(endpoint.origin);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  client.set_bearer_token_auth(key);

  for (int attempt = 0;; ++attempt) {
    auto response = client.Post(endpoint.path + "/chat/completions", payload, "application/json");
    if (!response) {
      const auto error = response.error();
      if (error == httplib::Error::Read || error == httplib::Error::ConnectionTimeout) {
        throw BackendError(BackendErrorCode::timeout, "no response within the configured timeout");
      }
      throw BackendError(BackendErrorCode::http_error,
                         "request to " + endpoint.origin + " failed: " + httplib::to_string(error));
    }
    if (response->status == 429) {
      if (attempt == 0) {
        std::this_thread::sleep_for(config_.rate_limit_backoff);
        continue;
      }
      throw BackendError(BackendErrorCode::rate_limited, "still rate limited after one retry", 429);
    }
    if (response->status < 200 || response->status >= 300) {
      throw BackendError(BackendErrorCode::http_error,
                         "backend answered HTTP " + std::to_string(response->status),
                         response->status);
    }
    auto parsed = nlohmann::json::parse(response->body, nullptr, false);
    const auto pointer = "/choices/0/message/content"_json_pointer;
    if (!parsed.is_discarded() && parsed.contains(pointer) && parsed.at(pointer).is_string()) {
      return parsed.at(pointer).get<std::string>();
    }
    throw BackendError(BackendErrorCode::http_error,
                       "response has no choices[0].message.content", response->status);
  }
}

}  // namespace automcq
