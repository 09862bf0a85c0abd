#pragma once

// Question generation through a pluggable chat-completion backend: an
// OpenAI-compatible HTTP client and a deterministic offline mock, plus the
// parse / validate / single-repair pipeline that turns model text into
// validated questions and leaves an audit record of every round-trip.

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <semaphore>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "automcq/mcq.hpp"
#include "automcq/prompt.hpp"

namespace automcq {

enum class BackendKind { openai_compatible, mock };

// Malformed-output injection for the mock backend.
enum class MockFault {
  none,
  truncate,         // first attempt malformed, repair attempt valid
  always_truncate,  // every attempt malformed
};

std::optional<BackendKind> parse_backend_kind(std::string_view text);
std::optional<MockFault> parse_mock_fault(std::string_view text);

inline constexpr std::string_view kDefaultModel = "gpt-4o-mini";
inline constexpr std::string_view kDefaultApiKeyVariable = "AUTOMCQ_API_KEY";
inline constexpr std::string_view kDefaultOpenAiBaseUrl = "https://api.openai.com/v1";

struct BackendConfig {
  BackendKind kind = BackendKind::mock;
  std::string base_url;
  std::string model_name{kDefaultModel};
  std::string api_key_source{kDefaultApiKeyVariable};
  std::chrono::milliseconds timeout{60'000};
  int max_parallel = 4;
  std::optional<double> temperature;
  std::chrono::milliseconds rate_limit_backoff{2'000};
  MockFault mock_fault = MockFault::none;

  // Empty when the invariants hold.
  std::vector<Issue> validate() const;
};

enum class BackendErrorCode { timeout, http_error, auth_missing, rate_limited };

std::string_view to_string(BackendErrorCode code);

class BackendError : public std::runtime_error {
 public:
  BackendError(BackendErrorCode code, std::string message, int http_status = 0);

  BackendErrorCode code() const noexcept { return code_; }
  int http_status() const noexcept { return http_status_; }

 private:
  BackendErrorCode code_;
  int http_status_;
};

class Backend {
 public:
  virtual ~Backend() = default;
  // Returns the raw completion text or throws BackendError.
  virtual std::string complete(std::span<const PromptMessage> messages) = 0;
};

// Recovers the request from the user prompt and answers with
// mock_generate. In truncate mode the first attempt (no repair message
// present) is malformed; stateless, so identical messages give identical text.
class MockBackend final : public Backend {
 public:
  explicit MockBackend(MockFault fault = MockFault::none) : fault_(fault) {}
  std::string complete(std::span<const PromptMessage> messages) override;

 private:
  MockFault fault_;
};

// POST {base_url}/chat/completions with bearer auth.
class OpenAiBackend final : public Backend {
 public:
  explicit OpenAiBackend(BackendConfig config);
  std::string complete(std::span<const PromptMessage> messages) override;

 private:
  BackendConfig config_;
};

std::unique_ptr<Backend> make_backend(const BackendConfig &config);

// Deterministic in (student_code, topics, num_questions); see MockBackend.
std::string mock_generate(const GenerationRequest &request);
std::string mock_generate_malformed(const GenerationRequest &request);

// Declared names in the student-authored lines: identifiers that follow a
// type keyword (class, struct, def, ...) or precede '(' and are not
// language keywords. First-appearance order, no duplicates.
std::vector<std::string> extract_identifiers(const std::optional<std::string> &provided_code,
                                             std::string_view student_code);

namespace codes {
inline constexpr std::string_view kParseFailure = "PARSE_FAILURE";
inline constexpr std::string_view kCountMismatch = "COUNT_MISMATCH";
inline constexpr std::string_view kMalformedRecord = "MALFORMED_RECORD";
inline constexpr std::string_view kGenerationFailed = "GENERATION_FAILED";
}  // namespace codes

struct ParseResult {
  std::vector<RawQuestion> records;
  std::vector<Issue> errors;
};

// Total over arbitrary input; never throws.
ParseResult parse_questions(std::string_view raw, int expected_count);

enum class ParseOutcome { ok, repaired, failed };

std::string_view to_string(ParseOutcome outcome);

struct LlmExchange {
  std::string exchange_id;
  std::string context;  // what triggered the call, e.g. the student ref
  std::vector<PromptMessage> messages;
  std::string raw_response;  // final attempt
  ParseOutcome parse_outcome = ParseOutcome::failed;
  int attempts = 0;
  std::chrono::milliseconds latency{0};
  std::vector<Issue> issues;
  std::optional<std::string> backend_error;
  Timestamp created_at{};
};

nlohmann::json exchange_to_json(const LlmExchange &exchange);

class GenerationError : public std::runtime_error {
 public:
  GenerationError(std::vector<Issue> issues, LlmExchange exchange);

  const std::vector<Issue> &issues() const noexcept { return issues_; }
  const LlmExchange &exchange() const noexcept { return exchange_; }

 private:
  std::vector<Issue> issues_;
  LlmExchange exchange_;
};

struct Generation {
  std::vector<MCQuestion> questions;
  LlmExchange exchange;
};

using ExchangeSink = std::function<void(const LlmExchange &)>;

// Owns the backend and bounds in-flight completions to max_parallel.
// Every generate() call hands exactly one LlmExchange to the sink before
// returning or throwing.
class QuestionGenerator {
 public:
  QuestionGenerator(BackendConfig config, std::unique_ptr<Backend> backend, ExchangeSink sink = {});
  explicit QuestionGenerator(const BackendConfig &config, ExchangeSink sink = {});

  // Throws GenerationError after the repair round fails; BackendError
  // passes through (after the exchange is recorded).
  Generation generate(const GenerationRequest &request);

  const BackendConfig &config() const noexcept { return config_; }

 private:
  std::string complete_gated(std::span<const PromptMessage> messages);

  BackendConfig config_;
  std::unique_ptr<Backend> backend_;
  ExchangeSink sink_;
  std::counting_semaphore<> gate_;
};

// One-shot convenience over QuestionGenerator for callers without a
// long-lived generator.
Generation generate_questions(const BackendConfig &config, const GenerationRequest &request,
                              ExchangeSink sink = {});

}  // namespace automcq
