#include "automcq/llm.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace automcq {

using json = nlohmann::json;

std::optional<BackendKind> parse_backend_kind(std::string_view text) {
  if (text == "mock") return BackendKind::mock;
  if (text == "openai" || text == "openai_compatible") return BackendKind::openai_compatible;
  return std::nullopt;
}

std::optional<MockFault> parse_mock_fault(std::string_view text) {
  if (text.empty() || text == "none") return MockFault::none;
  if (text == "truncate") return MockFault::truncate;
  if (text == "always_truncate") return MockFault::always_truncate;
  return std::nullopt;
}

std::vector<Issue> BackendConfig::validate() const {
  std::vector<Issue> issues;
  if (kind == BackendKind::openai_compatible) {
    if (base_url.empty()) {
      issues.push_back({"INVALID_BACKEND_CONFIG", "base_url is required"});
    } else if (base_url.rfind("http://", 0) != 0 && base_url.rfind("https://", 0) != 0) {
      issues.push_back({"INVALID_BACKEND_CONFIG", "base_url must start with http:// or https://"});
    }
    if (api_key_source.empty()) {
      issues.push_back({"INVALID_BACKEND_CONFIG", "api_key_source is required"});
    }
  }
  if (timeout <= std::chrono::milliseconds::zero()) {
    issues.push_back({"INVALID_BACKEND_CONFIG", "timeout must be positive"});
  }
  if (max_parallel < 1) issues.push_back({"INVALID_BACKEND_CONFIG", "max_parallel must be >= 1"});
  if (temperature && !(*temperature >= 0.0 && *temperature <= 2.0)) {
    issues.push_back({"INVALID_BACKEND_CONFIG", "temperature must be within [0, 2]"});
  }
  return issues;
}

std::string_view to_string(BackendErrorCode code) {
  switch (code) {
    case BackendErrorCode::timeout: return "TIMEOUT";
    case BackendErrorCode::http_error: return "HTTP_ERROR";
    case BackendErrorCode::auth_missing: return "AUTH_MISSING";
    case BackendErrorCode::rate_limited: return "RATE_LIMITED";
  }
  return "BACKEND_ERROR";
}

BackendError::BackendError(BackendErrorCode code, std::string message, int http_status)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      http_status_(http_status) {}

// --- mock generation ------------------------------------------------------

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

const std::unordered_set<std::string_view> &keywords() {
  static const std::unordered_set<std::string_view> kWords{
      "if",     "else",   "for",     "while",  "do",       "switch", "case",   "return",
      "super",  "this",   "self",    "new",    "delete",   "catch",  "try",    "throw",
      "sizeof", "typeof", "and",     "or",     "not",      "in",     "is",     "lambda",
      "elif",   "with",   "assert",  "yield",  "await",    "async",  "public", "private",
      "static", "void",   "int",     "double", "float",    "char",   "bool",   "boolean",
      "long",   "short",  "const",   "final",  "function", "def",    "class",  "struct",
      "import", "from",   "package", "using",  "namespace"};
  return kWords;
}

bool is_type_keyword(std::string_view word) {
  static constexpr std::array<std::string_view, 11> kTypeWords{
      "class", "struct", "interface", "enum", "record", "trait", "def", "fn", "func", "function", "union"};
  return std::find(kTypeWords.begin(), kTypeWords.end(), word) != kTypeWords.end();
}

// Drops string/char literals and line comments so they do not yield names.
std::string strip_literals(std::string_view line) {
  std::string out;
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote != 0) {
      if (c == '\\') {
        ++i;
      } else if (c == quote) {
        quote = 0;
        out.push_back(' ');
      }
      continue;
    }
    if (c == '"' || c == '\'') {
      quote = c;
      continue;
    }
    if (c == '#' || (c == '/' && i + 1 < line.size() && line[i + 1] == '/')) break;
    out.push_back(c);
  }
  return out;
}

std::size_t count_word(std::string_view text, std::string_view word) {
  std::size_t count = 0;
  for (auto pos = text.find(word); pos != std::string_view::npos; pos = text.find(word, pos + 1)) {
    const bool left_ok = pos == 0 || !is_ident_char(text[pos - 1]);
    const auto end = pos + word.size();
    const bool right_ok = end >= text.size() || !is_ident_char(text[end]);
    if (left_ok && right_ok) ++count;
  }
  return count;
}

struct MockQuestion {
  std::string stem;
  std::string correct;
  std::vector<std::string> distractors;
  std::string explanation;
};

MockQuestion make_mock_question(int kind, const std::string &subject, const std::string &topic,
                                const std::string &language, std::size_t occurrences) {
  const auto quoted = "`" + subject + "`";
  switch (kind) {
    case 0:
      return {"What best describes " + quoted + " in the code you wrote?",
              "It is a name declared or used in your own submission",
              {"It is a keyword reserved by the " + language + " language",
               "It is defined only in the provided starter code",
               "It is a constant supplied by the standard library"},
              quoted + " appears in lines that you wrote yourself."};
    case 1: {
      static const std::array<std::string, 6> kPool{"file input and output", "recursion",
                                                    "exception handling", "string formatting",
                                                    "sorting algorithms", "networking"};
      const auto correct = topic.empty() ? std::string("general program structure") : topic;
      std::vector<std::string> distractors;
      for (const auto &candidate : kPool) {
        if (distractors.size() == 3) break;
        if (normalize_for_compare(candidate) != normalize_for_compare(correct)) {
          distractors.push_back(candidate);
        }
      }
      return {"Which topic does your use of " + quoted + " most closely relate to?", correct,
              std::move(distractors),
              "The way " + quoted + " is used in your code relates to " + correct + "."};
    }
    case 2:
      return {"If " + quoted + " were renamed in only one of the places it appears, what would happen?",
              "The code would no longer compile or would fail when run",
              {"Nothing, because names are not checked",
               "Only a warning would be printed and the program would behave the same",
               "The program would run faster"},
              "Every use of a name must refer to a matching declaration."};
    default: {
      const auto n = occurrences;
      std::vector<std::string> distractors{std::to_string(n + 1), std::to_string(n + 2),
                                           std::to_string(n == 0 ? n + 3 : n - 1)};
      return {"How many times does " + quoted + " appear in the lines you wrote?", std::to_string(n),
              std::move(distractors),
              quoted + " appears " + std::to_string(n) + " time(s) in your own lines."};
    }
  }
}

}  // namespace

std::vector<std::string> extract_identifiers(const std::optional<std::string> &provided_code,
                                             std::string_view student_code) {
  std::vector<std::string> names;
  std::unordered_set<std::string> seen;
  const auto lines = split_lines(student_code);
  for (auto index : student_authored_lines(provided_code, student_code)) {
    const auto line = strip_literals(lines[index]);
    std::string previous;
    std::size_t i = 0;
    while (i < line.size()) {
      if (!is_ident_start(line[i])) {
        if (!std::isspace(static_cast<unsigned char>(line[i]))) previous.clear();
        ++i;
        continue;
      }
      auto end = i;
      while (end < line.size() && is_ident_char(line[end])) ++end;
      std::string word = line.substr(i, end - i);
      auto next = end;
      while (next < line.size() && std::isspace(static_cast<unsigned char>(line[next]))) ++next;
      const bool call_like = next < line.size() && line[next] == '(';
      const bool declared = is_type_keyword(previous);
      if ((declared || call_like) && keywords().count(word) == 0 && seen.insert(word).second) {
        names.push_back(word);
      }
      previous = std::move(word);
      i = end;
    }
  }
  return names;
}

std::string mock_generate(const GenerationRequest &request) {
  std::uint64_t hash = fnv1a64(request.student_code);
  for (const auto &topic : request.topics) {
    hash = fnv1a64("\x1f", hash);
    hash = fnv1a64(topic, hash);
  }
  hash = fnv1a64("\x1e" + std::to_string(request.num_questions), hash);

  const auto names = extract_identifiers(request.provided_code, request.student_code);
  std::string authored_text;
  {
    const auto lines = split_lines(request.student_code);
    for (auto index : student_authored_lines(request.provided_code, request.student_code)) {
      authored_text.append(strip_literals(lines[index])).push_back('\n');
    }
  }

  json questions = json::array();
  const int count = std::max(0, request.num_questions);
  for (int i = 0; i < count; ++i) {
    const auto mix = hash ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(i + 1));
    const std::string subject =
        names.empty() ? std::string("your submission") : names[(hash + i) % names.size()];
    const std::string topic =
        request.topics.empty() ? std::string() : request.topics[i % request.topics.size()];
    const int kind = names.empty() ? 1 : static_cast<int>((i + (hash >> 17)) % 4);
    auto q = make_mock_question(kind, subject, topic, request.language,
                                count_word(authored_text, subject));

    const auto correct_index = static_cast<int>((mix >> 29) % 4);
    std::vector<std::string> options = q.distractors;
    options.insert(options.begin() + correct_index, q.correct);

    questions.push_back(json{{"stem", q.stem},
                             {"options", options},
                             {"correct_index", correct_index},
                             {"explanation", q.explanation},
                             {"topic", topic}});
  }
  return questions.dump(2);
}

std::string mock_generate_malformed(const GenerationRequest &request) {
  const auto valid = mock_generate(request);
  return "Here are your questions:\n" + valid.substr(0, valid.size() / 2);
}

std::string MockBackend::complete(std::span<const PromptMessage> messages) {
  const auto user = std::find_if(messages.begin(), messages.end(),
                                 [](const PromptMessage &m) { return m.role == PromptRole::user; });
  if (user == messages.end()) return "I did not receive a question request.";
  const auto request = parse_user_prompt(user->content);
  if (!request) return "I could not read the question request.";

  const bool is_repair = std::next(user) != messages.end();
  const bool malformed = fault_ == MockFault::always_truncate ||
                         (fault_ == MockFault::truncate && !is_repair);
  return malformed ? mock_generate_malformed(*request) : mock_generate(*request);
}

std::unique_ptr<Backend> make_backend(const BackendConfig &config) {
  if (config.kind == BackendKind::mock) return std::make_unique<MockBackend>(config.mock_fault);
  return std::make_unique<OpenAiBackend>(config);
}

// --- parsing --------------------------------------------------------------

namespace {

// End (one past) of the bracketed value starting at text[start], honouring
// JSON strings; npos when unbalanced.
std::size_t match_brackets(std::string_view text, std::size_t start) {
  std::string expected;
  bool in_string = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    switch (c) {
      case '"': in_string = true; break;
      case '[': expected.push_back(']'); break;
      case '{': expected.push_back('}'); break;
      case ']':
      case '}':
        if (expected.empty() || expected.back() != c) return std::string_view::npos;
        expected.pop_back();
        if (expected.empty()) return i + 1;
        break;
      default: break;
    }
  }
  return std::string_view::npos;
}

std::optional<json> first_object_array(std::string_view raw) {
  for (auto pos = raw.find('['); pos != std::string_view::npos; pos = raw.find('[', pos + 1)) {
    const auto end = match_brackets(raw, pos);
    if (end == std::string_view::npos) continue;
    auto candidate = json::parse(raw.begin() + pos, raw.begin() + end, nullptr, false);
    if (candidate.is_discarded() || !candidate.is_array()) continue;
    const bool objects = std::all_of(candidate.begin(), candidate.end(),
                                     [](const json &item) { return item.is_object(); });
    if (objects) return candidate;
  }
  return std::nullopt;
}

std::optional<std::string> record_from_json(const json &item, RawQuestion &out) {
  auto stem = item.find("stem");
  if (stem == item.end() || !stem->is_string()) return "\"stem\" must be a string";
  out.stem = stem->get<std::string>();

  auto options = item.find("options");
  if (options == item.end() || !options->is_array()) return "\"options\" must be an array";
  for (const auto &option : *options) {
    if (!option.is_string()) return "\"options\" must contain only strings";
    out.options.push_back(option.get<std::string>());
  }

  auto index = item.find("correct_index");
  if (index == item.end()) return "\"correct_index\" is missing";
  if (index->is_number_integer()) {
    out.correct_index = index->is_number_unsigned()
                            ? static_cast<std::int64_t>(std::min<std::uint64_t>(
                                  index->get<std::uint64_t>(), INT64_MAX))
                            : index->get<std::int64_t>();
  } else if (index->is_number_float() && index->get<double>() == static_cast<double>(static_cast<std::int64_t>(index->get<double>()))) {
    out.correct_index = static_cast<std::int64_t>(index->get<double>());
  } else {
    return "\"correct_index\" must be an integer";
  }

  for (auto [field, target] : {std::pair{"explanation", &out.explanation}, std::pair{"topic", &out.topic}}) {
    auto it = item.find(field);
    if (it == item.end() || it->is_null()) continue;
    if (!it->is_string()) return std::string("\"") + field + "\" must be a string";
    *target = it->get<std::string>();
  }
  return std::nullopt;
}

}  // namespace

ParseResult parse_questions(std::string_view raw, int expected_count) {
  ParseResult result;
  try {
    auto array = first_object_array(raw);
    if (!array) {
      result.errors.push_back({std::string(codes::kParseFailure),
                               "no JSON array of objects found in the response"});
      return result;
    }
    for (std::size_t i = 0; i < array->size(); ++i) {
      RawQuestion record;
      if (auto problem = record_from_json((*array)[i], record)) {
        result.errors.push_back(
            {std::string(codes::kMalformedRecord), "record " + std::to_string(i) + ": " + *problem});
        continue;
      }
      result.records.push_back(std::move(record));
    }
    if (static_cast<std::int64_t>(array->size()) != expected_count) {
      result.errors.push_back({std::string(codes::kCountMismatch),
                               "expected " + std::to_string(expected_count) + " questions, got " +
                                   std::to_string(array->size())});
    }
  } catch (const std::exception &e) {
    result.records.clear();
    result.errors = {{std::string(codes::kParseFailure), e.what()}};
  }
  return result;
}

std::string_view to_string(ParseOutcome outcome) {
  switch (outcome) {
    case ParseOutcome::ok: return "ok";
    case ParseOutcome::repaired: return "repaired";
    case ParseOutcome::failed: return "failed";
  }
  return "failed";
}

// --- generation pipeline --------------------------------------------------

json exchange_to_json(const LlmExchange &exchange) {
  json messages = json::array();
  for (const auto &m : exchange.messages) {
    messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  json issues = json::array();
  for (const auto &i : exchange.issues) issues.push_back({{"code", i.code}, {"message", i.message}});
  return json{{"exchange_id", exchange.exchange_id},
              {"context", exchange.context},
              {"messages", std::move(messages)},
              {"raw_response", exchange.raw_response},
              {"parse_outcome", to_string(exchange.parse_outcome)},
              {"attempts", exchange.attempts},
              {"latency_ms", exchange.latency.count()},
              {"issues", std::move(issues)},
              {"backend_error", exchange.backend_error ? json(*exchange.backend_error) : json(nullptr)},
              {"created_at", format_timestamp(exchange.created_at)}};
}

GenerationError::GenerationError(std::vector<Issue> issues, LlmExchange exchange)
    : std::runtime_error(std::string(codes::kGenerationFailed) + ": " + join_issues(issues)),
      issues_(std::move(issues)),
      exchange_(std::move(exchange)) {}

namespace {

struct AttemptResult {
  std::vector<MCQuestion> questions;
  std::vector<Issue> issues;
};

AttemptResult evaluate_attempt(std::string_view raw, int expected) {
  AttemptResult result;
  auto parsed = parse_questions(raw, expected);
  const bool surplus = static_cast<int>(parsed.records.size()) > expected;
  for (auto &error : parsed.errors) {
    if (error.code == codes::kCountMismatch && surplus) continue;
    result.issues.push_back(std::move(error));
  }
  if (surplus) parsed.records.resize(static_cast<std::size_t>(expected));
  if (static_cast<int>(parsed.records.size()) < expected &&
      std::none_of(result.issues.begin(), result.issues.end(),
                   [](const Issue &i) { return i.code == codes::kCountMismatch; })) {
    result.issues.push_back({std::string(codes::kCountMismatch),
                             "expected " + std::to_string(expected) + " usable questions, got " +
                                 std::to_string(parsed.records.size())});
  }
  for (std::size_t i = 0; i < parsed.records.size(); ++i) {
    auto validated = validate_question(parsed.records[i]);
    if (validated.ok()) {
      result.questions.push_back(std::move(*validated.question));
      continue;
    }
    for (auto &issue : validated.issues) {
      issue.message = "question " + std::to_string(i) + ": " + issue.message;
      result.issues.push_back(std::move(issue));
    }
  }
  return result;
}

}  // namespace

QuestionGenerator::QuestionGenerator(BackendConfig config, std::unique_ptr<Backend> backend,
                                     ExchangeSink sink)
    : config_(std::move(config)),
      backend_(std::move(backend)),
      sink_(std::move(sink)),
      gate_(std::max(1, config_.max_parallel)) {}

QuestionGenerator::QuestionGenerator(const BackendConfig &config, ExchangeSink sink)
    : QuestionGenerator(config, make_backend(config), std::move(sink)) {}

std::string QuestionGenerator::complete_gated(std::span<const PromptMessage> messages) {
  gate_.acquire();
  struct Release {
    std::counting_semaphore<> &gate;
    ~Release() { gate.release(); }
  } release{gate_};
  return backend_->complete(messages);
}

Generation QuestionGenerator::generate(const GenerationRequest &request) {
  const auto started = std::chrono::steady_clock::now();
  LlmExchange exchange;
  exchange.exchange_id = random_id("llm_");
  exchange.context = request.student_ref;
  exchange.created_at = now();
  exchange.messages = {build_system_prompt(), build_user_prompt(request)};

  const auto finish = [&](ParseOutcome outcome) {
    exchange.parse_outcome = outcome;
    exchange.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);
    if (sink_) sink_(exchange);
  };

  const auto run = [&]() -> AttemptResult {
    ++exchange.attempts;
    try {
      exchange.raw_response = complete_gated(exchange.messages);
    } catch (const BackendError &e) {
      exchange.backend_error = e.what();
      finish(ParseOutcome::failed);
      throw;
    }
    return evaluate_attempt(exchange.raw_response, request.num_questions);
  };

  auto first = run();
  if (first.issues.empty()) {
    finish(ParseOutcome::ok);
    return Generation{std::move(first.questions), std::move(exchange)};
  }

  exchange.messages.push_back(build_repair_prompt(exchange.raw_response, first.issues));
  auto second = run();
  if (second.issues.empty()) {
    exchange.issues = std::move(first.issues);
    finish(ParseOutcome::repaired);
    return Generation{std::move(second.questions), std::move(exchange)};
  }

  exchange.issues = first.issues;
  exchange.issues.insert(exchange.issues.end(), second.issues.begin(), second.issues.end());
  finish(ParseOutcome::failed);
  throw GenerationError(std::move(second.issues), std::move(exchange));
}

Generation generate_questions(const BackendConfig &config, const GenerationRequest &request,
                              ExchangeSink sink) {
  QuestionGenerator generator(config, std::move(sink));
  return generator.generate(request);
}

}  // namespace automcq
