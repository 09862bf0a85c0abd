#include "cli.hpp"

#include <csignal>
#include <filesystem>
#include <iostream>
#include <optional>
#include <thread>

#include <pthread.h>

#include <CLI11.hpp>

#include "automcq/http_server.hpp"
#include "automcq/json_io.hpp"
#include "automcq/llm.hpp"
#include "automcq/quiz_file.hpp"
#include "automcq/service.hpp"
#include "automcq/store.hpp"

namespace automcq::cli {

namespace {

struct GenerateOptions {
  std::string code_path;
  std::string assignment;
  std::string topics;
  std::string language;
  int num = 0;
  std::string provided_path;
  std::string backend = "mock";
  std::string out_path;
  std::string base_url{kDefaultOpenAiBaseUrl};
  std::string model{kDefaultModel};
  std::string api_key_env{kDefaultApiKeyVariable};
  std::string student = "cli";
  int timeout_seconds = 60;
};

struct GradeOptions {
  std::string quiz_path;
  std::string answers_path;
  std::string voided;
};

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string data_dir = "automcq-data";
  std::string backend = "mock";
  std::string base_url{kDefaultOpenAiBaseUrl};
  std::string model{kDefaultModel};
  std::string tokens_path;
  std::string mock_fault = "none";
  bool practice = false;
};

// --assignment accepts either a file path or the text itself.
std::string assignment_text(const std::string &value) {
  std::error_code ec;
  if (!value.empty() && std::filesystem::is_regular_file(value, ec)) return read_text_file(value);
  return value;
}

std::optional<BackendConfig> backend_config(const std::string &kind, const std::string &base_url,
                                            const std::string &model, std::ostream &err) {
  auto parsed = parse_backend_kind(kind);
  if (!parsed) {
    err << "automcq: unknown backend '" << kind << "' (expected mock or openai)\n";
    return std::nullopt;
  }
  BackendConfig config;
  config.kind = *parsed;
  config.base_url = base_url;
  config.model_name = model;
  return config;
}

int cmd_generate(const GenerateOptions &opts, std::ostream &out, std::ostream &err) {
  GenerationRequest request;
  try {
    request.student_code = read_text_file(opts.code_path);
    if (!opts.provided_path.empty()) request.provided_code = read_text_file(opts.provided_path);
    request.assignment_text = assignment_text(opts.assignment);
  } catch (const FileError &e) {
    err << "automcq: " << e.what() << "\n";
    return kIoFailure;
  }
  request.num_questions = opts.num;
  request.topics = split_csv(opts.topics);
  request.language = opts.language;
  request.student_ref = opts.student;
  request = normalize_request(std::move(request));
  if (auto issues = validate_request(request, default_language_allow_list()); !issues.empty()) {
    err << "automcq: invalid request: " << join_issues(issues) << "\n";
    return kValidationFailure;
  }

  auto config = backend_config(opts.backend, opts.base_url, opts.model, err);
  if (!config) return kValidationFailure;
  config->api_key_source = opts.api_key_env;
  config->timeout = std::chrono::seconds(opts.timeout_seconds);
  if (auto issues = config->validate(); !issues.empty()) {
    err << "automcq: invalid backend configuration: " << join_issues(issues) << "\n";
    return kValidationFailure;
  }

  Generation generation;
  try {
    generation = generate_questions(*config, request, [&err](const LlmExchange &exchange) {
      err << "automcq: generation " << to_string(exchange.parse_outcome) << " after "
          << exchange.attempts << " attempt(s) in " << exchange.latency.count() << " ms\n";
    });
  } catch (const BackendError &e) {
    err << "automcq: backend failure: " << e.what() << "\n";
    return kBackendFailure;
  } catch (const GenerationError &e) {
    err << "automcq: " << e.what() << "\n";
    return kBackendFailure;
  }

  QuizFile file;
  file.quiz = assemble_quiz(request, std::move(generation.questions));
  file.quiz.status = QuizStatus::published;
  file.skeleton_warnings =
      skeleton_targeting_warnings(file.quiz.questions, request.provided_code, request.student_code);
  for (const auto &warning : file.skeleton_warnings) {
    err << "automcq: warning: " << warning.question_id << ": " << warning.warning << "\n";
  }

  try {
    save_quiz_file(opts.out_path, file);
  } catch (const FileError &e) {
    err << "automcq: " << e.what() << "\n";
    return kIoFailure;
  }
  out << json{{"quiz_id", file.quiz.quiz_id},
              {"path", opts.out_path},
              {"question_count", file.quiz.questions.size()},
              {"skeleton_warnings", file.skeleton_warnings.size()},
              {"parse_outcome", to_string(generation.exchange.parse_outcome)},
              {"attempts", generation.exchange.attempts}}
             .dump()
      << "\n";
  return kOk;
}

int cmd_grade(const GradeOptions &opts, std::ostream &out, std::ostream &err) {
  QuizFile file;
  json answers;
  try {
    file = load_quiz_file(opts.quiz_path);
    answers = json::parse(read_text_file(opts.answers_path), nullptr, false);
    if (answers.is_discarded()) throw FileError(opts.answers_path + " is not valid JSON");
  } catch (const FileError &e) {
    err << "automcq: " << e.what() << "\n";
    return kIoFailure;
  }

  try {
    auto sheet = sheet_from_json(answers);
    if (sheet.quiz_id.empty()) sheet.quiz_id = file.quiz.quiz_id;
    const auto voided_list = split_csv(opts.voided);
    const std::set<std::string> voided(voided_list.begin(), voided_list.end());
    const auto report = grade_sheet(file.quiz, sheet, voided);
    out << json(report).dump(2) << "\n";
    return kOk;
  } catch (const McqError &e) {
    err << "automcq: " << e.what() << "\n";
    return kValidationFailure;
  }
}

int cmd_serve(const ServeOptions &opts, std::ostream &out, std::ostream &err) {
  ServiceConfig config;
  auto backend = backend_config(opts.backend, opts.base_url, opts.model, err);
  if (!backend) return kValidationFailure;
  auto fault = parse_mock_fault(opts.mock_fault);
  if (!fault) {
    err << "automcq: unknown mock fault '" << opts.mock_fault << "'\n";
    return kValidationFailure;
  }
  backend->mock_fault = *fault;
  config.backend = *backend;
  config.practice_mode = opts.practice;
  if (opts.tokens_path.empty()) {
    err << "automcq: warning: no token map configured (AUTOMCQ_TOKENS); every request will be "
           "rejected with 401\n";
  } else {
    try {
      config.tokens = load_token_map(opts.tokens_path);
    } catch (const std::exception &e) {
      err << "automcq: " << e.what() << "\n";
      return kIoFailure;
    }
  }

  // Signals are taken synchronously by this thread; server threads inherit
  // the blocked mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  sigset_t previous;
  pthread_sigmask(SIG_BLOCK, &signals, &previous);
  struct RestoreMask {
    sigset_t mask;
    ~RestoreMask() { pthread_sigmask(SIG_SETMASK, &mask, nullptr); }
  } restore{previous};

  std::optional<DocumentStore> store;
  try {
    store.emplace(opts.data_dir);
  } catch (const StoreError &e) {
    err << "automcq: data directory unavailable: " << e.what() << "\n";
    return kIoFailure;
  }

  QuizService service(config, *store);
  HttpServer server(service);
  if (!server.bind(opts.host, opts.port)) {
    err << "automcq: cannot bind " << opts.host << ":" << opts.port << "\n";
    return kIoFailure;
  }
  out << "automcq listening on http://" << opts.host << ":" << server.port() << std::endl;

  std::thread worker([&server] { server.run(); });
  int received = 0;
  sigwait(&signals, &received);
  err << "automcq: received signal " << received << ", shutting down\n";
  server.wait_until_ready();
  server.stop();
  worker.join();
  try {
    store->snapshot();
  } catch (const StoreError &e) {
    err << "automcq: final snapshot failed: " << e.what() << "\n";
    return kIoFailure;
  }
  return kOk;
}

}  // namespace

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Generate, grade and serve multiple-choice code comprehension quizzes", "automcq"};
  app.require_subcommand(1);

  GenerateOptions gen;
  auto *generate = app.add_subcommand("generate", "Generate a quiz file from a submission");
  generate->add_option("--code", gen.code_path, "Student submission file")->required();
  generate->add_option("--assignment", gen.assignment, "Assignment text, or a file containing it")
      ->required();
  generate->add_option("--topics", gen.topics, "Comma-separated topics");
  generate->add_option("--language", gen.language, "Programming language id")->required();
  generate->add_option("--num", gen.num, "Number of questions (1-10)")->required();
  generate->add_option("--provided", gen.provided_path, "Skeleton code given to the student");
  generate->add_option("--backend", gen.backend, "mock or openai")->capture_default_str();
  generate->add_option("--out", gen.out_path, "Output quiz file")->required();
  generate->add_option("--base-url", gen.base_url, "OpenAI-compatible base URL")
      ->envname("AUTOMCQ_BASE_URL")
      ->capture_default_str();
  generate->add_option("--model", gen.model, "Model name")
      ->envname("AUTOMCQ_MODEL")
      ->capture_default_str();
  generate->add_option("--api-key-env", gen.api_key_env, "Variable holding the API key")
      ->capture_default_str();
  generate->add_option("--student", gen.student, "Student reference recorded in the quiz")
      ->capture_default_str();
  generate->add_option("--timeout", gen.timeout_seconds, "Backend timeout in seconds")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  GradeOptions grade;
  auto *grade_cmd = app.add_subcommand("grade", "Grade an answer sheet against a quiz file");
  grade_cmd->add_option("--quiz", grade.quiz_path, "Quiz file")->required();
  grade_cmd->add_option("--answers", grade.answers_path, "Answer sheet JSON")->required();
  grade_cmd->add_option("--voided", grade.voided, "Comma-separated voided question ids");

  ServeOptions serve;
  auto *serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--host", serve.host)->envname("AUTOMCQ_HOST")->capture_default_str();
  serve_cmd->add_option("--port", serve.port)->envname("AUTOMCQ_PORT")->capture_default_str();
  serve_cmd->add_option("--data-dir", serve.data_dir)
      ->envname("AUTOMCQ_DATA_DIR")
      ->capture_default_str();
  serve_cmd->add_option("--backend", serve.backend, "mock or openai")
      ->envname("AUTOMCQ_BACKEND")
      ->capture_default_str();
  serve_cmd->add_option("--base-url", serve.base_url)
      ->envname("AUTOMCQ_BASE_URL")
      ->capture_default_str();
  serve_cmd->add_option("--model", serve.model)->envname("AUTOMCQ_MODEL")->capture_default_str();
  serve_cmd->add_option("--tokens", serve.tokens_path, "Token to role map (JSON)")
      ->envname("AUTOMCQ_TOKENS");
  serve_cmd->add_option("--mock-fault", serve.mock_fault, "none, truncate or always_truncate")
      ->envname("AUTOMCQ_MOCK_FAULT")
      ->capture_default_str();
  serve_cmd->add_flag("--practice", serve.practice, "Allow resubmission, latest wins");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidationFailure;
  }

  if (*generate) return cmd_generate(gen, out, err);
  if (*grade_cmd) return cmd_grade(grade, out, err);
  return cmd_serve(serve, out, err);
}

}  // namespace automcq::cli
