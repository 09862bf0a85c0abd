#pragma once

// The quiz web service, independent of any HTTP library: routing, bearer
// token roles, quiz creation through the question generator, delivery,
// grading, flag intake and the lecturer review loop. HttpServer
// (http_server.hpp) binds handle() to a socket.

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "automcq/llm.hpp"
#include "automcq/mcq.hpp"
#include "automcq/store.hpp"

namespace automcq {

enum class Role { student, lecturer };

std::string_view to_string(Role role);

struct Principal {
  Role role = Role::student;
  // When set, the token may only act as this student.
  std::optional<std::string> student_ref;
};

using TokenMap = std::map<std::string, Principal, std::less<>>;

// {"<token>": "student" | "lecturer" | {"role": ..., "student_ref": ...}}
TokenMap parse_token_map(const nlohmann::json &j);
TokenMap load_token_map(const std::filesystem::path &path);

struct ServiceConfig {
  BackendConfig backend;
  std::vector<std::string> languages = default_language_allow_list();
  TokenMap tokens;
  // Unlimited attempts, latest submission wins.
  bool practice_mode = false;
};

struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string authorization;  // raw Authorization header
  std::string body;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

class ApiError : public std::runtime_error {
 public:
  ApiError(int status, std::string code, std::string message,
           nlohmann::json details = nlohmann::json::object());

  int status() const noexcept { return status_; }
  const std::string &code() const noexcept { return code_; }
  const nlohmann::json &details() const noexcept { return details_; }

  nlohmann::json to_json() const;

 private:
  int status_;
  std::string code_;
  nlohmann::json details_;
};

// Store collections.
namespace collections {
inline constexpr std::string_view kQuizzes = "quizzes";
inline constexpr std::string_view kSheets = "sheets";  // id: quiz_id/student_ref
inline constexpr std::string_view kFlags = "flags";
inline constexpr std::string_view kVoids = "voids";  // id: quiz_id
inline constexpr std::string_view kExchanges = "exchanges";
}  // namespace collections

class QuizService {
 public:
  QuizService(ServiceConfig config, DocumentStore &store, std::unique_ptr<Backend> backend = nullptr);

  // Never throws; errors become {code, message, details} bodies.
  ApiResponse handle(const ApiRequest &request);

  // Typed operations behind the routes; throw ApiError.
  nlohmann::json create_quiz(const Principal &who, const nlohmann::json &body);
  nlohmann::json get_quiz(const Principal &who, const std::string &quiz_id,
                          const std::optional<std::string> &student_ref);
  nlohmann::json submit_answers(const Principal &who, const std::string &quiz_id,
                                const nlohmann::json &body);
  nlohmann::json list_flags(const Principal &who, const std::optional<std::string> &status);
  nlohmann::json resolve_flag(const Principal &who, const std::string &flag_id,
                              const nlohmann::json &body);
  nlohmann::json quiz_report(const Principal &who, const std::string &quiz_id);

  Principal authenticate(std::string_view authorization_header) const;

  const ServiceConfig &config() const noexcept { return config_; }

 private:
  struct StoredQuiz {
    Quiz quiz;
    std::vector<SkeletonWarning> warnings;
    std::string exchange_id;
  };

  std::optional<StoredQuiz> load_quiz(const std::string &quiz_id) const;
  StoredQuiz require_quiz(const std::string &quiz_id) const;
  std::set<std::string> voided_questions(const std::string &quiz_id) const;
  std::vector<FlagRecord> flags_where(const std::string &quiz_id,
                                      const std::optional<std::string> &student_ref) const;
  std::optional<AnswerSheet> load_sheet(const std::string &quiz_id, const std::string &student_ref) const;
  nlohmann::json graded_submission(const Quiz &quiz, const AnswerSheet &sheet,
                                   const std::set<std::string> &voided) const;
  std::mutex &quiz_lock(const std::string &quiz_id);

  ServiceConfig config_;
  DocumentStore &store_;
  QuestionGenerator generator_;
  std::mutex locks_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>, std::less<>> quiz_locks_;
};

}  // namespace automcq
