#include "automcq/service.hpp"

#include <fstream>
#include <regex>

#include "automcq/json_io.hpp"

namespace automcq {

namespace {

ApiError bad_request(const McqError &e) {
  json details = json::array();
  for (const auto &issue : e.issues()) details.push_back(issue);
  return ApiError(400, e.code(), e.what(), std::move(details));
}

void require_role(const Principal &who, Role role) {
  if (who.role != role) {
    throw ApiError(403, "FORBIDDEN", "this route requires the " + std::string(to_string(role)) + " role");
  }
}

json parse_body(const std::string &body) {
  try {
    return parse_json_text(body.empty() ? std::string_view("{}") : std::string_view(body));
  } catch (const McqError &e) {
    throw bad_request(e);
  }
}

std::string sheet_key(const std::string &quiz_id, const std::string &student_ref) {
  return quiz_id + "/" + student_ref;
}

// A student-bound token always acts as its own student; otherwise the
// body (or query) names the student.
std::string resolve_student_ref(const Principal &who, const std::string &claimed) {
  if (who.student_ref) {
    if (!claimed.empty() && claimed != *who.student_ref) {
      throw ApiError(403, "FORBIDDEN", "token is bound to a different student");
    }
    return *who.student_ref;
  }
  return claimed;
}

}  // namespace

std::string_view to_string(Role role) { return role == Role::lecturer ? "lecturer" : "student"; }

TokenMap parse_token_map(const json &j) {
  if (!j.is_object()) throw std::invalid_argument("token map must be a JSON object");
  TokenMap tokens;
  for (const auto &[token, value] : j.items()) {
    Principal principal;
    std::string role;
    if (value.is_string()) {
      role = value.get<std::string>();
    } else if (value.is_object() && value.contains("role") && value.at("role").is_string()) {
      role = value.at("role").get<std::string>();
      if (auto ref = value.find("student_ref"); ref != value.end() && ref->is_string()) {
        principal.student_ref = ref->get<std::string>();
      }
    } else {
      throw std::invalid_argument("token entry for '" + token + "' has no role");
    }
    if (role == "student") {
      principal.role = Role::student;
    } else if (role == "lecturer") {
      principal.role = Role::lecturer;
    } else {
      throw std::invalid_argument("unknown role '" + role + "'");
    }
    tokens.emplace(token, std::move(principal));
  }
  return tokens;
}

TokenMap load_token_map(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read token map " + path.string());
  auto j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw std::runtime_error("token map " + path.string() + " is not valid JSON");
  return parse_token_map(j);
}

ApiError::ApiError(int status, std::string code, std::string message, json details)
    : std::runtime_error(std::move(message)),
      status_(status),
      code_(std::move(code)),
      details_(std::move(details)) {}

json ApiError::to_json() const {
  return json{{"code", code_}, {"message", what()}, {"details", details_}};
}

QuizService::QuizService(ServiceConfig config, DocumentStore &store, std::unique_ptr<Backend> backend)
    : config_(std::move(config)),
      store_(store),
      generator_(config_.backend, backend ? std::move(backend) : make_backend(config_.backend),
                 [this](const LlmExchange &exchange) {
                   store_.put(collections::kExchanges, exchange.exchange_id,
                              exchange_to_json(exchange));
                 }) {}

Principal QuizService::authenticate(std::string_view header) const {
  constexpr std::string_view kBearer = "Bearer ";
  if (header.substr(0, kBearer.size()) != kBearer) {
    throw ApiError(401, "UNAUTHORIZED", "missing bearer token");
  }
  auto it = config_.tokens.find(trim(header.substr(kBearer.size())));
  if (it == config_.tokens.end()) throw ApiError(401, "UNAUTHORIZED", "unknown token");
  return it->second;
}

std::mutex &QuizService::quiz_lock(const std::string &quiz_id) {
  std::lock_guard guard(locks_mutex_);
  auto &slot = quiz_locks_[quiz_id];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

std::optional<QuizService::StoredQuiz> QuizService::load_quiz(const std::string &quiz_id) const {
  auto doc = store_.get(collections::kQuizzes, quiz_id);
  if (!doc) return std::nullopt;
  StoredQuiz stored;
  stored.quiz = quiz_from_json(doc->at("quiz"));
  for (const auto &w : doc->at("skeleton_warnings")) stored.warnings.push_back(warning_from_json(w));
  stored.exchange_id = doc->value("exchange_id", "");
  return stored;
}

QuizService::StoredQuiz QuizService::require_quiz(const std::string &quiz_id) const {
  auto stored = load_quiz(quiz_id);
  if (!stored) throw ApiError(404, "NOT_FOUND", "no quiz '" + quiz_id + "'");
  return std::move(*stored);
}

std::set<std::string> QuizService::voided_questions(const std::string &quiz_id) const {
  std::set<std::string> voided;
  if (auto doc = store_.get(collections::kVoids, quiz_id)) {
    for (const auto &id : doc->at("question_ids")) voided.insert(id.get<std::string>());
  }
  return voided;
}

std::vector<FlagRecord> QuizService::flags_where(const std::string &quiz_id,
                                                 const std::optional<std::string> &student_ref) const {
  std::vector<FlagRecord> out;
  for (const auto &doc : store_.list(collections::kFlags)) {
    auto flag = flag_from_json(doc);
    if (flag.quiz_id != quiz_id) continue;
    if (student_ref && flag.student_ref != *student_ref) continue;
    out.push_back(std::move(flag));
  }
  return out;
}

std::optional<AnswerSheet> QuizService::load_sheet(const std::string &quiz_id,
                                                   const std::string &student_ref) const {
  auto doc = store_.get(collections::kSheets, sheet_key(quiz_id, student_ref));
  if (!doc) return std::nullopt;
  return sheet_from_json(*doc);
}

json QuizService::graded_submission(const Quiz &quiz, const AnswerSheet &sheet,
                                    const std::set<std::string> &voided) const {
  const auto report = grade_sheet(quiz, sheet, voided);
  const auto flags = flags_where(quiz.quiz_id, sheet.student_ref);

  json feedback = json::array();
  for (std::size_t i = 0; i < quiz.questions.size(); ++i) {
    const auto &question = quiz.questions[i];
    const auto outcome = report.per_question[i];
    json item{{"question_id", question.question_id},
              {"outcome", to_string(outcome)},
              {"selected", sheet.answers[i].to_wire()}};
    bool reveal = outcome == Outcome::correct || outcome == Outcome::incorrect;
    if (outcome == Outcome::flagged_pending) {
      // Latest flag by this student on this question decides what is shown.
      std::optional<FlagStatus> status;
      for (const auto &flag : flags) {
        if (flag.question_id == question.question_id) status = flag.status;
      }
      item["flag_status"] = status ? json(to_string(*status)) : json(nullptr);
      reveal = status == FlagStatus::resolved_valid;
    }
    if (reveal) {
      item["correct_index"] = question.correct_index;
      item["correct_option"] = question.options[static_cast<std::size_t>(question.correct_index)];
      item["explanation"] = question.explanation ? json(*question.explanation) : json(nullptr);
    }
    feedback.push_back(std::move(item));
  }
  return json{{"quiz_id", quiz.quiz_id},
              {"student_ref", sheet.student_ref},
              {"submitted_at", format_timestamp(sheet.submitted_at)},
              {"report", report},
              {"feedback", std::move(feedback)}};
}

json QuizService::create_quiz(const Principal &who, const json &body) {
  GenerationRequest request;
  try {
    request = request_from_json(body);
  } catch (const McqError &e) {
    throw bad_request(e);
  }
  request.student_ref = resolve_student_ref(who, std::string(trim(request.student_ref)));
  request = normalize_request(std::move(request));
  if (auto issues = validate_request(request, config_.languages); !issues.empty()) {
    json details = json::array();
    for (const auto &issue : issues) details.push_back(issue);
    throw ApiError(400, "INVALID_REQUEST", join_issues(issues), std::move(details));
  }

  Generation generation;
  try {
    generation = generator_.generate(request);
  } catch (const GenerationError &e) {
    json issues = json::array();
    for (const auto &issue : e.issues()) issues.push_back(issue);
    throw ApiError(502, std::string(codes::kGenerationFailed), e.what(),
                   json{{"issues", std::move(issues)},
                        {"exchange_id", e.exchange().exchange_id},
                        {"attempts", e.exchange().attempts}});
  } catch (const BackendError &e) {
    throw ApiError(502, std::string(to_string(e.code())), e.what(),
                   json{{"http_status", e.http_status()}});
  }

  auto quiz = assemble_quiz(request, std::move(generation.questions));
  const auto warnings =
      skeleton_targeting_warnings(quiz.questions, request.provided_code, request.student_code);
  quiz.status = QuizStatus::published;
  {
    std::lock_guard guard(quiz_lock(quiz.quiz_id));
    store_.put(collections::kQuizzes, quiz.quiz_id,
               json{{"quiz", quiz},
                    {"skeleton_warnings", warnings},
                    {"exchange_id", generation.exchange.exchange_id}});
  }
  return render_for_student(quiz);
}

json QuizService::get_quiz(const Principal &who, const std::string &quiz_id,
                           const std::optional<std::string> &student_ref) {
  const auto stored = require_quiz(quiz_id);
  const auto voided = voided_questions(quiz_id);
  if (who.role == Role::lecturer) {
    return json{{"quiz", stored.quiz},
                {"skeleton_warnings", stored.warnings},
                {"voided_question_ids", voided},
                {"exchange_id", stored.exchange_id}};
  }
  json view = render_for_student(stored.quiz);
  const auto ref = resolve_student_ref(who, student_ref.value_or(""));
  if (!ref.empty()) {
    if (auto sheet = load_sheet(quiz_id, ref)) {
      view["submission"] = graded_submission(stored.quiz, *sheet, voided);
    }
  }
  return view;
}

json QuizService::submit_answers(const Principal &who, const std::string &quiz_id, const json &body) {
  require_role(who, Role::student);
  AnswerSheet sheet;
  try {
    sheet = sheet_from_json(body);
  } catch (const McqError &e) {
    throw bad_request(e);
  }
  sheet.student_ref = resolve_student_ref(who, std::string(trim(sheet.student_ref)));
  if (sheet.student_ref.empty()) {
    throw ApiError(400, std::string(codes::kMissingStudentRef), "student_ref is required");
  }
  if (!sheet.quiz_id.empty() && sheet.quiz_id != quiz_id) {
    throw ApiError(400, std::string(codes::kSheetQuizMismatch),
                   "sheet names quiz '" + sheet.quiz_id + "' but was posted to '" + quiz_id + "'");
  }
  sheet.quiz_id = quiz_id;
  sheet.submitted_at = now();

  std::lock_guard guard(quiz_lock(quiz_id));
  const auto stored = require_quiz(quiz_id);
  if (stored.quiz.status != QuizStatus::published) {
    throw ApiError(409, std::string(codes::kQuizNotPublished), "quiz is not published");
  }
  const auto voided = voided_questions(quiz_id);

  if (auto previous = load_sheet(quiz_id, sheet.student_ref); previous && !config_.practice_mode) {
    throw ApiError(409, "ALREADY_SUBMITTED", "answers for this quiz were already submitted",
                   graded_submission(stored.quiz, *previous, voided));
  }

  try {
    grade_sheet(stored.quiz, sheet, voided);
  } catch (const McqError &e) {
    throw bad_request(e);
  }

  store_.put(collections::kSheets, sheet_key(quiz_id, sheet.student_ref), sheet);

  const auto existing = flags_where(quiz_id, sheet.student_ref);
  json flag_ids = json::array();
  for (std::size_t i = 0; i < sheet.answers.size(); ++i) {
    const auto &question = stored.quiz.questions[i];
    if (!sheet.answers[i].is_flag() || voided.count(question.question_id) != 0) continue;
    auto pending = std::find_if(existing.begin(), existing.end(), [&](const FlagRecord &f) {
      return f.question_id == question.question_id && f.status == FlagStatus::pending;
    });
    if (pending != existing.end()) {
      flag_ids.push_back(pending->flag_id);
      continue;
    }
    FlagRecord flag;
    flag.flag_id = random_id("flag_");
    flag.quiz_id = quiz_id;
    flag.question_id = question.question_id;
    flag.student_ref = sheet.student_ref;
    flag.created_at = sheet.submitted_at;
    store_.put(collections::kFlags, flag.flag_id, flag);
    flag_ids.push_back(flag.flag_id);
  }

  auto result = graded_submission(stored.quiz, sheet, voided);
  result["flag_ids"] = std::move(flag_ids);
  return result;
}

json QuizService::list_flags(const Principal &who, const std::optional<std::string> &status) {
  require_role(who, Role::lecturer);
  std::optional<FlagStatus> filter;
  if (status && !status->empty()) {
    filter = parse_flag_status(*status);
    if (!filter) {
      throw ApiError(400, std::string(codes::kInvalidFlagStatus), "unknown status '" + *status + "'");
    }
  }
  json out = json::array();
  std::map<std::string, std::optional<StoredQuiz>> quizzes;
  for (const auto &doc : store_.list(collections::kFlags)) {
    auto flag = flag_from_json(doc);
    if (filter && flag.status != *filter) continue;
    auto [it, inserted] = quizzes.try_emplace(flag.quiz_id);
    if (inserted) it->second = load_quiz(flag.quiz_id);
    json entry{{"flag", flag}, {"question", nullptr}, {"request", nullptr}};
    if (it->second) {
      const auto &quiz = it->second->quiz;
      if (const auto *question = quiz.find_question(flag.question_id)) entry["question"] = *question;
      entry["request"] = quiz.request;
    }
    out.push_back(std::move(entry));
  }
  return out;
}

json QuizService::resolve_flag(const Principal &who, const std::string &flag_id, const json &body) {
  require_role(who, Role::lecturer);
  if (!body.is_object() || !body.contains("status") || !body.at("status").is_string()) {
    throw ApiError(400, std::string(codes::kInvalidFlagStatus), "body must contain a status string");
  }
  const auto status = parse_flag_status(body.at("status").get<std::string>());
  if (!status || *status == FlagStatus::pending) {
    throw ApiError(400, std::string(codes::kInvalidFlagStatus),
                   "status must be resolved_valid or resolved_invalid");
  }
  std::optional<std::string> note;
  if (auto it = body.find("note"); it != body.end() && it->is_string()) note = it->get<std::string>();

  auto doc = store_.get(collections::kFlags, flag_id);
  if (!doc) throw ApiError(404, "NOT_FOUND", "no flag '" + flag_id + "'");
  const auto quiz_id = flag_from_json(*doc).quiz_id;

  std::lock_guard guard(quiz_lock(quiz_id));
  auto flag = flag_from_json(*store_.get(collections::kFlags, flag_id));
  try {
    flag.resolve(*status, std::move(note), now());
  } catch (const McqError &e) {
    throw ApiError(409, e.code(), e.what(), flag);
  }
  store_.put(collections::kFlags, flag.flag_id, flag);
  if (flag.status == FlagStatus::resolved_invalid) {
    auto voided = voided_questions(quiz_id);
    if (voided.insert(flag.question_id).second) {
      store_.put(collections::kVoids, quiz_id, json{{"question_ids", voided}});
    }
  }
  return flag;
}

json QuizService::quiz_report(const Principal &who, const std::string &quiz_id) {
  require_role(who, Role::lecturer);
  const auto stored = require_quiz(quiz_id);
  const auto &quiz = stored.quiz;
  const auto voided = voided_questions(quiz_id);

  struct Counts {
    int correct = 0, incorrect = 0, flagged_pending = 0, voided = 0;
  };
  std::vector<Counts> counts(quiz.questions.size());
  json students = json::array();
  const auto sheets = store_.list_prefix(collections::kSheets, quiz_id + "/");
  for (const auto &doc : sheets) {
    const auto sheet = sheet_from_json(doc);
    const auto report = grade_sheet(quiz, sheet, voided);
    for (std::size_t i = 0; i < report.per_question.size(); ++i) {
      switch (report.per_question[i]) {
        case Outcome::correct: ++counts[i].correct; break;
        case Outcome::incorrect: ++counts[i].incorrect; break;
        case Outcome::flagged_pending: ++counts[i].flagged_pending; break;
        case Outcome::voided: ++counts[i].voided; break;
      }
    }
    students.push_back(json{{"student_ref", sheet.student_ref}, {"report", report}});
  }

  json questions = json::array();
  for (std::size_t i = 0; i < quiz.questions.size(); ++i) {
    questions.push_back(json{{"question_id", quiz.questions[i].question_id},
                             {"correct", counts[i].correct},
                             {"incorrect", counts[i].incorrect},
                             {"flagged_pending", counts[i].flagged_pending},
                             {"voided", counts[i].voided}});
  }
  return json{{"quiz_id", quiz_id},
              {"submissions", sheets.size()},
              {"voided_question_ids", voided},
              {"questions", std::move(questions)},
              {"students", std::move(students)}};
}

ApiResponse QuizService::handle(const ApiRequest &request) {
  static const std::regex kQuiz(R"(^/api/quizzes/([A-Za-z0-9_\-]+)$)");
  static const std::regex kAnswers(R"(^/api/quizzes/([A-Za-z0-9_\-]+)/answers$)");
  static const std::regex kReport(R"(^/api/quizzes/([A-Za-z0-9_\-]+)/report$)");
  static const std::regex kResolution(R"(^/api/review/flags/([A-Za-z0-9_\-]+)/resolution$)");

  const auto query = [&](const std::string &key) -> std::optional<std::string> {
    auto it = request.query.find(key);
    if (it == request.query.end()) return std::nullopt;
    return it->second;
  };

  try {
    const auto &method = request.method;
    const auto &path = request.path;
    std::smatch m;
    const bool known = path == "/api/quizzes" || path == "/api/review/flags" ||
                       std::regex_match(path, kQuiz) || std::regex_match(path, kAnswers) ||
                       std::regex_match(path, kReport) || std::regex_match(path, kResolution);
    if (!known) throw ApiError(404, "NOT_FOUND", "no route for " + path);

    const auto who = authenticate(request.authorization);

    if (path == "/api/quizzes" && method == "POST") {
      return {201, create_quiz(who, parse_body(request.body))};
    }
    if (path == "/api/review/flags" && method == "GET") {
      return {200, list_flags(who, query("status"))};
    }
    if (std::regex_match(path, m, kQuiz) && method == "GET") {
      return {200, get_quiz(who, m[1].str(), query("student_ref"))};
    }
    if (std::regex_match(path, m, kAnswers) && method == "POST") {
      return {200, submit_answers(who, m[1].str(), parse_body(request.body))};
    }
    if (std::regex_match(path, m, kReport) && method == "GET") {
      return {200, quiz_report(who, m[1].str())};
    }
    if (std::regex_match(path, m, kResolution) && method == "POST") {
      return {200, resolve_flag(who, m[1].str(), parse_body(request.body))};
    }
    throw ApiError(405, "METHOD_NOT_ALLOWED", method + " is not supported on " + path);
  } catch (const ApiError &e) {
    return {e.status(), e.to_json()};
  } catch (const McqError &e) {
    return {400, bad_request(e).to_json()};
  } catch (const StoreError &e) {
    return {500, ApiError(500, "STORE_ERROR", e.what()).to_json()};
  } catch (const std::exception &e) {
    return {500, ApiError(500, "INTERNAL", e.what()).to_json()};
  }
}

}  // namespace automcq
