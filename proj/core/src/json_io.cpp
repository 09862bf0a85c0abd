#include "automcq/json_io.hpp"

#include <algorithm>
#include <limits>

namespace automcq {

namespace {

[[noreturn]] void malformed(std::string_view field, std::string_view expected) {
  throw McqError(codes::kMalformedField,
                 "field '" + std::string(field) + "' must be " + std::string(expected));
}

const json &require(const json &j, std::string_view field) {
  if (!j.is_object()) malformed(field, "inside an object");
  auto it = j.find(field);
  if (it == j.end()) malformed(field, "present");
  return *it;
}

std::string get_string(const json &j, std::string_view field) {
  const auto &v = require(j, field);
  if (!v.is_string()) malformed(field, "a string");
  return v.get<std::string>();
}

std::string get_string_or(const json &j, std::string_view field, std::string fallback) {
  auto it = j.find(field);
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_string()) malformed(field, "a string");
  return it->get<std::string>();
}

std::optional<std::string> get_optional_string(const json &j, std::string_view field) {
  auto it = j.find(field);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) malformed(field, "a string or null");
  return it->get<std::string>();
}

std::int64_t get_integer(const json &j, std::string_view field) {
  const auto &v = require(j, field);
  if (!v.is_number_integer()) malformed(field, "an integer");
  return v.get<std::int64_t>();
}

std::vector<std::string> get_string_array(const json &j, std::string_view field) {
  const auto &v = require(j, field);
  if (!v.is_array()) malformed(field, "an array of strings");
  std::vector<std::string> out;
  for (const auto &item : v) {
    if (!item.is_string()) malformed(field, "an array of strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

Timestamp get_timestamp(const json &j, std::string_view field) {
  auto parsed = parse_timestamp(get_string(j, field));
  if (!parsed) malformed(field, "an ISO-8601 UTC timestamp");
  return *parsed;
}

void put_optional(json &j, std::string_view field, const std::optional<std::string> &value) {
  j[std::string(field)] = value ? json(*value) : json(nullptr);
}

}  // namespace

void to_json(json &j, const Issue &issue) {
  j = json{{"code", issue.code}, {"message", issue.message}};
}

void to_json(json &j, const GenerationRequest &request) {
  j = json{{"num_questions", request.num_questions},
           {"assignment_text", request.assignment_text},
           {"topics", request.topics},
           {"language", request.language},
           {"student_code", request.student_code},
           {"student_ref", request.student_ref}};
  put_optional(j, "provided_code", request.provided_code);
}

void to_json(json &j, const MCQuestion &question) {
  j = json{{"question_id", question.question_id},
           {"stem", question.stem},
           {"options", question.options},
           {"correct_index", question.correct_index}};
  put_optional(j, "explanation", question.explanation);
  put_optional(j, "topic", question.topic);
}

std::string_view to_string(QuizStatus status) {
  return status == QuizStatus::published ? "published" : "draft";
}

void to_json(json &j, const Quiz &quiz) {
  j = json{{"quiz_id", quiz.quiz_id},
           {"request", quiz.request},
           {"questions", quiz.questions},
           {"disclaimer", quiz.disclaimer},
           {"status", to_string(quiz.status)},
           {"created_at", format_timestamp(quiz.created_at)}};
}

void to_json(json &j, const StudentView &view) {
  json questions = json::array();
  for (const auto &q : view.questions) {
    questions.push_back(json{{"question_id", q.question_id},
                             {"stem", q.stem},
                             {"choices", q.choices},
                             {"flag_choice_index", q.choices.size() - 1}});
  }
  j = json{{"quiz_id", view.quiz_id},
           {"disclaimer", view.disclaimer},
           {"flag_choice_text", kFlagOptionText},
           {"questions", std::move(questions)}};
}

void to_json(json &j, const AnswerSheet &sheet) {
  json answers = json::array();
  for (const auto &a : sheet.answers) answers.push_back(a.to_wire());
  j = json{{"quiz_id", sheet.quiz_id},
           {"student_ref", sheet.student_ref},
           {"answers", std::move(answers)},
           {"submitted_at", format_timestamp(sheet.submitted_at)}};
}

void to_json(json &j, const GradeReport &report) {
  json outcomes = json::array();
  for (auto o : report.per_question) outcomes.push_back(to_string(o));
  j = json{{"per_question", std::move(outcomes)},
           {"numerator", report.numerator},
           {"denominator", report.denominator},
           {"score", report.score ? json(*report.score) : json(nullptr)},
           {"score_text", report.score_text()}};
}

void to_json(json &j, const FlagRecord &flag) {
  j = json{{"flag_id", flag.flag_id},
           {"quiz_id", flag.quiz_id},
           {"question_id", flag.question_id},
           {"student_ref", flag.student_ref},
           {"status", to_string(flag.status)},
           {"created_at", format_timestamp(flag.created_at)},
           {"resolved_at", flag.resolved_at ? json(format_timestamp(*flag.resolved_at)) : json(nullptr)}};
  put_optional(j, "resolution_note", flag.resolution_note);
}

void to_json(json &j, const SkeletonWarning &warning) {
  j = json{{"question_id", warning.question_id}, {"warning", warning.warning}};
}

json parse_json_text(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error &e) {
    throw McqError(codes::kInvalidJson, e.what());
  }
}

GenerationRequest request_from_json(const json &j) {
  if (!j.is_object()) throw McqError(codes::kMalformedField, "request body must be a JSON object");
  GenerationRequest r;
  const auto count = get_integer(j, "num_questions");
  r.num_questions = static_cast<int>(std::clamp<std::int64_t>(
      count, std::numeric_limits<int>::min(), std::numeric_limits<int>::max()));
  r.assignment_text = get_string_or(j, "assignment_text", "");
  if (j.contains("topics") && !j.at("topics").is_null()) r.topics = get_string_array(j, "topics");
  r.language = get_string(j, "language");
  r.provided_code = get_optional_string(j, "provided_code");
  r.student_code = get_string(j, "student_code");
  r.student_ref = get_string_or(j, "student_ref", "");
  return r;
}

MCQuestion question_from_json(const json &j) {
  MCQuestion q;
  q.question_id = get_string(j, "question_id");
  q.stem = get_string(j, "stem");
  q.options = get_string_array(j, "options");
  const auto index = get_integer(j, "correct_index");
  if (index < 0 || index >= static_cast<std::int64_t>(q.options.size())) {
    malformed("correct_index", "an index into options");
  }
  q.correct_index = static_cast<int>(index);
  q.explanation = get_optional_string(j, "explanation");
  q.topic = get_optional_string(j, "topic");
  return q;
}

Quiz quiz_from_json(const json &j) {
  Quiz quiz;
  quiz.quiz_id = get_string(j, "quiz_id");
  quiz.request = request_from_json(require(j, "request"));
  const auto &questions = require(j, "questions");
  if (!questions.is_array()) malformed("questions", "an array");
  for (const auto &q : questions) quiz.questions.push_back(question_from_json(q));
  quiz.disclaimer = get_string(j, "disclaimer");
  const auto status = get_string(j, "status");
  if (status == "published") {
    quiz.status = QuizStatus::published;
  } else if (status == "draft") {
    quiz.status = QuizStatus::draft;
  } else {
    malformed("status", "draft or published");
  }
  quiz.created_at = get_timestamp(j, "created_at");
  return quiz;
}

AnswerSheet sheet_from_json(const json &j) {
  if (!j.is_object()) throw McqError(codes::kMalformedField, "answer sheet must be a JSON object");
  AnswerSheet sheet;
  sheet.quiz_id = get_string_or(j, "quiz_id", "");
  sheet.student_ref = get_string_or(j, "student_ref", "");
  const auto &answers = require(j, "answers");
  if (!answers.is_array()) malformed("answers", "an array of integers");
  for (std::size_t i = 0; i < answers.size(); ++i) {
    const auto &a = answers[i];
    if (!a.is_number_integer()) malformed("answers", "an array of integers");
    auto answer = Answer::from_wire(a.get<std::int64_t>());
    if (!answer) {
      throw McqError(codes::kAnswerIndexOutOfRange,
                     "answer " + std::to_string(i) + " must be an option index or -1 (flag)");
    }
    sheet.answers.push_back(*answer);
  }
  if (auto it = j.find("submitted_at"); it != j.end() && !it->is_null()) {
    sheet.submitted_at = get_timestamp(j, "submitted_at");
  }
  return sheet;
}

FlagRecord flag_from_json(const json &j) {
  FlagRecord f;
  f.flag_id = get_string(j, "flag_id");
  f.quiz_id = get_string(j, "quiz_id");
  f.question_id = get_string(j, "question_id");
  f.student_ref = get_string(j, "student_ref");
  auto status = parse_flag_status(get_string(j, "status"));
  if (!status) malformed("status", "a flag status");
  f.status = *status;
  f.resolution_note = get_optional_string(j, "resolution_note");
  f.created_at = get_timestamp(j, "created_at");
  if (auto it = j.find("resolved_at"); it != j.end() && !it->is_null()) {
    f.resolved_at = get_timestamp(j, "resolved_at");
  }
  return f;
}

SkeletonWarning warning_from_json(const json &j) {
  return SkeletonWarning{get_string(j, "question_id"), get_string(j, "warning")};
}

}  // namespace automcq
