#pragma once

// Domain types shared by every layer: generation requests, validated
// questions, quizzes, answer sheets, grade reports and flag records, plus
// the pure operations over them (validation, assembly, student rendering,
// grading and the skeleton-code checks).

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "automcq/common.hpp"

namespace automcq {

// Shown verbatim above every generated question list.
inline constexpr std::string_view kDisclaimer =
    "These questions were generated by AI. Therefore, questions generated may be incorrect. "
    "If you think they are incorrect please select 'This question doesn't seem right'. "
    "Also, select this option if the question doesn't relate to programming.";

// Reserved final choice of every rendered question.
inline constexpr std::string_view kFlagOptionText = "This question doesn't seem right";

inline constexpr int kMinQuestions = 1;
inline constexpr int kMaxQuestions = 10;
inline constexpr int kMinOptions = 2;
inline constexpr int kMaxOptions = 6;

namespace codes {
inline constexpr std::string_view kEmptyStem = "EMPTY_STEM";
inline constexpr std::string_view kOptionCountOutOfRange = "OPTION_COUNT_OUT_OF_RANGE";
inline constexpr std::string_view kCorrectIndexOutOfRange = "CORRECT_INDEX_OUT_OF_RANGE";
inline constexpr std::string_view kDuplicateOptions = "DUPLICATE_OPTIONS";
inline constexpr std::string_view kReservedOptionText = "RESERVED_OPTION_TEXT";
inline constexpr std::string_view kQuestionCountMismatch = "QUESTION_COUNT_MISMATCH";
inline constexpr std::string_view kDuplicateQuestionId = "DUPLICATE_QUESTION_ID";
inline constexpr std::string_view kQuizNotPublished = "QUIZ_NOT_PUBLISHED";
inline constexpr std::string_view kSheetQuizMismatch = "SHEET_QUIZ_MISMATCH";
inline constexpr std::string_view kAnswerCountMismatch = "ANSWER_COUNT_MISMATCH";
inline constexpr std::string_view kAnswerIndexOutOfRange = "ANSWER_INDEX_OUT_OF_RANGE";
inline constexpr std::string_view kUnknownVoidedQuestion = "UNKNOWN_VOIDED_QUESTION";
inline constexpr std::string_view kNumQuestionsOutOfRange = "NUM_QUESTIONS_OUT_OF_RANGE";
inline constexpr std::string_view kEmptyStudentCode = "EMPTY_STUDENT_CODE";
inline constexpr std::string_view kLanguageNotAllowed = "LANGUAGE_NOT_ALLOWED";
inline constexpr std::string_view kInvalidTopic = "INVALID_TOPIC";
inline constexpr std::string_view kMissingStudentRef = "MISSING_STUDENT_REF";
inline constexpr std::string_view kFlagAlreadyResolved = "FLAG_ALREADY_RESOLVED";
inline constexpr std::string_view kInvalidFlagStatus = "INVALID_FLAG_STATUS";
}  // namespace codes

// Raised when an operation's contract is violated by its inputs. Carries
// every issue found, not just the first.
class McqError : public std::runtime_error {
 public:
  explicit McqError(std::vector<Issue> issues);
  McqError(std::string_view code, std::string message);

  const std::vector<Issue> &issues() const noexcept { return issues_; }
  const std::string &code() const noexcept { return issues_.front().code; }

 private:
  std::vector<Issue> issues_;
};

const std::vector<std::string> &default_language_allow_list();

struct GenerationRequest {
  int num_questions = 0;
  std::string assignment_text;
  std::vector<std::string> topics;
  std::string language;
  std::optional<std::string> provided_code;
  std::string student_code;
  std::string student_ref;

  bool operator==(const GenerationRequest &) const = default;
};

// Trims topics and language, lowercases the language, and treats a blank
// provided_code as absent. Code is never modified otherwise.
GenerationRequest normalize_request(GenerationRequest request);

// Empty result means valid.
std::vector<Issue> validate_request(const GenerationRequest &request,
                                    const std::vector<std::string> &allowed_languages);

struct MCQuestion {
  std::string question_id;
  std::string stem;
  std::vector<std::string> options;
  int correct_index = 0;
  std::optional<std::string> explanation;
  std::optional<std::string> topic;

  bool operator==(const MCQuestion &) const = default;
};

// A question record as it comes out of the model, before validation.
struct RawQuestion {
  std::string stem;
  std::vector<std::string> options;
  std::int64_t correct_index = 0;
  std::optional<std::string> explanation;
  std::optional<std::string> topic;

  bool operator==(const RawQuestion &) const = default;
};

struct ValidationResult {
  std::optional<MCQuestion> question;
  std::vector<Issue> issues;

  bool ok() const noexcept { return question.has_value(); }
};

ValidationResult validate_question(const RawQuestion &candidate);

enum class QuizStatus { draft, published };

struct Quiz {
  std::string quiz_id;
  GenerationRequest request;
  std::vector<MCQuestion> questions;
  std::string disclaimer;
  QuizStatus status = QuizStatus::draft;
  Timestamp created_at{};

  bool operator==(const Quiz &) const = default;

  const MCQuestion *find_question(std::string_view question_id) const;
};

// Questions without an id receive "q1", "q2", ... by position.
Quiz assemble_quiz(const GenerationRequest &request, std::vector<MCQuestion> questions);

struct StudentQuestionView {
  std::string question_id;
  std::string stem;
  std::vector<std::string> choices;  // options followed by kFlagOptionText
};

struct StudentView {
  std::string quiz_id;
  std::string disclaimer;
  std::vector<StudentQuestionView> questions;
};

StudentView render_for_student(const Quiz &quiz);

// One answer per question: either a chosen option or the flag choice.
class Answer {
 public:
  static constexpr int kFlagWire = -1;

  static Answer select(int index) { return Answer{index}; }
  static Answer flag() { return Answer{kFlagWire}; }
  // -1 decodes to FLAG; any other negative value is rejected.
  static std::optional<Answer> from_wire(std::int64_t value);

  bool is_flag() const noexcept { return value_ == kFlagWire; }
  int index() const noexcept { return value_; }
  int to_wire() const noexcept { return value_; }

  bool operator==(const Answer &) const = default;

 private:
  explicit Answer(int value) : value_(value) {}
  int value_;
};

struct AnswerSheet {
  std::string quiz_id;
  std::string student_ref;
  std::vector<Answer> answers;
  Timestamp submitted_at{};

  bool operator==(const AnswerSheet &) const = default;
};

enum class Outcome { correct, incorrect, flagged_pending, voided };

std::string_view to_string(Outcome outcome);

struct GradeReport {
  std::vector<Outcome> per_question;
  int numerator = 0;
  int denominator = 0;
  std::optional<double> score;  // absent when denominator == 0

  bool operator==(const GradeReport &) const = default;

  // "n/d", or "undefined" when nothing was scoreable.
  std::string score_text() const;
};

GradeReport grade_sheet(const Quiz &quiz, const AnswerSheet &sheet,
                        const std::set<std::string> &voided);

enum class FlagStatus { pending, resolved_valid, resolved_invalid };

std::string_view to_string(FlagStatus status);
std::optional<FlagStatus> parse_flag_status(std::string_view text);

struct FlagRecord {
  std::string flag_id;
  std::string quiz_id;
  std::string question_id;
  std::string student_ref;
  FlagStatus status = FlagStatus::pending;
  std::optional<std::string> resolution_note;
  Timestamp created_at{};
  std::optional<Timestamp> resolved_at;

  bool operator==(const FlagRecord &) const = default;

  // pending -> resolved_valid | resolved_invalid; resolved states are terminal.
  void resolve(FlagStatus to, std::optional<std::string> note, Timestamp at);
};

// Line indices (0-based) of student_code not present, after trimming, in
// provided_code. Blank lines are never reported.
std::set<std::size_t> student_authored_lines(const std::optional<std::string> &provided_code,
                                             std::string_view student_code);

struct SkeletonWarning {
  std::string question_id;
  std::string warning;

  bool operator==(const SkeletonWarning &) const = default;
};

// Minimum length of a quoted fragment, after whitespace collapsing.
inline constexpr std::size_t kSkeletonQuoteLength = 20;

std::vector<SkeletonWarning> skeleton_targeting_warnings(
    const std::vector<MCQuestion> &questions, const std::optional<std::string> &provided_code,
    std::string_view student_code);

}  // namespace automcq
