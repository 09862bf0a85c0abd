#include "automcq/mcq.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <unordered_set>

namespace automcq {

namespace {

Issue issue(std::string_view code, std::string message) {
  return Issue{std::string(code), std::move(message)};
}

// Folds the typographic apostrophe so "doesn’t" matches the reserved text.
std::string normalize_option(std::string_view text) {
  std::string folded;
  folded.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text.compare(i, 3, "\xE2\x80\x99") == 0) {
      folded.push_back('\'');
      i += 2;
    } else {
      folded.push_back(text[i]);
    }
  }
  return normalize_for_compare(folded);
}

std::optional<std::string> trimmed_or_none(const std::optional<std::string> &text) {
  if (!text) return std::nullopt;
  auto t = trim(*text);
  if (t.empty()) return std::nullopt;
  return std::string(t);
}

}  // namespace

McqError::McqError(std::vector<Issue> issues)
    : std::runtime_error(join_issues(issues)), issues_(std::move(issues)) {
  if (issues_.empty()) issues_.push_back(Issue{"UNKNOWN", "unspecified error"});
}

McqError::McqError(std::string_view code, std::string message)
    : McqError(std::vector<Issue>{Issue{std::string(code), std::move(message)}}) {}

const std::vector<std::string> &default_language_allow_list() {
  static const std::vector<std::string> kLanguages{"c",      "cpp",    "csharp", "go",
                                                   "java",   "javascript", "kotlin", "python",
                                                   "rust",   "typescript"};
  return kLanguages;
}

GenerationRequest normalize_request(GenerationRequest request) {
  for (auto &topic : request.topics) topic = std::string(trim(topic));
  request.language = std::string(trim(request.language));
  std::transform(request.language.begin(), request.language.end(), request.language.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (request.provided_code && trim(*request.provided_code).empty()) request.provided_code.reset();
  request.student_ref = std::string(trim(request.student_ref));
  return request;
}

std::vector<Issue> validate_request(const GenerationRequest &request,
                                    const std::vector<std::string> &allowed_languages) {
  std::vector<Issue> issues;
  if (request.num_questions < kMinQuestions || request.num_questions > kMaxQuestions) {
    issues.push_back(issue(codes::kNumQuestionsOutOfRange,
                           "num_questions must be between " + std::to_string(kMinQuestions) +
                               " and " + std::to_string(kMaxQuestions) + ", got " +
                               std::to_string(request.num_questions)));
  }
  if (trim(request.student_code).empty()) {
    issues.push_back(issue(codes::kEmptyStudentCode, "student_code is empty"));
  }
  if (std::find(allowed_languages.begin(), allowed_languages.end(), request.language) ==
      allowed_languages.end()) {
    issues.push_back(issue(codes::kLanguageNotAllowed,
                           "language '" + request.language + "' is not in the allow-list"));
  }
  for (std::size_t i = 0; i < request.topics.size(); ++i) {
    const auto &topic = request.topics[i];
    if (trim(topic).empty()) {
      issues.push_back(issue(codes::kInvalidTopic, "topic " + std::to_string(i) + " is blank"));
    } else if (topic.find_first_of("\r\n") != std::string::npos) {
      issues.push_back(
          issue(codes::kInvalidTopic, "topic " + std::to_string(i) + " contains a line break"));
    }
  }
  if (trim(request.student_ref).empty()) {
    issues.push_back(issue(codes::kMissingStudentRef, "student_ref is empty"));
  }
  return issues;
}

ValidationResult validate_question(const RawQuestion &candidate) {
  ValidationResult result;
  auto &issues = result.issues;

  MCQuestion question;
  question.stem = std::string(trim(candidate.stem));
  if (question.stem.empty()) issues.push_back(issue(codes::kEmptyStem, "stem is empty"));

  const auto count = candidate.options.size();
  if (count < static_cast<std::size_t>(kMinOptions) ||
      count > static_cast<std::size_t>(kMaxOptions)) {
    issues.push_back(issue(codes::kOptionCountOutOfRange,
                           "expected " + std::to_string(kMinOptions) + "-" +
                               std::to_string(kMaxOptions) + " options, got " +
                               std::to_string(count)));
  }
  if (candidate.correct_index < 0 || static_cast<std::uint64_t>(candidate.correct_index) >= count) {
    issues.push_back(issue(codes::kCorrectIndexOutOfRange,
                           "correct_index " + std::to_string(candidate.correct_index) +
                               " is outside 0.." + std::to_string(count == 0 ? 0 : count - 1)));
  }

  const auto reserved = normalize_option(kFlagOptionText);
  std::vector<std::string> seen;
  bool duplicate_reported = false;
  for (std::size_t i = 0; i < count; ++i) {
    const auto &option = candidate.options[i];
    question.options.emplace_back(trim(option));
    const auto key = normalize_option(option);
    if (key.empty()) {
      issues.push_back(issue("EMPTY_OPTION", "option " + std::to_string(i) + " is blank"));
    }
    if (key == reserved) {
      issues.push_back(issue(codes::kReservedOptionText,
                             "option " + std::to_string(i) + " uses the reserved flag text"));
    }
    auto prior = std::find(seen.begin(), seen.end(), key);
    if (prior != seen.end() && !duplicate_reported) {
      issues.push_back(issue(codes::kDuplicateOptions,
                             "options " + std::to_string(prior - seen.begin()) + " and " +
                                 std::to_string(i) + " are the same after normalization"));
      duplicate_reported = true;
    }
    seen.push_back(key);
  }

  if (!issues.empty()) return result;

  question.correct_index = static_cast<int>(candidate.correct_index);
  question.explanation = trimmed_or_none(candidate.explanation);
  question.topic = trimmed_or_none(candidate.topic);
  result.question = std::move(question);
  return result;
}

const MCQuestion *Quiz::find_question(std::string_view question_id) const {
  for (const auto &q : questions) {
    if (q.question_id == question_id) return &q;
  }
  return nullptr;
}

Quiz assemble_quiz(const GenerationRequest &request, std::vector<MCQuestion> questions) {
  if (static_cast<int>(questions.size()) != request.num_questions) {
    throw McqError(codes::kQuestionCountMismatch,
                   "expected " + std::to_string(request.num_questions) + " questions, got " +
                       std::to_string(questions.size()));
  }
  std::unordered_set<std::string> ids;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    auto &q = questions[i];
    if (q.question_id.empty()) q.question_id = "q" + std::to_string(i + 1);
    if (!ids.insert(q.question_id).second) {
      throw McqError(codes::kDuplicateQuestionId, "question id '" + q.question_id + "' repeats");
    }
  }
  Quiz quiz;
  quiz.quiz_id = random_id("quiz_");
  quiz.request = request;
  quiz.questions = std::move(questions);
  quiz.disclaimer = std::string(kDisclaimer);
  quiz.status = QuizStatus::draft;
  quiz.created_at = now();
  return quiz;
}

StudentView render_for_student(const Quiz &quiz) {
  if (quiz.status != QuizStatus::published) {
    throw McqError(codes::kQuizNotPublished, "quiz " + quiz.quiz_id + " is not published");
  }
  StudentView view;
  view.quiz_id = quiz.quiz_id;
  view.disclaimer = quiz.disclaimer;
  for (const auto &q : quiz.questions) {
    StudentQuestionView item{q.question_id, q.stem, q.options};
    item.choices.emplace_back(kFlagOptionText);
    view.questions.push_back(std::move(item));
  }
  return view;
}

std::optional<Answer> Answer::from_wire(std::int64_t value) {
  if (value == kFlagWire) return flag();
  if (value < 0 || value > std::numeric_limits<int>::max()) return std::nullopt;
  return select(static_cast<int>(value));
}

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::correct: return "correct";
    case Outcome::incorrect: return "incorrect";
    case Outcome::flagged_pending: return "flagged_pending";
    case Outcome::voided: return "voided";
  }
  return "unknown";
}

std::string GradeReport::score_text() const {
  if (denominator == 0) return "undefined";
  return std::to_string(numerator) + "/" + std::to_string(denominator);
}

GradeReport grade_sheet(const Quiz &quiz, const AnswerSheet &sheet,
                        const std::set<std::string> &voided) {
  if (sheet.quiz_id != quiz.quiz_id) {
    throw McqError(codes::kSheetQuizMismatch,
                   "sheet is for quiz '" + sheet.quiz_id + "', not '" + quiz.quiz_id + "'");
  }
  if (sheet.answers.size() != quiz.questions.size()) {
    throw McqError(codes::kAnswerCountMismatch,
                   "expected " + std::to_string(quiz.questions.size()) + " answers, got " +
                       std::to_string(sheet.answers.size()));
  }
  std::vector<Issue> issues;
  for (const auto &id : voided) {
    if (quiz.find_question(id) == nullptr) {
      issues.push_back(issue(codes::kUnknownVoidedQuestion, "no question '" + id + "' in quiz"));
    }
  }
  for (std::size_t i = 0; i < sheet.answers.size(); ++i) {
    const auto &answer = sheet.answers[i];
    if (!answer.is_flag() &&
        (answer.index() < 0 ||
         answer.index() >= static_cast<int>(quiz.questions[i].options.size()))) {
      issues.push_back(issue(codes::kAnswerIndexOutOfRange,
                             "answer " + std::to_string(i) + " selects option " +
                                 std::to_string(answer.index()) + " of " +
                                 std::to_string(quiz.questions[i].options.size())));
    }
  }
  if (!issues.empty()) throw McqError(std::move(issues));

  GradeReport report;
  for (std::size_t i = 0; i < quiz.questions.size(); ++i) {
    const auto &question = quiz.questions[i];
    const auto &answer = sheet.answers[i];
    Outcome outcome;
    if (voided.count(question.question_id) != 0) {
      outcome = Outcome::voided;
    } else if (answer.is_flag()) {
      outcome = Outcome::flagged_pending;
    } else if (answer.index() == question.correct_index) {
      outcome = Outcome::correct;
      ++report.numerator;
      ++report.denominator;
    } else {
      outcome = Outcome::incorrect;
      ++report.denominator;
    }
    report.per_question.push_back(outcome);
  }
  if (report.denominator > 0) {
    report.score = static_cast<double>(report.numerator) / report.denominator;
  }
  return report;
}

std::string_view to_string(FlagStatus status) {
  switch (status) {
    case FlagStatus::pending: return "pending";
    case FlagStatus::resolved_valid: return "resolved_valid";
    case FlagStatus::resolved_invalid: return "resolved_invalid";
  }
  return "unknown";
}

std::optional<FlagStatus> parse_flag_status(std::string_view text) {
  if (text == "pending") return FlagStatus::pending;
  if (text == "resolved_valid") return FlagStatus::resolved_valid;
  if (text == "resolved_invalid") return FlagStatus::resolved_invalid;
  return std::nullopt;
}

void FlagRecord::resolve(FlagStatus to, std::optional<std::string> note, Timestamp at) {
  if (to == FlagStatus::pending) {
    throw McqError(codes::kInvalidFlagStatus, "a flag can only be resolved to a terminal status");
  }
  if (status != FlagStatus::pending) {
    throw McqError(codes::kFlagAlreadyResolved,
                   "flag " + flag_id + " is already " + std::string(to_string(status)));
  }
  status = to;
  resolution_note = std::move(note);
  resolved_at = at;
}

std::set<std::size_t> student_authored_lines(const std::optional<std::string> &provided_code,
                                             std::string_view student_code) {
  std::unordered_set<std::string_view> skeleton;
  if (provided_code) {
    for (auto line : split_lines(*provided_code)) skeleton.insert(trim(line));
  }
  std::set<std::size_t> authored;
  const auto lines = split_lines(student_code);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty()) continue;
    if (!provided_code || skeleton.count(line) == 0) authored.insert(i);
  }
  return authored;
}

std::vector<SkeletonWarning> skeleton_targeting_warnings(
    const std::vector<MCQuestion> &questions, const std::optional<std::string> &provided_code,
    std::string_view student_code) {
  std::vector<SkeletonWarning> warnings;
  if (!provided_code) return warnings;

  const auto student_lines = split_lines(student_code);
  std::vector<std::string> authored;
  for (auto index : student_authored_lines(provided_code, student_code)) {
    authored.push_back(collapse_whitespace(student_lines[index]));
  }
  const auto in_authored = [&](std::string_view fragment) {
    return std::any_of(authored.begin(), authored.end(), [&](const std::string &line) {
      return line.find(fragment) != std::string::npos;
    });
  };

  std::vector<std::string> skeleton;
  for (auto line : split_lines(*provided_code)) {
    auto collapsed = collapse_whitespace(line);
    if (collapsed.size() >= kSkeletonQuoteLength) skeleton.push_back(std::move(collapsed));
  }

  for (const auto &question : questions) {
    std::vector<std::string> texts{collapse_whitespace(question.stem)};
    for (const auto &option : question.options) texts.push_back(collapse_whitespace(option));

    std::optional<std::string> quoted;
    for (const auto &line : skeleton) {
      for (std::size_t start = 0; !quoted && start + kSkeletonQuoteLength <= line.size(); ++start) {
        const std::string_view window(line.data() + start, kSkeletonQuoteLength);
        if (in_authored(window)) continue;
        for (const auto &text : texts) {
          if (text.find(window) != std::string::npos) {
            quoted = line;
            break;
          }
        }
      }
      if (quoted) break;
    }
    if (quoted) {
      warnings.push_back({question.question_id,
                          "question quotes provided skeleton code: \"" + *quoted + "\""});
    }
  }
  return warnings;
}

}  // namespace automcq
