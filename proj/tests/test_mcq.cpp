#include <doctest.h>

#include <algorithm>
#include <random>

#include "automcq/mcq.hpp"
#include "support/oracles.hpp"
#include "support/test_support.hpp"

using namespace automcq;
using automcq::testing::fixture;
using automcq::testing::make_question;

namespace {

RawQuestion raw(std::string stem, std::vector<std::string> options, std::int64_t correct) {
  RawQuestion r;
  r.stem = std::move(stem);
  r.options = std::move(options);
  r.correct_index = correct;
  return r;
}

bool has_code(const std::vector<Issue> &issues, std::string_view code) {
  return std::any_of(issues.begin(), issues.end(), [&](const Issue &i) { return i.code == code; });
}

GenerationRequest small_request(int n) {
  GenerationRequest r;
  r.num_questions = n;
  r.assignment_text = "Write a class";
  r.language = "java";
  r.student_code = "class A {}";
  r.student_ref = "s1";
  return r;
}

Quiz published_quiz(std::vector<MCQuestion> questions) {
  const auto request = small_request(static_cast<int>(questions.size()));
  auto quiz = assemble_quiz(request, std::move(questions));
  quiz.status = QuizStatus::published;
  return quiz;
}

AnswerSheet sheet_for(const Quiz &quiz, const std::vector<int> &wire) {
  AnswerSheet sheet;
  sheet.quiz_id = quiz.quiz_id;
  sheet.student_ref = "s1";
  for (int w : wire) sheet.answers.push_back(*Answer::from_wire(w));
  return sheet;
}

std::vector<std::string> outcome_names(const GradeReport &report) {
  std::vector<std::string> out;
  for (auto o : report.per_question) out.emplace_back(to_string(o));
  return out;
}

}  // namespace

TEST_SUITE("question validation") {
  TEST_CASE("four distinct options with an in-range index is valid") {
    auto result = validate_question(raw("What does getTax() return?", {"A", "B", "C", "D"}, 2));
    REQUIRE(result.ok());
    CHECK(result.issues.empty());
    CHECK(result.question->correct_index == 2);
    CHECK(result.question->options.size() == 4);
  }

  TEST_CASE("options equal after whitespace normalization are duplicates") {
    auto result = validate_question(raw("Q?", {"x", "x "}, 0));
    CHECK_FALSE(result.ok());
    CHECK(has_code(result.issues, codes::kDuplicateOptions));
  }

  TEST_CASE("case and inner whitespace are folded for duplicates") {
    CHECK(has_code(validate_question(raw("Q?", {"Return  X", "return x", "y"}, 0)).issues,
                   codes::kDuplicateOptions));
  }

  TEST_CASE("correct index equal to option count is out of range") {
    auto result = validate_question(raw("Q?", {"A", "B", "C"}, 3));
    CHECK_FALSE(result.ok());
    CHECK(has_code(result.issues, codes::kCorrectIndexOutOfRange));
  }

  TEST_CASE("negative correct index is out of range") {
    CHECK(has_code(validate_question(raw("Q?", {"A", "B"}, -1)).issues,
                   codes::kCorrectIndexOutOfRange));
  }

  TEST_CASE("blank stem") {
    CHECK(has_code(validate_question(raw("   ", {"A", "B"}, 0)).issues, codes::kEmptyStem));
  }

  TEST_CASE("option counts outside 2..6") {
    CHECK(has_code(validate_question(raw("Q?", {"A"}, 0)).issues, codes::kOptionCountOutOfRange));
    CHECK(has_code(validate_question(raw("Q?", {"a", "b", "c", "d", "e", "f", "g"}, 0)).issues,
                   codes::kOptionCountOutOfRange));
    CHECK(validate_question(raw("Q?", {"a", "b", "c", "d", "e", "f"}, 5)).ok());
  }

  TEST_CASE("an option may not impersonate the flag choice") {
    auto result = validate_question(raw("Q?", {"A", "this question doesn't  seem right"}, 0));
    CHECK(has_code(result.issues, codes::kReservedOptionText));
  }

  TEST_CASE("every violation is reported together") {
    auto result = validate_question(raw("", {"x"}, 4));
    CHECK(has_code(result.issues, codes::kEmptyStem));
    CHECK(has_code(result.issues, codes::kOptionCountOutOfRange));
    CHECK(has_code(result.issues, codes::kCorrectIndexOutOfRange));
  }
}

TEST_SUITE("request validation") {
  TEST_CASE("valid request") {
    CHECK(validate_request(small_request(3), default_language_allow_list()).empty());
  }
  TEST_CASE("question count bounds") {
    for (int n : {0, -1, 11}) {
      CHECK(has_code(validate_request(small_request(n), default_language_allow_list()),
                     codes::kNumQuestionsOutOfRange));
    }
    CHECK(validate_request(small_request(10), default_language_allow_list()).empty());
  }
  TEST_CASE("blank student code, unknown language, bad topic, missing ref") {
    auto r = small_request(2);
    r.student_code = " \n\t";
    r.language = "cobol";
    r.topics = {"ok", "two\nlines"};
    r.student_ref = "";
    auto issues = validate_request(r, default_language_allow_list());
    CHECK(has_code(issues, codes::kEmptyStudentCode));
    CHECK(has_code(issues, codes::kLanguageNotAllowed));
    CHECK(has_code(issues, codes::kInvalidTopic));
    CHECK(has_code(issues, codes::kMissingStudentRef));
  }
  TEST_CASE("normalization") {
    auto r = small_request(2);
    r.language = "  Java ";
    r.topics = {"  loops "};
    r.provided_code = "   \n";
    r = normalize_request(r);
    CHECK(r.language == "java");
    CHECK(r.topics == std::vector<std::string>{"loops"});
    CHECK_FALSE(r.provided_code.has_value());
    CHECK(r.student_code == "class A {}");
  }
}

TEST_SUITE("quiz assembly and rendering") {
  TEST_CASE("two questions for two requested") {
    auto quiz = assemble_quiz(small_request(2), {make_question("a?", {"1", "2"}, 0),
                                                 make_question("b?", {"1", "2"}, 1)});
    CHECK(quiz.questions.size() == 2);
    CHECK(quiz.questions[0].question_id == "q1");
    CHECK(quiz.questions[1].question_id == "q2");
    CHECK(quiz.status == QuizStatus::draft);
    CHECK(quiz.disclaimer == kDisclaimer);
    CHECK(quiz.quiz_id.rfind("quiz_", 0) == 0);
  }

  TEST_CASE("count mismatch") {
    try {
      assemble_quiz(small_request(2), {make_question("a?", {"1", "2"}, 0)});
      FAIL("expected McqError");
    } catch (const McqError &e) {
      CHECK(e.code() == codes::kQuestionCountMismatch);
    }
  }

  TEST_CASE("request snapshot is kept exactly") {
    auto request = automcq::testing::flat_request();
    auto quiz = assemble_quiz(request, {make_question("a?", {"1", "2"}, 0),
                                        make_question("b?", {"1", "2"}, 1)});
    CHECK(quiz.request == request);
  }

  TEST_CASE("student view appends the flag choice and hides answers") {
    auto quiz = published_quiz({make_question("a?", {"w", "x", "y", "z"}, 3)});
    auto view = render_for_student(quiz);
    REQUIRE(view.questions.size() == 1);
    CHECK(view.questions[0].choices.size() == 5);
    CHECK(view.questions[0].choices.back() == "This question doesn't seem right");
    CHECK(view.disclaimer.rfind("These questions were generated by AI.", 0) == 0);
  }

  TEST_CASE("draft quizzes are not rendered") {
    auto quiz = assemble_quiz(small_request(1), {make_question("a?", {"1", "2"}, 0)});
    CHECK_THROWS_AS(render_for_student(quiz), McqError);
  }
}

TEST_SUITE("answers") {
  TEST_CASE("wire decoding") {
    CHECK(Answer::from_wire(-1)->is_flag());
    CHECK(Answer::from_wire(2)->index() == 2);
    CHECK_FALSE(Answer::from_wire(-2).has_value());
    CHECK_FALSE(Answer::from_wire(std::int64_t{1} << 40).has_value());
    CHECK(Answer::flag().to_wire() == -1);
  }
}

TEST_SUITE("grading") {
  TEST_CASE("both correct") {
    auto quiz = published_quiz({make_question("a?", {"1", "2"}, 0), make_question("b?", {"1", "2"}, 1)});
    auto report = grade_sheet(quiz, sheet_for(quiz, {0, 1}), {});
    CHECK(report.numerator == 2);
    CHECK(report.denominator == 2);
    REQUIRE(report.score.has_value());
    CHECK(*report.score == 1.0);
    CHECK(report.score_text() == "2/2");
  }

  TEST_CASE("a flag is excluded from the score") {
    auto quiz = published_quiz({make_question("a?", {"1", "2"}, 0), make_question("b?", {"1", "2"}, 1)});
    auto report = grade_sheet(quiz, sheet_for(quiz, {-1, 1}), {});
    CHECK(outcome_names(report) == std::vector<std::string>{"flagged_pending", "correct"});
    CHECK(report.numerator == 1);
    CHECK(report.denominator == 1);
    CHECK(*report.score == 1.0);
  }

  TEST_CASE("everything voided leaves the score undefined") {
    auto quiz = published_quiz({make_question("a?", {"1", "2"}, 0), make_question("b?", {"1", "2"}, 1)});
    auto report = grade_sheet(quiz, sheet_for(quiz, {0, 0}), {"q1", "q2"});
    CHECK(report.denominator == 0);
    CHECK_FALSE(report.score.has_value());
    CHECK(report.score_text() == "undefined");
  }

  TEST_CASE("contract violations") {
    auto quiz = published_quiz({make_question("a?", {"1", "2"}, 0), make_question("b?", {"1", "2"}, 1)});
    auto expect_code = [&](const AnswerSheet &sheet, const std::set<std::string> &voided,
                           std::string_view code) {
      try {
        grade_sheet(quiz, sheet, voided);
        FAIL("expected McqError");
      } catch (const McqError &e) {
        CHECK(e.code() == code);
      }
    };
    expect_code(sheet_for(quiz, {0}), {}, codes::kAnswerCountMismatch);
    expect_code(sheet_for(quiz, {0, 2}), {}, codes::kAnswerIndexOutOfRange);
    expect_code(sheet_for(quiz, {0, 1}), {"q9"}, codes::kUnknownVoidedQuestion);
    auto other = sheet_for(quiz, {0, 1});
    other.quiz_id = "quiz_other";
    expect_code(other, {}, codes::kSheetQuizMismatch);
  }

  TEST_CASE("all 25 sheets of a two-question quiz agree with the brute-force scorer") {
    auto quiz = published_quiz({make_question("a?", {"a", "b", "c", "d"}, 1),
                                make_question("b?", {"a", "b", "c", "d"}, 3)});
    const auto sheets = oracle::all_sheets({4, 4});
    REQUIRE(sheets.size() == 25);
    for (const auto &wire : sheets) {
      auto report = grade_sheet(quiz, sheet_for(quiz, wire), {});
      auto expected = oracle::brute_force_score({1, 3}, wire, {false, false});
      CHECK(outcome_names(report) == expected.outcomes);
      CHECK(report.numerator == expected.numerator);
      CHECK(report.denominator == expected.denominator);
    }
  }

  TEST_CASE("partition, bounds and voiding monotonicity over random sheets") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 500; ++trial) {
      const int n = std::uniform_int_distribution(1, 6)(rng);
      std::vector<MCQuestion> questions;
      std::vector<int> wire;
      for (int i = 0; i < n; ++i) {
        const int k = std::uniform_int_distribution(2, 6)(rng);
        std::vector<std::string> options;
        for (int o = 0; o < k; ++o) options.push_back("opt" + std::to_string(o));
        questions.push_back(make_question("stem?", options, std::uniform_int_distribution(0, k - 1)(rng)));
        wire.push_back(std::uniform_int_distribution(-1, k - 1)(rng));
      }
      auto quiz = published_quiz(questions);
      auto sheet = sheet_for(quiz, wire);
      std::set<std::string> voided;
      auto before = grade_sheet(quiz, sheet, voided);
      for (int i = 0; i < n; ++i) {
        if (std::uniform_int_distribution(0, 2)(rng) != 0) continue;
        voided.insert("q" + std::to_string(i + 1));
        auto after = grade_sheet(quiz, sheet, voided);
        CHECK(after.denominator <= before.denominator);
        for (int j = 0; j < n; ++j) {
          if (j != i && before.per_question[j] != Outcome::voided) {
            CHECK(after.per_question[j] == before.per_question[j]);
          }
        }
        before = after;
      }
      const auto pending = std::count(before.per_question.begin(), before.per_question.end(),
                                      Outcome::flagged_pending);
      const auto void_count =
          std::count(before.per_question.begin(), before.per_question.end(), Outcome::voided);
      CHECK(before.denominator + pending + void_count == n);
      CHECK(before.numerator <= before.denominator);
      if (before.denominator > 0) {
        CHECK(*before.score == static_cast<double>(before.numerator) / before.denominator);
      }
    }
  }
}

TEST_SUITE("flags") {
  TEST_CASE("pending resolves once") {
    FlagRecord flag;
    flag.resolve(FlagStatus::resolved_valid, "fine", now());
    CHECK(flag.status == FlagStatus::resolved_valid);
    CHECK(flag.resolved_at.has_value());
    try {
      flag.resolve(FlagStatus::resolved_invalid, std::nullopt, now());
      FAIL("expected McqError");
    } catch (const McqError &e) {
      CHECK(e.code() == codes::kFlagAlreadyResolved);
    }
    CHECK(flag.status == FlagStatus::resolved_valid);
  }
  TEST_CASE("resolving to pending is rejected") {
    FlagRecord flag;
    CHECK_THROWS_AS(flag.resolve(FlagStatus::pending, std::nullopt, now()), McqError);
    CHECK(flag.status == FlagStatus::pending);
  }
  TEST_CASE("status names") {
    for (auto s : {FlagStatus::pending, FlagStatus::resolved_valid, FlagStatus::resolved_invalid}) {
      CHECK(parse_flag_status(to_string(s)) == s);
    }
    CHECK_FALSE(parse_flag_status("closed").has_value());
  }
}

TEST_SUITE("skeleton code") {
  TEST_CASE("identical provided and student code has no authored lines") {
    const auto building = fixture("Building.java");
    CHECK(student_authored_lines(building, building).empty());
  }

  TEST_CASE("without provided code every non-blank line is authored") {
    const std::string code = "a\n\nb\nc\n  \nd\ne\n";
    CHECK(student_authored_lines(std::nullopt, code) == std::set<std::size_t>{0, 2, 3, 5, 6});
  }

  TEST_CASE("appended Flat class yields exactly its new lines") {
    const auto request = automcq::testing::flat_request();
    // Lines 0-13 are Building.java, 14 is blank, Flat starts at 15. Braces
    // and "public double getTax() {" also occur in Building.
    const std::set<std::size_t> expected{15, 17, 18, 21, 23};
    CHECK(student_authored_lines(request.provided_code, request.student_code) == expected);
  }

  TEST_CASE("quoting a skeleton-only line warns") {
    const auto request = automcq::testing::flat_request();
    auto quiz = assemble_quiz(request, {make_question("What does `return this.windows * this.charge;` compute?",
                                                      {"a", "b", "c", "d"}, 0),
                                        make_question("Why does Flat call super(windows, charge)?",
                                                      {"a", "b", "c", "d"}, 0)});
    auto warnings = skeleton_targeting_warnings(quiz.questions, request.provided_code, request.student_code);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].question_id == "q1");
  }

  TEST_CASE("questions without code quotes do not warn") {
    const auto request = automcq::testing::flat_request();
    auto quiz = assemble_quiz(request, {make_question("What is inheritance?", {"a", "b"}, 0),
                                        make_question("What is overriding?", {"a", "b"}, 0)});
    CHECK(skeleton_targeting_warnings(quiz.questions, request.provided_code, request.student_code).empty());
  }

  TEST_CASE("no provided code never warns") {
    auto quiz = assemble_quiz(small_request(1),
                              {make_question("return this.windows * this.charge;", {"a", "b"}, 0)});
    CHECK(skeleton_targeting_warnings(quiz.questions, std::nullopt, "return this.windows * this.charge;")
              .empty());
  }
}
