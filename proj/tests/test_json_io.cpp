#include <doctest.h>

#include "automcq/json_io.hpp"
#include "automcq/quiz_file.hpp"
#include "support/test_support.hpp"

using namespace automcq;
using automcq::testing::make_question;
using automcq::testing::TempDir;

namespace {

Quiz flat_quiz() {
  const auto request = automcq::testing::flat_request();
  auto quiz = assemble_quiz(request, {make_question("What does Flat.getTax() return for (7, 18.5)?",
                                                    {"54.5", "129.5", "75", "204.5"}, 0, "7 * 18.5 - 75"),
                                      make_question("Which keyword calls the parent constructor?",
                                                    {"this", "super", "extends", "base"}, 1)});
  quiz.questions[1].topic = "inheritance and overriding";
  quiz.status = QuizStatus::published;
  return quiz;
}

std::string malformed_code(const std::function<void()> &fn) {
  try {
    fn();
  } catch (const McqError &e) {
    return e.code();
  }
  return "";
}

}  // namespace

TEST_CASE("timestamps round trip at millisecond precision") {
  const auto t = std::chrono::time_point_cast<std::chrono::milliseconds>(now());
  CHECK(parse_timestamp(format_timestamp(t)) == t);
  CHECK(format_timestamp(Timestamp{std::chrono::milliseconds(1'714'555'800'250)}) ==
        "2024-05-01T09:30:00.250Z");
  CHECK_FALSE(parse_timestamp("yesterday").has_value());
}

TEST_CASE("quiz round trips byte for byte") {
  const auto quiz = flat_quiz();
  const auto text = json(quiz).dump();
  const auto back = quiz_from_json(json::parse(text));
  CHECK(back == quiz);
  CHECK(json(back).dump() == text);
  CHECK(json(back.request).dump() == json(automcq::testing::flat_request()).dump());
}

TEST_CASE("student view has no answers") {
  const auto view = json(render_for_student(flat_quiz()));
  const auto text = view.dump();
  CHECK(text.find("correct_index") == std::string::npos);
  CHECK(text.find("explanation") == std::string::npos);
  CHECK(text.find("7 * 18.5 - 75") == std::string::npos);
  CHECK(view.at("questions")[0].at("choices").size() == 5);
  CHECK(view.at("questions")[0].at("flag_choice_index") == 4);
  CHECK(view.at("flag_choice_text") == "This question doesn't seem right");
}

TEST_CASE("grade report score") {
  GradeReport empty;
  const auto j = json(empty);
  CHECK(j.at("score").is_null());
  CHECK(j.at("score_text") == "undefined");
}

TEST_CASE("answer sheet wire form") {
  const auto sheet = sheet_from_json(json::parse(R"({"answers":[0,-1,3]})"));
  CHECK(sheet.quiz_id.empty());
  REQUIRE(sheet.answers.size() == 3);
  CHECK(sheet.answers[1].is_flag());
  CHECK(sheet.answers[2].index() == 3);
  CHECK(malformed_code([] { sheet_from_json(json::parse(R"({"answers":[-2]})")); }) ==
        codes::kAnswerIndexOutOfRange);
  CHECK(malformed_code([] { sheet_from_json(json::parse(R"({"answers":["a"]})")); }) ==
        codes::kMalformedField);
  CHECK(malformed_code([] { sheet_from_json(json::parse(R"([])")); }) == codes::kMalformedField);
}

TEST_CASE("request reader") {
  const auto r = request_from_json(json::parse(
      R"({"num_questions":2,"language":"java","student_code":"x","topics":["a"],"provided_code":null})"));
  CHECK(r.num_questions == 2);
  CHECK_FALSE(r.provided_code.has_value());
  CHECK(malformed_code([] { request_from_json(json::parse(R"({"language":"java","student_code":"x"})")); }) ==
        codes::kMalformedField);
  CHECK(malformed_code([] {
          request_from_json(json::parse(R"({"num_questions":"2","language":"java","student_code":"x"})"));
        }) == codes::kMalformedField);
  const auto huge = request_from_json(
      json::parse(R"({"num_questions":99999999999,"language":"java","student_code":"x"})"));
  CHECK(huge.num_questions > kMaxQuestions);
}

TEST_CASE("flag record round trip") {
  FlagRecord flag;
  flag.flag_id = "flag_1";
  flag.quiz_id = "quiz_1";
  flag.question_id = "q2";
  flag.student_ref = "s1";
  flag.created_at = std::chrono::time_point_cast<std::chrono::milliseconds>(now());
  flag.resolve(FlagStatus::resolved_invalid, "off topic", flag.created_at);
  CHECK(flag_from_json(json(flag)) == flag);
}

TEST_CASE("invalid JSON text") {
  CHECK(malformed_code([] { parse_json_text("{"); }) == codes::kInvalidJson);
}

TEST_CASE("quiz file save and load") {
  TempDir dir;
  QuizFile file{flat_quiz(), {{"q1", "quotes provided code"}}};
  save_quiz_file(dir / "quiz.json", file);
  CHECK(load_quiz_file(dir / "quiz.json") == file);
  CHECK(json::parse(read_text_file(dir / "quiz.json")).at("format_version") == kQuizFileFormatVersion);
}

TEST_CASE("quiz file errors") {
  TempDir dir;
  CHECK_THROWS_AS(load_quiz_file(dir / "missing.json"), FileError);
  write_text_file(dir / "bad.json", "{");
  CHECK_THROWS_AS(load_quiz_file(dir / "bad.json"), FileError);
  write_text_file(dir / "v2.json", R"({"format_version":2,"quiz":{}})");
  CHECK_THROWS_AS(load_quiz_file(dir / "v2.json"), FileError);
  CHECK_THROWS_AS(write_text_file(dir / "no" / "such" / "dir.json", "x"), FileError);
}
