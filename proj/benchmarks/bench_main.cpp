#include <benchmark/benchmark.h>

#include <filesystem>
#include <random>

#include "automcq/json_io.hpp"
#include "automcq/llm.hpp"
#include "automcq/prompt.hpp"
#include "automcq/store.hpp"

using namespace automcq;

namespace {

GenerationRequest sample_request(int n) {
  GenerationRequest r;
  r.num_questions = n;
  r.assignment_text = "Develop a class Flat which inherits from Building and overrides getTax().";
  r.topics = {"inheritance and overriding"};
  r.language = "java";
  r.provided_code =
      "public class Building\n{\n    private int windows;\n    private double charge;\n\n"
      "    public double getTax() {\n        return this.windows * this.charge;\n    }\n}\n";
  r.student_code = *r.provided_code +
                   "\npublic class Flat extends Building\n{\n    @Override\n    public double getTax() {\n"
                   "        return super.getTax() - 75;\n    }\n}\n";
  r.student_ref = "bench";
  return r;
}

Quiz sample_quiz(int n) {
  auto request = sample_request(n);
  auto parsed = parse_questions(mock_generate(request), n);
  std::vector<MCQuestion> questions;
  for (const auto &record : parsed.records) questions.push_back(*validate_question(record).question);
  auto quiz = assemble_quiz(request, std::move(questions));
  quiz.status = QuizStatus::published;
  return quiz;
}

void BM_GradeSheet(benchmark::State &state) {
  const int n = static_cast<int>(state.range(0));
  const auto quiz = sample_quiz(n);
  AnswerSheet sheet;
  sheet.quiz_id = quiz.quiz_id;
  for (int i = 0; i < n; ++i) sheet.answers.push_back(i % 3 == 0 ? Answer::flag() : Answer::select(i % 4));
  const std::set<std::string> voided{"q2"};
  for (auto _ : state) benchmark::DoNotOptimize(grade_sheet(quiz, sheet, voided));
}
BENCHMARK(BM_GradeSheet)->Arg(2)->Arg(10);

void BM_ParseQuestions(benchmark::State &state) {
  const int n = static_cast<int>(state.range(0));
  const auto raw = "Here you go:\n```json\n" + mock_generate(sample_request(n)) + "\n```";
  for (auto _ : state) benchmark::DoNotOptimize(parse_questions(raw, n));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * raw.size()));
}
BENCHMARK(BM_ParseQuestions)->Arg(2)->Arg(10);

void BM_BuildUserPrompt(benchmark::State &state) {
  const auto request = sample_request(2);
  for (auto _ : state) benchmark::DoNotOptimize(build_user_prompt(request));
}
BENCHMARK(BM_BuildUserPrompt);

void BM_MockGenerate(benchmark::State &state) {
  const auto request = sample_request(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mock_generate(request));
}
BENCHMARK(BM_MockGenerate)->Arg(2)->Arg(10);

// Dominated by fsync; measures the durability cost per document.
void BM_StorePut(benchmark::State &state) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("automcq-bench-" + std::to_string(std::random_device{}()));
  {
    DocumentStore store(dir);
    const nlohmann::json doc = sample_quiz(2);
    std::size_t i = 0;
    for (auto _ : state) store.put("quizzes", "q" + std::to_string(i++ % 64), doc);
  }
  std::filesystem::remove_all(dir);
}
BENCHMARK(BM_StorePut)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
