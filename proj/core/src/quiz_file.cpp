#include "automcq/quiz_file.hpp"

#include <fstream>
#include <sstream>

#include "automcq/json_io.hpp"

namespace automcq {

nlohmann::json quiz_file_to_json(const QuizFile &file) {
  return json{{"format_version", kQuizFileFormatVersion},
              {"quiz", file.quiz},
              {"skeleton_warnings", file.skeleton_warnings}};
}

QuizFile quiz_file_from_json(const nlohmann::json &j) {
  if (!j.is_object()) throw McqError(codes::kMalformedField, "quiz file must be a JSON object");
  const auto version = j.find("format_version");
  if (version == j.end() || !version->is_number_integer() ||
      version->get<int>() != kQuizFileFormatVersion) {
    throw McqError(codes::kMalformedField,
                   "field 'format_version' must be " + std::to_string(kQuizFileFormatVersion));
  }
  if (!j.contains("quiz")) throw McqError(codes::kMalformedField, "field 'quiz' must be present");
  QuizFile file;
  file.quiz = quiz_from_json(j.at("quiz"));
  if (auto w = j.find("skeleton_warnings"); w != j.end() && w->is_array()) {
    for (const auto &item : *w) file.skeleton_warnings.push_back(warning_from_json(item));
  }
  return file;
}

std::string read_text_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw FileError("error while reading " + path.string());
  return buffer.str();
}

void write_text_file(const std::filesystem::path &path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FileError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw FileError("error while writing " + path.string());
}

void save_quiz_file(const std::filesystem::path &path, const QuizFile &file) {
  write_text_file(path, quiz_file_to_json(file).dump(2) + "\n");
}

QuizFile load_quiz_file(const std::filesystem::path &path) {
  const auto text = read_text_file(path);
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw FileError(path.string() + " is not valid JSON");
  try {
    return quiz_file_from_json(j);
  } catch (const McqError &e) {
    throw FileError(path.string() + ": " + e.what());
  }
}

}  // namespace automcq
