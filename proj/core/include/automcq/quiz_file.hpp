#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "automcq/mcq.hpp"

namespace automcq {

inline constexpr int kQuizFileFormatVersion = 1;

// On-disk quiz in lecturer form (answers included), for offline grading.
struct QuizFile {
  Quiz quiz;
  std::vector<SkeletonWarning> skeleton_warnings;

  bool operator==(const QuizFile &) const = default;
};

// Unreadable, unwritable or unparseable files.
class FileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json quiz_file_to_json(const QuizFile &file);
// Throws McqError for a wrong format_version or malformed content.
QuizFile quiz_file_from_json(const nlohmann::json &j);

void save_quiz_file(const std::filesystem::path &path, const QuizFile &file);
QuizFile load_quiz_file(const std::filesystem::path &path);

std::string read_text_file(const std::filesystem::path &path);
void write_text_file(const std::filesystem::path &path, std::string_view content);

}  // namespace automcq
