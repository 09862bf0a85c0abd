#include "automcq/prompt.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

namespace automcq {

namespace {

constexpr std::string_view kSystemPrompt =
    "You are an educational assistant specializing in computer science. Your task is to analyse "
    "students' code for the beginner programmer class and generate thoughtful multiple-choice "
    "questions that can help them understand and improve their coding skills. You should try and "
    "make good distractor options to really test students understanding.";

constexpr std::string_view kNumberLabel = "NUMBER OF QUESTIONS: ";
constexpr std::string_view kAssignmentLabel = "ASSIGNMENT:\n";
constexpr std::string_view kTopicsLabel = "TOPICS:";
constexpr std::string_view kLanguageLabel = "LANGUAGE: ";
constexpr std::string_view kProvidedLabel = "PROVIDED CODE:";
constexpr std::string_view kStudentLabel = "STUDENT CODE:";
constexpr std::string_view kNone = " none";

std::string fence_for(std::string_view code) {
  std::size_t longest = 0, run = 0;
  for (char c : code) {
    run = c == '`' ? run + 1 : 0;
    longest = std::max(longest, run);
  }
  return std::string(std::max<std::size_t>(3, longest + 1), '`');
}

void append_code_block(std::string &out, std::string_view label, std::string_view language,
                       std::string_view code) {
  const auto fence = fence_for(code);
  out.append(label).append("\n");
  out.append(fence).append(language).append("\n");
  out.append(code).append("\n");
  out.append(fence);
}

bool ends_with(std::string_view text, std::string_view suffix) {
  return text.size() >= suffix.size() && text.substr(text.size() - suffix.size()) == suffix;
}

bool starts_with(std::string_view text, std::string_view prefix) {
  return text.substr(0, prefix.size()) == prefix;
}

// Parses "LABEL\n<fence><lang>\n<code>\n<fence>" at the end of text. On
// success returns the code and shrinks text to what precedes the label.
std::optional<std::string> take_trailing_code_block(std::string_view &text, std::string_view label) {
  std::size_t ticks = 0;
  while (ticks < text.size() && text[text.size() - 1 - ticks] == '`') ++ticks;
  if (ticks < 3) return std::nullopt;
  const std::string fence(ticks, '`');
  const auto closing = "\n" + fence;
  if (!ends_with(text, closing)) return std::nullopt;

  const auto opening = std::string(label) + "\n" + fence;
  const auto label_pos = text.rfind(opening);
  if (label_pos == std::string_view::npos) return std::nullopt;
  const auto line_end = text.find('\n', label_pos + opening.size());
  if (line_end == std::string_view::npos) return std::nullopt;
  const auto code_begin = line_end + 1;
  const auto code_end = text.size() - closing.size();
  if (code_begin > code_end) return std::nullopt;
  std::string code(text.substr(code_begin, code_end - code_begin));
  text = text.substr(0, label_pos);
  return code;
}

bool strip_suffix(std::string_view &text, std::string_view suffix) {
  if (!ends_with(text, suffix)) return false;
  text.remove_suffix(suffix.size());
  return true;
}

}  // namespace

const std::string_view kOutputFormatInstructions =
    "OUTPUT FORMAT:\n"
    "Reply with only a JSON array and no other text before or after it. The array must contain "
    "exactly one object per requested question. Each object must have these fields:\n"
    "- \"stem\" (string): the question text.\n"
    "- \"options\" (array of exactly 4 strings): one correct answer and three distractors, all "
    "different from each other.\n"
    "- \"correct_index\" (integer from 0 to 3): the position of the correct answer in "
    "\"options\".\n"
    "- \"explanation\" (string): why the correct answer is right.\n"
    "- \"topic\" (string): the requested topic the question addresses.\n"
    "Do not number the options or prefix them with letters. Ask about the code in STUDENT CODE "
    "that the student wrote, not about the PROVIDED CODE.";

std::string_view to_string(PromptRole role) {
  return role == PromptRole::system ? "system" : "user";
}

PromptMessage build_system_prompt() {
  return PromptMessage{PromptRole::system, std::string(kSystemPrompt)};
}

PromptMessage build_user_prompt(const GenerationRequest &request) {
  std::string out;
  out.reserve(request.student_code.size() + request.assignment_text.size() +
              (request.provided_code ? request.provided_code->size() : 0) + 1024);

  out.append(kNumberLabel).append(std::to_string(request.num_questions)).append("\n\n");
  out.append(kAssignmentLabel).append(request.assignment_text).append("\n\n");

  out.append(kTopicsLabel);
  if (request.topics.empty()) {
    out.append(kNone);
  } else {
    for (const auto &topic : request.topics) out.append("\n- ").append(topic);
  }
  out.append("\n\n");

  out.append(kLanguageLabel).append(request.language).append("\n\n");

  if (request.provided_code) {
    append_code_block(out, kProvidedLabel, request.language, *request.provided_code);
  } else {
    out.append(kProvidedLabel).append(kNone);
  }
  out.append("\n\n");

  append_code_block(out, kStudentLabel, request.language, request.student_code);
  out.append("\n\n");
  out.append(kOutputFormatInstructions);
  return PromptMessage{PromptRole::user, std::move(out)};
}

std::string_view describe_error_code(std::string_view code) {
  struct Entry {
    std::string_view code;
    std::string_view description;
  };
  static constexpr Entry kDescriptions[] = {
      {"PARSE_FAILURE", "no JSON array of question objects could be found in the reply"},
      {"COUNT_MISMATCH", "the reply did not contain the requested number of questions"},
      {"MALFORMED_RECORD",
       "a question object is missing a field or has a field of the wrong type"},
      {"EMPTY_STEM", "a question has an empty stem"},
      {"EMPTY_OPTION", "a question has a blank option"},
      {"OPTION_COUNT_OUT_OF_RANGE", "a question has the wrong number of options"},
      {"CORRECT_INDEX_OUT_OF_RANGE", "a correct_index does not point at one of the options"},
      {"DUPLICATE_OPTIONS", "two options of the same question are identical"},
      {"RESERVED_OPTION_TEXT", "an option repeats text reserved for the quiz interface"},
  };
  for (const auto &entry : kDescriptions) {
    if (entry.code == code) return entry.description;
  }
  return {};
}

PromptMessage build_repair_prompt(std::string_view raw_response, const std::vector<Issue> &errors) {
  if (errors.empty()) throw std::invalid_argument("build_repair_prompt requires at least one error");
  std::string out;
  out.append("Your previous reply could not be used to build the quiz.\n\n");
  out.append("PREVIOUS REPLY:\n<<<\n").append(raw_response).append("\n>>>\n\n");
  out.append("PROBLEMS:\n");
  for (const auto &error : errors) {
    out.append("- ").append(error.code);
    const auto description = describe_error_code(error.code);
    if (!description.empty()) out.append(": ").append(description);
    if (!error.message.empty()) out.append(" (").append(error.message).append(")");
    out.append("\n");
  }
  out.append("\nAnswer again, following the output format exactly.\n\n");
  out.append(kOutputFormatInstructions);
  return PromptMessage{PromptRole::user, std::move(out)};
}

std::optional<GenerationRequest> parse_user_prompt(std::string_view content) {
  GenerationRequest request;
  auto text = content;
  if (!strip_suffix(text, kOutputFormatInstructions) || !strip_suffix(text, "\n\n")) {
    return std::nullopt;
  }

  auto student = take_trailing_code_block(text, kStudentLabel);
  if (!student || !strip_suffix(text, "\n\n")) return std::nullopt;
  request.student_code = std::move(*student);

  if (!strip_suffix(text, std::string(kProvidedLabel) + std::string(kNone))) {
    auto provided = take_trailing_code_block(text, kProvidedLabel);
    if (!provided) return std::nullopt;
    request.provided_code = std::move(*provided);
  }
  if (!strip_suffix(text, "\n\n")) return std::nullopt;

  const auto language_pos = text.rfind('\n');
  if (language_pos == std::string_view::npos) return std::nullopt;
  auto language_line = text.substr(language_pos + 1);
  if (!starts_with(language_line, kLanguageLabel)) return std::nullopt;
  request.language = std::string(language_line.substr(kLanguageLabel.size()));
  text = text.substr(0, language_pos);
  if (!strip_suffix(text, "\n")) return std::nullopt;

  const auto topics_pos = text.rfind("\n\n");
  if (topics_pos == std::string_view::npos) return std::nullopt;
  auto topics_block = text.substr(topics_pos + 2);
  text = text.substr(0, topics_pos);
  if (topics_block != std::string(kTopicsLabel) + std::string(kNone)) {
    if (!starts_with(topics_block, kTopicsLabel)) return std::nullopt;
    topics_block.remove_prefix(kTopicsLabel.size());
    while (!topics_block.empty()) {
      if (!starts_with(topics_block, "\n- ")) return std::nullopt;
      topics_block.remove_prefix(3);
      const auto end = std::min(topics_block.find('\n'), topics_block.size());
      request.topics.emplace_back(topics_block.substr(0, end));
      topics_block.remove_prefix(end);
    }
  }

  if (!starts_with(text, kNumberLabel)) return std::nullopt;
  text.remove_prefix(kNumberLabel.size());
  const auto number_end = text.find("\n\n");
  if (number_end == std::string_view::npos) return std::nullopt;
  const auto number = text.substr(0, number_end);
  const auto [ptr, ec] = std::from_chars(number.data(), number.data() + number.size(),
                                         request.num_questions);
  if (ec != std::errc{} || ptr != number.data() + number.size()) return std::nullopt;
  text.remove_prefix(number_end + 2);

  if (!starts_with(text, kAssignmentLabel)) return std::nullopt;
  request.assignment_text = std::string(text.substr(kAssignmentLabel.size()));
  return request;
}

}  // namespace automcq
