#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "automcq/common.hpp"
#include "automcq/mcq.hpp"

namespace automcq {

enum class PromptRole { system, user };

std::string_view to_string(PromptRole role);

struct PromptMessage {
  PromptRole role = PromptRole::user;
  std::string content;

  bool operator==(const PromptMessage &) const = default;
};

// Appended to every user prompt and restated by the repair prompt.
extern const std::string_view kOutputFormatInstructions;

PromptMessage build_system_prompt();

// Sections, in order: NUMBER OF QUESTIONS, ASSIGNMENT, TOPICS, LANGUAGE,
// PROVIDED CODE, STUDENT CODE, then the output-format block. Code is fenced
// with a backtick run longer than any run inside it, so it is never altered.
PromptMessage build_user_prompt(const GenerationRequest &request);

// Throws std::invalid_argument when errors is empty.
PromptMessage build_repair_prompt(std::string_view raw_response, const std::vector<Issue> &errors);

// Human-readable description of an error code; empty for unknown codes.
std::string_view describe_error_code(std::string_view code);

// Inverse of build_user_prompt for every field it embeds (student_ref is
// never sent to the model). Returns nullopt for text not produced by it.
std::optional<GenerationRequest> parse_user_prompt(std::string_view content);

}  // namespace automcq
