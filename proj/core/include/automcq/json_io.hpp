#pragma once

// JSON wire forms for the domain types. Writers are ADL to_json overloads so
// nlohmann::json can convert directly; readers are explicit and throw
// McqError(MALFORMED_FIELD) naming the offending field.

#include <nlohmann/json.hpp>

#include "automcq/mcq.hpp"

namespace automcq {

using json = nlohmann::json;

namespace codes {
inline constexpr std::string_view kMalformedField = "MALFORMED_FIELD";
inline constexpr std::string_view kInvalidJson = "INVALID_JSON";
}  // namespace codes

void to_json(json &j, const Issue &issue);
void to_json(json &j, const GenerationRequest &request);
void to_json(json &j, const MCQuestion &question);  // lecturer form, answer included
void to_json(json &j, const Quiz &quiz);            // lecturer form
void to_json(json &j, const StudentView &view);
void to_json(json &j, const AnswerSheet &sheet);
void to_json(json &j, const GradeReport &report);
void to_json(json &j, const FlagRecord &flag);
void to_json(json &j, const SkeletonWarning &warning);

std::string_view to_string(QuizStatus status);

// Parses text, throwing McqError(INVALID_JSON) with the parser's message.
json parse_json_text(std::string_view text);

GenerationRequest request_from_json(const json &j);
MCQuestion question_from_json(const json &j);
Quiz quiz_from_json(const json &j);
// quiz_id and student_ref may be omitted; they default to empty.
AnswerSheet sheet_from_json(const json &j);
FlagRecord flag_from_json(const json &j);
SkeletonWarning warning_from_json(const json &j);

}  // namespace automcq
