#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace automcq {

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

Timestamp now();

// ISO-8601 UTC with millisecond precision, e.g. 2024-05-01T09:30:00.250Z.
std::string format_timestamp(Timestamp ts);
std::optional<Timestamp> parse_timestamp(std::string_view text);

// A machine-readable error code paired with a human-readable detail.
struct Issue {
  std::string code;
  std::string message;

  bool operator==(const Issue &) const = default;
};

std::string join_issues(const std::vector<Issue> &issues);

// 128 random bits rendered as 32 lowercase hex characters, with a prefix.
std::string random_id(std::string_view prefix);

std::string_view trim(std::string_view text);

// Trim, collapse every whitespace run to one space.
std::string collapse_whitespace(std::string_view text);

// collapse_whitespace followed by ASCII case folding.
std::string normalize_for_compare(std::string_view text);

// Split on '\n'; a trailing '\r' on each line is dropped.
std::vector<std::string_view> split_lines(std::string_view text);

// Comma separated, trimmed, empties dropped.
std::vector<std::string> split_csv(std::string_view text);

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace automcq
