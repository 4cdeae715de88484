#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tpt/types.hpp"

namespace tpt {

// Reads a problem set: one JSON object per line, blank lines ignored.
// Math records carry `final_answer`, code records carry `test_cases`.
// A record whose variant disagrees with `kind` is a ValidationError, as is
// a duplicate id. Malformed JSON raises ParseError with the line number.
std::vector<ProblemSpec> load_problems(const std::filesystem::path& path, TaskKind kind);

void write_problems(const std::vector<ProblemSpec>& problems, const std::filesystem::path& path);

std::size_t write_records(const std::vector<SolutionRecord>& records, const std::filesystem::path& path);
std::vector<SolutionRecord> read_records(const std::filesystem::path& path);

// Generic line-record helpers used by the typed readers above.
std::vector<nlohmann::json> read_json_lines(const std::filesystem::path& path);
void write_json_lines(const std::vector<nlohmann::json>& rows, const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);
// Pretty-prints with a trailing newline. Writes to a temp file then renames
// so readers never observe a half-written document.
void write_json_file(const nlohmann::json& doc, const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::string& contents, const std::filesystem::path& path);

}  // namespace tpt
