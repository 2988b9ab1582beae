#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace fincot {

using json = nlohmann::json;

// One JSON value per non-blank line. Throws ValidationError naming the line.
std::vector<json> read_jsonl(const std::filesystem::path& path);
std::vector<json> parse_jsonl(const std::string& content);

// Compact dumps, "\n"-terminated, keys in insertion order of the json object.
void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows);
std::string to_jsonl(const std::vector<json>& rows);

json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace fincot
