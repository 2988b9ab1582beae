#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace fincot {

// Whitespace-delimited tokens. This is the project's reference tokenizer for
// dataset statistics and chunk sizing.
std::vector<std::string_view> whitespace_tokens(std::string_view text);
std::size_t whitespace_token_count(std::string_view text);

// Cost-accounting estimate when a provider reports no usage: ceil(words * 1.3).
std::size_t approx_token_count(std::string_view text);

// Lowercased alphanumeric runs ("401(k)" -> {"401", "k"}).
std::vector<std::string> lexical_terms(std::string_view text);

std::string to_lower(std::string_view text);
std::string_view trim(std::string_view text);
std::vector<std::string> split_lines(std::string_view text);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string replace_all(std::string text, std::string_view from, std::string_view to);

// Keeps the first `max_tokens` whitespace tokens, joined by single spaces
// within a line and preserving the line structure of the kept prefix.
std::string truncate_tokens(std::string_view text, std::size_t max_tokens);

// Collapses every whitespace run to one space and trims the ends.
std::string normalize_whitespace(std::string_view text);

}  // namespace fincot
