#pragma once

#include <chrono>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace fincot {

using Timestamp = std::chrono::sys_seconds;

// Accepts "YYYY-MM-DD", "YYYY-MM-DDTHH:MM:SS" with optional fractional
// seconds and a "Z" or "+HH:MM"/"-HH:MM" suffix (a space may replace "T").
// Naive times are taken as UTC. Throws ValidationError when unparseable.
Timestamp parse_timestamp(std::string_view text);

// Strings go through parse_timestamp; numbers are Unix epoch seconds.
Timestamp parse_timestamp_value(const nlohmann::json& value);

// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_utc(Timestamp t);

}  // namespace fincot
