#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace fincot::cot {

enum class Sentiment { kNegative, kNeutral, kPositive };
enum class Certainty { kLow, kMedium, kHigh };

std::string_view sentiment_name(Sentiment s);
std::string_view certainty_name(Certainty c);

struct PsychProfile {
  Sentiment sentiment = Sentiment::kNeutral;
  std::vector<std::string> primary_emotions;
  Certainty certainty = Certainty::kMedium;
  std::vector<std::string> communicative_intents;
  // Field label ("Sentiment", ...) -> quoted evidence.
  std::map<std::string, std::string> evidence;
};

nlohmann::json to_json(const PsychProfile& p);

inline constexpr std::string_view kPsychFields[] = {"Sentiment", "Primary Emotions", "Certainty",
                                                     "Communicative Intents"};

// Reads the four labeled fields, each followed by an `Evidence: "..."` line.
// Every quote must occur verbatim in the query (whitespace runs compared as
// one space). Errors: "missing fields: A, B", "invalid sentiment 'x'",
// "invalid certainty 'x'", "missing evidence: A", "evidence not grounded: A".
PsychProfile parse_psych_profile(std::string_view candidate_text, std::string_view query);

}  // namespace fincot::cot
