#include "fincot/cot/psych.hpp"

#include <optional>
#include <regex>

#include <fmt/core.h>

#include "fincot/common/error.hpp"
#include "fincot/common/text.hpp"

namespace fincot::cot {

std::string_view sentiment_name(Sentiment s) {
  switch (s) {
    case Sentiment::kNegative: return "negative";
    case Sentiment::kNeutral: return "neutral";
    case Sentiment::kPositive: return "positive";
  }
  return "?";
}

std::string_view certainty_name(Certainty c) {
  switch (c) {
    case Certainty::kLow: return "low";
    case Certainty::kMedium: return "medium";
    case Certainty::kHigh: return "high";
  }
  return "?";
}

nlohmann::json to_json(const PsychProfile& p) {
  return {{"sentiment", sentiment_name(p.sentiment)},
          {"primary_emotions", p.primary_emotions},
          {"certainty", certainty_name(p.certainty)},
          {"communicative_intents", p.communicative_intents},
          {"evidence", p.evidence}};
}

namespace {

std::string strip_decoration(std::string_view s) {
  std::string out(trim(s));
  while (!out.empty() && (out.front() == '*' || out.front() == '_')) out.erase(out.begin());
  while (!out.empty() && (out.back() == '*' || out.back() == '_' || out.back() == '.')) out.pop_back();
  return std::string(trim(out));
}

std::vector<std::string> split_labels(std::string_view s) {
  std::vector<std::string> out;
  std::size_t from = 0;
  for (;;) {
    const auto at = s.find(',', from);
    auto part = strip_decoration(s.substr(from, at == std::string_view::npos ? std::string_view::npos : at - from));
    if (!part.empty()) out.push_back(to_lower(part));
    if (at == std::string_view::npos) break;
    from = at + 1;
  }
  return out;
}

}  // namespace

PsychProfile parse_psych_profile(std::string_view candidate_text, std::string_view query) {
  static const std::regex field_re(
      R"(^\s*[-*]*\s*\**\s*(sentiment|primary emotions|certainty|communicative intents)\s*\**\s*:\s*\**\s*(.*?)\s*$)",
      std::regex::icase);
  static const std::regex evidence_re(R"(^\s*[-*]*\s*\**\s*evidence\s*\**\s*:\s*(.*?)\s*$)", std::regex::icase);

  std::map<std::string, std::string> values;
  std::map<std::string, std::string> evidence;
  std::optional<std::string> current;
  for (const auto& line : split_lines(candidate_text)) {
    std::smatch m;
    if (std::regex_match(line, m, field_re)) {
      std::string label = to_lower(m[1].str());
      for (auto f : kPsychFields) {
        if (to_lower(f) == label) label = std::string(f);
      }
      if (!values.count(label)) values[label] = strip_decoration(m[2].str());
      current = label;
    } else if (std::regex_match(line, m, evidence_re) && current && !evidence.count(*current)) {
      std::string quote = m[1].str();
      // Straight or curly quotes around the evidence.
      for (std::string_view q : {"\"", "\xe2\x80\x9c", "\xe2\x80\x9d"}) {
        if (quote.rfind(q, 0) == 0) quote.erase(0, q.size());
        if (quote.size() >= q.size() && quote.compare(quote.size() - q.size(), q.size(), q) == 0) {
          quote.erase(quote.size() - q.size());
        }
      }
      evidence[*current] = quote;
    }
  }

  std::vector<std::string> missing;
  for (auto f : kPsychFields) {
    const auto it = values.find(std::string(f));
    if (it == values.end() || it->second.empty()) missing.emplace_back(f);
  }
  if (!missing.empty()) throw ValidationError(fmt::format("missing fields: {}", join(missing, ", ")));

  PsychProfile p;
  const std::string sentiment = to_lower(values["Sentiment"]);
  if (sentiment == "negative") p.sentiment = Sentiment::kNegative;
  else if (sentiment == "neutral") p.sentiment = Sentiment::kNeutral;
  else if (sentiment == "positive") p.sentiment = Sentiment::kPositive;
  else throw ValidationError(fmt::format("invalid sentiment '{}'", values["Sentiment"]));

  const std::string certainty = to_lower(values["Certainty"]);
  if (certainty == "low") p.certainty = Certainty::kLow;
  else if (certainty == "medium") p.certainty = Certainty::kMedium;
  else if (certainty == "high") p.certainty = Certainty::kHigh;
  else throw ValidationError(fmt::format("invalid certainty '{}'", values["Certainty"]));

  p.primary_emotions = split_labels(values["Primary Emotions"]);
  p.communicative_intents = split_labels(values["Communicative Intents"]);
  if (p.primary_emotions.empty()) throw ValidationError("missing fields: Primary Emotions");
  if (p.communicative_intents.empty()) throw ValidationError("missing fields: Communicative Intents");

  std::vector<std::string> no_evidence;
  for (auto f : kPsychFields) {
    const auto it = evidence.find(std::string(f));
    if (it == evidence.end() || trim(it->second).empty()) no_evidence.emplace_back(f);
  }
  if (!no_evidence.empty()) throw ValidationError(fmt::format("missing evidence: {}", join(no_evidence, ", ")));

  const std::string haystack = normalize_whitespace(query);
  for (auto f : kPsychFields) {
    const std::string& quote = evidence[std::string(f)];
    if (haystack.find(normalize_whitespace(quote)) == std::string::npos) {
      throw ValidationError(fmt::format("evidence not grounded: {}", f));
    }
    p.evidence[std::string(f)] = quote;
  }
  return p;
}

}  // namespace fincot::cot
