#include <algorithm>
#include <cctype>
#include <regex>
#include <set>

#include <fmt/core.h>

#include "fincot/common/text.hpp"
#include "fincot/cot/engine.hpp"

namespace fincot::cot {

namespace {

std::string input(std::string_view prompt, std::string_view label, bool last = false) {
  return prompt_input(prompt, label, last).value_or("");
}

std::vector<std::string> sentences(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    cur += c;
    if (c == '.' || c == '?' || c == '!' || c == '\n') {
      auto t = std::string(trim(cur));
      if (t.size() > 1) out.push_back(t);
      cur.clear();
    }
  }
  auto t = std::string(trim(cur));
  if (t.size() > 1) out.push_back(t);
  return out;
}

std::string primary_conflict(std::string_view query) {
  const auto s = sentences(query);
  for (const auto& x : s) {
    if (x.back() == '?') return x;
  }
  return s.empty() ? std::string(trim(query)) : s.back();
}

std::vector<std::string> financial_facts(std::string_view query) {
  static const std::regex figure(
      R"((\$\s?\d[\d,]*(\.\d+)?\s?[kKmM]?\b)|(\b\d+(\.\d+)?\s?%)|(\b\d+\s+(years?|months?|weeks?)\b)|(\b[Ii]'?m\s+\d{2}\b)|(\b\d{2}\s?(years old|yo)\b)|(401\(?k\)?|IRA|HSA|Roth|mortgage|loan))");
  std::vector<std::string> out;
  std::set<std::string> seen;
  // Clauses split on sentence punctuation and commas, but not inside "6,200" or "4.5".
  std::string cur;
  std::vector<std::string> clauses;
  auto digit = [&](std::size_t i) { return i < query.size() && std::isdigit(static_cast<unsigned char>(query[i])); };
  for (std::size_t i = 0; i < query.size(); ++i) {
    const char c = query[i];
    const bool in_number = (c == ',' || c == '.') && i > 0 && digit(i - 1) && digit(i + 1);
    if (!in_number && (c == '.' || c == '?' || c == '!' || c == ',' || c == ';' || c == '\n')) {
      if (!trim(cur).empty()) clauses.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty()) clauses.emplace_back(trim(cur));
  for (const auto& cl : clauses) {
    if (std::regex_search(cl, figure) && seen.insert(cl).second) out.push_back(cl);
  }
  return out;
}

std::vector<std::string> stakeholders(std::string_view query) {
  static const std::vector<std::pair<std::string, std::string>> people{
      {"wife", "Spouse"},       {"husband", "Spouse"},    {"spouse", "Spouse"},   {"partner", "Partner"},
      {"fianc", "Partner"},     {"kids", "Children"},     {"children", "Children"}, {"son", "Children"},
      {"daughter", "Children"}, {"baby", "Children"},     {"parents", "Parents"}, {"mom", "Parents"},
      {"dad", "Parents"},       {"family", "Family"},     {"employer", "Employer"}, {"boss", "Employer"},
      {"business", "The user's business"}, {"landlord", "Landlord"}, {"lender", "Lenders"},
      {"roommate", "Roommate"}, {"brother", "Siblings"}, {"sister", "Siblings"}};
  const auto terms_v = lexical_terms(query);
  const std::set<std::string> terms(terms_v.begin(), terms_v.end());
  std::vector<std::string> out{"The user"};
  for (const auto& [word, who] : people) {
    const bool hit = word == "fianc" ? to_lower(query).find(word) != std::string::npos : terms.count(word) > 0;
    if (hit && std::find(out.begin(), out.end(), who) == out.end()) out.push_back(who);
  }
  return out;
}

std::string bullets(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& i : items) out += (out.empty() ? "- " : "\n- ") + i;
  return out;
}

// Exact words of the query around the first cue found, by case-insensitive
// search.
struct Cue {
  std::string cue;
  std::string quote;
};

std::optional<Cue> find_cue(std::string_view query, const std::vector<std::string>& cues) {
  const std::string lowered = to_lower(query);
  std::size_t best = std::string::npos;
  std::string best_cue;
  for (const auto& c : cues) {
    for (std::size_t at = lowered.find(c); at != std::string::npos; at = lowered.find(c, at + 1)) {
      const bool left_ok = at == 0 || !std::isalnum(static_cast<unsigned char>(lowered[at - 1]));
      const std::size_t end = at + c.size();
      const bool right_ok = end >= lowered.size() || !std::isalnum(static_cast<unsigned char>(lowered[end]));
      if (left_ok && right_ok) {
        if (at < best) {
          best = at;
          best_cue = c;
        }
        break;
      }
    }
  }
  if (best == std::string::npos) return std::nullopt;
  return Cue{best_cue, std::string(query.substr(best, best_cue.size()))};
}

std::string opening_words(std::string_view query, std::size_t words) {
  const std::string_view q = trim(query);
  std::size_t count = 0, i = 0;
  bool in_word = false;
  for (; i < q.size(); ++i) {
    const bool space = std::isspace(static_cast<unsigned char>(q[i])) != 0;
    if (!space && !in_word) {
      if (count == words) break;
      ++count;
    }
    in_word = !space;
  }
  return std::string(trim(q.substr(0, i)));
}

std::string mock_query_analysis(std::string_view prompt, std::int64_t seed) {
  const std::string query = input(prompt, "Query", true);
  auto facts = financial_facts(query);
  const int variant = static_cast<int>(seed % 3);
  if (variant == 1 && facts.size() > 2) facts.resize(2);
  if (facts.empty()) facts.push_back("No specific figures given.");
  std::string out = "### Primary Conflict\n" + primary_conflict(query) + "\n\n";
  out += "### Key Stakeholders\n" + bullets(stakeholders(query)) + "\n\n";
  out += "### Essential Financial Facts\n" + bullets(facts);
  if (variant == 2) out += "\n- Goal stated in the query: " + primary_conflict(query);
  return out;
}

const std::vector<std::pair<std::string, std::string>>& emotion_cues() {
  static const std::vector<std::pair<std::string, std::string>> cues{
      {"worried", "anxiety"},      {"anxious", "anxiety"},     {"nervous", "anxiety"},  {"scared", "fear"},
      {"afraid", "fear"},          {"terrified", "fear"},      {"panic", "fear"},       {"stressed", "overwhelm"},
      {"overwhelmed", "overwhelm"}, {"drowning", "overwhelm"}, {"struggling", "overwhelm"},
      {"frustrated", "frustration"}, {"ashamed", "shame"},     {"embarrassed", "shame"}, {"regret", "regret"},
      {"excited", "excitement"},   {"thrilled", "excitement"}, {"grateful", "gratitude"}, {"lucky", "gratitude"},
      {"proud", "pride"},          {"happy", "contentment"}};
  return cues;
}

std::string mock_psych_cues(std::string_view prompt, std::int64_t seed) {
  const std::string query = input(prompt, "Query", true);
  const std::string fallback = opening_words(query, 6);

  std::vector<std::string> neg{"worried", "anxious", "nervous", "scared", "afraid", "terrified", "panic",
                               "stressed", "overwhelmed", "drowning", "struggling", "frustrated", "ashamed",
                               "embarrassed", "regret", "behind", "lost"};
  std::vector<std::string> pos{"excited", "thrilled", "grateful", "lucky", "proud", "happy", "finally"};
  std::string sentiment = "neutral";
  std::string sentiment_quote = fallback;
  if (auto c = find_cue(query, neg)) {
    sentiment = "negative";
    sentiment_quote = c->quote;
  } else if (auto p = find_cue(query, pos)) {
    sentiment = "positive";
    sentiment_quote = p->quote;
  }

  std::vector<std::string> emotion_words;
  for (const auto& [w, _] : emotion_cues()) emotion_words.push_back(w);
  std::vector<std::string> emotions;
  std::string emotion_quote = fallback;
  if (auto c = find_cue(query, emotion_words)) {
    emotion_quote = c->quote;
    for (const auto& [w, label] : emotion_cues()) {
      if (w == c->cue) emotions.push_back(label);
    }
  }
  if (emotions.empty()) emotions.push_back("curiosity");
  if (seed % 2 == 1) emotions.push_back(sentiment == "negative" ? "uncertainty" : "hope");

  std::string certainty = "medium";
  std::string certainty_quote = fallback;
  if (auto c = find_cue(query, {"not sure", "unsure", "don't know", "dont know", "no idea", "confused",
                                "what should i do", "should i", "any advice", "help"})) {
    certainty = "low";
    certainty_quote = c->quote;
  } else if (auto h = find_cue(query, {"definitely", "i know", "i've decided", "i am sure", "certain", "i will"})) {
    certainty = "high";
    certainty_quote = h->quote;
  }

  std::string intent = "seeking advice";
  std::string intent_quote = fallback;
  if (auto v = find_cue(query, {"is it ok", "is it okay", "am i", "is it normal", "is this normal", "is that bad"})) {
    intent = "seeking validation";
    intent_quote = v->quote;
  } else if (auto i = find_cue(query, {"how do i", "how can i", "what is", "what are", "how does", "explain"})) {
    intent = "seeking information";
    intent_quote = i->quote;
  } else if (auto a = find_cue(query, {"should i", "what should", "advice", "recommend"})) {
    intent_quote = a->quote;
  }
  std::vector<std::string> intents{intent};
  if (seed % 3 == 2 && intent != "seeking advice") intents.push_back("seeking advice");

  return fmt::format(
      "Sentiment: {}\nEvidence: \"{}\"\nPrimary Emotions: {}\nEvidence: \"{}\"\nCertainty: {}\nEvidence: \"{}\"\n"
      "Communicative Intents: {}\nEvidence: \"{}\"",
      sentiment, sentiment_quote, join(emotions, ", "), emotion_quote, certainty, certainty_quote, join(intents, ", "),
      intent_quote);
}

std::vector<std::string> context_points(std::string_view pack, std::size_t limit) {
  std::vector<std::string> out;
  for (const auto& s : sentences(pack)) {
    if (s.rfind("Sources:", 0) == 0 || s.size() < 20) continue;
    out.push_back(s);
    if (out.size() == limit) break;
  }
  return out;
}

std::string mock_context_analysis(std::string_view prompt, std::int64_t seed) {
  const std::string query = input(prompt, "Query");
  const std::string qa = input(prompt, "Query Analysis");
  const std::string pack = input(prompt, "Context Pack", true);
  const std::size_t approaches = seed % 2 == 0 ? 2 : 3;
  auto points = context_points(pack, approaches);
  if (points.empty()) points.push_back("No retrieved context applies; reason from the query alone.");
  const auto who = stakeholders(query);
  std::string out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    out += fmt::format("Approach {}: {}\nStakeholder Impact: {} would feel the effect of this choice on cash flow and peace of mind.\n\n",
                       i + 1, points[i], join(who, ", "));
  }
  out += "Deciding considerations: " + primary_conflict(query);
  if (qa.find("Essential Financial Facts") != std::string::npos) {
    out += " The stated figures set how far each approach can go.";
  }
  return out;
}

std::string field_line(std::string_view text, std::string_view label) {
  for (const auto& line : split_lines(text)) {
    const auto t = trim(line);
    if (t.substr(0, label.size()) == label) return std::string(trim(t.substr(label.size())));
  }
  return "";
}

std::vector<std::string> section_bullets(std::string_view text, std::string_view header) {
  std::vector<std::string> out;
  bool in = false;
  for (const auto& line : split_lines(text)) {
    const auto t = trim(line);
    if (t.rfind("###", 0) == 0 || t.rfind("## ", 0) == 0) {
      in = t.find(header) != std::string_view::npos;
      continue;
    }
    if (in && t.rfind("- ", 0) == 0) out.emplace_back(t.substr(2));
  }
  return out;
}

std::string mock_response_rubric(std::string_view prompt, std::int64_t seed) {
  const std::string query = input(prompt, "Query");
  const std::string qa = input(prompt, "Query Analysis");
  const std::string ca = input(prompt, "Context Analysis");
  const std::string pc = input(prompt, "Psychological Cues", true);
  const std::string emotions = field_line(pc, "Primary Emotions:");
  const auto facts = section_bullets(qa, "Essential Financial Facts");
  const std::string approach = field_line(ca, "Approach 1:");
  std::vector<std::string> d;
  d.push_back(fmt::format("Open by acknowledging the user's {} in one sentence.", emotions.empty() ? "situation" : emotions));
  d.push_back("Answer the primary question directly: " + primary_conflict(query));
  if (!facts.empty()) d.push_back("Work with the user's own figures: " + join(facts, "; ") + ".");
  if (!approach.empty()) d.push_back("Recommend first: " + approach);
  if (seed % 2 == 1) d.push_back("Explain the trade-off between the approaches in plain words.");
  d.push_back("Close with one concrete next step the user can take this week.");
  std::string out;
  for (std::size_t i = 0; i < d.size(); ++i) out += fmt::format("{}{}. {}", i ? "\n" : "", i + 1, d[i]);
  return out;
}

std::string mock_final_response(std::string_view prompt, std::int64_t seed) {
  const std::string query = input(prompt, "Query");
  const std::string cot = input(prompt, "Chain of Thought", true);
  std::string emotions = field_line(cot, "Primary Emotions:");
  if (emotions.empty()) emotions = "unsure";
  const auto facts = section_bullets(cot, "Essential Financial Facts");
  std::string approach = field_line(cot, "Approach 1:");
  // Strip source attributions; the user sees plain advice.
  static const std::regex attribution(R"(\s*\[[^\]]*;[^\]]*;[^\]]*\])");
  approach = std::regex_replace(approach, attribution, "");
  std::string out = fmt::format("It makes sense to feel some {} here, and you are asking the right question. ",
                                emotions);
  out += "You asked: " + primary_conflict(query) + "\n\n";
  out += "Here is how I would approach it:\n";
  int step = 1;
  if (!facts.empty()) out += fmt::format("{}. Start from your numbers: {}.\n", step++, join(facts, "; "));
  if (!approach.empty()) out += fmt::format("{}. {}\n", step++, approach);
  out += fmt::format("{}. Keep a cash cushion for surprises before committing money elsewhere.\n", step++);
  if (seed % 2 == 1) out += fmt::format("{}. Revisit the plan once a year or after any big change.\n", step++);
  out += "\nNext step: write down your monthly essentials this week so the plan rests on real figures.";
  return out;
}

}  // namespace

std::string mock_phase_reply(PhaseKind kind, std::string_view user_prompt, std::int64_t seed) {
  switch (kind) {
    case PhaseKind::kQueryAnalysis: return mock_query_analysis(user_prompt, seed);
    case PhaseKind::kContextAnalysis: return mock_context_analysis(user_prompt, seed);
    case PhaseKind::kPsychCues: return mock_psych_cues(user_prompt, seed);
    case PhaseKind::kResponseRubric: return mock_response_rubric(user_prompt, seed);
    case PhaseKind::kFinalResponse: return mock_final_response(user_prompt, seed);
  }
  return "";
}

}  // namespace fincot::cot
