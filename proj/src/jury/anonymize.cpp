#include "fincot/jury/anonymize.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <regex>

#include <fmt/core.h>

#include "fincot/common/error.hpp"
#include "fincot/common/text.hpp"

namespace fincot::jury {

std::string position_letter(std::size_t pos) {
  std::string out;
  std::size_t x = pos + 1;
  while (x > 0) {
    --x;
    out.insert(out.begin(), static_cast<char>('A' + x % 26));
    x /= 26;
  }
  return out;
}

std::string response_label(std::size_t pos) { return "Response " + position_letter(pos); }

std::size_t letter_position(std::string_view letters) {
  if (letters.empty() || letters.size() > 6) return std::string_view::npos;
  std::size_t x = 0;
  for (char c : letters) {
    if (c < 'A' || c > 'Z') return std::string_view::npos;
    x = x * 26 + static_cast<std::size_t>(c - 'A' + 1);
  }
  return x - 1;
}

ScrubResult scrub_identifiers(std::string_view text, const std::vector<std::string>& identifiers) {
  std::vector<std::string> ids;
  for (const auto& id : identifiers) {
    if (!id.empty()) ids.push_back(to_lower(id));
  }
  std::sort(ids.begin(), ids.end(),
            [](const auto& a, const auto& b) { return a.size() != b.size() ? a.size() > b.size() : a < b; });
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  ScrubResult r;
  r.text = std::string(text);
  for (const auto& id : ids) {
    std::string lowered = to_lower(r.text);
    std::string out;
    std::size_t from = 0;
    for (std::size_t at = lowered.find(id); at != std::string::npos; at = lowered.find(id, from)) {
      out.append(r.text, from, at - from);
      out.append(kRedacted);
      from = at + id.size();
      ++r.replacements;
    }
    out.append(r.text, from, std::string::npos);
    r.text = std::move(out);
  }
  return r;
}

Presented anonymize_and_shuffle(const std::vector<std::string>& candidate_texts,
                                const std::vector<std::string>& identifiers, Rng& rng) {
  if (candidate_texts.size() < 2) throw ValidationError("anonymize: need at least 2 candidates");
  Presented p;
  p.permutation = rng.permutation(static_cast<int>(candidate_texts.size()));
  for (std::size_t pos = 0; pos < p.permutation.size(); ++pos) {
    auto scrubbed = scrub_identifiers(candidate_texts[static_cast<std::size_t>(p.permutation[pos])],
                                      identifiers);
    p.scrubbed += scrubbed.replacements;
    p.labels.push_back(response_label(pos));
    p.texts.push_back(std::move(scrubbed.text));
  }
  return p;
}

namespace {

const std::regex& labelled_re() {
  static const std::regex re(R"((?:^|[^A-Za-z])[Rr]esponse\s+([A-Z]{1,3})(?![A-Za-z]))");
  return re;
}

// Labels mentioned in one ranking segment, in order of appearance.
std::vector<std::string> labels_in(std::string_view segment) {
  std::vector<std::string> out;
  const std::string s(segment);
  for (std::sregex_iterator it(s.begin(), s.end(), labelled_re()), end; it != end; ++it) {
    out.push_back((*it)[1].str());
  }
  if (!out.empty()) return out;
  // Bare letter, possibly decorated: "B", "**B**", "[B]", "(B)".
  std::string bare;
  for (char c : segment) {
    if (!std::isspace(static_cast<unsigned char>(c)) && c != '*' && c != '[' && c != ']' &&
        c != '(' && c != ')' && c != '.' && c != '`') {
      bare += c;
    }
  }
  if (!bare.empty() && letter_position(bare) != std::string_view::npos) out.push_back(bare);
  return out;
}

std::string strip_ranking_prefix(std::string_view line) {
  static const std::regex prefix(R"(^\s*\**\s*(?:final\s+)?ranking\s*\**\s*:\s*\**)", std::regex::icase);
  return std::regex_replace(std::string(line), prefix, "");
}

std::optional<std::vector<std::string>> chain_form(const std::vector<std::string>& lines) {
  for (const auto& line : lines) {
    if (line.find('>') == std::string::npos) continue;
    const std::string body = strip_ranking_prefix(line);
    std::vector<std::string> labels;
    std::size_t from = 0;
    for (;;) {
      const std::size_t at = body.find('>', from);
      const std::string_view seg =
          std::string_view(body).substr(from, at == std::string::npos ? std::string::npos : at - from);
      const auto found = labels_in(seg);
      if (found.size() > 1 || seg.find('=') != std::string_view::npos) {
        throw ValidationError(fmt::format("tied labels in '{}'", trim(seg)));
      }
      if (found.empty()) {
        throw ValidationError(fmt::format("unrecognized ranking entry '{}'", trim(seg)));
      }
      labels.push_back(found.front());
      if (at == std::string::npos) break;
      from = at + 1;
    }
    return labels;
  }
  return std::nullopt;
}

std::optional<std::vector<std::string>> numbered_form(const std::vector<std::string>& lines) {
  static const std::regex item(R"(^\s*(?:#+\s*)?\**\s*(\d+)\s*[.):]\s*\**\s*(.*)$)");
  std::map<int, std::string> by_rank;
  for (const auto& line : lines) {
    std::smatch m;
    if (!std::regex_match(line, m, item)) continue;
    const int rank = std::stoi(m[1].str());
    const std::string rest = m[2].str();
    auto found = labels_in(rest);
    if (found.empty()) {
      // "1. B - clear and direct": leading bare label only.
      static const std::regex lead(R"(^[\*\[\(`]*([A-Z]{1,3})[\*\]\)`]*(?:[\s:.,\-]|$))");
      std::smatch lm;
      if (std::regex_search(rest, lm, lead)) found.push_back(lm[1].str());
    }
    if (found.empty()) continue;
    if (!by_rank.emplace(rank, found.front()).second) {
      throw ValidationError(fmt::format("rank {} given twice", rank));
    }
  }
  if (by_rank.empty()) return std::nullopt;
  std::vector<std::string> labels;
  int expect = 1;
  for (const auto& [rank, label] : by_rank) {
    if (rank != expect++) throw ValidationError(fmt::format("ranks are not consecutive from 1 (saw {})", rank));
    labels.push_back(label);
  }
  return labels;
}

std::optional<std::vector<std::string>> comma_form(const std::vector<std::string>& lines) {
  static const std::regex head(R"(^\s*\**\s*(?:final\s+)?ranking\s*\**\s*:)", std::regex::icase);
  for (const auto& line : lines) {
    if (!std::regex_search(line, head)) continue;
    const std::string body = strip_ranking_prefix(line);
    std::vector<std::string> labels;
    std::size_t from = 0;
    for (;;) {
      const std::size_t at = body.find(',', from);
      const std::string_view seg =
          std::string_view(body).substr(from, at == std::string::npos ? std::string::npos : at - from);
      const auto found = labels_in(seg);
      if (found.size() != 1) {
        throw ValidationError(fmt::format("unrecognized ranking entry '{}'", trim(seg)));
      }
      labels.push_back(found.front());
      if (at == std::string::npos) break;
      from = at + 1;
    }
    return labels;
  }
  return std::nullopt;
}

}  // namespace

std::vector<int> parse_ranking(std::string_view reply, std::size_t n) {
  if (n < 2) throw ValidationError("parse_ranking: n must be at least 2");
  const auto lines = split_lines(reply);
  auto labels = chain_form(lines);
  if (!labels) labels = numbered_form(lines);
  if (!labels) labels = comma_form(lines);
  if (!labels) throw ValidationError("no ranking found in reply");

  std::vector<int> positions;
  std::vector<bool> seen(n, false);
  for (const auto& l : *labels) {
    const std::size_t pos = letter_position(l);
    if (pos == std::string_view::npos || pos >= n) {
      throw ValidationError(fmt::format("unknown label Response {}", l));
    }
    if (seen[pos]) throw ValidationError(fmt::format("duplicate label Response {}", l));
    seen[pos] = true;
    positions.push_back(static_cast<int>(pos));
  }
  std::vector<std::string> missing;
  for (std::size_t i = 0; i < n; ++i) {
    if (!seen[i]) missing.push_back(response_label(i));
  }
  if (!missing.empty()) throw ValidationError(fmt::format("missing labels: {}", join(missing, ", ")));
  return positions;
}

std::vector<int> canonical_ranks(const std::vector<int>& best_first_positions,
                                 const std::vector<int>& permutation) {
  if (best_first_positions.size() != permutation.size()) {
    throw ValidationError("ranking and permutation sizes differ");
  }
  std::vector<int> ranks(permutation.size(), 0);
  for (std::size_t r = 0; r < best_first_positions.size(); ++r) {
    ranks.at(static_cast<std::size_t>(permutation.at(static_cast<std::size_t>(best_first_positions[r])))) =
        static_cast<int>(r) + 1;
  }
  return ranks;
}

}  // namespace fincot::jury
