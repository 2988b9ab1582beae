#include "fincot/corpus/pii.hpp"

#include <regex>
#include <vector>

namespace fincot::corpus {
namespace {

struct Rule {
  std::regex pattern;
  std::string replacement;
};

// Order matters: URLs before emails (mailto, user@ in paths), emails before
// handles. std::regex has no lookbehind, so a captured prefix stands in for it.
const std::vector<Rule>& rules() {
  static const std::vector<Rule> r = [] {
    const auto flags = std::regex::ECMAScript | std::regex::icase | std::regex::optimize;
    std::vector<Rule> v;
    v.push_back({std::regex(R"((?:https?://|www\.)[^\s<>"'\]\)]+)", flags), "[URL]"});
    v.push_back({std::regex(R"([a-z0-9._%+-]+@[a-z0-9-]+(?:\.[a-z0-9-]+)*\.[a-z]{2,})", flags),
                 "[EMAIL]"});
    v.push_back(
        {std::regex(R"((^|[^\d$])(?:\+?1[ .-]?)?(?:\(\d{3}\) ?|\d{3}[ .-])\d{3}[ .-]\d{4}(?!\d))",
                    flags),
         "$1[PHONE]"});
    v.push_back({std::regex(R"((^|[^\w/\[])(?:/?u/[a-z0-9_-]{3,}|@[a-z0-9_]{2,}))", flags),
                 "$1[HANDLE]"});
    v.push_back({std::regex(R"((^|[^\d$])\d{3}-\d{2}-\d{4}(?!\d))", flags), "$1[ID]"});
    v.push_back({std::regex(R"((^|[^\d$,.])\d{9,}(?![\d,.]*\d))", flags), "$1[ID]"});
    return v;
  }();
  return r;
}

}  // namespace

std::string scrub_pii(std::string_view text) {
  std::string out(text);
  for (const auto& rule : rules()) out = std::regex_replace(out, rule.pattern, rule.replacement);
  return out;
}

bool contains_pii(std::string_view text) { return scrub_pii(text) != text; }

}  // namespace fincot::corpus
