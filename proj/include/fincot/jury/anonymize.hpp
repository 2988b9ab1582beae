#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "fincot/common/rng.hpp"

namespace fincot::jury {

// Position 0 -> "A", 25 -> "Z", 26 -> "AA" (bijective base 26).
std::string position_letter(std::size_t pos);
std::string response_label(std::size_t pos);  // "Response A"
// Inverse of position_letter; npos when `letters` is not [A-Z]+.
std::size_t letter_position(std::string_view letters);

struct ScrubResult {
  std::string text;
  std::size_t replacements = 0;
};

// Case-insensitive removal of every identifier (provider ids, model ids).
// Empty identifiers are ignored. Longer identifiers are scrubbed first.
ScrubResult scrub_identifiers(std::string_view text, const std::vector<std::string>& identifiers);
inline constexpr std::string_view kRedacted = "[REDACTED]";

struct Presented {
  std::vector<std::string> labels;  // "Response A", ...
  std::vector<std::string> texts;   // scrubbed, in presented order
  std::vector<int> permutation;     // permutation[pos] = canonical index
  std::size_t scrubbed = 0;         // identifier occurrences removed
};

// Uniform shuffle of the candidates, relabeled by presented position.
Presented anonymize_and_shuffle(const std::vector<std::string>& candidate_texts,
                                const std::vector<std::string>& identifiers, Rng& rng);

// Reads a best-to-worst ranking of n labels from a judge reply. Accepted forms:
//   "Response B > Response A > Response C" (or "B > A > C")
//   a numbered list "1. Response B", "2. Response A", ...
//   "Ranking: B, A, C"
// Returns presented positions, best first. Throws ValidationError on ties,
// unknown, duplicate or missing labels.
std::vector<int> parse_ranking(std::string_view reply, std::size_t n);

// Maps a presented-order ranking back onto canonical candidates:
// ranks[canonical index] = 1-based rank.
std::vector<int> canonical_ranks(const std::vector<int>& best_first_positions,
                                 const std::vector<int>& permutation);

}  // namespace fincot::jury
