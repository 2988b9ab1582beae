#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fincot::cot {

enum class PhaseKind { kQueryAnalysis, kContextAnalysis, kPsychCues, kResponseRubric, kFinalResponse };

inline constexpr PhaseKind kCotPhases[] = {PhaseKind::kQueryAnalysis, PhaseKind::kContextAnalysis,
                                           PhaseKind::kPsychCues, PhaseKind::kResponseRubric};

std::string_view phase_name(PhaseKind kind);
PhaseKind parse_phase(std::string_view name);

using SlotValues = std::map<std::string, std::string, std::less<>>;

// One prompt in the shared skeleton:
//
//   You are a {persona}, whose task is to {task_details}.
//
//   ### INSTRUCTION ###
//   {instructions}
//
//   ### Key Points ###
//   {key_points}
//
//   ---
//   **Inputs**:
//   {inputs}
//   ---
//   **Your Response**:
//
// Every field is itself template text: "{name}" is a slot, "{{" / "}}" are
// literal braces. Slot values are inserted verbatim and never re-scanned.
struct PromptTemplate {
  std::string name;
  int version = 1;
  std::optional<PhaseKind> phase;
  std::string persona;
  std::string task_details;
  std::string instructions;
  std::string key_points;
  std::string inputs;
  std::vector<std::string> input_slot_names;
};

// Throws ValidationError("missing slot: <name>") for the first slot without a
// value, required input slots first.
std::string render_prompt(const PromptTemplate& tmpl, const SlotValues& slots);

// The bare skeleton: persona, task_details, instructions, key_points and
// inputs are all slots.
PromptTemplate skeleton_template();

std::string substitute_slots(std::string_view text, const SlotValues& slots);
std::vector<std::string> slot_names(std::string_view text);

// Versioned text format:
//   @name query_analysis
//   @version 1
//   @phase QueryAnalysis
//   @persona ...            (single line)
//   @task ...               (single line)
//   @instructions           (multi-line until the next directive)
//   @key_points
//   @inputs
// input_slot_names are the slots of the @inputs block, in order.
PromptTemplate parse_template(std::string_view text);

// Reads a "Label:\n<value>" field back out of a rendered prompt's inputs
// block. The value ends at the next blank-line-separated "Other Label:" line
// or at the closing "---" (only the latter when `last` is set, for a final
// field whose value may itself contain such lines). Used by offline
// responders; nullopt if absent.
std::optional<std::string> prompt_input(std::string_view prompt, std::string_view label,
                                        bool last = false);
std::string serialize_template(const PromptTemplate& tmpl);

}  // namespace fincot::cot
