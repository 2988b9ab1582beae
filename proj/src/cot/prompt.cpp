#include "fincot/cot/prompt.hpp"

#include <cctype>

#include <fmt/core.h>

#include "fincot/common/error.hpp"
#include "fincot/common/text.hpp"

namespace fincot::cot {

std::string_view phase_name(PhaseKind kind) {
  switch (kind) {
    case PhaseKind::kQueryAnalysis: return "QueryAnalysis";
    case PhaseKind::kContextAnalysis: return "ContextAnalysis";
    case PhaseKind::kPsychCues: return "PsychCues";
    case PhaseKind::kResponseRubric: return "ResponseRubric";
    case PhaseKind::kFinalResponse: return "FinalResponse";
  }
  return "?";
}

PhaseKind parse_phase(std::string_view name) {
  for (auto k : {PhaseKind::kQueryAnalysis, PhaseKind::kContextAnalysis, PhaseKind::kPsychCues,
                 PhaseKind::kResponseRubric, PhaseKind::kFinalResponse}) {
    if (phase_name(k) == name) return k;
  }
  throw ValidationError(fmt::format("unknown phase '{}'", name));
}

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Calls on_text for literal runs and on_slot for each "{name}".
template <typename OnText, typename OnSlot>
void scan(std::string_view text, OnText&& on_text, OnSlot&& on_slot) {
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if ((c == '{' || c == '}') && i + 1 < text.size() && text[i + 1] == c) {
      on_text(std::string_view(&text[i], 1));
      i += 2;
      continue;
    }
    if (c == '{' && i + 1 < text.size() && ident_start(text[i + 1])) {
      std::size_t j = i + 1;
      while (j < text.size() && ident_char(text[j])) ++j;
      if (j < text.size() && text[j] == '}') {
        on_slot(text.substr(i + 1, j - i - 1));
        i = j + 1;
        continue;
      }
    }
    on_text(text.substr(i, 1));
    ++i;
  }
}

}  // namespace

std::vector<std::string> slot_names(std::string_view text) {
  std::vector<std::string> out;
  scan(text, [](std::string_view) {}, [&](std::string_view name) {
    for (const auto& n : out) {
      if (n == name) return;
    }
    out.emplace_back(name);
  });
  return out;
}

std::string substitute_slots(std::string_view text, const SlotValues& slots) {
  std::string out;
  out.reserve(text.size());
  scan(text, [&](std::string_view lit) { out.append(lit); },
       [&](std::string_view name) {
         auto it = slots.find(name);
         if (it == slots.end()) throw ValidationError(fmt::format("missing slot: {}", name));
         out += it->second;
       });
  return out;
}

std::string render_prompt(const PromptTemplate& tmpl, const SlotValues& slots) {
  for (const auto& name : tmpl.input_slot_names) {
    if (slots.find(name) == slots.end()) throw ValidationError(fmt::format("missing slot: {}", name));
  }
  std::string out = "You are a ";
  out += substitute_slots(tmpl.persona, slots);
  out += ", whose task is to ";
  out += substitute_slots(tmpl.task_details, slots);
  out += ".\n\n### INSTRUCTION ###\n";
  out += substitute_slots(tmpl.instructions, slots);
  out += "\n\n### Key Points ###\n";
  out += substitute_slots(tmpl.key_points, slots);
  out += "\n\n---\n**Inputs**:\n";
  out += substitute_slots(tmpl.inputs, slots);
  out += "\n---\n**Your Response**:";
  return out;
}

PromptTemplate skeleton_template() {
  PromptTemplate t;
  t.name = "skeleton";
  t.persona = "{persona}";
  t.task_details = "{task_details}";
  t.instructions = "{instructions}";
  t.key_points = "{key_points}";
  t.inputs = "{inputs}";
  t.input_slot_names = {"persona", "task_details", "instructions", "key_points", "inputs"};
  return t;
}

PromptTemplate parse_template(std::string_view text) {
  PromptTemplate t;
  std::string* block = nullptr;
  std::vector<std::string> block_lines;
  const auto flush = [&] {
    if (block) {
      // Drop trailing blank lines so serialize/parse round-trips.
      while (!block_lines.empty() && trim(block_lines.back()).empty()) block_lines.pop_back();
      *block = join(block_lines, "\n");
    }
    block = nullptr;
    block_lines.clear();
  };
  for (const auto& line : split_lines(text)) {
    if (!line.empty() && line[0] == '@') {
      flush();
      const auto sp = line.find(' ');
      const std::string key = line.substr(1, sp == std::string::npos ? std::string::npos : sp - 1);
      const std::string value = sp == std::string::npos ? "" : std::string(trim(line.substr(sp + 1)));
      if (key == "name") {
        t.name = value;
      } else if (key == "version") {
        t.version = std::stoi(value);
      } else if (key == "phase") {
        t.phase = parse_phase(value);
      } else if (key == "persona") {
        t.persona = value;
      } else if (key == "task") {
        t.task_details = value;
      } else if (key == "instructions") {
        block = &t.instructions;
      } else if (key == "key_points") {
        block = &t.key_points;
      } else if (key == "inputs") {
        block = &t.inputs;
      } else {
        throw ValidationError(fmt::format("template: unknown directive '@{}'", key));
      }
      continue;
    }
    if (block) block_lines.push_back(line);
  }
  flush();
  if (t.persona.empty()) throw ValidationError("template: missing @persona");
  t.input_slot_names = slot_names(t.inputs);
  return t;
}

std::optional<std::string> prompt_input(std::string_view prompt, std::string_view label, bool last) {
  const auto inputs = prompt.find("\n**Inputs**:\n");
  if (inputs == std::string_view::npos) return std::nullopt;
  const std::string head = std::string(label) + ":\n";
  auto start = prompt.find("\n" + head, inputs);
  if (start == std::string_view::npos) {
    const auto first = inputs + std::string_view("\n**Inputs**:\n").size();
    if (prompt.substr(first, head.size()) != head) return std::nullopt;
    start = first;
  } else {
    start += 1;
  }
  start += head.size();
  auto end = prompt.rfind("\n---\n**Your Response**:");
  if (end == std::string_view::npos || end < start) end = prompt.size();
  // Next field header: blank line, then a short capitalized "Words:" line.
  for (auto pos = last ? std::string_view::npos : prompt.find("\n\n", start);
       pos != std::string_view::npos && pos < end;
       pos = prompt.find("\n\n", pos + 1)) {
    const auto line_end = prompt.find('\n', pos + 2);
    if (line_end == std::string_view::npos || line_end > end) break;
    const auto line = prompt.substr(pos + 2, line_end - pos - 2);
    if (line.size() >= 2 && line.size() <= 40 && line.back() == ':' &&
        std::isupper(static_cast<unsigned char>(line[0])) &&
        line.find(':') == line.size() - 1) {
      end = pos;
      break;
    }
  }
  return std::string(prompt.substr(start, end - start));
}

std::string serialize_template(const PromptTemplate& t) {
  std::string out = fmt::format("@name {}\n@version {}\n", t.name, t.version);
  if (t.phase) out += fmt::format("@phase {}\n", phase_name(*t.phase));
  out += fmt::format("@persona {}\n@task {}\n", t.persona, t.task_details);
  out += fmt::format("@instructions\n{}\n@key_points\n{}\n@inputs\n{}\n", t.instructions,
                     t.key_points, t.inputs);
  return out;
}

}  // namespace fincot::cot
