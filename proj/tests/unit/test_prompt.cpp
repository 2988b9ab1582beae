#include <doctest.h>

#include <filesystem>

#include "fincot/common/error.hpp"
#include "fincot/common/jsonl.hpp"
#include "fincot/cot/prompt.hpp"
#include "fincot/cot/templates.hpp"

using namespace fincot;
using namespace fincot::cot;

namespace {
const std::filesystem::path kFixtures = FINCOT_FIXTURES_DIR;
constexpr const char* kC1 =
    "I'm 18 with about $40k in checking. I run a business (will reinvest some), have very low "
    "expenses, and my parents cover college/housing. What should I do so it's not just sitting "
    "idle?";
}  // namespace

TEST_CASE("skeleton with persona only") {
  SlotValues slots{{"persona", "X"}, {"task_details", ""}, {"instructions", ""},
                   {"key_points", ""}, {"inputs", ""}};
  const auto out = render_prompt(skeleton_template(), slots);
  CHECK(out.rfind("You are a X, whose task is to .", 0) == 0);
  CHECK(out ==
        "You are a X, whose task is to .\n\n### INSTRUCTION ###\n\n\n### Key Points ###\n\n\n---\n"
        "**Inputs**:\n\n---\n**Your Response**:");
}

TEST_CASE("missing slot is named") {
  SlotValues slots{{"persona", "X"}, {"task_details", ""}, {"instructions", ""}, {"key_points", ""}};
  try {
    render_prompt(skeleton_template(), slots);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()) == "missing slot: inputs");
  }
}

TEST_CASE("skeleton section order") {
  const auto out = render_prompt(TemplateSet::builtin().get("psych_cues"), {{"query", "q"}});
  const auto p0 = out.find("You are a ");
  const auto p1 = out.find("### INSTRUCTION ###");
  const auto p2 = out.find("### Key Points ###");
  const auto p3 = out.find("**Inputs**:");
  const auto p4 = out.find("**Your Response**:");
  CHECK(p0 == 0);
  CHECK(p0 < p1);
  CHECK(p1 < p2);
  CHECK(p2 < p3);
  CHECK(p3 < p4);
  CHECK(out.size() == p4 + std::string("**Your Response**:").size());
}

TEST_CASE("slot values are not rescanned and braces escape") {
  PromptTemplate t = skeleton_template();
  t.inputs = "{{literal}} {inputs}";
  t.input_slot_names = {"inputs"};
  SlotValues slots{{"persona", "p"}, {"task_details", "t"}, {"instructions", "i"},
                   {"key_points", "k"}, {"inputs", "{persona}"}};
  const auto out = render_prompt(t, slots);
  CHECK(out.find("{literal} {persona}\n---") != std::string::npos);
  CHECK(slot_names("a {x} {{y}} {x} {z}") == std::vector<std::string>{"x", "z"});
}

TEST_CASE("golden QueryAnalysis render") {
  const auto set = TemplateSet::builtin();
  const auto out = render_prompt(set.for_phase(PhaseKind::kQueryAnalysis), {{"query", kC1}});
  CHECK(out == read_text_file(kFixtures / "golden" / "query_analysis_c1.txt"));
}

TEST_CASE("template text round-trips") {
  const auto set = TemplateSet::builtin();
  for (const auto& name : set.names()) {
    CAPTURE(name);
    const auto& t = set.get(name);
    const auto back = parse_template(serialize_template(t));
    CHECK(back.name == t.name);
    CHECK(back.version == t.version);
    CHECK(back.phase == t.phase);
    CHECK(back.persona == t.persona);
    CHECK(back.task_details == t.task_details);
    CHECK(back.instructions == t.instructions);
    CHECK(back.key_points == t.key_points);
    CHECK(back.inputs == t.inputs);
    CHECK(back.input_slot_names == t.input_slot_names);
  }
}

TEST_CASE("builtin templates cover every phase") {
  const auto set = TemplateSet::builtin();
  for (auto k : {PhaseKind::kQueryAnalysis, PhaseKind::kContextAnalysis, PhaseKind::kPsychCues,
                 PhaseKind::kResponseRubric, PhaseKind::kFinalResponse}) {
    CHECK(set.for_phase(k).phase == k);
  }
  CHECK(set.get("condense").persona == "financial context synthesizer");
  CHECK(set.get("context_analysis").input_slot_names ==
        std::vector<std::string>{"query", "query_analysis", "context_pack"});
  CHECK_THROWS_AS(set.get("nope"), ValidationError);
  CHECK(parse_phase("PsychCues") == PhaseKind::kPsychCues);
  CHECK_THROWS_AS(parse_phase("Nope"), ValidationError);
}

TEST_CASE("override directory replaces by name") {
  const auto dir = std::filesystem::temp_directory_path() / "fincot_tmpl_test";
  std::filesystem::remove_all(dir);
  write_text_file(dir / "query_analysis.tmpl",
                  "@name query_analysis\n@version 7\n@phase QueryAnalysis\n@persona tester\n@task "
                  "test\n@instructions\nDo it.\n@key_points\n- one\n@inputs\n{query}\n");
  auto set = TemplateSet::builtin();
  set.load_overrides(dir);
  CHECK(set.get("query_analysis").version == 7);
  CHECK(set.versions().at("query_analysis") == 7);
  CHECK(set.versions().at("psych_cues") == 1);
  CHECK_THROWS_AS(set.load_overrides(dir / "missing"), ValidationError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("prompt_input reads fields back") {
  const auto set = TemplateSet::builtin();
  const auto out = render_prompt(set.get("context_analysis"),
                                 {{"query", "My q\n\nwith gap"},
                                  {"query_analysis", "### Primary Conflict\nx"},
                                  {"context_pack", "fact [S1]"}});
  CHECK(prompt_input(out, "Query").value() == "My q\n\nwith gap");
  CHECK(prompt_input(out, "Query Analysis").value() == "### Primary Conflict\nx");
  CHECK(prompt_input(out, "Context Pack").value() == "fact [S1]");
  CHECK_FALSE(prompt_input(out, "Chunks").has_value());
}
