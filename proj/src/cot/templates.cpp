#include "fincot/cot/templates.hpp"

#include <fmt/core.h>

#include "fincot/common/error.hpp"
#include "fincot/common/jsonl.hpp"

namespace fincot::cot {
namespace {

constexpr std::string_view kClassify = R"(@name classify
@version 1
@persona personal finance query classification expert
@task assign the user's query to exactly ONE of the following personal finance categories based on its PRIMARY INTENT
@instructions
Read the query and decide which single category best matches what the user is primarily asking for.
Each category lists its scope and an example query:

{category_guide}

If the query does not contain an explicit, answerable personal finance question (news, advertisements, off-topic chatter), answer Not_Applicable.
@key_points
- Choose ONE of the following labels, never several.
- Classify by the PRIMARY INTENT, not by incidental mentions.
- Reply with the category label only, with no explanation.
@inputs
Query:
{query}
)";

constexpr std::string_view kRephrase = R"(@name rephrase
@version 1
@persona privacy-focused editor of personal finance questions
@task lightly rephrase the user's question so that only the financial situation remains
@instructions
Rewrite the question in the first person, keeping every amount, timeline, constraint and goal.
Remove names, places, employers, usernames, links and any other detail that could identify the writer.
@key_points
- Do not add advice or new facts.
- Keep placeholders such as [EMAIL] or [PHONE] out of the rewrite entirely.
- Reply with the rewritten question only.
@inputs
Question:
{query}
)";

constexpr std::string_view kCondense = R"(@name condense
@version 1
@persona financial context synthesizer
@task condense retrieved knowledge chunks into a streamlined, source-attributed context for the user's query
@instructions
(a) Extract the salient facts, definitions and decision criteria that bear on the query.
(b) Discard off-topic or redundant spans.
(c) Emit a compact context in which every statement ends with the label of the chunk it came from, e.g. [S2].
Behavioral chunks describe how advice should be framed; financial chunks ground what the advice says.
@key_points
- Cite only the labels listed in the inputs.
- Prefer the higher-priority source when chunks conflict.
- Unify terminology; do not answer the query yourself.
@inputs
Query:
{query}

Chunks:
{chunks}
)";

constexpr std::string_view kQueryAnalysis = R"(@name query_analysis
@version 1
@phase QueryAnalysis
@persona linguistic analysis expert
@task deconstruct a personal finance query into its essential components
@instructions
Distil the query into its essential semantic elements and drop conversational noise.
Produce three labeled sections:
### Primary Conflict
The core dilemma or decision the user faces.
### Key Stakeholders
The people and parties affected by the decision.
### Essential Financial Facts
Every amount, rate, date, account and constraint needed to address the query.
@key_points
- Stay faithful to the user's words; do not speculate beyond them.
- Keep each section short and concrete.
- Do not give advice in this phase.
@inputs
Query:
{query}
)";

constexpr std::string_view kContextAnalysis = R"(@name context_analysis
@version 1
@phase ContextAnalysis
@persona expert financial reasoning engine
@task write a concise chain-of-thought analysis block that grounds the query in the retrieved financial and behavioral context
@instructions
This is an internal reasoning step, not the final answer.
Use the context pack to explore the plausible approaches to the user's dilemma and their consequences.
For each approach, state its Stakeholder Impact: the financial and emotional consequences for every party named in the query analysis.
Close with the considerations that should decide between the approaches.
@key_points
- Ground every claim in the context pack or the query; keep source labels where they help.
- Flag behavioral biases the user may be exposed to.
- Be concise.
@inputs
Query:
{query}

Query Analysis:
{query_analysis}

Context Pack:
{context_pack}
)";

constexpr std::string_view kPsychCues = R"(@name psych_cues
@version 1
@phase PsychCues
@persona behavioral psychology analyst
@task identify the psychological cues expressed in a personal finance query
@instructions
Assess four categories and justify each with an exact quote from the query:
Sentiment: negative | neutral | positive
Evidence: "<exact words from the query>"
Primary Emotions: <comma-separated emotion labels>
Evidence: "<exact words from the query>"
Certainty: low | medium | high
Evidence: "<exact words from the query>"
Communicative Intents: <comma-separated intent labels>
Evidence: "<exact words from the query>"
@key_points
- Every conclusion must reference specific words or phrases from the query, quoted verbatim.
- Do not analyse the finances; this step is about the user's state of mind.
- Use exactly the labels above, one per line.
@inputs
Query:
{query}
)";

constexpr std::string_view kResponseRubric = R"(@name response_rubric
@version 1
@phase ResponseRubric
@persona financial advice planning strategist
@task consolidate all preceding analyses into a rubric of directives for the final response
@instructions
Synthesize the query analysis, the context analysis and the psychological cues into numbered directives the final response must follow.
Link each directive to the part of the user's query it serves.
Include directives for content (what to recommend), structure (in what order) and tone (how to address the user's emotional state).
@key_points
- Every directive must be actionable and checkable.
- Carry the user's specific figures and constraints into the directives.
- Do not write the response itself.
@inputs
Query:
{query}

Query Analysis:
{query_analysis}

Context Analysis:
{context_analysis}

Psychological Cues:
{psych_cues}
)";

constexpr std::string_view kFinalResponse = R"(@name final_response
@version 1
@phase FinalResponse
@persona empathetic personal finance advisor
@task write the final response to the user's personal finance query
@instructions
Use the chain-of-thought below as your private preparation and answer the user directly.
Do: acknowledge the user's situation and emotional state, follow the rubric directives, use the user's own figures, give clear sequential steps.
Do: integrate factual accuracy and emotional intelligence in one natural answer.
Do not reference the chain-of-thought analysis, its phases or its headings.
Do not promise guaranteed returns or suggest evading taxes or obligations.
@key_points
- Write for the user, in a suitable tone.
- Be specific and actionable.
- Keep it self-contained.
@inputs
Query:
{query}

Chain of Thought:
{chain_of_thought}
)";

}  // namespace

std::string_view template_name(PhaseKind kind) {
  switch (kind) {
    case PhaseKind::kQueryAnalysis: return "query_analysis";
    case PhaseKind::kContextAnalysis: return "context_analysis";
    case PhaseKind::kPsychCues: return "psych_cues";
    case PhaseKind::kResponseRubric: return "response_rubric";
    case PhaseKind::kFinalResponse: return "final_response";
  }
  return "?";
}

TemplateSet TemplateSet::builtin() {
  TemplateSet set;
  for (auto text : {kClassify, kRephrase, kCondense, kQueryAnalysis, kContextAnalysis, kPsychCues,
                    kResponseRubric, kFinalResponse}) {
    set.put(parse_template(text));
  }
  return set;
}

void TemplateSet::put(PromptTemplate tmpl) {
  if (tmpl.name.empty()) throw ValidationError("template without a name");
  auto name = tmpl.name;
  templates_[name] = std::move(tmpl);
}

void TemplateSet::load_overrides(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw ValidationError(fmt::format("template directory {} does not exist", dir.string()));
  }
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".tmpl") continue;
    auto t = parse_template(read_text_file(entry.path()));
    if (t.name.empty()) t.name = entry.path().stem().string();
    put(std::move(t));
  }
}

const PromptTemplate& TemplateSet::get(std::string_view name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw ValidationError(fmt::format("no template named '{}'", name));
  return it->second;
}

const PromptTemplate& TemplateSet::for_phase(PhaseKind kind) const { return get(template_name(kind)); }

bool TemplateSet::contains(std::string_view name) const {
  return templates_.find(name) != templates_.end();
}

std::vector<std::string> TemplateSet::names() const {
  std::vector<std::string> out;
  for (const auto& [n, _] : templates_) out.push_back(n);
  return out;
}

std::map<std::string, int> TemplateSet::versions() const {
  std::map<std::string, int> out;
  for (const auto& [n, t] : templates_) out[n] = t.version;
  return out;
}

}  // namespace fincot::cot
