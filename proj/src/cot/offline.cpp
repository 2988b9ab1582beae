#include "fincot/cot/offline.hpp"

#include "fincot/corpus/classifier.hpp"
#include "fincot/cot/engine.hpp"
#include "fincot/jury/jury.hpp"
#include "fincot/knowledge/condense.hpp"

namespace fincot::cot {

void install_offline_responders(gateway::MockBackend& backend) {
  backend.set_responder("classify", [](const gateway::MockPrompt& p) {
    return corpus::mock_classify_reply(p.user_prompt);
  });
  // Rephrasing offline keeps the question as written.
  backend.set_responder("rephrase", [](const gateway::MockPrompt& p) {
    return prompt_input(p.user_prompt, "Question", true).value_or(std::string(p.user_prompt));
  });
  backend.set_responder("condense", [](const gateway::MockPrompt& p) {
    return knowledge::mock_condense_reply(p.user_prompt);
  });
  for (PhaseKind kind : {PhaseKind::kQueryAnalysis, PhaseKind::kContextAnalysis, PhaseKind::kPsychCues,
                         PhaseKind::kResponseRubric, PhaseKind::kFinalResponse}) {
    backend.set_responder(std::string(template_name(kind)), [kind](const gateway::MockPrompt& p) {
      return mock_phase_reply(kind, p.user_prompt, p.seed);
    });
  }
  backend.set_responder("judge", jury::mock_judge_responder());
}

}  // namespace fincot::cot
