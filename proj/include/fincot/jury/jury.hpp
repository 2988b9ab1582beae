#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fincot/gateway/gateway.hpp"
#include "fincot/gateway/mock_backend.hpp"
#include "fincot/jury/anonymize.hpp"
#include "fincot/jury/borda.hpp"

namespace fincot::jury {

struct Rubric {
  std::string persona;
  std::string target_aspect;
  std::string definition;
  std::string primary;
  std::string penalties;
  std::string key_points;
};

const Rubric& rubric(Criterion c);

// The few-shot pool used when JuryConfig::n_shots > 0 and no pool is given.
const std::vector<std::string>& builtin_exemplars();

struct JudgePromptParts {
  Criterion criterion = Criterion::kAccuracy;
  std::string query;
  std::string search_results;  // optional reference material
  std::string scope;           // phase name for PhaseQuality, else empty
  std::vector<std::string> exemplars;
  const Presented* presented = nullptr;
};

std::string render_judge_prompt(const JudgePromptParts& parts);

struct JudgeSpec {
  std::string judge_id;
  std::string provider_id;
  int replicates = 1;
  // Exemplars shown per replicate; falls back to JuryConfig::n_shots.
  std::optional<int> n_shots;
  double temperature = 0.0;
  int max_tokens = 256;
};

struct JuryConfig {
  std::vector<JudgeSpec> judges;
  std::uint64_t run_seed = 0;
  int max_reasks = 3;
  std::size_t workers = 4;
  int n_shots = 0;
  std::vector<std::string> exemplars;    // empty -> builtin_exemplars()
  std::vector<std::string> identifiers;  // scrubbed in addition to provider ids

  void validate() const;
  // Two judges, five and three replicates.
  static JuryConfig evaluation_default(const std::string& first_provider,
                                       const std::string& second_provider);
};

JuryConfig jury_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const JuryConfig& c);

struct RankTask {
  std::string query_id;
  std::string query_text;
  Criterion criterion = Criterion::kPhaseQuality;
  std::string scope;
  std::string search_results;
  std::vector<std::string> candidate_ids;
  std::vector<std::string> candidate_texts;
  std::vector<std::string> identifiers;  // e.g. model ids behind the candidates
};

// A ballot that never parsed. It counts toward nothing.
struct AuditEntry {
  std::string query_id;
  std::string judge_id;
  int replicate_index = 0;
  Criterion criterion = Criterion::kPhaseQuality;
  std::string scope;
  std::vector<int> permutation;
  std::vector<std::string> raw_replies;
  std::string error;
};

nlohmann::json to_json(const AuditEntry& a);

struct JuryResult {
  std::vector<Ballot> ballots;
  std::vector<AuditEntry> discarded;
  std::optional<BordaSummary> summary;
  double cost = 0.0;
  std::size_t scrubbed = 0;
};

class Jury {
 public:
  Jury(gateway::Gateway& gw, JuryConfig config);

  JuryResult rank(const RankTask& task);
  // Ballots for many tasks, collected in parallel over (task, judge, replicate).
  std::vector<JuryResult> rank_all(const std::vector<RankTask>& tasks);

  // Everything one ballot request needs, computed deterministically.
  struct Draw {
    Presented presented;
    gateway::ChatRequest request;
  };
  Draw draw(const RankTask& task, const JudgeSpec& judge, int replicate) const;

  const JuryConfig& config() const { return config_; }

 private:
  gateway::Gateway& gw_;
  JuryConfig config_;

  struct Slot {
    std::optional<Ballot> ballot;
    std::optional<AuditEntry> audit;
    double cost = 0.0;
    std::size_t scrubbed = 0;
  };
  Slot collect(const RankTask& task, const JudgeSpec& judge, int replicate) const;
};

// Offline judge: ranks the presented responses by lexical overlap with the
// query, then by a content hash. Depends only on response text, never on
// position. `noise` > 0 adds per-request jitter keyed on the request seed.
gateway::MockResponder mock_judge_responder(double noise = 0.0);

// Pieces of a rendered judge prompt, for mock judges and tests.
struct ParsedJudgePrompt {
  std::string target_aspect;
  std::string query;
  std::vector<std::string> labels;
  std::vector<std::string> texts;
};
ParsedJudgePrompt parse_judge_prompt(std::string_view prompt);

}  // namespace fincot::jury
