#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fincot/common/error.hpp"
#include "fincot/corpus/types.hpp"
#include "fincot/cot/psych.hpp"
#include "fincot/cot/templates.hpp"
#include "fincot/gateway/gateway.hpp"
#include "fincot/jury/jury.hpp"
#include "fincot/knowledge/condense.hpp"

namespace fincot::cot {

using nlohmann::json;

struct PhaseCandidate {
  std::string candidate_id;  // "c0", "c1", ...
  PhaseKind phase = PhaseKind::kQueryAnalysis;
  std::string text;
  std::string provider_id;
  double temperature = 0.0;
  double cost = 0.0;
};

struct PhaseOutput {
  PhaseKind phase = PhaseKind::kQueryAnalysis;
  std::vector<PhaseCandidate> candidates;  // survivors only
  std::vector<jury::Ballot> ballots;
  std::vector<jury::AuditEntry> discarded_ballots;
  std::optional<jury::BordaSummary> summary;
  std::size_t chosen_index = 0;
  std::size_t failed_candidates = 0;
  bool juried = false;
  bool degraded = false;
  double cost = 0.0;  // generation plus judging

  const PhaseCandidate& chosen() const { return candidates.at(chosen_index); }
};

json to_json(const PhaseOutput& p);

// Delimiter line that opens each phase in the assembled chain of thought.
std::string phase_delimiter(PhaseKind kind);  // "## [PHASE: QueryAnalysis]"
// True when `text` contains anything shaped like a phase delimiter.
bool has_phase_delimiter(std::string_view text);

// Chosen texts of the four phases, in DAG order, each under its delimiter.
std::string assemble_cot(const std::vector<PhaseOutput>& phases);

struct TokenCounts {
  std::size_t query = 0;
  std::size_t cot = 0;
  std::size_t response = 0;
};

struct CotRecord {
  corpus::Query query;
  knowledge::ContextPack context;
  std::vector<PhaseOutput> phase_outputs;  // QueryAnalysis, ContextAnalysis, PsychCues, ResponseRubric
  std::optional<PhaseOutput> final_output;
  std::optional<PsychProfile> psych_profile;
  std::string assembled_cot;
  std::string final_response;
  TokenCounts token_counts;
  bool degraded = false;
  std::vector<std::string> degraded_reasons;
  double cost = 0.0;

  const PhaseOutput& phase(PhaseKind kind) const;
};

json to_json(const CotRecord& r);

// Schema and consistency checks for a finished record. Throws ValidationError
// naming the record: missing phases, leaked delimiters, token counts that do
// not match re-tokenizing the record's own fields, chosen_index not the
// Borda argmax.
void validate_record(const CotRecord& r);

struct EngineConfig {
  std::vector<std::string> generators;  // candidate i uses generators[i % size]
  std::vector<double> temperatures{0.3, 0.7, 1.0};
  std::size_t n_candidates = 3;
  bool jury_final = false;
  int max_tokens = 1024;
  int max_reasks = 3;
  std::uint64_t run_seed = 0;
  jury::JuryConfig jury;  // PhaseQuality judges
  knowledge::RetrievalConfig retrieval;
  std::string condense_provider;
  std::optional<Timestamp> created_at;

  void validate() const;
};

json to_json(const EngineConfig& c);
EngineConfig engine_config_from_json(const json& j);

// Called as each phase request is sent and when its phase finishes; tests use
// it to check DAG order.
using PhaseObserver = std::function<void(PhaseKind, bool finished)>;

// Candidate text check used for re-asks. Throws ValidationError.
void validate_phase_text(PhaseKind kind, std::string_view text, std::string_view query);

class PhaseFailure : public Error {
 public:
  using Error::Error;
};

class CotEngine {
 public:
  CotEngine(gateway::Gateway& gw, const TemplateSet& templates, const knowledge::KnowledgeIndex& index,
            knowledge::Reranker& reranker, EngineConfig config);

  // n candidates at the temperature ladder, then a PhaseQuality jury.
  // Throws PhaseFailure when no candidate survives.
  PhaseOutput run_phase(PhaseKind kind, const corpus::Query& query, const SlotValues& slots,
                        std::size_t n_candidates) const;

  // The full DAG for one query. Never throws for a query-level failure; the
  // record comes back degraded with reasons.
  CotRecord generate_record(const corpus::Query& query) const;

  // Records in input order, queries processed `workers` at a time.
  std::vector<CotRecord> generate_batch(const std::vector<corpus::Query>& queries, std::size_t workers) const;

  void set_observer(PhaseObserver observer) { observer_ = std::move(observer); }
  const EngineConfig& config() const { return config_; }

 private:
  gateway::Gateway& gw_;
  const TemplateSet& templates_;
  const knowledge::KnowledgeIndex& index_;
  knowledge::Reranker& reranker_;
  EngineConfig config_;
  PhaseObserver observer_;
};

// Offline stand-ins for the generator, keyed by template name. Replies are
// built from the prompt inputs and vary with the request seed.
std::string mock_phase_reply(PhaseKind kind, std::string_view user_prompt, std::int64_t seed);

}  // namespace fincot::cot
