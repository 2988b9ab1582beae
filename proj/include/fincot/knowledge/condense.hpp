#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fincot/cot/templates.hpp"
#include "fincot/gateway/gateway.hpp"
#include "fincot/knowledge/rerank.hpp"

namespace fincot::knowledge {

struct SelectedChunk {
  std::string chunk_id;
  CorpusTag corpus_tag = CorpusTag::kFinancial;
  std::string source;
  double score = 0.0;
};

struct ContextPack {
  std::string query_id;
  std::vector<SelectedChunk> selected_chunks;
  std::string condensed_text;
  Timestamp created_at;
  bool degraded = false;
  std::string reranker_id;
};

json to_json(const ContextPack& p);
ContextPack context_pack_from_json(const json& j);

// "[Bogleheads Wiki; financial; bogleheads-emergency#002]"
std::string attribution(const Chunk& c);
struct Attribution {
  std::string source;
  std::string corpus_tag;
  std::string chunk_id;
};
std::vector<Attribution> find_attributions(std::string_view text);

struct RetrievalConfig {
  std::size_t k_per_corpus = 25;
  std::size_t m_keep = 15;
  std::size_t condense_budget = 1500;  // whitespace tokens
  void validate() const;  // m_keep <= 2 * k_per_corpus, all positive
};

struct CondenseOptions {
  std::string provider_id;
  std::size_t budget = 1500;
  std::optional<Timestamp> created_at;  // defaults to the wall clock
  std::int64_t seed = 0;
  std::size_t max_kept = 15;
};

// Renders the condensation prompt with the chunks labeled [S1].. [Sn], then
// expands the labels the model cites into full attributions. Unknown labels
// are dropped. A reply that cites nothing gets a trailing Sources line naming
// every kept chunk. Provider failure yields an empty, degraded pack.
ContextPack condense(gateway::Gateway& gw, const cot::TemplateSet& templates, std::string_view query_id,
                     std::string_view query_text, const std::vector<ScoredChunk>& kept,
                     const CondenseOptions& options);

// retrieve(k) on both corpora, concatenate, rerank to m, condense.
ContextPack build_context(gateway::Gateway& gw, const KnowledgeIndex& index, Reranker& reranker,
                          const cot::TemplateSet& templates, std::string_view query_id,
                          std::string_view query_text, const RetrievalConfig& config,
                          const CondenseOptions& options);

// Offline condenser: the first sentence of each labeled chunk, cited.
std::string mock_condense_reply(std::string_view user_prompt);

}  // namespace fincot::knowledge
