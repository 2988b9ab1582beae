#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fincot/corpus/ingest.hpp"
#include "fincot/cot/engine.hpp"
#include "fincot/harness/dataset.hpp"
#include "fincot/harness/evaluate.hpp"
#include "fincot/knowledge/rerank.hpp"

namespace fincot::harness {

struct IndexSection {
  std::string embedding_provider;
  std::filesystem::path financial_dir;
  std::filesystem::path behavioral_dir;
  std::size_t max_chunk_tokens = knowledge::kMaxChunkTokens;
};

struct EvaluationSection {
  jury::JuryConfig jury;
  EvalOptions options;
};

// One JSON file drives every subcommand. Relative paths resolve against the
// file's directory. "seed" is copied into every seeded section.
//   {"providers": "providers.json" | [...], "cache_dir", "retry", "seed",
//    "templates_dir", "ingest", "index", "engine", "evaluation", "dataset",
//    "reranker": {"url", "timeout_s"}}
struct RunConfig {
  std::filesystem::path base_dir;
  std::vector<gateway::ProviderProfile> providers;
  gateway::RetryPolicy retry;
  std::optional<std::filesystem::path> cache_dir;
  std::optional<std::filesystem::path> templates_dir;
  std::uint64_t seed = 0;
  std::optional<corpus::IngestOptions> ingest;
  std::optional<IndexSection> index;
  std::optional<cot::EngineConfig> engine;
  std::optional<EvaluationSection> evaluation;
  EmitOptions dataset;
  std::size_t workers = 4;  // queries generated at once
  std::optional<std::string> reranker_url;
  int reranker_timeout_s = 30;

  void set_seed(std::uint64_t seed);
  // Offline checks only: profiles, provider references, paths, ranges.
  void validate() const;
  // validate() plus: the named sections must be present.
  void require(std::initializer_list<std::string_view> sections) const;
};

RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

// Registers every provider. Mock providers get the offline responders.
std::unique_ptr<gateway::Gateway> make_gateway(const RunConfig& config);
std::unique_ptr<knowledge::Reranker> make_reranker(const RunConfig& config);
cot::TemplateSet make_templates(const RunConfig& config);

}  // namespace fincot::harness
