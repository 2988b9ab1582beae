#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <vector>

#include "fincot/knowledge/index.hpp"

namespace fincot::knowledge {

class Reranker {
 public:
  virtual ~Reranker() = default;
  // One score per passage, same order. Throws on failure.
  virtual std::vector<double> score(std::string_view query, const std::vector<std::string>& passages) = 0;
  virtual std::string id() const = 0;
};

// |query terms ∩ passage terms| / |query terms| over lowercased terms.
class LexicalReranker : public Reranker {
 public:
  std::vector<double> score(std::string_view query, const std::vector<std::string>& passages) override;
  std::string id() const override { return "lexical-overlap"; }
  static double overlap(std::string_view query, std::string_view passage);
};

inline constexpr std::size_t kMaxPassagesPerRequest = 64;

// Client for the scoring service: POST /score {query, passages} ->
// {scores, model_id}; GET /health. Inputs over 64 passages go out in batches.
class RemoteReranker : public Reranker {
 public:
  explicit RemoteReranker(std::string base_url, std::chrono::seconds timeout = std::chrono::seconds(30));

  std::vector<double> score(std::string_view query, const std::vector<std::string>& passages) override;
  std::string id() const override;
  // model_id when the service reports ready; nullopt otherwise.
  std::optional<std::string> health() const;

 private:
  std::string base_url_;
  std::chrono::seconds timeout_;
  mutable std::string model_id_;
};

struct RerankResult {
  std::vector<ScoredChunk> kept;
  std::string reranker_id;
  bool downgraded = false;  // primary reranker failed, lexical fallback used
};

// Scores every candidate, keeps the top m (descending, ties by chunk_id).
// A failing reranker downgrades to the lexical scorer with a warning.
RerankResult rerank(std::string_view query, const std::vector<ScoredChunk>& candidates, std::size_t m,
                    Reranker& reranker);

}  // namespace fincot::knowledge
