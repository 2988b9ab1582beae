#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fincot/gateway/gateway.hpp"

namespace fincot::harness {

// Pairwise similarity of candidate and reference texts.
class SemanticScorer {
 public:
  virtual ~SemanticScorer() = default;
  virtual std::vector<double> score(const std::vector<std::string>& candidates,
                                    const std::vector<std::string>& references) = 0;
  virtual std::string id() const = 0;
};

// Cosine of mean-pooled sentence embeddings. Scores lie in [-1, 1].
class EmbeddingCosineScorer : public SemanticScorer {
 public:
  EmbeddingCosineScorer(gateway::Gateway& gw, std::string provider_id);
  std::vector<double> score(const std::vector<std::string>& candidates,
                            const std::vector<std::string>& references) override;
  std::string id() const override { return "embedding-cosine:" + provider_; }

  // Non-empty trimmed lines, each further split after . ! or ?
  static std::vector<std::string> segments(std::string_view text);

 private:
  gateway::Gateway& gw_;
  std::string provider_;
};

// Scores produced elsewhere (a BERTScore run, say). File:
// {"scorer_id": "...", "scores": [..]}, index-aligned with the pairs.
class ExternalScores : public SemanticScorer {
 public:
  explicit ExternalScores(const std::filesystem::path& path);
  std::vector<double> score(const std::vector<std::string>& candidates,
                            const std::vector<std::string>& references) override;
  std::string id() const override { return scorer_id_; }

 private:
  std::string scorer_id_;
  std::vector<double> scores_;
};

struct SemanticScores {
  std::vector<double> scores;
  std::string scorer_id;
  bool fell_back = false;
  std::string fallback_reason;
};

// Throws ValidationError for misaligned or empty texts. When `primary` is
// missing or fails, uses `fallback`; with no fallback that is a ProviderError.
SemanticScores score_semantic(const std::vector<std::string>& candidates,
                              const std::vector<std::string>& references, SemanticScorer* primary,
                              SemanticScorer* fallback);

}  // namespace fincot::harness
