#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fincot/gateway/gateway.hpp"
#include "fincot/knowledge/chunk.hpp"

namespace fincot::knowledge {

// Corpus directory: markdown files plus manifest.json
//   {"corpus_tag": "financial",
//    "documents": [{"file": "a.md", "doc_id": "a", "source": "...",
//                   "url_or_handle": "...", "snapshot_time": "...",
//                   "priority": 0}, ...]}
// A document may override corpus_tag; it must then agree with `expected`.
std::vector<Chunk> load_corpus_dir(const std::filesystem::path& dir,
                                   std::optional<CorpusTag> expected = std::nullopt,
                                   std::size_t max_tokens = kMaxChunkTokens);

struct ScoredChunk {
  const Chunk* chunk = nullptr;
  double score = 0.0;
};

// Descending score, ties by chunk_id.
void sort_scored(std::vector<ScoredChunk>& v);

// Exact cosine index over both corpora. Build once, then read concurrently.
class KnowledgeIndex {
 public:
  KnowledgeIndex() = default;

  // Embeds every chunk through the gateway. Rebuild replaces everything.
  void build(gateway::Gateway& gw, const std::string& embedding_provider, std::vector<Chunk> chunks);
  // Chunks must already carry embeddings of one dimension.
  void build_from(std::vector<Chunk> chunks, std::string embedding_provider);

  bool built() const { return built_; }
  const std::string& embedding_provider() const { return embedding_provider_; }
  std::size_t dimension() const { return dim_; }
  const std::vector<Chunk>& chunks() const { return chunks_; }
  std::size_t size(CorpusTag tag) const;
  const Chunk* find(std::string_view chunk_id) const;

  // Top-k of one corpus by cosine with `query`. Throws ValidationError when
  // the index is not built, the corpus is empty, k < 1 or dimensions differ.
  std::vector<ScoredChunk> search(const gateway::Embedding& query, CorpusTag tag, std::size_t k) const;

  // Binary file: "FCKI", u32 version, then chunk metadata and f32 vectors.
  void save(const std::filesystem::path& path) const;
  static KnowledgeIndex load(const std::filesystem::path& path);

 private:
  std::vector<Chunk> chunks_;
  std::string embedding_provider_;
  std::size_t dim_ = 0;
  bool built_ = false;
};

inline constexpr std::uint32_t kIndexVersion = 1;

// Embeds the query with the index's provider, then searches.
std::vector<ScoredChunk> retrieve(gateway::Gateway& gw, const KnowledgeIndex& index,
                                  std::string_view query_text, CorpusTag tag, std::size_t k);

}  // namespace fincot::knowledge
