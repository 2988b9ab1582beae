#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fincot/common/jsonl.hpp"
#include "fincot/common/timeutil.hpp"
#include "fincot/gateway/types.hpp"

namespace fincot::knowledge {

enum class CorpusTag { kFinancial, kBehavioral };

std::string_view corpus_tag_name(CorpusTag tag);
CorpusTag parse_corpus_tag(std::string_view name);

struct DocumentMetadata {
  std::string doc_id;
  std::string source;
  std::string url_or_handle;
  Timestamp snapshot_time;
  CorpusTag corpus_tag = CorpusTag::kFinancial;
  int priority = 0;  // higher wins when sources conflict; ordering is ours
};

struct Chunk {
  std::string chunk_id;  // "<doc_id>#000"
  CorpusTag corpus_tag = CorpusTag::kFinancial;
  std::string source;
  std::string url_or_handle;
  Timestamp snapshot_time;
  std::vector<std::string> section_path;
  std::string text;
  int priority = 0;
  gateway::Embedding embedding;
};

inline constexpr std::size_t kMaxChunkTokens = 512;

// Splits at ATX headers outside code fences. Each chunk starts with its
// header line; section_path is the enclosing header titles, outermost first.
// Sections over max_tokens whitespace tokens are packed by paragraph, and a
// single oversized paragraph is split by words. A header with no body is
// folded into the following chunk. Throws ValidationError for a
// document with no content.
std::vector<Chunk> chunk_markdown(std::string_view document, const DocumentMetadata& meta,
                                  std::size_t max_tokens = kMaxChunkTokens);

// Embedding omitted unless asked for.
json to_json(const Chunk& c, bool with_embedding = false);
Chunk chunk_from_json(const json& j);

}  // namespace fincot::knowledge
