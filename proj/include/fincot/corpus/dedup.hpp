#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "fincot/corpus/types.hpp"
#include "fincot/gateway/types.hpp"

namespace fincot::corpus {

double cosine(const gateway::Embedding& a, const gateway::Embedding& b);

// Single-linkage clusters of the graph with an edge wherever cosine >=
// threshold. Returns, per query index, the index of its cluster's
// representative: the longest text, ties to the smallest query_id.
std::vector<std::size_t> cluster_representatives(const std::vector<Query>& queries,
                                                 const std::vector<gateway::Embedding>& embeddings,
                                                 double threshold);

// One survivor per cluster, sorted by query_id. `embeddings` is aligned with
// `queries`. Throws ValidationError for a threshold outside (0, 1) or a size
// mismatch.
std::vector<Query> cluster_dedup(const std::vector<Query>& queries,
                                 const std::vector<gateway::Embedding>& embeddings, double threshold);

struct QuotaConfig {
  std::map<Category, std::size_t> per_category;
  std::optional<std::size_t> default_quota;  // categories not listed; unset = keep all
};

// Caps each category at its quota by a seeded shuffle; output sorted by query_id.
std::vector<Query> quota_sample(const std::vector<Query>& queries, const QuotaConfig& quotas,
                                std::uint64_t seed);

}  // namespace fincot::corpus
