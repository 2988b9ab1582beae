#include "fincot/corpus/dedup.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fincot/common/error.hpp"
#include "fincot/common/rng.hpp"

namespace fincot::corpus {

double cosine(const gateway::Embedding& a, const gateway::Embedding& b) {
  if (a.size() != b.size()) throw ValidationError("embedding dimension mismatch");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / std::sqrt(na * nb);
}

namespace {

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

bool better_representative(const Query& a, const Query& b) {
  if (a.text.size() != b.text.size()) return a.text.size() > b.text.size();
  return a.query_id < b.query_id;
}

}  // namespace

std::vector<std::size_t> cluster_representatives(const std::vector<Query>& queries,
                                                 const std::vector<gateway::Embedding>& embeddings,
                                                 double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw ValidationError("threshold must be in (0, 1)");
  if (queries.size() != embeddings.size()) throw ValidationError("one embedding per query required");
  const auto n = queries.size();
  DisjointSets sets(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (cosine(embeddings[i], embeddings[j]) >= threshold) sets.unite(i, j);
    }
  }
  std::vector<std::size_t> best(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& b = best[sets.find(i)];
    if (b == n || better_representative(queries[i], queries[b])) b = i;
  }
  std::vector<std::size_t> rep(n);
  for (std::size_t i = 0; i < n; ++i) rep[i] = best[sets.find(i)];
  return rep;
}

std::vector<Query> cluster_dedup(const std::vector<Query>& queries,
                                 const std::vector<gateway::Embedding>& embeddings, double threshold) {
  const auto rep = cluster_representatives(queries, embeddings, threshold);
  std::vector<Query> out;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    if (rep[i] == i) out.push_back(queries[i]);
  }
  std::sort(out.begin(), out.end(),
            [](const Query& a, const Query& b) { return a.query_id < b.query_id; });
  return out;
}

std::vector<Query> quota_sample(const std::vector<Query>& queries, const QuotaConfig& quotas,
                                std::uint64_t seed) {
  std::map<Category, std::vector<Query>> by_category;
  for (const auto& q : queries) by_category[q.category].push_back(q);
  std::vector<Query> out;
  for (auto& [category, group] : by_category) {
    std::optional<std::size_t> cap = quotas.default_quota;
    if (auto it = quotas.per_category.find(category); it != quotas.per_category.end()) cap = it->second;
    std::sort(group.begin(), group.end(),
              [](const Query& a, const Query& b) { return a.query_id < b.query_id; });
    if (cap && group.size() > *cap) {
      Rng rng(seed ^ (0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(category) + 1)));
      rng.shuffle(group);
      group.resize(*cap);
    }
    out.insert(out.end(), group.begin(), group.end());
  }
  std::sort(out.begin(), out.end(),
            [](const Query& a, const Query& b) { return a.query_id < b.query_id; });
  return out;
}

}  // namespace fincot::corpus
