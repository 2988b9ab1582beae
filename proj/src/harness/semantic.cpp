#include "fincot/harness/semantic.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>
#include <spdlog/spdlog.h>

#include "fincot/common/error.hpp"
#include "fincot/common/jsonl.hpp"
#include "fincot/common/text.hpp"
#include "fincot/corpus/dedup.hpp"

namespace fincot::harness {

EmbeddingCosineScorer::EmbeddingCosineScorer(gateway::Gateway& gw, std::string provider_id)
    : gw_(gw), provider_(std::move(provider_id)) {
  if (!gw_.has_provider(provider_)) throw ValidationError(fmt::format("unknown provider {}", provider_));
}

std::vector<std::string> EmbeddingCosineScorer::segments(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& line : split_lines(text)) {
    std::string cur;
    for (char c : line) {
      cur += c;
      if (c == '.' || c == '!' || c == '?') {
        if (!trim(cur).empty()) out.emplace_back(trim(cur));
        cur.clear();
      }
    }
    if (!trim(cur).empty()) out.emplace_back(trim(cur));
  }
  return out;
}

std::vector<double> EmbeddingCosineScorer::score(const std::vector<std::string>& candidates,
                                                 const std::vector<std::string>& references) {
  // One embed call for every segment of every text.
  std::vector<std::string> all;
  std::vector<std::pair<std::size_t, std::size_t>> spans;  // per text: [begin, end)
  auto add = [&](const std::string& text) {
    const auto segs = segments(text);
    spans.emplace_back(all.size(), all.size() + segs.size());
    all.insert(all.end(), segs.begin(), segs.end());
  };
  for (const auto& c : candidates) add(c);
  for (const auto& r : references) add(r);
  const auto vecs = all.empty() ? std::vector<gateway::Embedding>{} : gw_.embed(provider_, all);
  auto pooled = [&](std::size_t t) {
    const auto [b, e] = spans[t];
    gateway::Embedding m(vecs.at(b).size(), 0.0f);
    for (std::size_t i = b; i < e; ++i) {
      for (std::size_t d = 0; d < m.size(); ++d) m[d] += vecs[i][d];
    }
    for (auto& x : m) x /= static_cast<float>(e - b);
    return m;
  };
  std::vector<double> out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    out.push_back(std::clamp(corpus::cosine(pooled(i), pooled(candidates.size() + i)), -1.0, 1.0));
  }
  return out;
}

ExternalScores::ExternalScores(const std::filesystem::path& path) {
  const auto j = read_json_file(path);
  try {
    scorer_id_ = j.at("scorer_id").get<std::string>();
    scores_ = j.at("scores").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::vector<double> ExternalScores::score(const std::vector<std::string>& candidates,
                                          const std::vector<std::string>&) {
  if (scores_.size() != candidates.size()) {
    throw ValidationError(fmt::format("{}: {} scores for {} pairs", scorer_id_, scores_.size(), candidates.size()));
  }
  return scores_;
}

SemanticScores score_semantic(const std::vector<std::string>& candidates, const std::vector<std::string>& references,
                              SemanticScorer* primary, SemanticScorer* fallback) {
  if (candidates.size() != references.size()) {
    throw ValidationError(fmt::format("{} candidates for {} references", candidates.size(), references.size()));
  }
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (trim(candidates[i]).empty()) throw ValidationError(fmt::format("pair {}: empty candidate", i));
    if (trim(references[i]).empty()) throw ValidationError(fmt::format("pair {}: empty reference", i));
  }
  SemanticScores out;
  if (primary) {
    try {
      out.scores = primary->score(candidates, references);
      out.scorer_id = primary->id();
      return out;
    } catch (const std::exception& e) {
      out.fallback_reason = e.what();
      if (!fallback) throw ProviderError(fmt::format("scorer {} failed: {}", primary->id(), e.what()));
      spdlog::warn("scorer {} failed ({}); using {}", primary->id(), e.what(), fallback->id());
    }
  } else if (!fallback) {
    throw ProviderError("no semantic scorer available");
  } else {
    out.fallback_reason = "no primary scorer";
  }
  out.scores = fallback->score(candidates, references);
  out.scorer_id = fallback->id();
  out.fell_back = true;
  return out;
}

}  // namespace fincot::harness
