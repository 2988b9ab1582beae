#include "fincot/knowledge/rerank.hpp"

#include <cmath>
#include <set>

#include <fmt/core.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include "fincot/common/error.hpp"
#include "fincot/common/text.hpp"
#include "fincot/gateway/backend.hpp"
#include "fincot/gateway/remote_backend.hpp"

namespace fincot::knowledge {

double LexicalReranker::overlap(std::string_view query, std::string_view passage) {
  const auto q_terms = lexical_terms(query);
  const std::set<std::string> q(q_terms.begin(), q_terms.end());
  if (q.empty()) return 0.0;
  const auto c_terms = lexical_terms(passage);
  const std::set<std::string> c(c_terms.begin(), c_terms.end());
  std::size_t hit = 0;
  for (const auto& t : q) hit += c.count(t);
  return static_cast<double>(hit) / static_cast<double>(q.size());
}

std::vector<double> LexicalReranker::score(std::string_view query, const std::vector<std::string>& passages) {
  std::vector<double> out;
  out.reserve(passages.size());
  for (const auto& p : passages) out.push_back(overlap(query, p));
  return out;
}

RemoteReranker::RemoteReranker(std::string base_url, std::chrono::seconds timeout)
    : base_url_(std::move(base_url)), timeout_(timeout) {}

std::string RemoteReranker::id() const {
  return model_id_.empty() ? "remote:" + base_url_ : "remote:" + model_id_;
}

namespace {

std::unique_ptr<httplib::Client> client_for(const std::string& base_url, std::chrono::seconds timeout,
                                            std::string* prefix) {
  const auto [origin, path] = gateway::split_endpoint_url(base_url);
  *prefix = path;
  auto cli = std::make_unique<httplib::Client>(origin);
  cli->set_connection_timeout(timeout);
  cli->set_read_timeout(timeout);
  cli->set_write_timeout(timeout);
  return cli;
}

}  // namespace

std::optional<std::string> RemoteReranker::health() const {
  std::string prefix;
  auto cli = client_for(base_url_, timeout_, &prefix);
  auto res = cli->Get(prefix + "/health");
  if (!res || res->status != 200) return std::nullopt;
  const auto j = json::parse(res->body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  return j.value("model_id", std::string{});
}

std::vector<double> RemoteReranker::score(std::string_view query, const std::vector<std::string>& passages) {
  using gateway::BackendError;
  using gateway::FailureKind;
  std::vector<double> out;
  out.reserve(passages.size());
  std::string prefix;
  auto cli = client_for(base_url_, timeout_, &prefix);
  for (std::size_t start = 0; start < passages.size(); start += kMaxPassagesPerRequest) {
    const auto end = std::min(passages.size(), start + kMaxPassagesPerRequest);
    const json body{{"query", std::string(query)},
                    {"passages", std::vector<std::string>(passages.begin() + static_cast<std::ptrdiff_t>(start),
                                                          passages.begin() + static_cast<std::ptrdiff_t>(end))}};
    auto res = cli->Post(prefix + "/score", body.dump(), "application/json");
    if (!res) {
      throw BackendError(FailureKind::kTransport,
                         fmt::format("rerank service unreachable: {}", httplib::to_string(res.error())));
    }
    if (res->status != 200) {
      throw BackendError(gateway::classify_http_status(res->status),
                         fmt::format("rerank service returned HTTP {}", res->status), res->status);
    }
    const auto j = json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.contains("scores") || !j.at("scores").is_array() ||
        j.at("scores").size() != end - start) {
      throw BackendError(FailureKind::kMalformed, "rerank reply has no aligned scores");
    }
    for (const auto& s : j.at("scores")) {
      if (!s.is_number() || !std::isfinite(s.get<double>())) {
        throw BackendError(FailureKind::kMalformed, "rerank reply has a non-finite score");
      }
      out.push_back(s.get<double>());
    }
    if (j.contains("model_id") && j.at("model_id").is_string()) model_id_ = j.at("model_id").get<std::string>();
  }
  return out;
}

RerankResult rerank(std::string_view query, const std::vector<ScoredChunk>& candidates, std::size_t m,
                    Reranker& reranker) {
  if (m < 1) throw ValidationError("m must be >= 1");
  std::vector<std::string> passages;
  passages.reserve(candidates.size());
  for (const auto& c : candidates) passages.push_back(c.chunk->text);

  RerankResult result;
  std::vector<double> scores;
  try {
    scores = reranker.score(query, passages);
    if (scores.size() != passages.size()) throw Error("reranker returned a misaligned score list");
    result.reranker_id = reranker.id();
  } catch (const std::exception& e) {
    spdlog::warn("reranker {} failed ({}); falling back to lexical overlap", reranker.id(), e.what());
    LexicalReranker lexical;
    scores = lexical.score(query, passages);
    result.reranker_id = lexical.id();
    result.downgraded = true;
  }
  std::vector<ScoredChunk> scored;
  scored.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) scored.push_back({candidates[i].chunk, scores[i]});
  sort_scored(scored);
  if (scored.size() > m) scored.resize(m);
  result.kept = std::move(scored);
  return result;
}

}  // namespace fincot::knowledge
