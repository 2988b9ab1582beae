#include "fincot/jury/borda.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "fincot/common/error.hpp"

namespace fincot::jury {

std::string_view criterion_name(Criterion c) {
  switch (c) {
    case Criterion::kAccuracy: return "Accuracy";
    case Criterion::kPlausibility: return "Plausibility";
    case Criterion::kRelevance: return "Relevance";
    case Criterion::kPhaseQuality: return "PhaseQuality";
  }
  return "?";
}

Criterion parse_criterion(std::string_view name) {
  for (Criterion c : {Criterion::kAccuracy, Criterion::kPlausibility, Criterion::kRelevance,
                      Criterion::kPhaseQuality}) {
    if (criterion_name(c) == name) return c;
  }
  throw ValidationError(fmt::format("unknown criterion '{}'", name));
}

int Ballot::rank_of(std::string_view candidate_id) const {
  for (std::size_t i = 0; i < candidate_ids.size(); ++i) {
    if (candidate_ids[i] == candidate_id) return ranks.at(i);
  }
  throw ValidationError(fmt::format("candidate '{}' not on ballot", candidate_id));
}

namespace {

bool is_bijection(const std::vector<int>& v, int lo) {
  std::vector<bool> seen(v.size(), false);
  for (int x : v) {
    const int i = x - lo;
    if (i < 0 || i >= static_cast<int>(v.size()) || seen[i]) return false;
    seen[i] = true;
  }
  return true;
}

}  // namespace

void Ballot::validate() const {
  const auto n = candidate_ids.size();
  if (n < 2) throw ValidationError("ballot needs at least 2 candidates");
  if (ranks.size() != n || permutation.size() != n) {
    throw ValidationError("ballot ranks/permutation size mismatch");
  }
  if (!is_bijection(ranks, 1)) throw ValidationError("ballot ranks are not a strict order");
  if (!is_bijection(permutation, 0)) throw ValidationError("ballot permutation is not a bijection");
  if (replicate_index < 0) throw ValidationError("negative replicate index");
  std::vector<std::string> ids = candidate_ids;
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw ValidationError("duplicate candidate id on ballot");
  }
}

json to_json(const Ballot& b) {
  json ranking = json::object();
  for (std::size_t i = 0; i < b.n(); ++i) ranking[b.candidate_ids[i]] = b.ranks[i];
  return json{{"query_id", b.query_id},
              {"judge_id", b.judge_id},
              {"replicate_index", b.replicate_index},
              {"criterion", criterion_name(b.criterion)},
              {"candidate_ids", b.candidate_ids},
              {"permutation", b.permutation},
              {"ranking", ranking},
              {"raw_reply", b.raw_reply}};
}

Ballot ballot_from_json(const json& j) {
  try {
    Ballot b;
    b.query_id = j.at("query_id").get<std::string>();
    b.judge_id = j.at("judge_id").get<std::string>();
    b.replicate_index = j.at("replicate_index").get<int>();
    b.criterion = parse_criterion(j.at("criterion").get<std::string>());
    b.candidate_ids = j.at("candidate_ids").get<std::vector<std::string>>();
    b.permutation = j.at("permutation").get<std::vector<int>>();
    const auto& ranking = j.at("ranking");
    for (const auto& id : b.candidate_ids) b.ranks.push_back(ranking.at(id).get<int>());
    if (ranking.size() != b.candidate_ids.size()) {
      throw ValidationError("ranking lists ids outside candidate_ids");
    }
    b.raw_reply = j.value("raw_reply", std::string());
    b.validate();
    return b;
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("bad ballot: {}", e.what()));
  }
}

int borda_points(int n, int r) {
  if (n < 1 || r < 1 || r > n) {
    throw ValidationError(fmt::format("rank {} out of range for n={}", r, n));
  }
  return n - r;
}

double BordaSummary::mean_of(std::string_view candidate_id) const {
  for (std::size_t i = 0; i < candidate_ids.size(); ++i) {
    if (candidate_ids[i] == candidate_id) return mean_points[i];
  }
  throw ValidationError(fmt::format("candidate '{}' not in summary", candidate_id));
}

json to_json(const BordaSummary& s) {
  json means = json::object();
  for (std::size_t i = 0; i < s.candidate_ids.size(); ++i) means[s.candidate_ids[i]] = s.mean_points[i];
  json judges = json::object();
  for (const auto& [judge, v] : s.per_judge) {
    json m = json::object();
    for (std::size_t i = 0; i < s.candidate_ids.size(); ++i) m[s.candidate_ids[i]] = v[i];
    judges[judge] = {{"mean_points", m}, {"n_ballots", s.ballots_per_judge.at(judge)}};
  }
  return json{{"criterion", criterion_name(s.criterion)},
              {"mean_points", means},
              {"n_ballots", s.n_ballots},
              {"per_judge", judges}};
}

BordaSummary aggregate(const std::vector<Ballot>& ballots) {
  if (ballots.empty()) throw ValidationError("aggregate: empty ballot set");
  BordaSummary s;
  s.criterion = ballots.front().criterion;
  s.candidate_ids = ballots.front().candidate_ids;
  const std::size_t n = s.candidate_ids.size();
  std::vector<std::string> sorted_ids = s.candidate_ids;
  std::sort(sorted_ids.begin(), sorted_ids.end());

  // Integer point sums are exact, so sums do not depend on ballot order.
  std::map<std::string, std::vector<long long>> sums;
  for (const auto& b : ballots) {
    b.validate();
    if (b.criterion != s.criterion) throw ValidationError("aggregate: mixed criteria");
    std::vector<std::string> ids = b.candidate_ids;
    std::sort(ids.begin(), ids.end());
    if (ids != sorted_ids) throw ValidationError("aggregate: ballots rank different candidate sets");
    auto& acc = sums[b.judge_id];
    acc.resize(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      acc[i] += borda_points(static_cast<int>(n), b.rank_of(s.candidate_ids[i]));
    }
    ++s.ballots_per_judge[b.judge_id];
  }
  s.n_ballots = ballots.size();
  s.mean_points.assign(n, 0.0);
  for (const auto& [judge, acc] : sums) {
    const double count = static_cast<double>(s.ballots_per_judge[judge]);
    std::vector<double> means(n);
    for (std::size_t i = 0; i < n; ++i) {
      means[i] = static_cast<double>(acc[i]) / count;
      s.mean_points[i] += means[i];
    }
    s.per_judge[judge] = std::move(means);
  }
  for (double& m : s.mean_points) m /= static_cast<double>(sums.size());
  return s;
}

std::size_t select_best(const std::vector<double>& mean_points) {
  if (mean_points.empty()) throw ValidationError("select_best: no candidates");
  std::size_t best = 0;
  for (std::size_t i = 1; i < mean_points.size(); ++i) {
    if (mean_points[i] > mean_points[best] + kTieTolerance) best = i;
  }
  return best;
}

std::size_t select_best(const BordaSummary& summary) { return select_best(summary.mean_points); }

double efficiency(double mean_borda, double params_billions) {
  if (!(params_billions > 0.0) || !std::isfinite(params_billions)) {
    throw ValidationError(fmt::format("parameter count must be positive, got {}", params_billions));
  }
  return mean_borda / params_billions;
}

}  // namespace fincot::jury
