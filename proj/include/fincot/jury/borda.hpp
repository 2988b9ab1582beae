#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace fincot::jury {

using json = nlohmann::json;

enum class Criterion { kAccuracy, kPlausibility, kRelevance, kPhaseQuality };

inline constexpr Criterion kEvaluationCriteria[] = {Criterion::kAccuracy, Criterion::kPlausibility,
                                                    Criterion::kRelevance};

std::string_view criterion_name(Criterion c);
Criterion parse_criterion(std::string_view name);

// One judge's listwise ranking of one candidate set.
struct Ballot {
  std::string query_id;
  std::string judge_id;
  int replicate_index = 0;
  Criterion criterion = Criterion::kPhaseQuality;
  // True candidate ids in canonical order.
  std::vector<std::string> candidate_ids;
  // permutation[pos] = canonical index shown at presented position pos.
  std::vector<int> permutation;
  // ranks[i] = rank of candidate_ids[i], 1 is best.
  std::vector<int> ranks;
  std::string raw_reply;

  std::size_t n() const { return candidate_ids.size(); }
  int rank_of(std::string_view candidate_id) const;
  // Throws ValidationError unless ranks and permutation are bijections.
  void validate() const;
};

json to_json(const Ballot& b);
Ballot ballot_from_json(const json& j);

// b = n - r
int borda_points(int n, int r);

struct BordaSummary {
  Criterion criterion = Criterion::kPhaseQuality;
  std::vector<std::string> candidate_ids;
  std::vector<double> mean_points;
  std::size_t n_ballots = 0;
  // judge id -> per-candidate mean over that judge's replicates
  std::map<std::string, std::vector<double>> per_judge;
  std::map<std::string, std::size_t> ballots_per_judge;

  double mean_of(std::string_view candidate_id) const;
};

json to_json(const BordaSummary& s);

// Mean over each judge's replicates, then mean over judges. Ballots may list
// the candidates in any order; the summary follows the first ballot's order.
BordaSummary aggregate(const std::vector<Ballot>& ballots);

// Argmax of mean points. Means within kTieTolerance count as tied and the
// earliest candidate in canonical order wins.
inline constexpr double kTieTolerance = 1e-9;
std::size_t select_best(const BordaSummary& summary);
std::size_t select_best(const std::vector<double>& mean_points);

// e = b / P
double efficiency(double mean_borda, double params_billions);

}  // namespace fincot::jury
