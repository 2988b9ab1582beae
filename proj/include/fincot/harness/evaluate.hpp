#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fincot/corpus/types.hpp"
#include "fincot/harness/cost.hpp"
#include "fincot/jury/jury.hpp"

namespace fincot::harness {

struct EvalQuery {
  std::string query_id;
  std::string text;
  std::optional<corpus::Category> category;
};

struct EvalInputs {
  std::vector<EvalQuery> queries;
  std::vector<std::string> models;                  // sorted
  std::vector<std::vector<std::string>> responses;  // [model][query]
};

// One "<model_id>.jsonl" per model, rows {query_id, response[, query][, category]}.
// Query text and category come from `queries_path` when given, else from the
// rows. Every file must cover the same query ids; otherwise MisalignmentError
// naming the model and id. Query order is the queries file's, else sorted id.
EvalInputs load_eval_inputs(const std::filesystem::path& responses_dir,
                            const std::optional<std::filesystem::path>& queries_path = std::nullopt);
void check_aligned(const EvalInputs& in);

// One task per (query, criterion), candidates in model order.
std::vector<jury::RankTask> evaluation_tasks(const EvalInputs& in, const std::vector<jury::Criterion>& criteria);

struct EvalOptions {
  std::vector<jury::Criterion> criteria{jury::Criterion::kPlausibility, jury::Criterion::kAccuracy,
                                        jury::Criterion::kRelevance};
  bool normalized = false;             // Borda / (n - 1) in the score tables
  std::vector<std::string> judges_a;   // empty: the first judge seen
  std::vector<std::string> judges_b;   // empty: every other judge
  std::map<std::string, double> params_billions;
};

EvalOptions eval_options_from_json(const nlohmann::json& j);

struct ScoreCell {
  std::string model_id;
  std::string query_id;
  jury::Criterion criterion = jury::Criterion::kAccuracy;
  double mean_points = 0.0;  // raw Borda, two-stage mean
  std::size_t n_ballots = 0;
};

struct ModelScore {
  std::string model_id;
  std::string group;  // "All" or a category label
  std::vector<double> by_criterion;  // aligned with EvaluationReport::criteria
  double overall = 0.0;  // unweighted mean of the criterion means
  std::size_t n_queries = 0;
};

struct CorrelationRow {
  std::string metric;  // criterion name or "Overall"
  std::optional<double> tau;
  std::optional<double> rho;
  std::size_t n_queries = 0;  // queries with two non-constant score vectors
  std::size_t n_skipped = 0;
};

struct EfficiencyRow {
  std::string model_id;
  std::string group;
  double params_billions = 0.0;
  double mean_borda = 0.0;  // raw overall points
  double efficiency = 0.0;
};

struct EvaluationReport {
  std::vector<std::string> models;
  std::vector<std::string> criteria;
  std::vector<ScoreCell> cells;
  std::vector<ModelScore> scores;  // "All" first, then categories in table order
  bool normalized = false;
  std::vector<std::string> judges_a, judges_b;
  std::vector<CorrelationRow> correlation;  // criteria, then Overall
  std::vector<EfficiencyRow> efficiency;
  std::vector<CostRow> cost;
  std::size_t n_ballots = 0;
  std::size_t n_discarded = 0;
};

// Pure. Ballots are grouped by (query_id, criterion); groups with no ballots
// are an error because the report would be incomplete.
EvaluationReport build_report(const EvalInputs& in, const std::vector<jury::Ballot>& ballots,
                              const EvalOptions& options, std::size_t n_discarded = 0);

struct EvaluationRun {
  EvaluationReport report;
  std::vector<jury::Ballot> ballots;
  std::vector<jury::AuditEntry> discarded;
};

EvaluationRun evaluate(gateway::Gateway& gw, const jury::JuryConfig& jury, const EvalInputs& in,
                       const EvalOptions& options);

nlohmann::json to_json(const EvaluationReport& r);
std::string scores_csv(const EvaluationReport& r);
std::string correlation_csv(const EvaluationReport& r);
std::string efficiency_csv(const EvaluationReport& r);
std::string render_scores(const EvaluationReport& r);
// Metric / Kendall's tau / Spearman's rho, three criteria, rule, Overall.
std::string render_correlation(const EvaluationReport& r);
std::string render_efficiency(const EvaluationReport& r);
std::string render_report(const EvaluationReport& r);

// report.{json,txt}, scores.csv, correlation.{csv,txt}, efficiency.csv,
// cost.csv when present, plus ballots.jsonl and discarded.jsonl.
void write_evaluation(const EvaluationRun& run, const std::filesystem::path& out_dir);

}  // namespace fincot::harness
