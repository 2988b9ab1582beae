#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fincot/cot/engine.hpp"

namespace fincot::harness {

struct PhaseTrace {
  std::string phase;
  std::string candidate_id;
  std::string provider_id;
  std::string text;
  std::vector<std::string> candidate_ids;  // survivors, canonical order
  std::vector<double> mean_points;         // empty when not juried
  std::size_t chosen_index = 0;
  std::size_t n_ballots = 0;
};

struct Provenance {
  std::map<std::string, int> template_versions;
  std::vector<std::string> generators;
  std::vector<std::string> judges;  // judge_id=provider_id
  std::string embedding_provider;
  std::string condense_provider;
  std::string reranker_id;
  std::uint64_t run_seed = 0;
  std::vector<PhaseTrace> phases;  // the four reasoning phases in order
};

struct DatasetRecord {
  std::string query_id;
  corpus::Category category = corpus::Category::kNotApplicable;
  std::string query_text;
  std::string assembled_cot;
  std::string final_response;
  cot::TokenCounts token_counts;
  Provenance provenance;
};

// Throws ValidationError for degraded records.
DatasetRecord make_dataset_record(const cot::CotRecord& r, const cot::TemplateSet& templates,
                                  const cot::EngineConfig& config, const std::string& embedding_provider);

nlohmann::json to_json(const DatasetRecord& r);
DatasetRecord dataset_record_from_json(const nlohmann::json& j);

// Throws ValidationError starting "record <id>:".
void validate_dataset_record(const DatasetRecord& r);

struct StatsRow {
  corpus::Category category = corpus::Category::kNotApplicable;
  std::size_t count = 0;
  double avg_query_tokens = 0.0;
  double avg_cot_tokens = 0.0;
  double avg_response_tokens = 0.0;
};

struct StatsTable {
  std::vector<StatsRow> rows;  // categories present, dataset table order
  std::size_t total_count = 0;
  double avg_query_tokens = 0.0;
  double avg_cot_tokens = 0.0;
  double avg_response_tokens = 0.0;
};

StatsTable compute_stats(const std::vector<DatasetRecord>& records);
nlohmann::json to_json(const StatsTable& t);
std::string stats_csv(const StatsTable& t);
std::string render_stats(const StatsTable& t);

// is_train[i] for each of n records. round(ratio * n) go to train, picked by
// a seeded shuffle.
std::vector<bool> split_assignment(std::size_t n, double train_ratio, std::uint64_t seed);

inline constexpr double kDefaultTrainRatio = 0.857;

struct EmitOptions {
  double train_ratio = kDefaultTrainRatio;
  std::uint64_t seed = 0;
};

struct EmitResult {
  StatsTable stats;
  std::size_t n_train = 0;
  std::size_t n_validation = 0;
};

// Writes dataset.jsonl, train.jsonl, validation.jsonl and stats.{json,csv,txt}
// into out_dir. Validates every record first; nothing is written on failure.
EmitResult emit_dataset(const std::vector<DatasetRecord>& records, const std::filesystem::path& out_dir,
                        const EmitOptions& options = {});

std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path);

}  // namespace fincot::harness
