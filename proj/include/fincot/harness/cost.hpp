#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace fincot::harness {

struct CostTotal {
  double hours = 0.0;
  double cost = 0.0;
};

// hours = n * s / (concurrency * 3600), cost = hours * rate. Unrounded.
CostTotal cost_total(double n_queries, double s_per_query, double concurrency, double endpoint_rate);

struct CostRow {
  std::string model_id;
  double size_gb = 0.0;
  double endpoint_rate = 0.0;  // per hour
  std::string gpu_label;
  double s_per_query = 0.0;
  int n_queries = 0;
  int concurrency = 4;
  double total_hours = 0.0;
  double total_cost = 0.0;
};

// Rows file: {"n_queries": 504, "concurrency": 4, "rows": [{"model_id", "size_gb",
// "endpoint_rate", "gpu_label", "s_per_query"}, ...]}. CLI flags may override
// n_queries and concurrency.
std::vector<CostRow> cost_rows_from_json(const nlohmann::json& j);
void fill_totals(CostRow& row);

nlohmann::json to_json(const std::vector<CostRow>& rows);
std::string cost_csv(const std::vector<CostRow>& rows);
// Aligned text, hours and money to 2 decimals.
std::string render_cost_table(const std::vector<CostRow>& rows);

}  // namespace fincot::harness
