#include "fincot/harness/cost.hpp"

#include <cmath>

#include <fmt/core.h>

#include "fincot/common/error.hpp"

namespace fincot::harness {

CostTotal cost_total(double n_queries, double s_per_query, double concurrency, double endpoint_rate) {
  if (!(n_queries >= 0) || !std::isfinite(n_queries)) throw ValidationError("n_queries must be >= 0");
  if (!(s_per_query > 0) || !std::isfinite(s_per_query)) throw ValidationError("s_per_query must be positive");
  if (!(concurrency > 0) || !std::isfinite(concurrency)) throw ValidationError("concurrency must be positive");
  if (!(endpoint_rate > 0) || !std::isfinite(endpoint_rate)) throw ValidationError("endpoint rate must be positive");
  CostTotal t;
  t.hours = n_queries * s_per_query / (concurrency * 3600.0);
  t.cost = t.hours * endpoint_rate;
  return t;
}

void fill_totals(CostRow& row) {
  const auto t = cost_total(row.n_queries, row.s_per_query, row.concurrency, row.endpoint_rate);
  row.total_hours = t.hours;
  row.total_cost = t.cost;
}

std::vector<CostRow> cost_rows_from_json(const nlohmann::json& j) {
  try {
    const int n = j.value("n_queries", 0);
    const int c = j.value("concurrency", 4);
    std::vector<CostRow> rows;
    for (const auto& r : j.at("rows")) {
      CostRow row;
      row.model_id = r.at("model_id").get<std::string>();
      row.size_gb = r.value("size_gb", 0.0);
      row.endpoint_rate = r.at("endpoint_rate").get<double>();
      row.gpu_label = r.value("gpu_label", std::string());
      row.s_per_query = r.at("s_per_query").get<double>();
      row.n_queries = r.value("n_queries", n);
      row.concurrency = r.value("concurrency", c);
      fill_totals(row);
      rows.push_back(std::move(row));
    }
    return rows;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("bad cost rows: {}", e.what()));
  }
}

nlohmann::json to_json(const std::vector<CostRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"model_id", r.model_id},
                   {"size_gb", r.size_gb},
                   {"endpoint_rate", r.endpoint_rate},
                   {"gpu_label", r.gpu_label},
                   {"s_per_query", r.s_per_query},
                   {"n_queries", r.n_queries},
                   {"concurrency", r.concurrency},
                   {"total_hours", r.total_hours},
                   {"total_cost", r.total_cost}});
  }
  return out;
}

static std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string cost_csv(const std::vector<CostRow>& rows) {
  std::string out = "model_id,size_gb,endpoint_rate,gpu_label,s_per_query,n_queries,concurrency,total_hours,total_cost\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{:.6f},{:.6f}\n", csv_field(r.model_id), r.size_gb, r.endpoint_rate,
                       csv_field(r.gpu_label), r.s_per_query, r.n_queries, r.concurrency, r.total_hours, r.total_cost);
  }
  return out;
}

std::string render_cost_table(const std::vector<CostRow>& rows) {
  std::size_t w = 5;
  for (const auto& r : rows) w = std::max(w, r.model_id.size());
  std::string out = fmt::format("{:<{}}  {:>9}  {:>8}  {:<8}  {:>9}  {:>8}  {:>8}\n", "Model", w, "Size (GB)", "$/h",
                                "GPU", "s/query", "Hours", "Cost ($)");
  for (const auto& r : rows) {
    out += fmt::format("{:<{}}  {:>9.1f}  {:>8.2f}  {:<8}  {:>9.2f}  {:>8.2f}  {:>8.2f}\n", r.model_id, w, r.size_gb,
                       r.endpoint_rate, r.gpu_label, r.s_per_query, r.total_hours, r.total_cost);
  }
  if (!rows.empty()) {
    out += fmt::format("({} queries, {} concurrent requests)\n", rows.front().n_queries, rows.front().concurrency);
  }
  return out;
}

}  // namespace fincot::harness
