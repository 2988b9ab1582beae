#include "fincot/harness/dataset.hpp"

#include <cmath>
#include <numeric>

#include <fmt/core.h>

#include "fincot/common/error.hpp"
#include "fincot/common/jsonl.hpp"
#include "fincot/common/rng.hpp"
#include "fincot/common/text.hpp"

namespace fincot::harness {

using nlohmann::json;

DatasetRecord make_dataset_record(const cot::CotRecord& r, const cot::TemplateSet& templates,
                                  const cot::EngineConfig& config, const std::string& embedding_provider) {
  if (r.degraded) {
    throw ValidationError(fmt::format("record {}: degraded ({})", r.query.query_id, join(r.degraded_reasons, "; ")));
  }
  DatasetRecord d;
  d.query_id = r.query.query_id;
  d.category = r.query.category;
  d.query_text = r.query.text;
  d.assembled_cot = r.assembled_cot;
  d.final_response = r.final_response;
  d.token_counts = r.token_counts;
  auto& p = d.provenance;
  p.template_versions = templates.versions();
  p.generators = config.generators;
  for (const auto& j : config.jury.judges) p.judges.push_back(j.judge_id + "=" + j.provider_id);
  p.embedding_provider = embedding_provider;
  p.condense_provider = config.condense_provider;
  p.reranker_id = r.context.reranker_id;
  p.run_seed = config.run_seed;
  for (const auto& po : r.phase_outputs) {
    PhaseTrace t;
    t.phase = std::string(cot::phase_name(po.phase));
    t.candidate_id = po.chosen().candidate_id;
    t.provider_id = po.chosen().provider_id;
    t.text = po.chosen().text;
    for (const auto& c : po.candidates) t.candidate_ids.push_back(c.candidate_id);
    if (po.summary) {
      t.mean_points = po.summary->mean_points;
      t.n_ballots = po.summary->n_ballots;
    }
    t.chosen_index = po.chosen_index;
    p.phases.push_back(std::move(t));
  }
  return d;
}

json to_json(const DatasetRecord& r) {
  json phases = json::array();
  for (const auto& t : r.provenance.phases) {
    phases.push_back({{"phase", t.phase},
                      {"candidate_id", t.candidate_id},
                      {"provider_id", t.provider_id},
                      {"text", t.text},
                      {"candidate_ids", t.candidate_ids},
                      {"mean_points", t.mean_points},
                      {"chosen_index", t.chosen_index},
                      {"n_ballots", t.n_ballots}});
  }
  const auto& p = r.provenance;
  return {{"query_id", r.query_id},
          {"category", corpus::category_label(r.category)},
          {"query_text", r.query_text},
          {"assembled_cot", r.assembled_cot},
          {"final_response", r.final_response},
          {"token_counts",
           {{"query", r.token_counts.query}, {"cot", r.token_counts.cot}, {"response", r.token_counts.response}}},
          {"provenance",
           {{"template_versions", p.template_versions},
            {"generators", p.generators},
            {"judges", p.judges},
            {"embedding_provider", p.embedding_provider},
            {"condense_provider", p.condense_provider},
            {"reranker_id", p.reranker_id},
            {"run_seed", p.run_seed},
            {"phases", phases}}}};
}

DatasetRecord dataset_record_from_json(const json& j) {
  DatasetRecord r;
  try {
    r.query_id = j.at("query_id").get<std::string>();
    r.category = corpus::parse_category(j.at("category").get<std::string>());
    r.query_text = j.at("query_text").get<std::string>();
    r.assembled_cot = j.at("assembled_cot").get<std::string>();
    r.final_response = j.at("final_response").get<std::string>();
    const auto& tc = j.at("token_counts");
    r.token_counts.query = tc.at("query").get<std::size_t>();
    r.token_counts.cot = tc.at("cot").get<std::size_t>();
    r.token_counts.response = tc.at("response").get<std::size_t>();
    const auto& p = j.at("provenance");
    auto& out = r.provenance;
    out.template_versions = p.at("template_versions").get<std::map<std::string, int>>();
    out.generators = p.at("generators").get<std::vector<std::string>>();
    out.judges = p.at("judges").get<std::vector<std::string>>();
    out.embedding_provider = p.at("embedding_provider").get<std::string>();
    out.condense_provider = p.at("condense_provider").get<std::string>();
    out.reranker_id = p.at("reranker_id").get<std::string>();
    out.run_seed = p.at("run_seed").get<std::uint64_t>();
    for (const auto& t : p.at("phases")) {
      PhaseTrace pt;
      pt.phase = t.at("phase").get<std::string>();
      pt.candidate_id = t.at("candidate_id").get<std::string>();
      pt.provider_id = t.at("provider_id").get<std::string>();
      pt.text = t.at("text").get<std::string>();
      pt.candidate_ids = t.at("candidate_ids").get<std::vector<std::string>>();
      pt.mean_points = t.at("mean_points").get<std::vector<double>>();
      pt.chosen_index = t.at("chosen_index").get<std::size_t>();
      pt.n_ballots = t.at("n_ballots").get<std::size_t>();
      out.phases.push_back(std::move(pt));
    }
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("record {}: {}", r.query_id.empty() ? "?" : r.query_id, e.what()));
  }
  return r;
}

void validate_dataset_record(const DatasetRecord& r) {
  auto fail = [&](const std::string& why) { throw ValidationError(fmt::format("record {}: {}", r.query_id, why)); };
  if (r.query_id.empty()) throw ValidationError("record ?: empty query_id");
  if (r.category == corpus::Category::kNotApplicable) fail("category Not_Applicable");
  if (trim(r.query_text).empty()) fail("empty query_text");
  if (trim(r.final_response).empty()) fail("empty final_response");
  if (cot::has_phase_delimiter(r.final_response)) fail("phase delimiter in final_response");
  const auto& phases = r.provenance.phases;
  if (phases.size() != std::size(cot::kCotPhases)) fail(fmt::format("{} phases, want 4", phases.size()));
  std::string expected_cot;
  for (std::size_t i = 0; i < phases.size(); ++i) {
    const auto want = cot::phase_name(cot::kCotPhases[i]);
    const auto& t = phases[i];
    if (t.phase != want) fail(fmt::format("phase {} is {}, want {}", i, t.phase, want));
    if (t.chosen_index >= t.candidate_ids.size()) fail(fmt::format("{}: chosen_index out of range", t.phase));
    if (t.candidate_ids[t.chosen_index] != t.candidate_id) fail(fmt::format("{}: chosen id mismatch", t.phase));
    if (!t.mean_points.empty()) {
      if (t.mean_points.size() != t.candidate_ids.size()) fail(fmt::format("{}: mean_points size", t.phase));
      if (jury::select_best(t.mean_points) != t.chosen_index) fail(fmt::format("{}: chosen_index is not the Borda argmax", t.phase));
    } else if (t.candidate_ids.size() > 1) {
      fail(fmt::format("{}: several candidates but no jury verdict", t.phase));
    }
    if (i) expected_cot += "\n\n";
    expected_cot += cot::phase_delimiter(cot::kCotPhases[i]) + "\n" + std::string(trim(t.text));
  }
  if (expected_cot != r.assembled_cot) fail("assembled_cot does not match phase texts");
  if (r.token_counts.query != whitespace_token_count(r.query_text) ||
      r.token_counts.cot != whitespace_token_count(r.assembled_cot) ||
      r.token_counts.response != whitespace_token_count(r.final_response)) {
    fail("token counts do not match the record text");
  }
}

StatsTable compute_stats(const std::vector<DatasetRecord>& records) {
  struct Acc {
    std::size_t n = 0;
    double q = 0, c = 0, r = 0;
  };
  std::map<corpus::Category, Acc> by;
  Acc all;
  for (const auto& rec : records) {
    for (Acc* a : {&by[rec.category], &all}) {
      ++a->n;
      a->q += static_cast<double>(rec.token_counts.query);
      a->c += static_cast<double>(rec.token_counts.cot);
      a->r += static_cast<double>(rec.token_counts.response);
    }
  }
  StatsTable t;
  for (auto c : corpus::kDatasetCategories) {
    auto it = by.find(c);
    if (it == by.end()) continue;
    const auto& a = it->second;
    const double n = static_cast<double>(a.n);
    t.rows.push_back({c, a.n, a.q / n, a.c / n, a.r / n});
  }
  t.total_count = all.n;
  if (all.n) {
    const double n = static_cast<double>(all.n);
    t.avg_query_tokens = all.q / n;
    t.avg_cot_tokens = all.c / n;
    t.avg_response_tokens = all.r / n;
  }
  return t;
}

json to_json(const StatsTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"category", corpus::category_label(r.category)},
                    {"count", r.count},
                    {"avg_query_tokens", r.avg_query_tokens},
                    {"avg_cot_tokens", r.avg_cot_tokens},
                    {"avg_response_tokens", r.avg_response_tokens}});
  }
  return {{"rows", rows},
          {"total",
           {{"count", t.total_count},
            {"avg_query_tokens", t.avg_query_tokens},
            {"avg_cot_tokens", t.avg_cot_tokens},
            {"avg_response_tokens", t.avg_response_tokens}}}};
}

static std::string quoted(std::string_view s) {
  return "\"" + replace_all(std::string(s), "\"", "\"\"") + "\"";
}

std::string stats_csv(const StatsTable& t) {
  std::string out = "category,description,count,avg_query_tokens,avg_cot_tokens,avg_response_tokens\n";
  for (const auto& r : t.rows) {
    out += fmt::format("{},{},{},{:.6f},{:.6f},{:.6f}\n", quoted(corpus::category_label(r.category)),
                       quoted(corpus::category_scope(r.category)), r.count, r.avg_query_tokens, r.avg_cot_tokens,
                       r.avg_response_tokens);
  }
  if (!t.rows.empty()) {
    out += fmt::format("Total,,{},{:.6f},{:.6f},{:.6f}\n", t.total_count, t.avg_query_tokens, t.avg_cot_tokens,
                       t.avg_response_tokens);
  }
  return out;
}

std::string render_stats(const StatsTable& t) {
  if (t.rows.empty()) return "(no records)\n";
  std::size_t wc = 8, wd = 11;
  for (const auto& r : t.rows) {
    wc = std::max(wc, corpus::category_label(r.category).size());
    wd = std::max(wd, corpus::category_scope(r.category).size());
  }
  auto line = [&](std::string_view c, std::string_view d, std::string n, std::string q, std::string co, std::string re) {
    return fmt::format("{:<{}}  {:<{}}  {:>6}  {:>17}  {:>15}  {:>20}\n", c, wc, d, wd, n, q, co, re);
  };
  std::string out = line("Category", "Description", "Count", "Avg. Query Tokens", "Avg. CoT Tokens",
                         "Avg. Response Tokens");
  for (const auto& r : t.rows) {
    out += line(corpus::category_label(r.category), corpus::category_scope(r.category), std::to_string(r.count),
                fmt::format("{:.2f}", r.avg_query_tokens), fmt::format("{:.2f}", r.avg_cot_tokens),
                fmt::format("{:.2f}", r.avg_response_tokens));
  }
  out += line("Total", "", std::to_string(t.total_count), fmt::format("{:.2f}", t.avg_query_tokens),
              fmt::format("{:.2f}", t.avg_cot_tokens), fmt::format("{:.2f}", t.avg_response_tokens));
  return out;
}

std::vector<bool> split_assignment(std::size_t n, double train_ratio, std::uint64_t seed) {
  if (!(train_ratio > 0.0 && train_ratio <= 1.0)) throw ValidationError("train ratio must be in (0, 1]");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  const auto n_train = static_cast<std::size_t>(std::llround(train_ratio * static_cast<double>(n)));
  std::vector<bool> is_train(n, false);
  for (std::size_t i = 0; i < n_train; ++i) is_train[order[i]] = true;
  return is_train;
}

EmitResult emit_dataset(const std::vector<DatasetRecord>& records, const std::filesystem::path& out_dir,
                        const EmitOptions& options) {
  for (const auto& r : records) validate_dataset_record(r);
  const auto is_train = split_assignment(records.size(), options.train_ratio, options.seed);
  std::vector<json> all, train, val;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto j = to_json(records[i]);
    (is_train[i] ? train : val).push_back(j);
    all.push_back(std::move(j));
  }
  EmitResult res;
  res.stats = compute_stats(records);
  res.n_train = train.size();
  res.n_validation = val.size();
  std::filesystem::create_directories(out_dir);
  write_jsonl(out_dir / "dataset.jsonl", all);
  write_jsonl(out_dir / "train.jsonl", train);
  write_jsonl(out_dir / "validation.jsonl", val);
  write_text_file(out_dir / "stats.json", to_json(res.stats).dump(2) + "\n");
  write_text_file(out_dir / "stats.csv", stats_csv(res.stats));
  write_text_file(out_dir / "stats.txt", render_stats(res.stats));
  return res;
}

std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path) {
  std::vector<DatasetRecord> out;
  for (const auto& j : read_jsonl(path)) out.push_back(dataset_record_from_json(j));
  return out;
}

}  // namespace fincot::harness
