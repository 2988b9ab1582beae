// fincot: command-line driver for ingest, index, generate, judge, evaluate,
// cost and stats. Exit codes: 0 ok, 1 unexpected, 2 validation, 3 provider,
// 4 misaligned inputs.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "fincot/common/error.hpp"
#include "fincot/common/jsonl.hpp"
#include "fincot/common/text.hpp"
#include "fincot/corpus/ingest.hpp"
#include "fincot/cot/engine.hpp"
#include "fincot/harness/config.hpp"
#include "fincot/harness/cost.hpp"
#include "fincot/harness/dataset.hpp"
#include "fincot/harness/evaluate.hpp"
#include "fincot/knowledge/index.hpp"

namespace fs = std::filesystem;
using namespace fincot;
using nlohmann::json;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
};

harness::RunConfig load_config(const Common& c, std::initializer_list<std::string_view> sections) {
  auto cfg = harness::load_run_config(c.config);
  if (c.seed) cfg.set_seed(*c.seed);
  cfg.require(sections);
  return cfg;
}

int cmd_ingest(const Common& c, const std::string& posts_path, const std::string& out,
               const std::string& decisions_path, const std::string& funnel_path) {
  auto cfg = load_config(c, {"ingest"});
  const auto posts = corpus::raw_posts_from_json(read_jsonl(posts_path));
  auto gw = harness::make_gateway(cfg);
  const auto templates = harness::make_templates(cfg);
  const auto res = corpus::ingest(*gw, templates, posts, *cfg.ingest);
  std::vector<json> rows;
  for (const auto& q : res.queries) rows.push_back(corpus::to_json(q));
  write_jsonl(out, rows);
  if (!decisions_path.empty()) {
    std::vector<json> d;
    for (const auto& x : res.decisions) d.push_back(corpus::to_json(x));
    write_jsonl(decisions_path, d);
  }
  if (!funnel_path.empty()) write_text_file(funnel_path, corpus::to_json(res.funnel).dump(2) + "\n");
  std::cout << corpus::render_funnel(res.funnel);
  return 0;
}

int cmd_index_build(const Common& c, const std::string& out) {
  auto cfg = load_config(c, {"index"});
  const auto& ix = *cfg.index;
  auto chunks = knowledge::load_corpus_dir(ix.financial_dir, knowledge::CorpusTag::kFinancial, ix.max_chunk_tokens);
  auto behavioral = knowledge::load_corpus_dir(ix.behavioral_dir, knowledge::CorpusTag::kBehavioral, ix.max_chunk_tokens);
  chunks.insert(chunks.end(), behavioral.begin(), behavioral.end());
  auto gw = harness::make_gateway(cfg);
  knowledge::KnowledgeIndex index;
  index.build(*gw, ix.embedding_provider, std::move(chunks));
  index.save(out);
  fmt::print("indexed {} financial + {} behavioral chunks, dim {} -> {}\n", index.size(knowledge::CorpusTag::kFinancial),
             index.size(knowledge::CorpusTag::kBehavioral), index.dimension(), out);
  return 0;
}

int cmd_generate(const Common& c, const std::string& index_path, const std::string& queries_path,
                 const std::string& out, std::optional<std::size_t> candidates, const std::string& dataset_dir) {
  auto cfg = load_config(c, {"engine"});
  if (candidates) {
    cfg.engine->n_candidates = *candidates;
    cfg.engine->validate();
  }
  if (!fs::exists(index_path)) throw ValidationError(fmt::format("index not found: {}", index_path));
  const auto queries = corpus::load_queries(queries_path);
  const auto index = knowledge::KnowledgeIndex::load(index_path);
  auto gw = harness::make_gateway(cfg);
  if (!gw->has_provider(index.embedding_provider())) {
    throw ValidationError(fmt::format("index was built with provider '{}', not in this config", index.embedding_provider()));
  }
  auto reranker = harness::make_reranker(cfg);
  const auto templates = harness::make_templates(cfg);
  cot::CotEngine engine(*gw, templates, index, *reranker, *cfg.engine);
  const auto records = engine.generate_batch(queries, cfg.workers);

  std::vector<json> rows;
  std::vector<harness::DatasetRecord> dataset;
  std::size_t degraded = 0;
  for (const auto& r : records) {
    rows.push_back(cot::to_json(r));
    if (r.degraded) {
      ++degraded;
      spdlog::warn("{} degraded: {}", r.query.query_id, join(r.degraded_reasons, "; "));
      continue;
    }
    cot::validate_record(r);
    dataset.push_back(harness::make_dataset_record(r, templates, *cfg.engine, index.embedding_provider()));
  }
  write_jsonl(out, rows);
  fmt::print("{} records ({} degraded) -> {}\n", records.size(), degraded, out);
  if (!dataset_dir.empty()) {
    const auto res = harness::emit_dataset(dataset, dataset_dir, cfg.dataset);
    fmt::print("dataset: {} train, {} validation -> {}\n", res.n_train, res.n_validation, dataset_dir);
    std::cout << harness::render_stats(res.stats);
  }
  return 0;
}

// Task rows: {query_id, query, criterion, scope?, search_results?,
//             candidates: [{id, text}, ...]}
int cmd_judge(const Common& c, const std::string& tasks_path, const std::string& out, const std::string& section) {
  if (section != "engine" && section != "evaluation") throw ValidationError("--jury must be engine or evaluation");
  auto cfg = load_config(c, {section});
  const auto& jc = section == "engine" ? cfg.engine->jury : cfg.evaluation->jury;
  std::vector<jury::RankTask> tasks;
  for (const auto& j : read_jsonl(tasks_path)) {
    try {
      jury::RankTask t;
      t.query_id = j.at("query_id").get<std::string>();
      t.query_text = j.at("query").get<std::string>();
      t.criterion = jury::parse_criterion(j.at("criterion").get<std::string>());
      t.scope = j.value("scope", std::string());
      t.search_results = j.value("search_results", std::string());
      for (const auto& cand : j.at("candidates")) {
        t.candidate_ids.push_back(cand.at("id").get<std::string>());
        t.candidate_texts.push_back(cand.at("text").get<std::string>());
      }
      t.identifiers = t.candidate_ids;
      tasks.push_back(std::move(t));
    } catch (const json::exception& e) {
      throw ValidationError(fmt::format("{}: {}", tasks_path, e.what()));
    }
  }
  auto gw = harness::make_gateway(cfg);
  jury::Jury jry(*gw, jc);
  const auto results = jry.rank_all(tasks);
  std::vector<json> rows;
  for (std::size_t i = 0; i < results.size(); ++i) {
    json ballots = json::array();
    for (const auto& b : results[i].ballots) ballots.push_back(jury::to_json(b));
    json discarded = json::array();
    for (const auto& a : results[i].discarded) discarded.push_back(jury::to_json(a));
    const auto& s = results[i].summary;
    rows.push_back({{"query_id", tasks[i].query_id},
                    {"criterion", jury::criterion_name(tasks[i].criterion)},
                    {"summary", s ? jury::to_json(*s) : json(nullptr)},
                    {"best", s ? json(s->candidate_ids[jury::select_best(*s)]) : json(nullptr)},
                    {"ballots", ballots},
                    {"discarded", discarded}});
    fmt::print("{} {}: {}\n", tasks[i].query_id, jury::criterion_name(tasks[i].criterion),
               s ? s->candidate_ids[jury::select_best(*s)] : std::string("no verdict"));
  }
  write_jsonl(out, rows);
  return 0;
}

int cmd_evaluate(const Common& c, const std::string& responses, const std::string& queries, const std::string& out,
                 bool normalized, const std::string& ballots_path, const std::string& cost_path) {
  auto cfg = load_config(c, {"evaluation"});
  auto options = cfg.evaluation->options;
  if (normalized) options.normalized = true;
  std::optional<fs::path> qp;
  if (!queries.empty()) qp = queries;
  const auto in = harness::load_eval_inputs(responses, qp);
  std::vector<harness::CostRow> cost;
  if (!cost_path.empty()) cost = harness::cost_rows_from_json(read_json_file(cost_path));

  harness::EvaluationRun run;
  if (!ballots_path.empty()) {
    for (const auto& j : read_jsonl(ballots_path)) run.ballots.push_back(jury::ballot_from_json(j));
    run.report = harness::build_report(in, run.ballots, options);
  } else {
    auto gw = harness::make_gateway(cfg);
    run = harness::evaluate(*gw, cfg.evaluation->jury, in, options);
  }
  run.report.cost = cost;
  harness::write_evaluation(run, out);
  std::cout << harness::render_report(run.report);
  return 0;
}

int cmd_cost(const std::string& rows_path, std::optional<int> n, std::optional<int> conc, const std::string& csv,
             const std::string& json_out) {
  auto j = read_json_file(rows_path);
  if (n) j["n_queries"] = *n;
  if (conc) j["concurrency"] = *conc;
  if (n || conc) {
    for (auto& r : j.at("rows")) {
      if (n) r.erase("n_queries");
      if (conc) r.erase("concurrency");
    }
  }
  const auto rows = harness::cost_rows_from_json(j);
  if (!csv.empty()) write_text_file(csv, harness::cost_csv(rows));
  if (!json_out.empty()) write_text_file(json_out, harness::to_json(rows).dump(2) + "\n");
  std::cout << harness::render_cost_table(rows);
  return 0;
}

int cmd_stats(const std::string& dataset, const std::string& format) {
  auto records = harness::load_dataset(dataset);
  for (const auto& r : records) harness::validate_dataset_record(r);
  const auto t = harness::compute_stats(records);
  if (format == "json") {
    std::cout << harness::to_json(t).dump(2) << "\n";
  } else if (format == "csv") {
    std::cout << harness::stats_csv(t);
  } else {
    std::cout << harness::render_stats(t);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("fincot");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Chain-of-thought dataset synthesis and jury evaluation"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.config, "Run config JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "Override the config seed");
  };

  std::string posts, out, decisions, funnel, index_path, queries, dataset_dir, tasks, responses, ballots, cost_path,
      rows, csv, json_out, dataset, format = "text", jury_section = "evaluation";
  std::optional<std::size_t> candidates;
  std::optional<int> n_queries, concurrency;
  bool normalized = false;

  auto* ingest = app.add_subcommand("ingest", "Scrub, classify, dedup and sample raw posts into queries");
  add_common(ingest);
  ingest->add_option("--posts", posts, "Raw posts JSONL")->required()->check(CLI::ExistingFile);
  ingest->add_option("-o,--out", out, "Queries JSONL")->required();
  ingest->add_option("--decisions", decisions, "Per-post classification log");
  ingest->add_option("--funnel", funnel, "Funnel counts JSON");

  auto* index = app.add_subcommand("index", "Knowledge index");
  index->require_subcommand(1);
  auto* index_build = index->add_subcommand("build", "Chunk and embed both corpora");
  add_common(index_build);
  index_build->add_option("-o,--out", out, "Index file")->required();

  auto* generate = app.add_subcommand("generate", "Four-phase chain of thought for each query");
  add_common(generate);
  generate->add_option("--index", index_path, "Index file")->required();
  generate->add_option("--queries", queries, "Queries JSONL")->required()->check(CLI::ExistingFile);
  generate->add_option("-o,--out", out, "Records JSONL")->required();
  generate->add_option("--candidates", candidates, "Candidates per phase");
  generate->add_option("--dataset-dir", dataset_dir, "Also emit the dataset, split and stats here");

  auto* judge = app.add_subcommand("judge", "Rank candidate sets with a jury");
  add_common(judge);
  judge->add_option("--tasks", tasks, "Task JSONL")->required()->check(CLI::ExistingFile);
  judge->add_option("-o,--out", out, "Verdicts JSONL")->required();
  judge->add_option("--jury", jury_section, "Config section whose jury to use: engine or evaluation");

  auto* evaluate = app.add_subcommand("evaluate", "Jury evaluation over per-model response files");
  add_common(evaluate);
  evaluate->add_option("--responses", responses, "Directory of <model>.jsonl")->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("--queries", queries, "Queries JSONL with text and category")->check(CLI::ExistingFile);
  evaluate->add_option("-o,--out", out, "Report directory")->required();
  evaluate->add_flag("--normalized", normalized, "Borda / (n - 1) in score tables");
  evaluate->add_option("--ballots", ballots, "Rebuild the report from stored ballots")->check(CLI::ExistingFile);
  evaluate->add_option("--cost", cost_path, "Cost rows JSON to include")->check(CLI::ExistingFile);

  auto* cost = app.add_subcommand("cost", "Deployment time and cost table");
  cost->add_option("--rows", rows, "Cost rows JSON")->required()->check(CLI::ExistingFile);
  cost->add_option("--queries", n_queries, "Override n_queries");
  cost->add_option("--concurrency", concurrency, "Override concurrency");
  cost->add_option("--csv", csv, "Write CSV");
  cost->add_option("--json", json_out, "Write JSON");

  auto* stats = app.add_subcommand("stats", "Per-category statistics of an emitted dataset");
  stats->add_option("--dataset", dataset, "Dataset JSONL")->required()->check(CLI::ExistingFile);
  stats->add_option("--format", format, "text, csv or json")->check(CLI::IsMember({"text", "csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::kValidation);
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*ingest) return cmd_ingest(common, posts, out, decisions, funnel);
    if (*index_build) return cmd_index_build(common, out);
    if (*generate) return cmd_generate(common, index_path, queries, out, candidates, dataset_dir);
    if (*judge) return cmd_judge(common, tasks, out, jury_section);
    if (*evaluate) return cmd_evaluate(common, responses, queries, out, normalized, ballots, cost_path);
    if (*cost) return cmd_cost(rows, n_queries, concurrency, csv, json_out);
    if (*stats) return cmd_stats(dataset, format);
  } catch (const MisalignmentError& e) {
    spdlog::error("misaligned input: {}", e.what());
    return static_cast<int>(ExitCode::kMisalignment);
  } catch (const ValidationError& e) {
    spdlog::error("invalid: {}", e.what());
    return static_cast<int>(ExitCode::kValidation);
  } catch (const ProviderError& e) {
    spdlog::error("provider failure: {}", e.what());
    return static_cast<int>(ExitCode::kProvider);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return static_cast<int>(ExitCode::kFailure);
  }
  return static_cast<int>(ExitCode::kFailure);
}
