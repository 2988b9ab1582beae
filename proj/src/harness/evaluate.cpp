#include "fincot/harness/evaluate.hpp"

#include <algorithm>
#include <set>

#include <fmt/core.h>

#include "fincot/common/error.hpp"
#include "fincot/common/jsonl.hpp"
#include "fincot/jury/correlation.hpp"

namespace fincot::harness {

using nlohmann::json;
using jury::Ballot;
using jury::Criterion;

namespace {

struct Row {
  std::string response;
  std::optional<std::string> query;
  std::optional<corpus::Category> category;
};

std::map<std::string, Row> read_model_file(const std::filesystem::path& path) {
  std::map<std::string, Row> rows;
  const auto model = path.stem().string();
  for (const auto& j : read_jsonl(path)) {
    if (!j.is_object() || !j.contains("query_id") || !j.contains("response")) {
      throw ValidationError(fmt::format("{}: rows need query_id and response", path.string()));
    }
    const auto id = j.at("query_id").get<std::string>();
    Row r;
    r.response = j.at("response").get<std::string>();
    if (j.contains("query")) r.query = j.at("query").get<std::string>();
    if (j.contains("category")) r.category = corpus::parse_category(j.at("category").get<std::string>());
    if (!rows.emplace(id, std::move(r)).second) {
      throw ValidationError(fmt::format("model {}: duplicate query_id {}", model, id));
    }
  }
  return rows;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : "n/a"; }

}  // namespace

EvalInputs load_eval_inputs(const std::filesystem::path& responses_dir,
                            const std::optional<std::filesystem::path>& queries_path) {
  if (!std::filesystem::is_directory(responses_dir)) {
    throw ValidationError(fmt::format("responses dir not found: {}", responses_dir.string()));
  }
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(responses_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.size() < 2) throw ValidationError("evaluation needs at least two model response files");

  EvalInputs in;
  std::vector<std::map<std::string, Row>> per_model;
  for (const auto& f : files) {
    in.models.push_back(f.stem().string());
    per_model.push_back(read_model_file(f));
  }

  if (queries_path) {
    for (const auto& q : corpus::load_queries(*queries_path)) {
      std::optional<corpus::Category> cat;
      if (q.category != corpus::Category::kNotApplicable) cat = q.category;
      in.queries.push_back({q.query_id, q.text, cat});
    }
  } else {
    std::set<std::string> ids;
    for (const auto& m : per_model) {
      for (const auto& [id, _] : m) ids.insert(id);
    }
    for (const auto& id : ids) {
      EvalQuery q{id, "", std::nullopt};
      for (const auto& m : per_model) {
        auto it = m.find(id);
        if (it == m.end()) continue;
        if (q.text.empty() && it->second.query) q.text = *it->second.query;
        if (!q.category && it->second.category) q.category = it->second.category;
      }
      if (q.text.empty()) throw ValidationError(fmt::format("query {}: no query text in any model file", id));
      in.queries.push_back(std::move(q));
    }
  }

  std::set<std::string> wanted;
  for (const auto& q : in.queries) wanted.insert(q.query_id);
  for (std::size_t m = 0; m < per_model.size(); ++m) {
    for (const auto& q : in.queries) {
      if (!per_model[m].count(q.query_id)) {
        throw MisalignmentError(fmt::format("model {}: missing query_id {}", in.models[m], q.query_id));
      }
    }
    for (const auto& [id, _] : per_model[m]) {
      if (!wanted.count(id)) throw MisalignmentError(fmt::format("model {}: unexpected query_id {}", in.models[m], id));
    }
    std::vector<std::string> resp;
    for (const auto& q : in.queries) resp.push_back(per_model[m].at(q.query_id).response);
    in.responses.push_back(std::move(resp));
  }
  check_aligned(in);
  return in;
}

void check_aligned(const EvalInputs& in) {
  if (in.models.size() < 2) throw ValidationError("evaluation needs at least two models");
  if (in.queries.empty()) throw ValidationError("evaluation needs at least one query");
  if (in.responses.size() != in.models.size()) throw MisalignmentError("one response list per model required");
  std::set<std::string> seen;
  for (const auto& m : in.models) {
    if (!seen.insert(m).second) throw ValidationError(fmt::format("duplicate model {}", m));
  }
  for (std::size_t m = 0; m < in.models.size(); ++m) {
    if (in.responses[m].size() != in.queries.size()) {
      throw MisalignmentError(fmt::format("model {}: {} responses for {} queries", in.models[m],
                                          in.responses[m].size(), in.queries.size()));
    }
  }
}

std::vector<jury::RankTask> evaluation_tasks(const EvalInputs& in, const std::vector<Criterion>& criteria) {
  check_aligned(in);
  std::vector<jury::RankTask> tasks;
  for (std::size_t q = 0; q < in.queries.size(); ++q) {
    for (auto c : criteria) {
      jury::RankTask t;
      t.query_id = in.queries[q].query_id;
      t.query_text = in.queries[q].text;
      t.criterion = c;
      t.scope = "evaluation";
      t.candidate_ids = in.models;
      for (std::size_t m = 0; m < in.models.size(); ++m) t.candidate_texts.push_back(in.responses[m][q]);
      t.identifiers = in.models;
      tasks.push_back(std::move(t));
    }
  }
  return tasks;
}

EvalOptions eval_options_from_json(const json& j) {
  EvalOptions o;
  try {
    if (j.contains("criteria")) {
      o.criteria.clear();
      for (const auto& c : j.at("criteria")) o.criteria.push_back(jury::parse_criterion(c.get<std::string>()));
    }
    o.normalized = j.value("normalized", false);
    if (j.contains("judge_sets")) {
      o.judges_a = j.at("judge_sets").value("a", std::vector<std::string>{});
      o.judges_b = j.at("judge_sets").value("b", std::vector<std::string>{});
    }
    o.params_billions = j.value("params_billions", std::map<std::string, double>{});
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("bad evaluation options: {}", e.what()));
  }
  if (o.criteria.empty()) throw ValidationError("evaluation needs at least one criterion");
  for (const auto& [m, p] : o.params_billions) {
    if (!(p > 0)) throw ValidationError(fmt::format("params for {} must be positive", m));
  }
  return o;
}

EvaluationReport build_report(const EvalInputs& in, const std::vector<Ballot>& ballots, const EvalOptions& options,
                              std::size_t n_discarded) {
  check_aligned(in);
  const std::size_t nm = in.models.size();
  const std::size_t nq = in.queries.size();
  const auto& crits = options.criteria;

  std::map<std::pair<std::string, Criterion>, std::vector<const Ballot*>> groups;
  std::set<std::string> judge_ids;
  for (const auto& b : ballots) {
    groups[{b.query_id, b.criterion}].push_back(&b);
    judge_ids.insert(b.judge_id);
  }

  EvaluationReport r;
  r.models = in.models;
  for (auto c : crits) r.criteria.emplace_back(jury::criterion_name(c));
  r.normalized = options.normalized;
  r.n_ballots = ballots.size();
  r.n_discarded = n_discarded;

  auto summarize = [&](const std::vector<const Ballot*>& subset) {
    std::vector<Ballot> copy;
    for (const auto* b : subset) copy.push_back(*b);
    auto s = jury::aggregate(copy);
    if (s.candidate_ids != in.models) {
      throw MisalignmentError(
          fmt::format("ballots for {} do not rank the evaluated models", subset.front()->query_id));
    }
    return s;
  };

  // raw[q][c][m]
  std::vector<std::vector<std::vector<double>>> raw(nq, std::vector<std::vector<double>>(crits.size()));
  for (std::size_t q = 0; q < nq; ++q) {
    for (std::size_t c = 0; c < crits.size(); ++c) {
      auto it = groups.find({in.queries[q].query_id, crits[c]});
      if (it == groups.end()) {
        throw ValidationError(fmt::format("no ballots for query {} criterion {}", in.queries[q].query_id,
                                          jury::criterion_name(crits[c])));
      }
      const auto s = summarize(it->second);
      raw[q][c] = s.mean_points;
      for (std::size_t m = 0; m < nm; ++m) {
        r.cells.push_back({in.models[m], in.queries[q].query_id, crits[c], s.mean_points[m], s.n_ballots});
      }
    }
  }

  // Groups: All, then each category present.
  std::vector<std::pair<std::string, std::vector<std::size_t>>> query_groups;
  {
    std::vector<std::size_t> all(nq);
    for (std::size_t q = 0; q < nq; ++q) all[q] = q;
    query_groups.emplace_back("All", all);
    for (auto cat : corpus::kDatasetCategories) {
      std::vector<std::size_t> qs;
      for (std::size_t q = 0; q < nq; ++q) {
        if (in.queries[q].category == cat) qs.push_back(q);
      }
      if (!qs.empty()) query_groups.emplace_back(std::string(corpus::category_label(cat)), qs);
    }
  }
  const double scale = options.normalized ? 1.0 / static_cast<double>(nm - 1) : 1.0;
  for (const auto& [group, qs] : query_groups) {
    for (std::size_t m = 0; m < nm; ++m) {
      ModelScore ms;
      ms.model_id = in.models[m];
      ms.group = group;
      ms.n_queries = qs.size();
      std::vector<double> crit_means;
      for (std::size_t c = 0; c < crits.size(); ++c) {
        std::vector<double> v;
        for (auto q : qs) v.push_back(raw[q][c][m]);
        crit_means.push_back(mean(v));
        ms.by_criterion.push_back(crit_means.back() * scale);
      }
      ms.overall = mean(crit_means) * scale;
      r.scores.push_back(std::move(ms));
      auto p = options.params_billions.find(in.models[m]);
      if (p != options.params_billions.end()) {
        const double b = mean(crit_means);
        r.efficiency.push_back({in.models[m], group, p->second, b, jury::efficiency(b, p->second)});
      }
    }
  }

  // Judge agreement between two disjoint judge sets.
  r.judges_a = options.judges_a;
  r.judges_b = options.judges_b;
  if (r.judges_a.empty() && !judge_ids.empty()) r.judges_a = {*judge_ids.begin()};
  if (r.judges_b.empty()) {
    for (const auto& j : judge_ids) {
      if (std::find(r.judges_a.begin(), r.judges_a.end(), j) == r.judges_a.end()) r.judges_b.push_back(j);
    }
  }
  for (const auto& j : r.judges_a) {
    if (std::find(r.judges_b.begin(), r.judges_b.end(), j) != r.judges_b.end()) {
      throw ValidationError(fmt::format("judge {} is in both agreement sets", j));
    }
  }
  auto in_set = [](const std::vector<std::string>& set, const std::string& id) {
    return std::find(set.begin(), set.end(), id) != set.end();
  };
  auto set_means = [&](const std::vector<const Ballot*>& subset,
                       const std::vector<std::string>& set) -> std::optional<std::vector<double>> {
    std::vector<const Ballot*> keep;
    for (const auto* b : subset) {
      if (in_set(set, b->judge_id)) keep.push_back(b);
    }
    if (keep.empty()) return std::nullopt;
    return summarize(keep).mean_points;
  };

  struct Acc {
    double tau = 0, rho = 0;
    std::size_t used = 0, skipped = 0;
  };
  std::vector<Acc> acc(crits.size() + 1);
  auto add = [](Acc& a, const std::optional<std::vector<double>>& x, const std::optional<std::vector<double>>& y) {
    if (!x || !y || jury::is_constant(*x) || jury::is_constant(*y)) {
      ++a.skipped;
      return;
    }
    a.tau += jury::kendall_tau_b(*x, *y);
    a.rho += jury::spearman_rho_ties(*x, *y);
    ++a.used;
  };
  const bool have_sets = !r.judges_a.empty() && !r.judges_b.empty();
  for (std::size_t q = 0; have_sets && q < nq; ++q) {
    std::vector<double> oa(nm, 0.0), ob(nm, 0.0);
    bool overall_ok = true;
    for (std::size_t c = 0; c < crits.size(); ++c) {
      const auto& subset = groups.at({in.queries[q].query_id, crits[c]});
      const auto a = set_means(subset, r.judges_a);
      const auto b = set_means(subset, r.judges_b);
      add(acc[c], a, b);
      if (a && b) {
        for (std::size_t m = 0; m < nm; ++m) {
          oa[m] += (*a)[m] / static_cast<double>(crits.size());
          ob[m] += (*b)[m] / static_cast<double>(crits.size());
        }
      } else {
        overall_ok = false;
      }
    }
    add(acc.back(), overall_ok ? std::optional(oa) : std::nullopt, overall_ok ? std::optional(ob) : std::nullopt);
  }
  for (std::size_t i = 0; i <= crits.size(); ++i) {
    CorrelationRow row;
    row.metric = i < crits.size() ? std::string(jury::criterion_name(crits[i])) : "Overall";
    row.n_queries = acc[i].used;
    row.n_skipped = have_sets ? acc[i].skipped : nq;
    if (acc[i].used) {
      row.tau = acc[i].tau / static_cast<double>(acc[i].used);
      row.rho = acc[i].rho / static_cast<double>(acc[i].used);
    }
    r.correlation.push_back(std::move(row));
  }
  return r;
}

EvaluationRun evaluate(gateway::Gateway& gw, const jury::JuryConfig& config, const EvalInputs& in,
                       const EvalOptions& options) {
  auto c = config;
  for (const auto& m : in.models) c.identifiers.push_back(m);
  jury::Jury jury(gw, c);
  const auto tasks = evaluation_tasks(in, options.criteria);
  auto results = jury.rank_all(tasks);
  EvaluationRun run;
  for (auto& res : results) {
    for (auto& b : res.ballots) run.ballots.push_back(std::move(b));
    for (auto& a : res.discarded) run.discarded.push_back(std::move(a));
  }
  run.report = build_report(in, run.ballots, options, run.discarded.size());
  return run;
}

json to_json(const EvaluationReport& r) {
  json scores = json::array();
  for (const auto& s : r.scores) {
    json by = json::object();
    for (std::size_t i = 0; i < r.criteria.size(); ++i) by[r.criteria[i]] = s.by_criterion[i];
    scores.push_back(
        {{"model_id", s.model_id}, {"group", s.group}, {"by_criterion", by}, {"overall", s.overall}, {"n_queries", s.n_queries}});
  }
  json cells = json::array();
  for (const auto& c : r.cells) {
    cells.push_back({{"model_id", c.model_id},
                     {"query_id", c.query_id},
                     {"criterion", jury::criterion_name(c.criterion)},
                     {"mean_points", c.mean_points},
                     {"n_ballots", c.n_ballots}});
  }
  json corr = json::array();
  for (const auto& c : r.correlation) {
    corr.push_back({{"metric", c.metric},
                    {"kendall_tau", c.tau ? json(*c.tau) : json(nullptr)},
                    {"spearman_rho", c.rho ? json(*c.rho) : json(nullptr)},
                    {"n_queries", c.n_queries},
                    {"n_skipped", c.n_skipped}});
  }
  json eff = json::array();
  for (const auto& e : r.efficiency) {
    eff.push_back({{"model_id", e.model_id},
                   {"group", e.group},
                   {"params_billions", e.params_billions},
                   {"mean_borda", e.mean_borda},
                   {"efficiency", e.efficiency}});
  }
  return {{"models", r.models},
          {"criteria", r.criteria},
          {"normalized", r.normalized},
          {"judges_a", r.judges_a},
          {"judges_b", r.judges_b},
          {"n_ballots", r.n_ballots},
          {"n_discarded", r.n_discarded},
          {"scores", scores},
          {"cells", cells},
          {"correlation", corr},
          {"efficiency", eff},
          {"cost", to_json(r.cost)}};
}

std::string scores_csv(const EvaluationReport& r) {
  std::string out = "model_id,group";
  for (const auto& c : r.criteria) out += "," + c;
  out += ",overall,n_queries\n";
  for (const auto& s : r.scores) {
    out += fmt::format("{},\"{}\"", s.model_id, s.group);
    for (double v : s.by_criterion) out += fmt::format(",{:.6f}", v);
    out += fmt::format(",{:.6f},{}\n", s.overall, s.n_queries);
  }
  return out;
}

std::string correlation_csv(const EvaluationReport& r) {
  std::string out = "metric,kendall_tau,spearman_rho,n_queries,n_skipped\n";
  for (const auto& c : r.correlation) {
    out += fmt::format("{},{},{},{},{}\n", c.metric, c.tau ? fmt::format("{:.6f}", *c.tau) : "",
                       c.rho ? fmt::format("{:.6f}", *c.rho) : "", c.n_queries, c.n_skipped);
  }
  return out;
}

std::string efficiency_csv(const EvaluationReport& r) {
  std::string out = "model_id,group,params_billions,mean_borda,efficiency\n";
  for (const auto& e : r.efficiency) {
    out += fmt::format("{},\"{}\",{},{:.6f},{:.6f}\n", e.model_id, e.group, e.params_billions, e.mean_borda,
                       e.efficiency);
  }
  return out;
}

std::string render_scores(const EvaluationReport& r) {
  std::size_t wm = 5;
  for (const auto& m : r.models) wm = std::max(wm, m.size());
  std::string out;
  std::string group;
  for (const auto& s : r.scores) {
    if (s.group != group) {
      group = s.group;
      out += fmt::format("{}{} ({} queries, {} Borda)\n", out.empty() ? "" : "\n", group, s.n_queries,
                         r.normalized ? "normalized" : "mean");
      out += fmt::format("{:<{}}", "Model", wm);
      for (const auto& c : r.criteria) out += fmt::format("  {:>12}", c);
      out += fmt::format("  {:>8}\n", "Overall");
    }
    out += fmt::format("{:<{}}", s.model_id, wm);
    for (double v : s.by_criterion) out += fmt::format("  {:>12.4f}", v);
    out += fmt::format("  {:>8.4f}\n", s.overall);
  }
  return out;
}

std::string render_correlation(const EvaluationReport& r) {
  constexpr int w = 14;
  // τ and ρ are two bytes but one column.
  std::string out = fmt::format("{:<{}}  {:>13}  {:>13}\n", "Metric", w, "Kendall's τ", "Spearman's ρ");
  std::string rule(w + 2 + 12 + 2 + 12, '-');
  for (const auto& c : r.correlation) {
    if (c.metric == "Overall") out += rule + "\n";
    out += fmt::format("{:<{}}  {:>12}  {:>12}\n", c.metric, w, fmt_opt(c.tau), fmt_opt(c.rho));
  }
  return out;
}

std::string render_efficiency(const EvaluationReport& r) {
  if (r.efficiency.empty()) return "(no parameter counts given)\n";
  std::size_t wm = 5, wg = 5;
  for (const auto& e : r.efficiency) {
    wm = std::max(wm, e.model_id.size());
    wg = std::max(wg, e.group.size());
  }
  std::string out = fmt::format("{:<{}}  {:<{}}  {:>10}  {:>10}  {:>10}\n", "Model", wm, "Group", wg, "Params (B)",
                                "Mean Borda", "Efficiency");
  for (const auto& e : r.efficiency) {
    out += fmt::format("{:<{}}  {:<{}}  {:>10.1f}  {:>10.4f}  {:>10.4f}\n", e.model_id, wm, e.group, wg,
                       e.params_billions, e.mean_borda, e.efficiency);
  }
  return out;
}

std::string render_report(const EvaluationReport& r) {
  std::string out = fmt::format("Models: {}\nBallots: {} kept, {} discarded\n\n", r.models.size(),
                                r.n_ballots, r.n_discarded);
  out += render_scores(r);
  out += "\nJudge agreement (";
  for (std::size_t i = 0; i < r.judges_a.size(); ++i) out += (i ? "," : "") + r.judges_a[i];
  out += " vs ";
  for (std::size_t i = 0; i < r.judges_b.size(); ++i) out += (i ? "," : "") + r.judges_b[i];
  out += ")\n" + render_correlation(r);
  out += "\nEfficiency\n" + render_efficiency(r);
  if (!r.cost.empty()) out += "\nCost\n" + render_cost_table(r.cost);
  return out;
}

void write_evaluation(const EvaluationRun& run, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<json> ballots, discarded;
  for (const auto& b : run.ballots) ballots.push_back(jury::to_json(b));
  for (const auto& a : run.discarded) discarded.push_back(jury::to_json(a));
  write_jsonl(out_dir / "ballots.jsonl", ballots);
  write_jsonl(out_dir / "discarded.jsonl", discarded);
  const auto& r = run.report;
  write_text_file(out_dir / "report.json", to_json(r).dump(2) + "\n");
  write_text_file(out_dir / "report.txt", render_report(r));
  write_text_file(out_dir / "scores.csv", scores_csv(r));
  write_text_file(out_dir / "correlation.csv", correlation_csv(r));
  write_text_file(out_dir / "correlation.txt", render_correlation(r));
  write_text_file(out_dir / "efficiency.csv", efficiency_csv(r));
  if (!r.cost.empty()) write_text_file(out_dir / "cost.csv", cost_csv(r.cost));
}

}  // namespace fincot::harness
