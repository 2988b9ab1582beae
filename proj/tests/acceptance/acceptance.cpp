// Acceptance gate. One PASS/FAIL line per criterion, exit 1 if any fail.

#include <unistd.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <fmt/core.h>
#include <spdlog/spdlog.h>

#include "fincot/common/error.hpp"
#include "fincot/common/hash.hpp"
#include "fincot/common/jsonl.hpp"
#include "fincot/common/rng.hpp"
#include "fincot/common/text.hpp"
#include "fincot/corpus/ingest.hpp"
#include "fincot/cot/engine.hpp"
#include "fincot/gateway/mock_backend.hpp"
#include "fincot/harness/config.hpp"
#include "fincot/harness/cost.hpp"
#include "fincot/harness/dataset.hpp"
#include "fincot/harness/evaluate.hpp"
#include "fincot/jury/anonymize.hpp"
#include "fincot/jury/borda.hpp"
#include "fincot/jury/correlation.hpp"
#include "fincot/knowledge/index.hpp"
#include "fincot/knowledge/rerank.hpp"

using namespace fincot;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = FINCOT_FIXTURES_DIR;

// Collects failed checks for one criterion.
struct Check {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok && failures.size() < 5) failures.push_back(what);
    if (!ok) ++failed;
  }
  std::size_t failed = 0;
};

int g_failed = 0;

void run(const std::string& name, double limit_s, const std::function<std::string(Check&)>& body) {
  Check c;
  std::string detail;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    detail = body(c);
  } catch (const std::exception& e) {
    c.expect(false, fmt::format("threw: {}", e.what()));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.expect(secs < limit_s, fmt::format("took {:.2f} s, limit {} s", secs, limit_s));
  const bool pass = c.failed == 0;
  if (!pass) ++g_failed;
  std::cout << fmt::format("{} {:<28} {:7.3f} s  {}", pass ? "PASS" : "FAIL", name, secs, detail) << "\n";
  for (const auto& f : c.failures) std::cout << "       - " << f << "\n";
  if (c.failed > c.failures.size()) std::cout << fmt::format("       - ... {} failures in all\n", c.failed);
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / fmt::format("fincot-acceptance-{}-{}", name, ::getpid());
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// ---- independent oracles

double oracle_tau(const std::vector<int>& a, const std::vector<int>& b) {
  const std::size_t n = a.size();
  long conc = 0, disc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const long s = static_cast<long>(a[i] - a[j]) * (b[i] - b[j]);
      if (s > 0) ++conc;
      if (s < 0) ++disc;
    }
  }
  return static_cast<double>(conc - disc) / (static_cast<double>(n * (n - 1)) / 2.0);
}

double oracle_rho(const std::vector<int>& a, const std::vector<int>& b) {
  // Pearson correlation of the rank vectors.
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

std::size_t words(const std::string& s) {
  std::istringstream in(s);
  std::size_t n = 0;
  for (std::string w; in >> w;) ++n;
  return n;
}

jury::Ballot make_ballot(const std::string& judge, int rep, const std::vector<std::string>& ids, std::vector<int> ranks) {
  jury::Ballot b;
  b.query_id = "q";
  b.judge_id = judge;
  b.replicate_index = rep;
  b.criterion = jury::Criterion::kAccuracy;
  b.candidate_ids = ids;
  b.permutation.resize(ids.size());
  std::iota(b.permutation.begin(), b.permutation.end(), 0);
  b.ranks = std::move(ranks);
  return b;
}

std::vector<int> random_ranks(Rng& rng, int n) {
  auto p = rng.permutation(n);
  for (auto& x : p) ++x;
  return p;
}

// ---- 1. cost table

std::string cost_table(Check& c) {
  struct Row {
    const char* model;
    double s, rate, hours, cost;
  };
  // Inputs and published totals, 504 queries at four concurrent requests.
  const Row rows[] = {{"QWQ-32B", 167.86, 3.8, 5.82, 22.33},  {"Gemma3-27B", 64.34, 2.5, 2.23, 5.63},
                      {"Gemma3-12B", 58.26, 1.8, 2.02, 3.67}, {"Ours (8B)", 34.15, 0.8, 1.19, 0.96},
                      {"Mistral-24B", 37.99, 3.8, 1.32, 5.05}, {"DeepSeek-Qwen-14B", 54.18, 1.8, 1.88, 3.41},
                      {"Llama3-8B", 33.58, 0.8, 1.17, 0.94},   {"Mistral-7B", 29.15, 0.8, 1.01, 0.82}};
  double worst = 0;
  for (const auto& r : rows) {
    const auto t = harness::cost_total(504, r.s, 4, r.rate);
    const double dh = std::abs(t.hours - r.hours) / r.hours, dc = std::abs(t.cost - r.cost) / r.cost;
    worst = std::max({worst, dh, dc});
    c.expect(dh <= 0.02, fmt::format("{} hours {:.4f} vs {}", r.model, t.hours, r.hours));
    c.expect(dc <= 0.02, fmt::format("{} cost {:.4f} vs {}", r.model, t.cost, r.cost));
  }
  // The deployments fixture feeds the same rows through the file path.
  const auto file_rows = harness::cost_rows_from_json(read_json_file(kFixtures / "cost/deployments.json"));
  c.expect(file_rows.size() == 8, "fixture has 8 rows");
  for (std::size_t i = 0; i < file_rows.size() && i < 8; ++i) {
    c.expect(std::abs(file_rows[i].total_cost - rows[i].cost) / rows[i].cost <= 0.02, file_rows[i].model_id);
  }
  const auto ours = harness::cost_total(504, 34.15, 4, 0.8);
  const auto gemma = harness::cost_total(504, 64.34, 4, 2.5);
  c.expect(fmt::format("{:.2f}", ours.cost) == "0.96", "8B cost displays 0.96");
  c.expect(fmt::format("{:.2f}", gemma.cost) == "5.63", "27B cost displays 5.63");
  c.expect(std::abs(ours.hours - 1.19) / 1.19 <= 0.02, "8B hours within 2% of 1.19");
  return fmt::format("8 rows, worst deviation {:.2f}%; 8B {:.4f} h (shown {:.2f}) ${:.2f}; 27B ${:.2f}", worst * 100,
                     ours.hours, ours.hours, ours.cost, gemma.cost);
}

// ---- 2. Borda suite

std::string borda_suite(Check& c) {
  std::size_t rankings = 0;
  for (int n = 1; n <= 6; ++n) {
    std::vector<int> ranks(static_cast<std::size_t>(n));
    std::iota(ranks.begin(), ranks.end(), 1);
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) ids.push_back("c" + std::to_string(i));
    do {
      int sum = 0;
      for (int r : ranks) sum += jury::borda_points(n, r);
      c.expect(sum == n * (n - 1) / 2, fmt::format("n={} sum {}", n, sum));
      if (n >= 2) {
        const auto s = jury::aggregate({make_ballot("j", 0, ids, ranks)});
        c.expect(std::accumulate(s.mean_points.begin(), s.mean_points.end(), 0.0) == n * (n - 1) / 2.0,
                 "aggregate sum");
      }
      ++rankings;
    } while (std::next_permutation(ranks.begin(), ranks.end()));
  }

  // Brute force: integer point totals per judge, divided once, then averaged
  // over judges. Compared as exact rationals via cross-multiplication.
  Rng rng(2025);
  for (int set = 0; set < 1000; ++set) {
    const int n = 2 + static_cast<int>(rng.below(5));
    const int judges = 1 + static_cast<int>(rng.below(4));
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) ids.push_back("m" + std::to_string(i));
    std::vector<jury::Ballot> ballots;
    std::vector<std::vector<long>> totals(static_cast<std::size_t>(judges), std::vector<long>(static_cast<std::size_t>(n)));
    std::vector<long> counts(static_cast<std::size_t>(judges));
    for (int j = 0; j < judges; ++j) {
      const int reps = 1 + static_cast<int>(rng.below(6));
      counts[static_cast<std::size_t>(j)] = reps;
      for (int r = 0; r < reps; ++r) {
        auto ranks = random_ranks(rng, n);
        for (int i = 0; i < n; ++i) totals[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] += n - ranks[static_cast<std::size_t>(i)];
        ballots.push_back(make_ballot("judge" + std::to_string(j), r, ids, ranks));
      }
    }
    rng.shuffle(ballots);
    const auto s = jury::aggregate(ballots);
    std::vector<double> expect(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < judges; ++j) {
        expect[static_cast<std::size_t>(i)] += static_cast<double>(totals[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]) /
                                              static_cast<double>(counts[static_cast<std::size_t>(j)]);
      }
      expect[static_cast<std::size_t>(i)] /= judges;
      c.expect(std::abs(s.mean_of(ids[static_cast<std::size_t>(i)]) - expect[static_cast<std::size_t>(i)]) <= 1e-12,
               fmt::format("set {} candidate {}", set, i));
    }
    // select_best: the exact maximum, first index on exact ties. Scale every
    // judge mean to a common denominator so ties are decided in integers.
    long lcm = 1;
    for (long k : counts) lcm = std::lcm(lcm, k);
    std::vector<long> exact(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < judges; ++j) {
        exact[static_cast<std::size_t>(i)] += totals[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] * (lcm / counts[static_cast<std::size_t>(j)]);
      }
    }
    const auto best = static_cast<std::size_t>(std::max_element(exact.begin(), exact.end()) - exact.begin());
    c.expect(jury::select_best(s) == best, fmt::format("set {} select_best", set));

    // Relabel: list candidates in another canonical order on every ballot.
    const auto perm = rng.permutation(n);
    auto relabeled = ballots;
    for (auto& b : relabeled) {
      std::vector<std::string> cid(static_cast<std::size_t>(n));
      std::vector<int> rk(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        cid[static_cast<std::size_t>(i)] = b.candidate_ids[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
        rk[static_cast<std::size_t>(i)] = b.ranks[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
      }
      b.candidate_ids = cid;
      b.ranks = rk;
    }
    const auto moved = jury::aggregate(relabeled);
    const bool unique = std::count(exact.begin(), exact.end(), exact[best]) == 1;
    if (unique) c.expect(moved.candidate_ids[jury::select_best(moved)] == ids[best], fmt::format("set {} relabel", set));
  }

  // Whole-jury check: the winner does not depend on the order candidates are listed.
  gateway::Gateway gw;
  for (const char* id : {"judge-a", "judge-b"}) {
    auto b = std::make_shared<gateway::MockBackend>();
    b->set_responder("judge", jury::mock_judge_responder());
    gateway::ProviderProfile p;
    p.provider_id = id;
    gw.register_provider(p, b);
  }
  auto cfg = jury::JuryConfig::evaluation_default("judge-a", "judge-b");
  cfg.workers = 4;
  const std::vector<std::string> pool = {
      "Pay the 24% card first, then the 19% card, while making minimums on both.",
      "Cards are bad.", "Use the avalanche method: the 24% card first because its interest costs the most.",
      "Consider a balance transfer.", "Snowball or avalanche both work; avalanche saves more interest on 24% cards."};
  int checked = 0;
  for (int t = 0; t < 10; ++t) {
    cfg.run_seed = rng.next();
    jury::Jury jury(gw, cfg);
    jury::RankTask base;
    base.query_id = fmt::format("q{}", t);
    base.query_text = "Which card should I pay first, the 24% or the 19% one? Avalanche or snowball?";
    base.criterion = jury::Criterion::kAccuracy;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      base.candidate_ids.push_back("cand" + std::to_string(i));
      base.candidate_texts.push_back(pool[i]);
    }
    const auto s0 = *jury.rank(base).summary;
    const auto winner = s0.candidate_ids[jury::select_best(s0)];
    const auto perm = rng.permutation(static_cast<int>(pool.size()));
    auto moved = base;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      moved.candidate_ids[i] = base.candidate_ids[static_cast<std::size_t>(perm[i])];
      moved.candidate_texts[i] = base.candidate_texts[static_cast<std::size_t>(perm[i])];
    }
    const auto s1 = *jury.rank(moved).summary;
    c.expect(s1.candidate_ids[jury::select_best(s1)] == winner, fmt::format("trial {} winner moved", t));
    ++checked;
  }
  return fmt::format("{} rankings (n<=6) sum to n(n-1)/2; 1000 random ballot sets match brute force; "
                     "select_best stable under relabeling and {} jury reorderings",
                     rankings, checked);
}

// ---- 3. rank correlation

std::string correlation(Check& c) {
  std::size_t pairs = 0;
  double worst = 0;
  for (int n = 2; n <= 6; ++n) {
    std::vector<std::vector<int>> perms;
    std::vector<int> p(static_cast<std::size_t>(n));
    std::iota(p.begin(), p.end(), 1);
    do perms.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
    for (const auto& a : perms) {
      for (const auto& b : perms) {
        const double dt = std::abs(jury::kendall_tau(a, b) - oracle_tau(a, b));
        const double dr = std::abs(jury::spearman_rho(a, b) - oracle_rho(a, b));
        worst = std::max({worst, dt, dr});
        if (dt > 1e-12 || dr > 1e-12) c.expect(false, fmt::format("n={} dt={} dr={}", n, dt, dr));
        ++pairs;
      }
    }
  }
  Rng rng(99);
  for (int i = 0; i < 10000; ++i) {
    const int n = 2 + static_cast<int>(rng.below(49));
    const auto a = random_ranks(rng, n), b = random_ranks(rng, n);
    const double dt = std::abs(jury::kendall_tau(a, b) - oracle_tau(a, b));
    const double dr = std::abs(jury::spearman_rho(a, b) - oracle_rho(a, b));
    worst = std::max({worst, dt, dr});
    if (dt > 1e-12 || dr > 1e-12) c.expect(false, fmt::format("random n={} dt={} dr={}", n, dt, dr));
  }

  // Constructed agreement: two judges with the same content-only rule.
  const auto cfg = harness::load_run_config(kFixtures / "pipeline/config.json");
  auto gw = harness::make_gateway(cfg);
  const auto in = harness::load_eval_inputs(kFixtures / "eval/responses", kFixtures / "eval/queries.jsonl");
  const auto run = harness::evaluate(*gw, cfg.evaluation->jury, in, cfg.evaluation->options);
  const auto& overall = run.report.correlation.back();
  c.expect(overall.metric == "Overall", "last row is Overall");
  c.expect(overall.tau && std::abs(*overall.tau - 1.0) <= 1e-12, "overall tau = 1");
  c.expect(overall.rho && std::abs(*overall.rho - 1.0) <= 1e-12, "overall rho = 1");

  // Table layout rebuilt from ballots stored on disk.
  const auto dir = scratch("table");
  harness::write_evaluation(run, dir);
  std::vector<jury::Ballot> stored;
  for (const auto& j : read_jsonl(dir / "ballots.jsonl")) stored.push_back(jury::ballot_from_json(j));
  const auto rebuilt = harness::build_report(in, stored, cfg.evaluation->options);
  auto lines = split_lines(harness::render_correlation(rebuilt));
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  const bool layout = lines.size() == 6 && lines[0].rfind("Metric", 0) == 0 &&
                      lines[0].find("Kendall's τ") != std::string::npos &&
                      lines[0].find("Spearman's ρ") != std::string::npos && lines[1].rfind("Plausibility", 0) == 0 &&
                      lines[2].rfind("Accuracy", 0) == 0 && lines[3].rfind("Relevance", 0) == 0 &&
                      lines[4].find_first_not_of('-') == std::string::npos && lines[5].rfind("Overall", 0) == 0;
  c.expect(layout, "correlation table layout");
  c.expect(harness::render_correlation(rebuilt) == read_text_file(dir / "correlation.txt"), "rebuilt table matches");
  return fmt::format("{} exhaustive + 10000 random pairs, max error {:.1e}; agreeing judges tau={:.4f} rho={:.4f}; "
                     "layout rebuilt from {} stored ballots (published 0.6429/0.7904 need the original judges)",
                     pairs, worst, overall.tau.value_or(NAN), overall.rho.value_or(NAN), stored.size());
}

// ---- 4. retrieval

std::string retrieval(Check& c) {
  const char* vocab[] = {"debt", "card", "interest", "budget", "rent", "savings", "emergency", "fund", "roth", "ira",
                         "tax", "deduction", "insurance", "premium", "will", "trust", "fear", "regret", "anchor",
                         "loss", "framing", "bias", "index", "stock", "bond"};
  Rng rng(17);
  auto sentence = [&](int len) {
    std::string s;
    for (int w = 0; w < len; ++w) s += std::string(w ? " " : "") + vocab[rng.below(25)];
    return s;
  };
  std::vector<knowledge::Chunk> chunks;
  for (int i = 0; i < 100; ++i) {
    knowledge::Chunk ch;
    ch.corpus_tag = i < 50 ? knowledge::CorpusTag::kFinancial : knowledge::CorpusTag::kBehavioral;
    ch.chunk_id = fmt::format("{}-doc#{:03}", i < 50 ? "fin" : "beh", i % 50);
    ch.source = "synthetic";
    ch.text = sentence(8 + static_cast<int>(rng.below(20)));
    chunks.push_back(std::move(ch));
  }
  gateway::Gateway gw;
  gateway::ProviderProfile p;
  p.provider_id = "mock-embed";
  gw.register_provider(p, std::make_shared<gateway::MockBackend>(gateway::FixtureTable{}, 64));
  knowledge::KnowledgeIndex index;
  index.build(gw, "mock-embed", chunks);
  c.expect(index.size(knowledge::CorpusTag::kFinancial) == 50 && index.size(knowledge::CorpusTag::kBehavioral) == 50,
           "50 + 50 chunks");

  knowledge::LexicalReranker lex;
  std::size_t compared = 0;
  for (int q = 0; q < 20; ++q) {
    const auto query = sentence(3 + static_cast<int>(rng.below(5)));
    const auto qv = gw.embed("mock-embed", {query}).at(0);
    std::vector<knowledge::ScoredChunk> candidates;
    for (auto tag : {knowledge::CorpusTag::kFinancial, knowledge::CorpusTag::kBehavioral}) {
      // Brute force: cosine against every chunk of the corpus, full sort.
      std::vector<std::pair<double, std::string>> oracle;
      for (const auto& ch : index.chunks()) {
        if (ch.corpus_tag != tag) continue;
        double d = 0, na = 0, nb = 0;
        for (std::size_t k = 0; k < qv.size(); ++k) {
          d += static_cast<double>(qv[k]) * ch.embedding[k];
          na += static_cast<double>(qv[k]) * qv[k];
          nb += static_cast<double>(ch.embedding[k]) * ch.embedding[k];
        }
        oracle.emplace_back(-(na == 0 || nb == 0 ? 0.0 : d / std::sqrt(na * nb)), ch.chunk_id);
      }
      std::sort(oracle.begin(), oracle.end());
      const auto got = knowledge::retrieve(gw, index, query, tag, 25);
      c.expect(got.size() == 25, "k = 25");
      for (std::size_t i = 0; i < got.size() && i < oracle.size(); ++i) {
        c.expect(got[i].chunk->chunk_id == oracle[i].second, fmt::format("query {} rank {}", q, i));
        c.expect(std::abs(got[i].score + oracle[i].first) <= 1e-9, fmt::format("query {} score {}", q, i));
        ++compared;
      }
      candidates.insert(candidates.end(), got.begin(), got.end());
    }
    const auto kept = knowledge::rerank(query, candidates, 15, lex);
    // Score every candidate by explicit term-set overlap, then sort.
    const auto qt = lexical_terms(query);
    const std::set<std::string> qs(qt.begin(), qt.end());
    std::vector<std::pair<double, std::string>> all;
    for (const auto& sc : candidates) {
      const auto ct = lexical_terms(sc.chunk->text);
      const std::set<std::string> cs(ct.begin(), ct.end());
      double hit = 0;
      for (const auto& t : qs) hit += cs.count(t);
      all.emplace_back(-(hit / static_cast<double>(qs.size())), sc.chunk->chunk_id);
    }
    std::sort(all.begin(), all.end());
    c.expect(kept.kept.size() <= 15, "at most 15 kept");
    c.expect(kept.kept.size() == std::min<std::size_t>(15, candidates.size()), "15 kept");
    std::set<const knowledge::Chunk*> input;
    for (const auto& sc : candidates) input.insert(sc.chunk);
    for (std::size_t i = 0; i < kept.kept.size(); ++i) {
      c.expect(input.count(kept.kept[i].chunk) == 1, "kept chunk came from the input");
      c.expect(kept.kept[i].chunk->chunk_id == all[i].second, fmt::format("query {} rerank {}", q, i));
    }
    c.expect(!kept.downgraded, "lexical reranker did not downgrade");
  }
  return fmt::format("100-chunk dual corpus, 20 queries: {} retrieved positions equal brute force; rerank(m=15) "
                     "equals score-all-then-sort",
                     compared);
}

// ---- 5. end-to-end offline pipeline

struct PipelineRun {
  std::vector<harness::DatasetRecord> records;
  std::vector<cot::CotRecord> cot_records;
  std::size_t queries = 0;
  harness::EmitResult emitted;
};

PipelineRun run_pipeline(const fs::path& out) {
  auto cfg = harness::load_run_config(kFixtures / "pipeline/config.json");
  auto gw = harness::make_gateway(cfg);
  const auto templates = harness::make_templates(cfg);
  const auto posts = corpus::raw_posts_from_json(read_jsonl(kFixtures / "pipeline/posts.jsonl"));
  const auto ingested = corpus::ingest(*gw, templates, posts, *cfg.ingest);
  std::vector<json> qrows;
  for (const auto& q : ingested.queries) qrows.push_back(corpus::to_json(q));
  write_jsonl(out / "queries.jsonl", qrows);

  auto chunks = knowledge::load_corpus_dir(cfg.index->financial_dir, knowledge::CorpusTag::kFinancial);
  auto beh = knowledge::load_corpus_dir(cfg.index->behavioral_dir, knowledge::CorpusTag::kBehavioral);
  chunks.insert(chunks.end(), beh.begin(), beh.end());
  knowledge::KnowledgeIndex index;
  index.build(*gw, cfg.index->embedding_provider, chunks);
  index.save(out / "index.bin");
  const auto loaded = knowledge::KnowledgeIndex::load(out / "index.bin");

  auto reranker = harness::make_reranker(cfg);
  cot::CotEngine engine(*gw, templates, loaded, *reranker, *cfg.engine);
  PipelineRun r;
  r.queries = ingested.queries.size();
  r.cot_records = engine.generate_batch(ingested.queries, cfg.workers);
  std::vector<json> rows;
  for (const auto& rec : r.cot_records) {
    rows.push_back(cot::to_json(rec));
    if (!rec.degraded) r.records.push_back(harness::make_dataset_record(rec, templates, *cfg.engine, "mock-embed"));
  }
  write_jsonl(out / "records.jsonl", rows);
  r.emitted = harness::emit_dataset(r.records, out / "dataset", cfg.dataset);
  return r;
}

std::string end_to_end(Check& c) {
  const auto d1 = scratch("e2e-1"), d2 = scratch("e2e-2");
  const auto one = run_pipeline(d1);
  run_pipeline(d2);
  c.expect(one.queries == 10, fmt::format("{} queries after ingest", one.queries));

  const auto file = harness::load_dataset(d1 / "dataset/dataset.jsonl");
  c.expect(file.size() == 10, fmt::format("{} dataset records", file.size()));
  const std::regex pii(
      R"([A-Za-z0-9._%+-]+@[A-Za-z0-9-]+\.[A-Za-z]{2,}|\(?\b\d{3}\)?[ .-]\d{3}[ .-]\d{4}\b|\b\d{3}-\d{2}-\d{4}\b|https?://|\bu/[A-Za-z0-9_-]{3,})");
  const std::regex delimiter(R"(\[\s*PHASE\s*:)", std::regex::icase);
  const std::vector<std::string> phase_names = {"QueryAnalysis", "ContextAnalysis", "PsychCues", "ResponseRubric"};
  for (const auto& r : file) {
    try {
      harness::validate_dataset_record(r);
    } catch (const std::exception& e) {
      c.expect(false, e.what());
    }
    c.expect(r.provenance.phases.size() == 4, r.query_id + " has 4 phases");
    for (std::size_t i = 0; i < r.provenance.phases.size() && i < 4; ++i) {
      c.expect(r.provenance.phases[i].phase == phase_names[i], r.query_id + " phase order");
      c.expect(!trim(r.provenance.phases[i].text).empty(), r.query_id + " phase text");
    }
    for (const auto* text : {&r.query_text, &r.assembled_cot, &r.final_response}) {
      c.expect(!std::regex_search(*text, pii), r.query_id + " contains a PII pattern");
    }
    c.expect(!std::regex_search(r.final_response, delimiter), r.query_id + " leaks a phase delimiter");
  }

  // chosen_index against means recomputed from the raw ballots.
  std::size_t phases_checked = 0;
  for (const auto& rec : one.cot_records) {
    c.expect(!rec.degraded, rec.query.query_id + " degraded");
    c.expect(rec.phase_outputs.size() == 4, rec.query.query_id + " phase outputs");
    for (const auto& po : rec.phase_outputs) {
      const std::size_t n = po.candidates.size();
      std::map<std::string, std::pair<std::vector<double>, int>> per_judge;
      for (const auto& b : po.ballots) {
        auto& [sum, cnt] = per_judge[b.judge_id];
        sum.resize(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
          const auto it = std::find(b.candidate_ids.begin(), b.candidate_ids.end(), po.candidates[i].candidate_id);
          sum[i] += static_cast<double>(n) - b.ranks[static_cast<std::size_t>(it - b.candidate_ids.begin())];
        }
        ++cnt;
      }
      std::vector<double> mean(n, 0.0);
      for (const auto& [j, sc] : per_judge) {
        for (std::size_t i = 0; i < n; ++i) mean[i] += sc.first[i] / sc.second / static_cast<double>(per_judge.size());
      }
      std::size_t best = 0;
      for (std::size_t i = 1; i < n; ++i) {
        if (mean[i] > mean[best] + 1e-9) best = i;
      }
      c.expect(!po.ballots.empty(), rec.query.query_id + " phase without ballots");
      c.expect(po.chosen_index == best, fmt::format("{} {}: chosen {} argmax {}", rec.query.query_id,
                                                    cot::phase_name(po.phase), po.chosen_index, best));
      ++phases_checked;
    }
  }

  // Stats recomputed from the emitted file by stream word counts.
  std::map<std::string, std::array<double, 4>> acc;
  std::array<double, 4> total{};
  std::ifstream in(d1 / "dataset/dataset.jsonl");
  for (std::string line; std::getline(in, line);) {
    const auto j = json::parse(line);
    auto& a = acc[j["category"].get<std::string>()];
    const std::array<double, 4> v{1.0, static_cast<double>(words(j["query_text"].get<std::string>())),
                                  static_cast<double>(words(j["assembled_cot"].get<std::string>())),
                                  static_cast<double>(words(j["final_response"].get<std::string>()))};
    for (int k = 0; k < 4; ++k) {
      a[static_cast<std::size_t>(k)] += v[static_cast<std::size_t>(k)];
      total[static_cast<std::size_t>(k)] += v[static_cast<std::size_t>(k)];
    }
  }
  double worst = 0;
  const auto& st = one.emitted.stats;
  c.expect(st.rows.size() == acc.size(), "category rows");
  c.expect(acc.size() >= 3, "at least three categories");
  for (const auto& row : st.rows) {
    const auto& a = acc[std::string(corpus::category_label(row.category))];
    c.expect(static_cast<double>(row.count) == a[0], "category count");
    for (auto [got, want] : {std::pair{row.avg_query_tokens, a[1] / a[0]}, std::pair{row.avg_cot_tokens, a[2] / a[0]},
                             std::pair{row.avg_response_tokens, a[3] / a[0]}}) {
      worst = std::max(worst, std::abs(got - want));
    }
  }
  worst = std::max({worst, std::abs(st.avg_query_tokens - total[1] / total[0]),
                    std::abs(st.avg_cot_tokens - total[2] / total[0]),
                    std::abs(st.avg_response_tokens - total[3] / total[0])});
  c.expect(worst <= 1e-9, fmt::format("stats deviate by {}", worst));
  c.expect(static_cast<double>(st.total_count) == total[0], "total count");

  std::size_t identical = 0;
  for (const char* f : {"queries.jsonl", "index.bin", "records.jsonl", "dataset/dataset.jsonl", "dataset/train.jsonl",
                        "dataset/validation.jsonl", "dataset/stats.json", "dataset/stats.csv", "dataset/stats.txt"}) {
    const bool same = read_text_file(d1 / f) == read_text_file(d2 / f);
    c.expect(same, fmt::format("{} differs between runs", f));
    identical += same;
  }
  return fmt::format("{} records, {} categories, {} juried phases at the Borda argmax, stats within {:.1e}, "
                     "{} files byte-identical on rerun",
                     file.size(), acc.size(), phases_checked, worst, identical);
}

// ---- 6. shuffle uniformity

std::string shuffle_uniformity(Check& c) {
  const std::vector<std::string> providers = {"deepseek-v3", "kimi-k2", "gen-llama3-8b", "gen-qwen-14b"};
  gateway::Gateway gw;
  for (const auto& id : providers) {
    gateway::ProviderProfile p;
    p.provider_id = id;
    gw.register_provider(p, std::make_shared<gateway::MockBackend>());
  }
  auto cfg = jury::JuryConfig::evaluation_default("deepseek-v3", "kimi-k2");
  cfg.run_seed = 20250601;
  cfg.n_shots = 3;
  jury::Jury jury(gw, cfg);
  jury::RankTask task;
  task.query_id = "q-shuffle";
  task.query_text = "Should I keep my emergency fund in a high yield savings account?";
  task.criterion = jury::Criterion::kRelevance;
  task.candidate_ids = {"gen-llama3-8b", "gen-qwen-14b", "model-c", "model-d"};
  // Candidates that name providers outright, in several casings.
  task.candidate_texts = {"As gen-llama3-8b I say yes, keep it liquid.", "Yes. (written by GEN-QWEN-14B)",
                          "DeepSeek-V3 and Kimi-K2 would both agree: a HYSA works.", "Keep three to six months."};
  task.identifiers = task.candidate_ids;

  const int replicates = 10000;
  std::map<std::vector<int>, int> counts;
  std::size_t leaks = 0;
  for (int rep = 0; rep < replicates; ++rep) {
    const auto& judge = cfg.judges[static_cast<std::size_t>(rep % 2)];
    const auto d = jury.draw(task, judge, rep);
    ++counts[d.presented.permutation];
    const auto prompt = to_lower(d.request.system_prompt + "\n" + d.request.user_prompt);
    for (const auto& id : providers) leaks += prompt.find(to_lower(id)) != std::string::npos;
  }
  c.expect(counts.size() == 24, fmt::format("{} distinct permutations", counts.size()));
  const double expected = replicates / 24.0;
  double stat = 0;
  for (const auto& [perm, k] : counts) stat += (k - expected) * (k - expected) / expected;
  stat += (24.0 - static_cast<double>(counts.size())) * expected;  // unseen permutations
  const double p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(23), stat));
  c.expect(p > 0.01, fmt::format("chi-square p = {:.4f}", p));
  c.expect(leaks == 0, fmt::format("{} provider ids found in prompts", leaks));
  return fmt::format("{} draws over 24 permutations, chi2 = {:.2f} (df 23), p = {:.3f}; 0 provider ids in {} prompts",
                     replicates, stat, p, replicates);
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  run("cost-table reproduction", 1.0, cost_table);
  run("borda suite", 30.0, borda_suite);
  run("rank-correlation oracles", 120.0, correlation);
  run("retrieval oracles", 10.0, retrieval);
  run("end-to-end offline pipeline", 60.0, end_to_end);
  run("shuffle uniformity", 30.0, shuffle_uniformity);
  std::cout << (g_failed == 0 ? "all acceptance criteria pass\n" : fmt::format("{} criteria failed\n", g_failed));
  return g_failed == 0 ? 0 : 1;
}
