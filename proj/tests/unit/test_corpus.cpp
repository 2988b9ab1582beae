#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <queue>
#include <set>

#include <fmt/core.h>

#include "fincot/common/error.hpp"
#include "fincot/common/rng.hpp"
#include "fincot/corpus/classifier.hpp"
#include "fincot/corpus/dedup.hpp"
#include "fincot/corpus/ingest.hpp"
#include "fincot/corpus/pii.hpp"
#include "fincot/gateway/mock_backend.hpp"

using namespace fincot;
using namespace fincot::corpus;
using fincot::gateway::Embedding;

namespace {

const std::filesystem::path kFixtures = FINCOT_FIXTURES_DIR;

struct MockWorld {
  gateway::Gateway gw;
  std::shared_ptr<gateway::MockBackend> backend;
  cot::TemplateSet templates = cot::TemplateSet::builtin();

  MockWorld() {
    backend = std::make_shared<gateway::MockBackend>(
        gateway::FixtureTable::load(kFixtures / "mock" / "classify_fixtures.json"), 256);
    gateway::ProviderProfile p;
    p.provider_id = "mock";
    p.kind = gateway::ProviderKind::kMock;
    gw.register_provider(p, backend);
  }
};

}  // namespace

TEST_CASE("scrub_pii examples") {
  CHECK(scrub_pii("email me at a@b.com") == "email me at [EMAIL]");
  CHECK(scrub_pii("I owe $12,000 on my card") == "I owe $12,000 on my card");
  CHECK(scrub_pii("call 555-123-4567 or (555) 123-4567") == "call [PHONE] or [PHONE]");
  CHECK(scrub_pii("see https://reddit.com/u/someone/posts for more") == "see [URL] for more");
  CHECK(scrub_pii("thanks u/frugal_guy and @money_mom") == "thanks [HANDLE] and [HANDLE]");
  CHECK(scrub_pii("SSN 123-45-6789, acct 123456789012") == "SSN [ID], acct [ID]");
  CHECK(scrub_pii("I have $1000000000 and 401(k) at 7.5% over 30 years in 2024") ==
        "I have $1000000000 and 401(k) at 7.5% over 30 years in 2024");
  CHECK(scrub_pii("balance 1,234,567,890.00") == "balance 1,234,567,890.00");
  CHECK(contains_pii("x@y.org"));
  CHECK_FALSE(contains_pii("my [EMAIL] and [PHONE]"));
}

TEST_CASE("scrub_pii is idempotent and leaves nothing behind (1000 random texts)") {
  const std::vector<std::string> pieces = {
      "I owe", "$12,000", "on my card", "a.b-c@mail.example.com", "555.867.5309", "+1 212 555 0100",
      "http://x.io/a?b=c", "www.bank.com/login", "u/throwaway_123", "@handle99", "078-05-1120",
      "4111111111111111", "401(k)", "Roth IRA", "my wife", "(800) 555-0199", "7.25%", "1,500/month",
      "10 years", "2023-01-05", "[EMAIL]", "/u/name", "e@x", "12345678", "mailto:z@z.co"};
  Rng rng(7);
  for (int t = 0; t < 1000; ++t) {
    std::string text;
    const auto n = 1 + rng.below(10);
    for (std::uint64_t i = 0; i < n; ++i) {
      if (!text.empty()) text += rng.below(4) == 0 ? ", " : " ";
      text += pieces[rng.below(pieces.size())];
    }
    const auto once = scrub_pii(text);
    CAPTURE(text);
    CHECK(scrub_pii(once) == once);
    CHECK_FALSE(contains_pii(once));
  }
}

TEST_CASE("category labels and reply parsing") {
  for (auto c : kDatasetCategories) {
    CHECK(parse_category(category_label(c)) == c);
    CHECK(parse_category(category_key(c)) == c);
  }
  CHECK(parse_category("Not_Applicable") == Category::kNotApplicable);
  CHECK(parse_category_reply("  **Retirement Planning**\n") == Category::kRetirementPlanning);
  CHECK(parse_category_reply("Category: Tax Planning & Optimization") ==
        Category::kTaxPlanningOptimization);
  CHECK(parse_category_reply("This is clearly Savings & Emergency Funds.") ==
        Category::kSavingsEmergencyFunds);
  CHECK_THROWS_AS(parse_category_reply("I cannot tell"), ValidationError);
  CHECK_THROWS_AS(parse_category_reply("Either Retirement Planning or Tax Planning & Optimization"),
                  ValidationError);
  const auto guide = category_guide();
  CHECK(guide.find("snowball, avalanche") != std::string::npos);
  CHECK(guide.find("401(k), pensions") != std::string::npos);
}

TEST_CASE("classifier fixtures") {
  MockWorld w;
  CategoryClassifier c(w.gw, "mock", w.templates);
  CHECK(classify_category(c, "Should I use snowball or avalanche?").category ==
        Category::kDebtManagementCredit);
  CHECK(classify_category(c, "401(k) withdrawal order in retirement?").category ==
        Category::kRetirementPlanning);
  CHECK(classify_category(c, "What's a good pizza recipe?").category == Category::kNotApplicable);

  RawPost good{"p1", "How do I pay off two credit cards?", "One is at 24% APR.", {}, {}, "reddit"};
  Classification detail;
  CHECK(is_topically_valid(c, good, &detail));
  CHECK(detail.raw_replies == std::vector<std::string>{"Debt Management & Credit"});
  RawPost news{"p2", "Market news roundup, no question", "Stocks moved today.", {}, {}, "reddit"};
  CHECK_FALSE(is_topically_valid(c, news));
  RawPost empty{"p3", "Title", "  ", {}, {}, "reddit"};
  CHECK_THROWS_AS(is_topically_valid(c, empty), ValidationError);
}

TEST_CASE("classify prompt follows the skeleton") {
  MockWorld w;
  CategoryClassifier c(w.gw, "mock", w.templates);
  const auto p = c.prompt("Should I use snowball or avalanche?");
  CHECK(p.rfind("You are a personal finance query classification expert", 0) == 0);
  CHECK(p.find("PRIMARY INTENT") != std::string::npos);
  CHECK(p.find("ONE of the following") != std::string::npos);
  CHECK(cot::prompt_input(p, "Query").value() == "Should I use snowball or avalanche?");
}

TEST_CASE("unparseable classifier replies quarantine after three re-asks") {
  MockWorld w;
  w.backend->set_responder("classify", [](const gateway::MockPrompt&) { return "beats me"; });
  CategoryClassifier c(w.gw, "mock", w.templates);
  const auto r = c.classify("my paycheck disappears, how do I budget?");
  CHECK(r.quarantined);
  CHECK(r.category == Category::kNotApplicable);
  CHECK(r.raw_replies.size() == 4);
}

TEST_CASE("a re-ask can recover") {
  MockWorld w;
  w.backend->set_responder("classify", [](const gateway::MockPrompt& p) -> std::string {
    return p.seed == 0 ? "???" : "Budgeting & Cash-Flow Management";
  });
  CategoryClassifier c(w.gw, "mock", w.templates);
  const auto r = c.classify("my paycheck disappears, how do I budget?");
  CHECK_FALSE(r.quarantined);
  CHECK(r.category == Category::kBudgetingCashFlow);
  CHECK(r.raw_replies.size() == 2);
}

TEST_CASE("keyword mock classifier") {
  MockWorld w;
  const auto reply = [&](const std::string& q) {
    CategoryClassifier c(w.gw, "mock", w.templates);
    return mock_classify_reply(c.prompt(q));
  };
  CHECK(reply("Should I put my bonus toward my student loan debt?") == "Debt Management & Credit");
  CHECK(reply("How big should my emergency fund be?") == "Savings & Emergency Funds");
  CHECK(reply("Do I need a will and a trust for my kids?") == "Estate Planning & Legacy");
  CHECK(reply("My budget breaks every month. How do I track expenses?") ==
        "Budgeting & Cash-Flow Management");
  CHECK(reply("Stocks fell today.") == "Not_Applicable");
  CHECK(reply("Any tips for my garden?") == "Not_Applicable");
}

namespace {

Query make_query(std::string id, std::string text) {
  Query q;
  q.query_id = std::move(id);
  q.text = std::move(text);
  q.category = Category::kBudgetingCashFlow;
  return q;
}

// O(n^2) oracle: BFS over the explicit adjacency matrix.
std::vector<std::string> oracle_survivors(const std::vector<Query>& qs,
                                          const std::vector<Embedding>& es, double threshold) {
  const auto n = qs.size();
  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) adj[i][j] = i != j && cosine(es[i], es[j]) >= threshold;
  }
  std::vector<int> comp(n, -1);
  std::vector<std::string> out;
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::vector<std::size_t> members;
    std::queue<std::size_t> bfs;
    bfs.push(s);
    comp[s] = static_cast<int>(s);
    while (!bfs.empty()) {
      auto u = bfs.front();
      bfs.pop();
      members.push_back(u);
      for (std::size_t v = 0; v < n; ++v) {
        if (adj[u][v] && comp[v] < 0) {
          comp[v] = static_cast<int>(s);
          bfs.push(v);
        }
      }
    }
    auto best = members[0];
    for (auto m : members) {
      if (qs[m].text.size() > qs[best].text.size() ||
          (qs[m].text.size() == qs[best].text.size() && qs[m].query_id < qs[best].query_id)) {
        best = m;
      }
    }
    out.push_back(qs[best].query_id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> ids(const std::vector<Query>& qs) {
  std::vector<std::string> out;
  for (const auto& q : qs) out.push_back(q.query_id);
  return out;
}

}  // namespace

TEST_CASE("cluster_dedup basic contracts") {
  const auto e = [](const std::string& t) { return gateway::MockBackend::hash_embedding(t, 256); };
  std::vector<Query> qs{make_query("b", "same text here"), make_query("a", "same text here")};
  auto out = cluster_dedup(qs, {e(qs[0].text), e(qs[1].text)}, 0.92);
  REQUIRE(out.size() == 1);
  CHECK(out[0].query_id == "a");

  std::vector<Query> apart{make_query("z", "tax refund timing"), make_query("y", "pension lump sum"),
                           make_query("x", "car insurance premium")};
  std::vector<Embedding> es;
  for (const auto& q : apart) es.push_back(e(q.text));
  CHECK(ids(cluster_dedup(apart, es, 0.92)) == std::vector<std::string>{"x", "y", "z"});
  CHECK_THROWS_AS(cluster_dedup(apart, es, 1.0), ValidationError);
  CHECK_THROWS_AS(cluster_dedup(apart, {}, 0.5), ValidationError);
}

TEST_CASE("cluster_dedup matches a brute-force oracle on planted clusters") {
  Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const int dim = 16;
    std::vector<Query> qs;
    std::vector<Embedding> es;
    // 10 cluster centres, 50 queries each near one centre or isolated.
    std::vector<Embedding> centres;
    for (int c = 0; c < 10; ++c) {
      Embedding v(dim);
      for (auto& x : v) x = static_cast<float>(rng.uniform() * 2 - 1);
      centres.push_back(v);
    }
    for (int i = 0; i < 50; ++i) {
      Embedding v = centres[rng.below(10)];
      const double noise = rng.below(3) == 0 ? 0.6 : 0.05;
      for (auto& x : v) x += static_cast<float>((rng.uniform() * 2 - 1) * noise);
      qs.push_back(make_query(fmt::format("q{:02d}", rng.below(1000)) + std::to_string(i),
                              std::string(1 + rng.below(6), 'w')));
      es.push_back(v);
    }
    const double threshold = 0.8 + 0.15 * rng.uniform();
    const auto got = cluster_dedup(qs, es, threshold);
    CHECK(ids(got) == oracle_survivors(qs, es, threshold));

    // Idempotence: dedup the survivors again.
    std::vector<Embedding> survivor_es;
    for (const auto& q : got) {
      for (std::size_t i = 0; i < qs.size(); ++i) {
        if (qs[i].query_id == q.query_id) survivor_es.push_back(es[i]);
      }
    }
    CHECK(ids(cluster_dedup(got, survivor_es, threshold)) == ids(got));
  }
}

TEST_CASE("quota_sample caps per category deterministically") {
  std::vector<Query> qs;
  for (int i = 0; i < 30; ++i) {
    auto q = make_query(fmt::format("q{:02d}", i), "t");
    q.category = i % 3 == 0 ? Category::kTaxPlanningOptimization : Category::kBudgetingCashFlow;
    qs.push_back(q);
  }
  QuotaConfig cfg;
  cfg.per_category[Category::kBudgetingCashFlow] = 5;
  const auto a = quota_sample(qs, cfg, 1);
  const auto b = quota_sample(qs, cfg, 1);
  CHECK(ids(a) == ids(b));
  CHECK(a.size() == 15);
  CHECK(std::is_sorted(a.begin(), a.end(),
                       [](const Query& x, const Query& y) { return x.query_id < y.query_id; }));
  cfg.default_quota = 2;
  CHECK(quota_sample(qs, cfg, 1).size() == 7);
  CHECK(quota_sample(qs, {}, 9).size() == 30);
}

TEST_CASE("raw post parsing") {
  auto rows = parse_jsonl(
      R"({"post_id":"a","title":"t","body":"b","created_at":"2021-03-04T05:06:07-05:00","source":"r"})"
      "\n"
      R"({"post_id":7,"title":"t","body":"b","created_at":1600000000,"source":"r","flair":"Debt"})"
      "\n");
  const auto posts = raw_posts_from_json(rows);
  CHECK(format_utc(posts[0].created_at) == "2021-03-04T10:06:07Z");
  CHECK(posts[1].post_id == "7");
  CHECK(posts[1].flair.value() == "Debt");
  rows.push_back(rows[0]);
  CHECK_THROWS_WITH_AS(raw_posts_from_json(rows), "post record 3: duplicate post_id 'a'",
                       ValidationError);
  CHECK_THROWS_AS(raw_posts_from_json(parse_jsonl(R"({"post_id":"x","created_at":"soon"})")),
                  ValidationError);
}

TEST_CASE("ingest funnel") {
  MockWorld w;
  w.backend->set_responder("classify",
                           [](const gateway::MockPrompt& p) { return mock_classify_reply(p.user_prompt); });
  std::vector<RawPost> posts{
      {"1", "Should I use snowball or avalanche?", "Two cards, email me a@b.com", {}, {}, "r"},
      {"2", "Should I use snowball or avalanche?", "Two cards, email me a@b.com", {}, {}, "r"},
      {"3", "Market news roundup, no question", "Stocks moved.", {}, {}, "r"},
      {"4", "empty", "", {}, {}, "r"},
      {"5", "401(k) withdrawal order in retirement?", "I am 64 with a pension.", {}, {}, "r"},
  };
  IngestOptions opt;
  opt.classifier_provider = "mock";
  opt.embedding_provider = "mock";
  const auto r = ingest(w.gw, w.templates, posts, opt);
  CHECK(r.funnel.posts_in == 5);
  CHECK(r.funnel.empty_body == 1);
  CHECK(r.funnel.not_applicable == 1);
  CHECK(r.funnel.topical == 3);
  CHECK(r.funnel.dedup_removed == 1);
  CHECK(r.funnel.emitted == 2);
  REQUIRE(r.queries.size() == 2);
  CHECK(r.queries[0].query_id == "q-1");
  CHECK(r.queries[0].category == Category::kDebtManagementCredit);
  CHECK(r.queries[1].category == Category::kRetirementPlanning);
  for (const auto& q : r.queries) {
    CHECK_FALSE(contains_pii(q.text));
    CHECK(q.category != Category::kNotApplicable);
  }
  CHECK(r.decisions.size() == 5);
  CHECK_FALSE(r.decisions[3].category.has_value());
  CHECK(render_funnel(r.funnel).find("Debt Management & Credit") != std::string::npos);
  CHECK(to_json(r.funnel)["emitted_by_category"]["Retirement Planning"] == 1);
}
