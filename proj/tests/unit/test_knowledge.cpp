#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <set>
#include <thread>

#include <fmt/core.h>
#include <httplib.h>

#include "fincot/common/error.hpp"
#include "fincot/common/rng.hpp"
#include "fincot/common/text.hpp"
#include "fincot/gateway/mock_backend.hpp"
#include "fincot/knowledge/condense.hpp"

using namespace fincot;
using namespace fincot::knowledge;

namespace {

const std::filesystem::path kFixtures = FINCOT_FIXTURES_DIR;

DocumentMetadata meta(std::string id = "doc", CorpusTag tag = CorpusTag::kFinancial) {
  DocumentMetadata m;
  m.doc_id = std::move(id);
  m.source = "Test Source";
  m.corpus_tag = tag;
  m.snapshot_time = parse_timestamp("2025-01-01");
  return m;
}

std::string words(std::size_t n, const std::string& stem = "w") {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) out += (i ? " " : "") + stem + std::to_string(i);
  return out;
}

gateway::GatewayOptions no_sleep() {
  gateway::GatewayOptions o;
  o.sleeper = [](std::chrono::milliseconds) {};
  return o;
}

struct World {
  gateway::Gateway gw{no_sleep()};
  std::shared_ptr<gateway::MockBackend> backend;
  cot::TemplateSet templates = cot::TemplateSet::builtin();
  explicit World(const std::string& fixtures = "condense_fixtures.json") {
    backend = std::make_shared<gateway::MockBackend>(
        gateway::FixtureTable::load(kFixtures / "mock" / fixtures), 256);
    gateway::ProviderProfile p;
    p.provider_id = "mock";
    p.kind = gateway::ProviderKind::kMock;
    gw.register_provider(p, backend);
  }
};

double cosine_d(const gateway::Embedding& a, const gateway::Embedding& b) {
  double d = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  return d / std::sqrt(na * nb);
}

}  // namespace

TEST_CASE("three small H2 sections give three chunks") {
  const auto chunks = chunk_markdown("## A\none\n\n## B\ntwo\n\n## C\nthree\n", meta());
  REQUIRE(chunks.size() == 3);
  for (const auto& c : chunks) CHECK(c.section_path.size() == 1);
  CHECK(chunks[1].section_path[0] == "B");
  CHECK(chunks[1].text == "## B\ntwo");
  CHECK(chunks[2].chunk_id == "doc#002");
}

TEST_CASE("a 1200-token section splits into three chunks of at most 512") {
  std::string doc = "## Big\n\n";
  for (int p = 0; p < 12; ++p) doc += words(100, fmt::format("p{}x", p)) + "\n\n";
  auto chunks = chunk_markdown(doc, meta());
  CHECK(chunks.size() == 3);
  for (const auto& c : chunks) CHECK(whitespace_token_count(c.text) <= 512);

  // One giant paragraph: split by words.
  chunks = chunk_markdown("## Big\n\n" + words(1200), meta());
  CHECK(chunks.size() == 3);
  for (const auto& c : chunks) CHECK(whitespace_token_count(c.text) <= 512);
}

TEST_CASE("Bogleheads-style page matches the golden chunk set") {
  const auto doc = read_text_file(kFixtures / "corpus" / "financial" / "emergency_fund.md");
  auto m = meta("bogleheads-emergency-fund");
  const auto chunks = chunk_markdown(doc, m);
  const auto golden = read_json_file(kFixtures / "golden" / "bogleheads_chunks.json");
  REQUIRE(chunks.size() == golden.size());
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    CAPTURE(i);
    CHECK(chunks[i].chunk_id == golden[i]["chunk_id"].get<std::string>());
    CHECK(chunks[i].section_path == golden[i]["section_path"].get<std::vector<std::string>>());
    CHECK(chunks[i].text == golden[i]["text"].get<std::string>());
  }
}

TEST_CASE("headers inside code fences are not boundaries; bodiless headers fold forward") {
  const auto chunks = chunk_markdown("# Top\n\n## A\n```\n# not a header\n```\ntext\n", meta());
  REQUIRE(chunks.size() == 1);
  CHECK(chunks[0].section_path == std::vector<std::string>{"Top", "A"});
  CHECK(chunks[0].text.rfind("# Top\n\n## A\n", 0) == 0);
  CHECK_THROWS_AS(chunk_markdown("  \n\n", meta()), ValidationError);
}

TEST_CASE("chunking property: concatenation reproduces the body, paths follow nesting") {
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    std::string doc;
    const auto blocks = 1 + rng.below(12);
    for (std::uint64_t b = 0; b < blocks; ++b) {
      const auto kind = rng.below(4);
      if (kind == 0) {
        doc += std::string(1 + rng.below(4), '#') + " Title" + std::to_string(b) + "\n";
      } else if (kind == 1) {
        doc += "```\n## fenced " + std::to_string(b) + "\n```\n";
      } else {
        doc += words(1 + rng.below(kind == 3 ? 700 : 60), "t" + std::to_string(b) + "_") + "\n";
      }
      if (rng.below(2)) doc += "\n";
    }
    if (trim(doc).empty()) continue;
    const std::size_t cap = 64 + rng.below(512);
    const auto chunks = chunk_markdown(doc, meta(), cap);
    std::vector<std::string> texts;
    for (const auto& c : chunks) {
      texts.push_back(c.text);
      CHECK_FALSE(trim(c.text).empty());
      CHECK(whitespace_token_count(c.text) <= cap + 16);  // folded header lines may ride along
    }
    CHECK(normalize_whitespace(join(texts, " ")) == normalize_whitespace(doc));
    for (std::size_t i = 0; i < chunks.size(); ++i) {
      const auto& text = chunks[i].text;
      if (!chunks[i].section_path.empty() && text[0] == '#') {
        CAPTURE(text);
        CAPTURE(chunks[i].section_path.back());
        CHECK(text.find(chunks[i].section_path.back()) != std::string::npos);
      }
    }
  }
}

TEST_CASE("corpus directories load with manifest metadata") {
  const auto fin = load_corpus_dir(kFixtures / "corpus" / "financial", CorpusTag::kFinancial);
  const auto beh = load_corpus_dir(kFixtures / "corpus" / "behavioral");
  CHECK(fin.size() > 20);
  CHECK(beh.size() >= 10);
  for (const auto& c : fin) CHECK(c.corpus_tag == CorpusTag::kFinancial);
  for (const auto& c : beh) CHECK(c.corpus_tag == CorpusTag::kBehavioral);
  CHECK(fin[0].source == "Bogleheads Wiki");
  CHECK(fin[0].priority == 2);
  CHECK_THROWS_AS(load_corpus_dir(kFixtures / "corpus" / "behavioral", CorpusTag::kFinancial),
                  ValidationError);
  CHECK_THROWS_AS(load_corpus_dir(kFixtures / "nope"), ValidationError);
}

namespace {

std::vector<Chunk> synthetic_corpus(Rng& rng, std::size_t n, int dim) {
  std::vector<Chunk> out;
  for (std::size_t i = 0; i < n; ++i) {
    Chunk c;
    c.chunk_id = fmt::format("syn#{:03d}", i);
    c.corpus_tag = i % 2 ? CorpusTag::kBehavioral : CorpusTag::kFinancial;
    c.source = "Synthetic";
    c.text = words(5 + rng.below(20), fmt::format("s{}_", rng.below(7)));
    c.embedding.resize(static_cast<std::size_t>(dim));
    for (auto& x : c.embedding) x = static_cast<float>(std::round((rng.uniform() * 2 - 1) * 4) / 4);
    if (std::all_of(c.embedding.begin(), c.embedding.end(), [](float x) { return x == 0; })) c.embedding[0] = 1;
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

TEST_CASE("retrieve equals a brute-force cosine scan") {
  Rng rng(5);
  const int dim = 8;  // coarse values so exact ties happen and exercise the chunk_id rule
  KnowledgeIndex index;
  index.build_from(synthetic_corpus(rng, 100, dim), "synthetic");
  for (int q = 0; q < 20; ++q) {
    gateway::Embedding query(dim);
    for (auto& x : query) x = static_cast<float>(rng.uniform() * 2 - 1);
    for (auto tag : {CorpusTag::kFinancial, CorpusTag::kBehavioral}) {
      std::vector<std::pair<double, std::string>> oracle;
      for (const auto& c : index.chunks()) {
        if (c.corpus_tag == tag) oracle.emplace_back(-cosine_d(query, c.embedding), c.chunk_id);
      }
      std::sort(oracle.begin(), oracle.end());
      const auto got = index.search(query, tag, 25);
      REQUIRE(got.size() == 25);
      for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].chunk->chunk_id == oracle[i].second);
        CHECK(std::abs(got[i].score + oracle[i].first) < 1e-12);
      }
    }
  }
  const auto all = index.search(gateway::Embedding(dim, 1.0f), CorpusTag::kFinancial, 1000);
  CHECK(all.size() == 50);
  CHECK(std::is_sorted(all.begin(), all.end(), [](const ScoredChunk& a, const ScoredChunk& b) {
    return a.score > b.score || (a.score == b.score && a.chunk->chunk_id < b.chunk->chunk_id);
  }));
}

TEST_CASE("self-retrieval with the mock embedder, and error cases") {
  World w;
  auto chunks = load_corpus_dir(kFixtures / "corpus" / "financial", CorpusTag::kFinancial);
  KnowledgeIndex index;
  CHECK_THROWS_WITH_AS(index.search({1.0f}, CorpusTag::kFinancial, 1), "index not built", ValidationError);
  index.build(w.gw, "mock", chunks);
  const auto& target = index.chunks()[7];
  const auto hits = retrieve(w.gw, index, target.text, CorpusTag::kFinancial, 3);
  CHECK(hits[0].chunk->chunk_id == target.chunk_id);
  CHECK(std::abs(hits[0].score - 1.0) < 1e-6);
  CHECK_THROWS_WITH_AS(retrieve(w.gw, index, "x", CorpusTag::kBehavioral, 3), "corpus 'behavioral' is empty",
                       ValidationError);
  CHECK_THROWS_AS(retrieve(w.gw, index, "x", CorpusTag::kFinancial, 0), ValidationError);
}

TEST_CASE("index file round-trips and rejects foreign files") {
  Rng rng(9);
  KnowledgeIndex index;
  auto chunks = synthetic_corpus(rng, 30, 16);
  chunks[3].section_path = {"A", "B"};
  chunks[3].url_or_handle = "handle";
  index.build_from(chunks, "synthetic");
  const auto dir = std::filesystem::temp_directory_path() / "fincot_index_test";
  std::filesystem::remove_all(dir);
  index.save(dir / "index.bin");
  const auto back = KnowledgeIndex::load(dir / "index.bin");
  REQUIRE(back.chunks().size() == 30);
  CHECK(back.embedding_provider() == "synthetic");
  for (std::size_t i = 0; i < 30; ++i) {
    CHECK(to_json(back.chunks()[i], true) == to_json(index.chunks()[i], true));
  }
  write_text_file(dir / "bad.bin", "NOPE....");
  CHECK_THROWS_AS(KnowledgeIndex::load(dir / "bad.bin"), ValidationError);
  auto bytes = read_text_file(dir / "index.bin");
  bytes[4] = 9;
  write_text_file(dir / "v9.bin", bytes);
  CHECK_THROWS_WITH_AS(KnowledgeIndex::load(dir / "v9.bin"), "index version 9 unsupported (expected 1)",
                       ValidationError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("lexical rerank contracts") {
  std::vector<Chunk> store(3);
  store[0].chunk_id = "a";
  store[0].text = "nothing relevant";
  store[1].chunk_id = "b";
  store[1].text = "debt payoff with the avalanche method";
  store[2].chunk_id = "c";
  store[2].text = "debt";
  std::vector<ScoredChunk> cands{{&store[0], 0.9}, {&store[1], 0.1}, {&store[2], 0.5}};
  LexicalReranker lex;
  auto r = rerank("Debt payoff avalanche?", cands, 10, lex);
  REQUIRE(r.kept.size() == 3);
  CHECK(r.kept[0].chunk->chunk_id == "b");
  CHECK(r.kept[0].score == 1.0);
  CHECK(r.kept[2].chunk->chunk_id == "a");
  CHECK(r.kept[2].score == 0.0);
  CHECK_FALSE(r.downgraded);
  CHECK(LexicalReranker::overlap("", "x") == 0.0);
}

TEST_CASE("rerank(m=15) equals score-all-then-sort on 50 candidates") {
  Rng rng(3);
  auto store = synthetic_corpus(rng, 50, 4);
  LexicalReranker lex;
  for (int trial = 0; trial < 50; ++trial) {
    const auto query = words(1 + rng.below(6), fmt::format("s{}_", rng.below(7)));
    std::vector<ScoredChunk> cands;
    for (auto& c : store) cands.push_back({&c, rng.uniform()});
    const auto r = rerank(query, cands, 15, lex);
    // Oracle: explicit term-set overlap, then a full sort.
    std::vector<std::pair<double, std::string>> all;
    const auto qt = lexical_terms(query);
    const std::set<std::string> qs(qt.begin(), qt.end());
    for (const auto& c : store) {
      const auto ct = lexical_terms(c.text);
      const std::set<std::string> cs(ct.begin(), ct.end());
      double hit = 0;
      for (const auto& t : qs) hit += cs.count(t) ? 1 : 0;
      all.emplace_back(-(hit / static_cast<double>(qs.size())), c.chunk_id);
    }
    std::sort(all.begin(), all.end());
    REQUIRE(r.kept.size() == 15);
    std::set<const Chunk*> input;
    for (const auto& c : cands) input.insert(c.chunk);
    for (std::size_t i = 0; i < 15; ++i) {
      CHECK(r.kept[i].chunk->chunk_id == all[i].second);
      CHECK(r.kept[i].score == -all[i].first);
      CHECK(input.count(r.kept[i].chunk) == 1);
    }
  }
}

TEST_CASE("remote reranker client: batching, health, and fallback") {
  httplib::Server server;
  std::atomic<int> requests{0};
  std::atomic<bool> ready{false};
  server.Get("/health", [&](const httplib::Request&, httplib::Response& res) {
    if (!ready) {
      res.status = 503;
      return;
    }
    res.set_content(R"({"status":"ok","model_id":"fake-ce"})", "application/json");
  });
  server.Post("/score", [&](const httplib::Request& req, httplib::Response& res) {
    ++requests;
    const auto j = json::parse(req.body);
    const auto& passages = j.at("passages");
    if (passages.size() > 64) {
      res.status = 413;
      return;
    }
    json scores = json::array();
    for (const auto& p : passages) scores.push_back(static_cast<double>(p.get<std::string>().size()));
    res.set_content(json{{"scores", scores}, {"model_id", "fake-ce"}}.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  RemoteReranker remote(fmt::format("http://127.0.0.1:{}", port));
  CHECK_FALSE(remote.health().has_value());
  ready = true;
  CHECK(remote.health().value() == "fake-ce");

  std::vector<std::string> passages;
  for (int i = 0; i < 150; ++i) passages.push_back(std::string(static_cast<std::size_t>(1 + i % 7), 'x'));
  const auto scores = remote.score("q", passages);
  REQUIRE(scores.size() == 150);
  CHECK(requests.load() == 3);
  for (int i = 0; i < 150; ++i) CHECK(scores[static_cast<std::size_t>(i)] == 1 + i % 7);
  CHECK(remote.id() == "remote:fake-ce");
  CHECK(remote.score("q", {}).empty());

  std::vector<Chunk> store(2);
  store[0].chunk_id = "a";
  store[0].text = "short";
  store[1].chunk_id = "b";
  store[1].text = "much longer passage";
  std::vector<ScoredChunk> cands{{&store[0], 0}, {&store[1], 0}};
  auto r = rerank("passage", cands, 1, remote);
  CHECK(r.kept[0].chunk->chunk_id == "b");
  CHECK(r.reranker_id == "remote:fake-ce");

  server.stop();
  t.join();
  r = rerank("short", cands, 1, remote);
  CHECK(r.downgraded);
  CHECK(r.reranker_id == "lexical-overlap");
  CHECK(r.kept[0].chunk->chunk_id == "a");
}

TEST_CASE("condense attribution contracts with the echo mock") {
  World w;
  auto fin = load_corpus_dir(kFixtures / "corpus" / "financial");
  auto beh = load_corpus_dir(kFixtures / "corpus" / "behavioral");
  CondenseOptions opt;
  opt.provider_id = "mock";
  opt.created_at = parse_timestamp("2025-06-01T12:00:00Z");
  auto pack = condense(w.gw, w.templates, "q1", "What is an emergency fund?", {{&fin[0], 1.0}}, opt);
  CHECK_FALSE(pack.degraded);
  CHECK(pack.condensed_text.find(attribution(fin[0])) != std::string::npos);

  pack = condense(w.gw, w.templates, "q1", "What is an emergency fund?", {{&fin[0], 1.0}, {&beh[0], 0.5}}, opt);
  std::set<std::string> tags;
  for (const auto& a : find_attributions(pack.condensed_text)) tags.insert(a.corpus_tag);
  CHECK(tags == std::set<std::string>{"behavioral", "financial"});

  CHECK_THROWS_AS(condense(w.gw, w.templates, "q1", "x", {}, opt), ValidationError);
}

TEST_CASE("condense golden ContextPack") {
  World w;
  std::vector<Chunk> all = load_corpus_dir(kFixtures / "corpus" / "financial");
  for (auto& c : load_corpus_dir(kFixtures / "corpus" / "behavioral")) all.push_back(c);
  const auto golden = read_json_file(kFixtures / "golden" / "context_pack_c1.json");
  std::vector<ScoredChunk> kept;
  for (const auto& s : golden["selected_chunks"]) {
    const auto it = std::find_if(all.begin(), all.end(),
                                 [&](const Chunk& c) { return c.chunk_id == s["chunk_id"].get<std::string>(); });
    REQUIRE(it != all.end());
    kept.push_back({&*it, s["score"].get<double>()});
  }
  CondenseOptions opt;
  opt.provider_id = "mock";
  opt.created_at = parse_timestamp("2025-06-01T12:00:00Z");
  const auto pack = condense(
      w.gw, w.templates, "q-c1",
      "I'm 18 with about $40k in checking. I run a business (will reinvest some), have very low expenses, "
      "and my parents cover college/housing. What should I do so it's not just sitting idle?",
      kept, opt);
  CHECK(to_json(pack) == golden);
  CHECK(context_pack_from_json(golden).condensed_text == pack.condensed_text);
  std::set<std::string> selected;
  for (const auto& s : pack.selected_chunks) selected.insert(s.chunk_id);
  for (const auto& a : find_attributions(pack.condensed_text)) CHECK(selected.count(a.chunk_id) == 1);
}

TEST_CASE("condense budget and degraded packs") {
  World w;
  auto fin = load_corpus_dir(kFixtures / "corpus" / "financial");
  w.backend->set_responder("condense", [](const gateway::MockPrompt&) {
    std::string s;
    for (int i = 0; i < 400; ++i) s += "fact number " + std::to_string(i) + " [S1]. ";
    return s;
  });
  CondenseOptions opt;
  opt.provider_id = "mock";
  opt.budget = 100;
  auto pack = condense(w.gw, w.templates, "q", "budget?", {{&fin[0], 1.0}}, opt);
  CHECK(whitespace_token_count(pack.condensed_text) <= 100);
  CHECK_FALSE(find_attributions(pack.condensed_text).empty());

  w.backend->fail_next(100, gateway::FailureKind::kServer);
  pack = condense(w.gw, w.templates, "q", "another query", {{&fin[0], 1.0}}, opt);
  CHECK(pack.degraded);
  CHECK(pack.condensed_text.empty());
  CHECK(pack.selected_chunks.size() == 1);
}

TEST_CASE("mock condenser cites every chunk; build_context end to end") {
  World w;
  w.backend->set_responder("condense",
                           [](const gateway::MockPrompt& p) { return mock_condense_reply(p.user_prompt); });
  std::vector<Chunk> all = load_corpus_dir(kFixtures / "corpus" / "financial");
  for (auto& c : load_corpus_dir(kFixtures / "corpus" / "behavioral")) all.push_back(c);
  KnowledgeIndex index;
  index.build(w.gw, "mock", all);
  LexicalReranker lex;
  RetrievalConfig cfg;
  CondenseOptions opt;
  opt.provider_id = "mock";
  opt.created_at = parse_timestamp("2025-06-01");
  const auto pack = build_context(w.gw, index, lex, w.templates, "q", "How big should my emergency fund be?",
                                  cfg, opt);
  CHECK(pack.selected_chunks.size() == 15);
  CHECK(pack.reranker_id == "lexical-overlap");
  const auto atts = find_attributions(pack.condensed_text);
  CHECK(atts.size() == 15);
  CHECK(pack.condensed_text.find("Sources:") == std::string::npos);
  RetrievalConfig bad;
  bad.m_keep = 60;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}
