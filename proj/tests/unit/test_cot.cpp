#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <mutex>

#include <fmt/core.h>

#include "fincot/common/error.hpp"
#include "fincot/common/hash.hpp"
#include "fincot/common/text.hpp"
#include "fincot/corpus/pii.hpp"
#include "fincot/cot/engine.hpp"
#include "fincot/cot/offline.hpp"
#include "fincot/knowledge/index.hpp"

using namespace fincot;
using namespace fincot::cot;

namespace {

const std::filesystem::path kFixtures = FINCOT_FIXTURES_DIR;

const std::string kC1 =
    "I'm 18 with about $40k in checking. I run a business (will reinvest some), have very low expenses, and my "
    "parents cover college/housing. What should I do so it's not just sitting idle?";
const std::string kAnxious =
    "I'm drowning in credit card debt and I'm scared I'll never get out. I owe $14,000 across three cards. I don't "
    "know where to start. Is it normal to feel this lost?";

gateway::GatewayOptions no_sleep() {
  gateway::GatewayOptions o;
  o.sleeper = [](std::chrono::milliseconds) {};
  return o;
}

corpus::Query make_query(std::string id, std::string text) {
  corpus::Query q;
  q.query_id = std::move(id);
  q.text = std::move(text);
  q.category = corpus::Category::kDebtManagementCredit;
  q.source_post = "p";
  q.token_count = whitespace_token_count(q.text);
  return q;
}

// Two generators and two judges over offline responders, plus a fixture index.
struct World {
  gateway::Gateway gw{no_sleep()};
  std::map<std::string, std::shared_ptr<gateway::MockBackend>> backends;
  TemplateSet templates = TemplateSet::builtin();
  knowledge::KnowledgeIndex index;
  knowledge::LexicalReranker reranker;
  EngineConfig config;

  explicit World(gateway::FixtureTable fixtures = {}) {
    for (const char* id : {"gen-a", "gen-b", "judge-x", "judge-y"}) {
      auto b = std::make_shared<gateway::MockBackend>(fixtures);
      install_offline_responders(*b);
      gateway::ProviderProfile p;
      p.provider_id = id;
      p.price_in = 0.0005;
      p.price_out = 0.0015;
      gw.register_provider(p, b);
      backends[id] = b;
    }
    auto chunks = knowledge::load_corpus_dir(kFixtures / "corpus" / "financial");
    auto beh = knowledge::load_corpus_dir(kFixtures / "corpus" / "behavioral");
    chunks.insert(chunks.end(), beh.begin(), beh.end());
    index.build(gw, "gen-a", std::move(chunks));
    config.generators = {"gen-a", "gen-b"};
    config.jury.judges = jury::JuryConfig::evaluation_default("judge-x", "judge-y").judges;
    config.jury.judges[0].replicates = 2;
    config.jury.judges[1].replicates = 1;
    config.jury.workers = 1;
    config.condense_provider = "gen-a";
    config.created_at = parse_timestamp("2025-06-01T12:00:00Z");
    config.run_seed = 7;
  }
  void judges(gateway::MockResponder r) {
    backends["judge-x"]->set_responder("judge", r);
    backends["judge-y"]->set_responder("judge", r);
  }
  CotEngine engine() { return CotEngine(gw, templates, index, reranker, config); }
};

// Ranks presented responses so that texts containing `marker` come first.
gateway::MockResponder prefer(std::string marker) {
  return [marker](const gateway::MockPrompt& mp) {
    const auto p = jury::parse_judge_prompt(mp.user_prompt);
    std::vector<std::string> first, rest;
    for (std::size_t i = 0; i < p.texts.size(); ++i) {
      (p.texts[i].find(marker) != std::string::npos ? first : rest).push_back(p.labels[i]);
    }
    first.insert(first.end(), rest.begin(), rest.end());
    return join(first, " > ");
  };
}

}  // namespace

TEST_CASE("psych profile parsing") {
  const std::string reply =
      "Sentiment: negative\nEvidence: \"drowning in credit card debt\"\n"
      "Primary Emotions: Fear, overwhelm\nEvidence: \"scared I'll never get out\"\n"
      "Certainty: low\nEvidence: \"I don't know where to start\"\n"
      "Communicative Intents: seeking validation\nEvidence: \"Is it normal to feel this lost?\"";
  const auto p = parse_psych_profile(reply, kAnxious);
  CHECK(p.sentiment == Sentiment::kNegative);
  CHECK(p.primary_emotions == std::vector<std::string>{"fear", "overwhelm"});
  CHECK(p.certainty == Certainty::kLow);
  CHECK(p.communicative_intents == std::vector<std::string>{"seeking validation"});
  CHECK(p.evidence.at("Certainty") == "I don't know where to start");

  CHECK_THROWS_WITH_AS(parse_psych_profile("Sentiment: negative\nEvidence: \"drowning\"\nPrimary Emotions: fear", kAnxious),
                       "missing fields: Certainty, Communicative Intents", ValidationError);
  std::string ungrounded = reply;
  ungrounded.replace(ungrounded.find("I don't know where to start"), 27, "I have no clue whatsoever!!");
  CHECK_THROWS_WITH_AS(parse_psych_profile(ungrounded, kAnxious), "evidence not grounded: Certainty", ValidationError);
  CHECK_THROWS_WITH_AS(parse_psych_profile(replace_all(reply, "negative", "gloomy"), kAnxious),
                       "invalid sentiment 'gloomy'", ValidationError);
  const std::string no_quote = replace_all(reply, "Evidence: \"I don't know where to start\"\n", "");
  CHECK_THROWS_WITH_AS(parse_psych_profile(no_quote, kAnxious), "missing evidence: Certainty", ValidationError);
  // Markdown decoration and a line break inside the query are tolerated.
  const auto q2 = replace_all(kAnxious, " I don't", "\nI don't");
  CHECK(parse_psych_profile(replace_all(reply, "Certainty: low", "**Certainty:** low"), q2).certainty == Certainty::kLow);
}

TEST_CASE("fixture psych reply for an anxious debt query") {
  World w(gateway::FixtureTable::load(kFixtures / "mock" / "phase_fixtures.json"));
  auto engine = w.engine();
  const auto out = engine.run_phase(PhaseKind::kPsychCues, make_query("q-anx", kAnxious), {{"query", kAnxious}}, 3);
  const auto p = parse_psych_profile(out.chosen().text, kAnxious);
  CHECK(p.sentiment == Sentiment::kNegative);
  CHECK(p.certainty == Certainty::kLow);
  CHECK(p.primary_emotions == std::vector<std::string>{"fear", "overwhelm"});
}

TEST_CASE("offline psych responder grounds every quote") {
  const std::vector<std::string> queries{
      kAnxious, kC1, "How do I roll over an old 401(k)?", "We're finally debt free and excited! Should we invest now?",
      "Is it okay to skip my Roth IRA this year? I definitely need a new roof."};
  for (const auto& q : queries) {
    for (std::int64_t seed = 0; seed < 4; ++seed) {
      const auto prompt = render_prompt(TemplateSet::builtin().get("psych_cues"), {{"query", q}});
      CHECK_NOTHROW(parse_psych_profile(mock_phase_reply(PhaseKind::kPsychCues, prompt, seed), q));
    }
  }
}

TEST_CASE("delimiters and assembly") {
  CHECK(phase_delimiter(PhaseKind::kPsychCues) == "## [PHASE: PsychCues]");
  CHECK(has_phase_delimiter("text ## [PHASE: QueryAnalysis] more"));
  CHECK(has_phase_delimiter("[PHASE:ResponseRubric]"));
  CHECK_FALSE(has_phase_delimiter("Phase one: budget. [Bogleheads Wiki; financial; x#001]"));
  std::vector<PhaseOutput> phases;
  for (auto kind : kCotPhases) {
    PhaseOutput p;
    p.phase = kind;
    p.candidates = {PhaseCandidate{"c0", kind, "skip", "g", 0.3, 0}, PhaseCandidate{"c1", kind, std::string(phase_name(kind)) + " text\n", "g", 0.7, 0}};
    p.chosen_index = 1;
    phases.push_back(p);
  }
  CHECK(assemble_cot(phases) ==
        "## [PHASE: QueryAnalysis]\nQueryAnalysis text\n\n## [PHASE: ContextAnalysis]\nContextAnalysis text\n\n"
        "## [PHASE: PsychCues]\nPsychCues text\n\n## [PHASE: ResponseRubric]\nResponseRubric text");
}

TEST_CASE("unanimous jury picks candidate 0") {
  World w;
  w.backends["gen-a"]->set_responder("response_rubric", [](const gateway::MockPrompt&) { return std::string("1. Lead with the alpha plan."); });
  w.backends["gen-b"]->set_responder("response_rubric", [](const gateway::MockPrompt&) { return std::string("1. Lead with the beta plan."); });
  w.judges(prefer("alpha"));
  auto engine = w.engine();
  const auto q = make_query("q1", kAnxious);
  const auto out = engine.run_phase(PhaseKind::kResponseRubric, q,
                                    {{"query", q.text}, {"query_analysis", "x"}, {"context_analysis", "y"}, {"psych_cues", "z"}}, 2);
  CHECK(out.juried);
  CHECK(out.ballots.size() == 3);
  CHECK(out.chosen_index == 0);
  CHECK(out.summary->mean_points == std::vector<double>{1.0, 0.0});
  CHECK(out.candidates[0].temperature == 0.3);
  CHECK(out.candidates[1].temperature == 0.7);
  CHECK(out.candidates[1].provider_id == "gen-b");
}

TEST_CASE("Borda tie between candidates 1 and 2 goes to candidate 1") {
  World w;
  w.config.generators = {"gen-a", "gen-b", "gen-a"};
  w.config.jury.judges.resize(1);  // judge-x, two replicates
  const auto reply = [](std::string_view tag) {
    return [tag = std::string(tag)](const gateway::MockPrompt&) { return tag; };
  };
  // gen-a serves c0 and c2; its reply carries the request seed so the two differ.
  w.backends["gen-a"]->set_responder("response_rubric", [](const gateway::MockPrompt& mp) {
    return fmt::format("1. plan seed {}", mp.seed);
  });
  w.backends["gen-b"]->set_responder("response_rubric", reply("1. plan two"));
  auto engine = w.engine();
  const auto q = make_query("q-tie", kAnxious);
  const SlotValues slots{{"query", q.text}, {"query_analysis", "x"}, {"context_analysis", "y"}, {"psych_cues", "z"}};
  // Candidate seeds are derive_seed(run_seed, query, phase, candidate id), 31 bits.
  const auto text_for = [&](const char* cid) {
    return fmt::format("1. plan seed {}", derive_seed(w.config.run_seed, {"q-tie", "ResponseRubric", cid}) & 0x7fffffffULL);
  };
  const std::string t0 = text_for("c0"), t1 = "1. plan two", t2 = text_for("c2");
  std::atomic<int> n{0};
  w.judges([&](const gateway::MockPrompt& mp) {
    const auto p = jury::parse_judge_prompt(mp.user_prompt);
    std::map<std::string, std::string> label_of;
    for (std::size_t i = 0; i < p.texts.size(); ++i) label_of[p.texts[i]] = p.labels[i];
    const bool odd = n.fetch_add(1) % 2 == 1;
    return fmt::format("{} > {} > {}", label_of[odd ? t2 : t1], label_of[odd ? t1 : t2], label_of[t0]);
  });
  const auto out = engine.run_phase(PhaseKind::kResponseRubric, q, slots, 3);
  REQUIRE(out.summary);
  CHECK(out.ballots.size() == 2);
  CHECK(out.summary->mean_points == std::vector<double>{0.0, 1.5, 1.5});
  CHECK(out.chosen_index == 1);
}

TEST_CASE("QueryAnalysis fixture run on the C1 query") {
  World w(gateway::FixtureTable::load(kFixtures / "mock" / "phase_fixtures.json"));
  auto engine = w.engine();
  const auto out = engine.run_phase(PhaseKind::kQueryAnalysis, make_query("c1", kC1), {{"query", kC1}}, 3);
  REQUIRE(out.candidates.size() == 3);
  const std::string& text = out.chosen().text;
  const auto conflict = text.find("### Primary Conflict\n");
  const auto stakeholders = text.find("### Key Stakeholders\n");
  const auto facts = text.find("### Essential Financial Facts\n");
  REQUIRE(conflict != std::string::npos);
  REQUIRE(stakeholders != std::string::npos);
  REQUIRE(facts != std::string::npos);
  CHECK(conflict < stakeholders);
  CHECK(stakeholders < facts);
  CHECK(text.find("About $40k in a checking account") != std::string::npos);
  CHECK(text.find("parents") != std::string::npos);
  CHECK_NOTHROW(validate_phase_text(PhaseKind::kQueryAnalysis, text, kC1));
  CHECK_THROWS_WITH_AS(validate_phase_text(PhaseKind::kQueryAnalysis, "### Primary Conflict\nx", kC1),
                       "missing sections: Key Stakeholders, Essential Financial Facts", ValidationError);
}

TEST_CASE("end-to-end record on one query") {
  World w;
  auto engine = w.engine();
  const auto rec = engine.generate_record(make_query("q-c1", kC1));
  CHECK_FALSE(rec.degraded);
  REQUIRE(rec.phase_outputs.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(rec.phase_outputs[i].phase == kCotPhases[i]);
    CHECK(rec.phase_outputs[i].candidates.size() == 3);
    CHECK(rec.phase_outputs[i].ballots.size() == 3);
    CHECK(rec.phase_outputs[i].chosen_index == jury::select_best(*rec.phase_outputs[i].summary));
  }
  REQUIRE(rec.final_output);
  CHECK_FALSE(rec.final_output->juried);
  CHECK(rec.final_output->candidates.size() == 1);
  CHECK_NOTHROW(validate_record(rec));
  CHECK(rec.psych_profile.has_value());
  CHECK(rec.token_counts.cot == whitespace_token_count(rec.assembled_cot));
  CHECK(rec.assembled_cot.rfind("## [PHASE: QueryAnalysis]\n", 0) == 0);
  CHECK_FALSE(has_phase_delimiter(rec.final_response));
  CHECK_FALSE(corpus::contains_pii(rec.final_response));
  CHECK(rec.context.selected_chunks.size() == 15);
  CHECK(rec.cost > 0.0);
  const auto j = to_json(rec);
  for (const char* key : {"query", "context", "phase_outputs", "final_output", "psych_profile", "assembled_cot",
                          "final_response", "token_counts", "degraded"}) {
    CHECK(j.contains(key));
  }
  // Same config and seed, same record.
  CHECK(to_json(w.engine().generate_record(make_query("q-c1", kC1))).dump() == j.dump());
}

TEST_CASE("phase DAG order") {
  World w;
  auto engine = w.engine();
  std::mutex mu;
  std::vector<std::pair<PhaseKind, bool>> events;
  engine.set_observer([&](PhaseKind k, bool done) {
    std::lock_guard lock(mu);
    events.emplace_back(k, done);
  });
  engine.generate_record(make_query("q-dag", kAnxious));
  const auto at = [&](PhaseKind k, bool done) {
    for (std::size_t i = 0; i < events.size(); ++i) {
      if (events[i] == std::pair{k, done}) return i;
    }
    FAIL("missing event");
    return std::size_t{0};
  };
  REQUIRE(events.size() == 10);
  CHECK(at(PhaseKind::kQueryAnalysis, true) < at(PhaseKind::kContextAnalysis, false));
  CHECK(at(PhaseKind::kQueryAnalysis, true) < at(PhaseKind::kPsychCues, false));
  CHECK(at(PhaseKind::kContextAnalysis, true) < at(PhaseKind::kResponseRubric, false));
  CHECK(at(PhaseKind::kPsychCues, true) < at(PhaseKind::kResponseRubric, false));
  CHECK(at(PhaseKind::kResponseRubric, true) < at(PhaseKind::kFinalResponse, false));
}

TEST_CASE("leaked delimiter in the final response rejects the record") {
  World w;
  for (const char* g : {"gen-a", "gen-b"}) {
    w.backends[g]->set_responder("final_response", [](const gateway::MockPrompt&) {
      return std::string("Here is my advice.\n## [PHASE: ResponseRubric]\n1. Pay the card.");
    });
  }
  auto engine = w.engine();
  const auto rec = engine.generate_record(make_query("q-leak", kAnxious));
  CHECK(rec.degraded);
  REQUIRE_FALSE(rec.degraded_reasons.empty());
  CHECK(rec.degraded_reasons.front().find("phase delimiter in output") != std::string::npos);
  CHECK_THROWS_AS(validate_record(rec), ValidationError);
  // The standalone check catches it too.
  World fresh;
  auto ok = fresh.engine().generate_record(make_query("q-ok", kAnxious));
  ok.final_response += "\n[PHASE: QueryAnalysis]";
  ok.token_counts.response = whitespace_token_count(ok.final_response);
  CHECK_THROWS_WITH_AS(validate_record(ok), "record q-ok: phase delimiter leaked into final response", ValidationError);
}

TEST_CASE("candidate failures") {
  World w;
  w.backends["gen-a"]->set_responder("psych_cues", [](const gateway::MockPrompt&) { return std::string("Sentiment: sad"); });
  w.backends["gen-b"]->set_responder("psych_cues", [](const gateway::MockPrompt&) { return std::string(""); });
  auto rec = w.engine().generate_record(make_query("q-fail", kAnxious));
  CHECK(rec.degraded);
  CHECK(rec.degraded_reasons.front().rfind("PsychCues: all 3 candidates failed", 0) == 0);
  // Each candidate asked 1 + 3 times.
  CHECK(w.backends["gen-b"]->calls() > 0);

  World one;
  one.backends["gen-b"]->set_responder("query_analysis", [](const gateway::MockPrompt&) { return std::string("no sections"); });
  const auto out = one.engine().run_phase(PhaseKind::kQueryAnalysis, make_query("q1", kC1), {{"query", kC1}}, 2);
  CHECK(out.candidates.size() == 1);
  CHECK(out.failed_candidates == 1);
  CHECK(out.degraded);
  CHECK_FALSE(out.juried);
}

TEST_CASE("engine config") {
  World w;
  const auto j = to_json(w.config);
  CHECK(to_json(engine_config_from_json(j)) == j);
  auto bad = w.config;
  bad.n_candidates = 1;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = w.config;
  bad.temperatures = {0.3, 2.5};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = w.config;
  bad.generators = {"nobody"};
  CHECK_THROWS_AS(CotEngine(w.gw, w.templates, w.index, w.reranker, bad), ValidationError);
}
