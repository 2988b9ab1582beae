#include "fincot/cot/engine.hpp"

#include <future>
#include <regex>

#include <fmt/core.h>
#include <spdlog/spdlog.h>

#include "fincot/common/error.hpp"
#include "fincot/common/hash.hpp"
#include "fincot/common/parallel.hpp"
#include "fincot/common/text.hpp"
#include "fincot/gateway/reask.hpp"

namespace fincot::cot {

std::string phase_delimiter(PhaseKind kind) { return fmt::format("## [PHASE: {}]", phase_name(kind)); }

bool has_phase_delimiter(std::string_view text) {
  static const std::regex re(R"(\[PHASE:\s*\w+\])");
  return std::regex_search(text.begin(), text.end(), re);
}

std::string assemble_cot(const std::vector<PhaseOutput>& phases) {
  std::string out;
  for (const auto& p : phases) {
    if (!out.empty()) out += "\n\n";
    out += phase_delimiter(p.phase) + "\n" + std::string(trim(p.chosen().text));
  }
  return out;
}

const PhaseOutput& CotRecord::phase(PhaseKind kind) const {
  for (const auto& p : phase_outputs) {
    if (p.phase == kind) return p;
  }
  throw ValidationError(fmt::format("record {} has no {} output", query.query_id, phase_name(kind)));
}

json to_json(const PhaseOutput& p) {
  json cands = json::array();
  for (const auto& c : p.candidates) {
    cands.push_back({{"candidate_id", c.candidate_id},
                     {"text", c.text},
                     {"provider_id", c.provider_id},
                     {"temperature", c.temperature},
                     {"cost", c.cost}});
  }
  json ballots = json::array();
  for (const auto& b : p.ballots) ballots.push_back(jury::to_json(b));
  json discarded = json::array();
  for (const auto& a : p.discarded_ballots) discarded.push_back(jury::to_json(a));
  return {{"phase", phase_name(p.phase)},
          {"candidates", cands},
          {"ballots", ballots},
          {"discarded_ballots", discarded},
          {"summary", p.summary ? jury::to_json(*p.summary) : json(nullptr)},
          {"chosen_index", p.chosen_index},
          {"chosen_candidate_id", p.candidates.empty() ? "" : p.chosen().candidate_id},
          {"failed_candidates", p.failed_candidates},
          {"juried", p.juried},
          {"degraded", p.degraded},
          {"cost", p.cost}};
}

json to_json(const CotRecord& r) {
  json phases = json::array();
  for (const auto& p : r.phase_outputs) phases.push_back(to_json(p));
  return {{"query", corpus::to_json(r.query)},
          {"context", knowledge::to_json(r.context)},
          {"phase_outputs", phases},
          {"final_output", r.final_output ? to_json(*r.final_output) : json(nullptr)},
          {"psych_profile", r.psych_profile ? to_json(*r.psych_profile) : json(nullptr)},
          {"assembled_cot", r.assembled_cot},
          {"final_response", r.final_response},
          {"token_counts", {{"query", r.token_counts.query}, {"cot", r.token_counts.cot}, {"response", r.token_counts.response}}},
          {"degraded", r.degraded},
          {"degraded_reasons", r.degraded_reasons},
          {"cost", r.cost}};
}

void validate_record(const CotRecord& r) {
  const auto fail = [&](const std::string& why) {
    throw ValidationError(fmt::format("record {}: {}", r.query.query_id, why));
  };
  if (r.degraded) fail("degraded: " + join(r.degraded_reasons, "; "));
  if (r.phase_outputs.size() != std::size(kCotPhases)) fail("expected 4 phase outputs");
  for (std::size_t i = 0; i < r.phase_outputs.size(); ++i) {
    const auto& p = r.phase_outputs[i];
    if (p.phase != kCotPhases[i]) fail(fmt::format("phase {} out of order", phase_name(p.phase)));
    if (p.candidates.empty() || p.chosen_index >= p.candidates.size()) fail("phase without a chosen candidate");
    if (p.juried && p.candidates.size() < 2) fail(fmt::format("{} juried with fewer than 2 candidates", phase_name(p.phase)));
    if (p.summary && jury::select_best(*p.summary) != p.chosen_index) {
      fail(fmt::format("{} chosen_index is not the Borda argmax", phase_name(p.phase)));
    }
    for (const auto& c : p.candidates) {
      if (trim(c.text).empty()) fail("empty candidate text");
    }
  }
  if (!r.psych_profile) fail("missing psych profile");
  if (trim(r.final_response).empty()) fail("empty final response");
  if (has_phase_delimiter(r.final_response)) fail("phase delimiter leaked into final response");
  if (r.assembled_cot != assemble_cot(r.phase_outputs)) fail("assembled_cot does not match chosen phases");
  if (r.token_counts.query != whitespace_token_count(r.query.text) ||
      r.token_counts.cot != whitespace_token_count(r.assembled_cot) ||
      r.token_counts.response != whitespace_token_count(r.final_response)) {
    fail("token counts do not match the record text");
  }
}

void EngineConfig::validate() const {
  if (generators.empty()) throw ValidationError("engine: at least one generator provider required");
  if (temperatures.empty()) throw ValidationError("engine: temperature ladder is empty");
  for (double t : temperatures) {
    if (t < 0 || t > 2) throw ValidationError(fmt::format("engine: temperature {} outside [0, 2]", t));
  }
  if (n_candidates < 2) throw ValidationError("engine: n_candidates must be >= 2");
  if (max_tokens < 1) throw ValidationError("engine: max_tokens must be >= 1");
  if (max_reasks < 0) throw ValidationError("engine: max_reasks must be >= 0");
  if (condense_provider.empty()) throw ValidationError("engine: condense_provider required");
  jury.validate();
  retrieval.validate();
}

json to_json(const EngineConfig& c) {
  json j{{"generators", c.generators},
         {"temperatures", c.temperatures},
         {"n_candidates", c.n_candidates},
         {"jury_final", c.jury_final},
         {"max_tokens", c.max_tokens},
         {"max_reasks", c.max_reasks},
         {"run_seed", c.run_seed},
         {"jury", jury::to_json(c.jury)},
         {"retrieval",
          {{"k_per_corpus", c.retrieval.k_per_corpus},
           {"m_keep", c.retrieval.m_keep},
           {"condense_budget", c.retrieval.condense_budget}}},
         {"condense_provider", c.condense_provider}};
  if (c.created_at) j["created_at"] = format_utc(*c.created_at);
  return j;
}

EngineConfig engine_config_from_json(const json& j) {
  try {
    EngineConfig c;
    c.generators = j.at("generators").get<std::vector<std::string>>();
    c.temperatures = j.value("temperatures", c.temperatures);
    c.n_candidates = j.value("n_candidates", c.n_candidates);
    c.jury_final = j.value("jury_final", false);
    c.max_tokens = j.value("max_tokens", c.max_tokens);
    c.max_reasks = j.value("max_reasks", c.max_reasks);
    c.run_seed = j.value("run_seed", std::uint64_t{0});
    c.jury = jury::jury_config_from_json(j.at("jury"));
    if (j.contains("retrieval")) {
      const auto& r = j.at("retrieval");
      c.retrieval.k_per_corpus = r.value("k_per_corpus", c.retrieval.k_per_corpus);
      c.retrieval.m_keep = r.value("m_keep", c.retrieval.m_keep);
      c.retrieval.condense_budget = r.value("condense_budget", c.retrieval.condense_budget);
    }
    c.condense_provider = j.at("condense_provider").get<std::string>();
    if (j.contains("created_at")) c.created_at = parse_timestamp_value(j.at("created_at"));
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("bad engine config: {}", e.what()));
  }
}

void validate_phase_text(PhaseKind kind, std::string_view text, std::string_view query) {
  if (trim(text).empty()) throw ValidationError("empty output");
  if (has_phase_delimiter(text)) throw ValidationError("phase delimiter in output");
  if (kind == PhaseKind::kQueryAnalysis) {
    const std::string lowered = to_lower(text);
    std::vector<std::string> missing;
    for (const char* section : {"Primary Conflict", "Key Stakeholders", "Essential Financial Facts"}) {
      if (lowered.find(to_lower(section)) == std::string::npos) missing.emplace_back(section);
    }
    if (!missing.empty()) throw ValidationError(fmt::format("missing sections: {}", join(missing, ", ")));
  } else if (kind == PhaseKind::kPsychCues) {
    parse_psych_profile(text, query);
  }
}

CotEngine::CotEngine(gateway::Gateway& gw, const TemplateSet& templates, const knowledge::KnowledgeIndex& index,
                     knowledge::Reranker& reranker, EngineConfig config)
    : gw_(gw), templates_(templates), index_(index), reranker_(reranker), config_(std::move(config)) {
  config_.validate();
  config_.jury.run_seed = config_.run_seed;
  for (const auto& g : config_.generators) {
    if (!gw_.has_provider(g)) throw ValidationError(fmt::format("engine: unknown generator provider '{}'", g));
  }
  if (!gw_.has_provider(config_.condense_provider)) {
    throw ValidationError(fmt::format("engine: unknown condense provider '{}'", config_.condense_provider));
  }
  jury::Jury probe(gw_, config_.jury);  // validates judge providers up front
  for (auto kind : kCotPhases) templates_.for_phase(kind);
  templates_.for_phase(PhaseKind::kFinalResponse);
}

PhaseOutput CotEngine::run_phase(PhaseKind kind, const corpus::Query& query, const SlotValues& slots,
                                 std::size_t n_candidates) const {
  if (n_candidates < 1) throw ValidationError("run_phase: n_candidates must be >= 1");
  if (observer_) observer_(kind, false);
  const auto& tmpl = templates_.for_phase(kind);
  gateway::ChatRequest base;
  base.system_prompt = gateway::task_marker(tmpl.name);
  base.user_prompt = render_prompt(tmpl, slots);
  base.max_tokens = config_.max_tokens;

  struct Attempt {
    std::optional<PhaseCandidate> candidate;
    std::string error;
    double cost = 0.0;
  };
  std::vector<Attempt> attempts(n_candidates);
  parallel_for(n_candidates, n_candidates, [&](std::size_t i) {
    gateway::ChatRequest req = base;
    req.provider_id = config_.generators[i % config_.generators.size()];
    req.temperature = config_.temperatures[i % config_.temperatures.size()];
    const std::string cid = "c" + std::to_string(i);
    req.seed = static_cast<std::int64_t>(
        derive_seed(config_.run_seed, {query.query_id, phase_name(kind), cid}) & 0x7fffffffULL);
    try {
      auto outcome = gateway::ask_until_valid(gw_, req, config_.max_reasks, [&](const std::string& reply) {
        validate_phase_text(kind, reply, query.text);
        return reply;
      });
      attempts[i].cost = outcome.cost;
      if (outcome.value) {
        attempts[i].candidate =
            PhaseCandidate{cid, kind, std::string(trim(*outcome.value)), req.provider_id, req.temperature, outcome.cost};
      } else {
        attempts[i].error = outcome.last_error;
      }
    } catch (const ProviderError& e) {
      attempts[i].error = e.what();
    }
  });

  PhaseOutput out;
  out.phase = kind;
  std::string last_error;
  for (auto& a : attempts) {
    out.cost += a.cost;
    if (a.candidate) {
      out.candidates.push_back(std::move(*a.candidate));
    } else {
      ++out.failed_candidates;
      last_error = a.error;
    }
  }
  if (out.candidates.empty()) {
    throw PhaseFailure(fmt::format("{}: all {} candidates failed ({})", phase_name(kind), n_candidates, last_error));
  }

  if (out.candidates.size() >= 2) {
    jury::RankTask task;
    task.query_id = query.query_id;
    task.query_text = query.text;
    task.criterion = jury::Criterion::kPhaseQuality;
    task.scope = std::string(phase_name(kind));
    for (const auto& c : out.candidates) {
      task.candidate_ids.push_back(c.candidate_id);
      task.candidate_texts.push_back(c.text);
    }
    task.identifiers = config_.generators;
    jury::Jury jury(gw_, config_.jury);
    auto res = jury.rank(task);
    out.juried = true;
    out.cost += res.cost;
    out.ballots = std::move(res.ballots);
    out.discarded_ballots = std::move(res.discarded);
    if (res.summary) {
      out.summary = std::move(res.summary);
      out.chosen_index = jury::select_best(*out.summary);
    } else {
      out.degraded = true;  // every ballot was discarded
    }
  } else if (n_candidates >= 2) {
    out.degraded = true;  // one survivor, nothing to compare
  }
  if (observer_) observer_(kind, true);
  return out;
}

CotRecord CotEngine::generate_record(const corpus::Query& query) const {
  CotRecord rec;
  rec.query = query;
  const auto degrade = [&](std::string why) {
    rec.degraded = true;
    rec.degraded_reasons.push_back(std::move(why));
  };
  try {
    knowledge::CondenseOptions copts;
    copts.provider_id = config_.condense_provider;
    copts.budget = config_.retrieval.condense_budget;
    copts.created_at = config_.created_at;
    copts.seed = static_cast<std::int64_t>(derive_seed(config_.run_seed, {query.query_id, "condense"}) & 0x7fffffffULL);
    copts.max_kept = config_.retrieval.m_keep;
    rec.context = knowledge::build_context(gw_, index_, reranker_, templates_, query.query_id, query.text,
                                           config_.retrieval, copts);
    if (rec.context.degraded) degrade("context pack degraded");

    const std::size_t n = config_.n_candidates;
    auto qa = run_phase(PhaseKind::kQueryAnalysis, query, {{"query", query.text}}, n);
    const std::string qa_text = qa.chosen().text;
    rec.phase_outputs.push_back(std::move(qa));

    // ContextAnalysis and PsychCues only need the query analysis.
    auto ca_future = std::async(std::launch::async, [&] {
      return run_phase(PhaseKind::kContextAnalysis, query,
                       {{"query", query.text}, {"query_analysis", qa_text}, {"context_pack", rec.context.condensed_text}}, n);
    });
    std::optional<PhaseOutput> pc;
    std::exception_ptr pc_error;
    try {
      pc = run_phase(PhaseKind::kPsychCues, query, {{"query", query.text}}, n);
    } catch (...) {
      pc_error = std::current_exception();
    }
    auto ca = ca_future.get();
    if (pc_error) std::rethrow_exception(pc_error);
    rec.psych_profile = parse_psych_profile(pc->chosen().text, query.text);
    const std::string ca_text = ca.chosen().text, pc_text = pc->chosen().text;
    rec.phase_outputs.push_back(std::move(ca));
    rec.phase_outputs.push_back(std::move(*pc));

    rec.phase_outputs.push_back(run_phase(PhaseKind::kResponseRubric, query,
                                          {{"query", query.text},
                                           {"query_analysis", qa_text},
                                           {"context_analysis", ca_text},
                                           {"psych_cues", pc_text}},
                                          n));
    for (const auto& p : rec.phase_outputs) {
      if (p.degraded) degrade(fmt::format("{}: no jury verdict", phase_name(p.phase)));
    }
    rec.assembled_cot = assemble_cot(rec.phase_outputs);

    auto fr = run_phase(PhaseKind::kFinalResponse, query,
                        {{"query", query.text}, {"chain_of_thought", rec.assembled_cot}},
                        config_.jury_final ? n : 1);
    if (fr.degraded) degrade("FinalResponse: no jury verdict");
    rec.final_response = fr.chosen().text;
    rec.final_output = std::move(fr);
    if (has_phase_delimiter(rec.final_response)) degrade("phase delimiter leaked into final response");
  } catch (const Error& e) {
    degrade(e.what());
  }
  rec.token_counts = {whitespace_token_count(query.text), whitespace_token_count(rec.assembled_cot),
                      whitespace_token_count(rec.final_response)};
  for (const auto& p : rec.phase_outputs) rec.cost += p.cost;
  if (rec.final_output) rec.cost += rec.final_output->cost;
  if (rec.degraded) {
    spdlog::warn("record {} degraded: {}", query.query_id, join(rec.degraded_reasons, "; "));
  }
  return rec;
}

std::vector<CotRecord> CotEngine::generate_batch(const std::vector<corpus::Query>& queries,
                                                 std::size_t workers) const {
  std::vector<CotRecord> out(queries.size());
  parallel_for(queries.size(), workers, [&](std::size_t i) { out[i] = generate_record(queries[i]); });
  return out;
}

}  // namespace fincot::cot
