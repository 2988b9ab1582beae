#include "fincot/jury/jury.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/core.h>
#include <spdlog/spdlog.h>

#include "fincot/common/error.hpp"
#include "fincot/common/hash.hpp"
#include "fincot/common/parallel.hpp"
#include "fincot/common/rng.hpp"
#include "fincot/common/text.hpp"
#include "fincot/gateway/reask.hpp"

namespace fincot::jury {

namespace {

Rubric make_accuracy() {
  Rubric r;
  r.persona = "certified financial planner reviewing advice for factual soundness";
  r.target_aspect = "financial accuracy";
  r.definition =
      "Accuracy measures whether the financial concepts, figures and recommendations in a response "
      "are correct and appropriate for the situation described in the query.";
  r.primary =
      "- Read the query, and the search results when they are provided, before judging any response.\n"
      "- Check every financial claim: account rules, tax treatment, interest math, product behavior.\n"
      "- Prefer responses whose recommendations are safe and correct for this user's circumstances.";
  r.penalties =
      "- Penalize a response if and only if it gives wrong or harmful advice.\n"
      "- Penalize financial concepts that are inappropriate for the query.";
  r.key_points =
      "- Do not penalize style, tone, length or relevance. Rank solely on the accuracy of the financial "
      "concepts in the text.";
  return r;
}

Rubric make_plausibility() {
  Rubric r;
  r.persona = "experienced personal finance editor";
  r.target_aspect = "plausibility";
  r.definition =
      "A response is plausible if it sounds reasonable and believable to a typical user: its reasoning has "
      "a logical flow and a coherent structure, and its approach to the problem is sensible.";
  r.primary =
      "- Logical flow and coherent reasoning structure.\n"
      "- A sensible approach to the user's problem.";
  r.penalties =
      "- Unnecessarily verbose text or excessive detail.\n"
      "- Complex or hard-to-follow reasoning.";
  r.key_points = "- Do not penalize accuracy or relevance. Rank solely on plausibility.";
  return r;
}

Rubric make_relevance() {
  Rubric r;
  r.persona = "demanding client who asked the question";
  r.target_aspect = "relevance";
  r.definition =
      "A response is relevant if it addresses every component of the user's query, uses the specific "
      "figures, constraints and details the user mentioned, and answers immediately without a generic "
      "introduction.";
  r.primary =
      "- Every part of the query is answered.\n"
      "- The user's own numbers, constraints and details are worked into the answer.\n"
      "- The answer starts right away.";
  r.penalties =
      "- Partial relevance: some component of the query is ignored.\n"
      "- Added context that is not relevant to the query.";
  r.key_points = "- Do not penalize style or accuracy. Rank solely on relevance to this query.";
  return r;
}

Rubric make_phase_quality() {
  Rubric r;
  r.persona = "senior reviewer of structured financial reasoning";
  r.target_aspect = "phase quality";
  r.definition =
      "The responses are candidate outputs for the {scope} step of a reasoning chain about the query. "
      "Quality means the output does exactly what that step asks, is grounded in the query, and is "
      "usable by the later steps.";
  r.primary =
      "- The required sections for the step are present and filled in.\n"
      "- Statements are grounded in the query and any supplied context.\n"
      "- Concise, specific content a downstream step can build on.";
  r.penalties =
      "- Invented facts about the user.\n"
      "- Missing or empty sections.\n"
      "- Drifting into a later step's job.";
  r.key_points = "- Judge the step output on its own terms. A final answer to the user is not expected.";
  return r;
}

std::vector<std::string> make_exemplars() {
  return {
      "Query: I have $3,000 in credit card debt at 24% APR and $3,000 in savings. Should I pay it off?\n"
      "Response A: Keep a small emergency buffer, then put the rest toward the 24% card; no savings "
      "account earns close to that.\n"
      "Response B: Never touch savings. Pay the minimum and invest the rest in stocks.\n"
      "Ranking: Response A > Response B",
      "Query: Can I contribute to a Roth IRA if I only have freelance income?\n"
      "Response A: Yes. Net self-employment income counts as earned income, up to the annual limit.\n"
      "Response B: Roth IRAs are only for people with a W-2 employer plan.\n"
      "Ranking: Response A > Response B",
      "Query: How big should my emergency fund be if my income is irregular?\n"
      "Response A: Many people hold three to six months of expenses.\n"
      "Response B: With irregular income, aim for the upper end, six months or more of essential "
      "expenses, and build it from your higher-earning months.\n"
      "Ranking: Response B > Response A",
      "Query: Is whole life insurance a good investment for a 25-year-old with no dependents?\n"
      "Response A: Usually not. Without dependents there is little need for coverage, and the fees are high.\n"
      "Response B: Yes, it is the safest investment there is.\n"
      "Ranking: Response A > Response B",
      "Query: Should I put my bonus in my 401(k) or pay down my 3% mortgage faster?\n"
      "Response A: Capture any employer match first; beyond that, compare the 3% guaranteed return with "
      "your expected market return and your comfort with risk.\n"
      "Response B: Pay the mortgage. Debt is always bad.\n"
      "Ranking: Response A > Response B",
  };
}

constexpr std::string_view kSystemIntro =
    "You are an impartial judge. Reply with the ranking line only, best first.";

int shots_for(const JudgeSpec& j, const JuryConfig& c) { return j.n_shots.value_or(c.n_shots); }

}  // namespace

const Rubric& rubric(Criterion c) {
  static const Rubric acc = make_accuracy();
  static const Rubric pla = make_plausibility();
  static const Rubric rel = make_relevance();
  static const Rubric pq = make_phase_quality();
  switch (c) {
    case Criterion::kAccuracy: return acc;
    case Criterion::kPlausibility: return pla;
    case Criterion::kRelevance: return rel;
    case Criterion::kPhaseQuality: return pq;
  }
  return pq;
}

const std::vector<std::string>& builtin_exemplars() {
  static const std::vector<std::string> pool = make_exemplars();
  return pool;
}

std::string render_judge_prompt(const JudgePromptParts& parts) {
  if (parts.presented == nullptr) throw ValidationError("judge prompt: no presented responses");
  const Rubric& r = rubric(parts.criterion);
  const auto& p = *parts.presented;
  std::string definition = replace_all(r.definition, "{scope}", parts.scope.empty() ? "current" : parts.scope);

  std::string out = fmt::format(
      "You are a {}. Your task is to rank financial advice responses from best to worst based *solely* "
      "on the strict definition of {}.\n\n",
      r.persona, r.target_aspect);
  out += "### **Evaluation Criteria**\n" + definition + "\n\n";
  out += "#### **I. Primary Criteria (What to look for):**\n" + r.primary + "\n\n";
  out += "#### **II. Explicit Penalties (What to penalize):**\n" + r.penalties + "\n\n";
  out += "#### ** III. Key Points to note:**\n" + r.key_points + "\n";
  out += fmt::format(
      "- Rank all {} responses, each label exactly once, with no ties. Reply with one line in the form "
      "\"Response X > Response Y > ...\", best first.\n",
      p.labels.size());
  if (!parts.exemplars.empty()) {
    out += "\n#### **Examples:**\n" + join(parts.exemplars, "\n\n") + "\n";
  }
  out += "---\n\n";
  out += "**Query:** " + parts.query + "\n\n";
  if (!parts.search_results.empty()) out += "**Search Results:**\n" + parts.search_results + "\n\n";
  out += "**Responses to Rank:**\n";
  for (std::size_t i = 0; i < p.labels.size(); ++i) {
    if (i > 0) out += "\n\n";
    out += p.labels[i] + ":\n" + p.texts[i];
  }
  return out;
}

void JuryConfig::validate() const {
  if (judges.empty()) throw ValidationError("jury: at least one judge required");
  if (max_reasks < 0) throw ValidationError("jury: max_reasks must be >= 0");
  if (n_shots < 0) throw ValidationError("jury: n_shots must be >= 0");
  std::set<std::string> ids;
  const std::size_t pool = exemplars.empty() ? builtin_exemplars().size() : exemplars.size();
  for (const auto& j : judges) {
    if (j.judge_id.empty() || j.provider_id.empty()) throw ValidationError("jury: judge needs judge_id and provider_id");
    if (!ids.insert(j.judge_id).second) throw ValidationError(fmt::format("jury: duplicate judge '{}'", j.judge_id));
    if (j.replicates < 1) throw ValidationError(fmt::format("jury: judge '{}' needs replicates >= 1", j.judge_id));
    if (j.temperature < 0 || j.temperature > 2) throw ValidationError("jury: judge temperature outside [0, 2]");
    if (j.max_tokens < 1) throw ValidationError("jury: max_tokens must be >= 1");
    const int shots = shots_for(j, *this);
    if (shots < 0 || static_cast<std::size_t>(shots) > pool) {
      throw ValidationError(fmt::format("jury: judge '{}' wants {} exemplars, pool has {}", j.judge_id, shots, pool));
    }
  }
}

JuryConfig JuryConfig::evaluation_default(const std::string& first_provider,
                                          const std::string& second_provider) {
  JuryConfig c;
  c.judges = {JudgeSpec{first_provider, first_provider, 5, std::nullopt, 0.0, 256},
              JudgeSpec{second_provider, second_provider, 3, std::nullopt, 0.0, 256}};
  return c;
}

JuryConfig jury_config_from_json(const nlohmann::json& j) {
  try {
    JuryConfig c;
    for (const auto& jj : j.at("judges")) {
      JudgeSpec s;
      s.provider_id = jj.at("provider_id").get<std::string>();
      s.judge_id = jj.value("judge_id", s.provider_id);
      s.replicates = jj.value("replicates", 1);
      if (jj.contains("n_shots")) s.n_shots = jj.at("n_shots").get<int>();
      s.temperature = jj.value("temperature", 0.0);
      s.max_tokens = jj.value("max_tokens", 256);
      c.judges.push_back(std::move(s));
    }
    c.run_seed = j.value("run_seed", std::uint64_t{0});
    c.max_reasks = j.value("max_reasks", 3);
    c.workers = j.value("workers", std::size_t{4});
    c.n_shots = j.value("n_shots", 0);
    c.exemplars = j.value("exemplars", std::vector<std::string>{});
    c.identifiers = j.value("identifiers", std::vector<std::string>{});
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("bad jury config: {}", e.what()));
  }
}

nlohmann::json to_json(const JuryConfig& c) {
  nlohmann::json judges = nlohmann::json::array();
  for (const auto& j : c.judges) {
    nlohmann::json o{{"judge_id", j.judge_id},
                     {"provider_id", j.provider_id},
                     {"replicates", j.replicates},
                     {"temperature", j.temperature},
                     {"max_tokens", j.max_tokens}};
    if (j.n_shots) o["n_shots"] = *j.n_shots;
    judges.push_back(std::move(o));
  }
  return {{"judges", judges},       {"run_seed", c.run_seed}, {"max_reasks", c.max_reasks},
          {"workers", c.workers},   {"n_shots", c.n_shots},   {"exemplars", c.exemplars},
          {"identifiers", c.identifiers}};
}

nlohmann::json to_json(const AuditEntry& a) {
  return {{"query_id", a.query_id},       {"judge_id", a.judge_id},
          {"replicate_index", a.replicate_index}, {"criterion", criterion_name(a.criterion)},
          {"scope", a.scope},             {"permutation", a.permutation},
          {"raw_replies", a.raw_replies}, {"error", a.error}};
}

Jury::Jury(gateway::Gateway& gw, JuryConfig config) : gw_(gw), config_(std::move(config)) {
  config_.validate();
  for (const auto& j : config_.judges) {
    if (!gw_.has_provider(j.provider_id)) {
      throw ValidationError(fmt::format("jury: judge '{}' uses unknown provider '{}'", j.judge_id, j.provider_id));
    }
  }
}

Jury::Draw Jury::draw(const RankTask& task, const JudgeSpec& judge, int replicate) const {
  if (task.candidate_ids.size() != task.candidate_texts.size()) {
    throw ValidationError("rank task: ids and texts differ in length");
  }
  const std::string rep = std::to_string(replicate);
  const std::uint64_t seed = derive_seed(
      config_.run_seed, {task.query_id, task.scope, criterion_name(task.criterion), judge.judge_id, rep});
  Rng rng(seed);

  std::vector<std::string> identifiers = gw_.provider_ids();
  identifiers.insert(identifiers.end(), config_.identifiers.begin(), config_.identifiers.end());
  identifiers.insert(identifiers.end(), task.identifiers.begin(), task.identifiers.end());
  for (const auto& j : config_.judges) identifiers.push_back(j.judge_id);

  Draw d;
  d.presented = anonymize_and_shuffle(task.candidate_texts, identifiers, rng);

  JudgePromptParts parts;
  parts.criterion = task.criterion;
  parts.query = scrub_identifiers(task.query_text, identifiers).text;
  parts.search_results = scrub_identifiers(task.search_results, identifiers).text;
  parts.scope = task.scope;
  parts.presented = &d.presented;
  const int shots = shots_for(judge, config_);
  const auto& pool = config_.exemplars.empty() ? builtin_exemplars() : config_.exemplars;
  // Fixed within a replicate, rotated across replicates.
  for (int s = 0; s < shots; ++s) {
    parts.exemplars.push_back(pool[(static_cast<std::size_t>(replicate) * static_cast<std::size_t>(shots) +
                                    static_cast<std::size_t>(s)) % pool.size()]);
  }

  d.request.provider_id = judge.provider_id;
  d.request.system_prompt = gateway::task_marker("judge") + "\n" + std::string(kSystemIntro);
  d.request.user_prompt = render_judge_prompt(parts);
  d.request.temperature = judge.temperature;
  d.request.max_tokens = judge.max_tokens;
  d.request.seed = static_cast<std::int64_t>(seed & 0x7fffffffULL);
  return d;
}

Jury::Slot Jury::collect(const RankTask& task, const JudgeSpec& judge, int replicate) const {
  Draw d = draw(task, judge, replicate);
  const std::size_t n = task.candidate_ids.size();
  auto outcome = gateway::ask_until_valid(gw_, d.request, config_.max_reasks,
                                          [n](const std::string& reply) { return parse_ranking(reply, n); });
  Slot slot;
  slot.cost = outcome.cost;
  slot.scrubbed = d.presented.scrubbed;
  if (outcome.value) {
    Ballot b;
    b.query_id = task.query_id;
    b.judge_id = judge.judge_id;
    b.replicate_index = replicate;
    b.criterion = task.criterion;
    b.candidate_ids = task.candidate_ids;
    b.permutation = d.presented.permutation;
    b.ranks = canonical_ranks(*outcome.value, d.presented.permutation);
    b.raw_reply = outcome.raw_replies.back();
    b.validate();
    slot.ballot = std::move(b);
  } else {
    AuditEntry a;
    a.query_id = task.query_id;
    a.judge_id = judge.judge_id;
    a.replicate_index = replicate;
    a.criterion = task.criterion;
    a.scope = task.scope;
    a.permutation = d.presented.permutation;
    a.raw_replies = std::move(outcome.raw_replies);
    a.error = outcome.last_error;
    spdlog::warn("discarding ballot {}/{}/{} replicate {}: {}", task.query_id, criterion_name(task.criterion),
                 judge.judge_id, replicate, a.error);
    slot.audit = std::move(a);
  }
  return slot;
}

JuryResult Jury::rank(const RankTask& task) { return rank_all({task}).front(); }

std::vector<JuryResult> Jury::rank_all(const std::vector<RankTask>& tasks) {
  struct Job {
    std::size_t task;
    std::size_t judge;
    int replicate;
  };
  std::vector<Job> jobs;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    if (tasks[t].candidate_ids.size() < 2) {
      throw ValidationError(fmt::format("rank task {}: need at least 2 candidates", tasks[t].query_id));
    }
    for (std::size_t j = 0; j < config_.judges.size(); ++j) {
      for (int r = 0; r < config_.judges[j].replicates; ++r) jobs.push_back({t, j, r});
    }
  }
  std::vector<Slot> slots(jobs.size());
  parallel_for(jobs.size(), config_.workers, [&](std::size_t i) {
    slots[i] = collect(tasks[jobs[i].task], config_.judges[jobs[i].judge], jobs[i].replicate);
  });

  std::vector<JuryResult> results(tasks.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    auto& res = results[jobs[i].task];
    res.cost += slots[i].cost;
    res.scrubbed += slots[i].scrubbed;
    if (slots[i].ballot) res.ballots.push_back(std::move(*slots[i].ballot));
    if (slots[i].audit) res.discarded.push_back(std::move(*slots[i].audit));
  }
  for (auto& res : results) {
    if (!res.ballots.empty()) res.summary = aggregate(res.ballots);
  }
  return results;
}

ParsedJudgePrompt parse_judge_prompt(std::string_view prompt) {
  ParsedJudgePrompt out;
  constexpr std::string_view kAspect = "strict definition of ";
  if (auto at = prompt.find(kAspect); at != std::string_view::npos) {
    const auto from = at + kAspect.size();
    out.target_aspect = std::string(prompt.substr(from, prompt.find(".\n", from) - from));
  }
  constexpr std::string_view kQuery = "\n**Query:** ";
  const auto q = prompt.find(kQuery);
  if (q == std::string_view::npos) throw ValidationError("judge prompt has no query");
  const auto q_from = q + kQuery.size();
  const auto q_end = prompt.find("\n\n", q_from);
  out.query = std::string(prompt.substr(q_from, q_end - q_from));

  constexpr std::string_view kBlock = "**Responses to Rank:**\n";
  const auto b = prompt.find(kBlock, q_from);
  if (b == std::string_view::npos) throw ValidationError("judge prompt has no responses block");
  std::string_view block = prompt.substr(b + kBlock.size());
  if (auto re = block.find("\n\nYour previous reply could not be used"); re != std::string_view::npos) {
    block = block.substr(0, re);
  }
  // Sections start with "Response X:" on its own line, in label order.
  std::vector<std::pair<std::size_t, std::size_t>> spans;  // header start, text start
  for (std::size_t pos = 0;; ++pos) {
    const std::string head = response_label(pos) + ":\n";
    std::size_t at;
    if (pos == 0) {
      at = block.substr(0, head.size()) == head ? 0 : std::string_view::npos;
    } else {
      at = block.find("\n\n" + head, spans.back().second);
      if (at != std::string_view::npos) at += 2;
    }
    if (at == std::string_view::npos) break;
    spans.emplace_back(at, at + head.size());
  }
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const std::size_t end = i + 1 < spans.size() ? spans[i + 1].first - 2 : block.size();
    out.labels.push_back(response_label(i));
    out.texts.emplace_back(block.substr(spans[i].second, end - spans[i].second));
  }
  return out;
}

gateway::MockResponder mock_judge_responder(double noise) {
  return [noise](const gateway::MockPrompt& mp) {
    const auto parsed = parse_judge_prompt(mp.user_prompt);
    const auto qterms_v = lexical_terms(parsed.query);
    const std::set<std::string> qterms(qterms_v.begin(), qterms_v.end());
    struct Scored {
      std::size_t pos;
      double score;
      std::uint64_t tie;
    };
    std::vector<Scored> scored;
    for (std::size_t i = 0; i < parsed.texts.size(); ++i) {
      const auto terms_v = lexical_terms(parsed.texts[i]);
      const std::set<std::string> terms(terms_v.begin(), terms_v.end());
      std::size_t hit = 0;
      for (const auto& t : qterms) hit += terms.count(t);
      double score = qterms.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(qterms.size());
      score += 1e-4 * std::min<double>(static_cast<double>(terms.size()), 400.0) / 400.0;
      const std::uint64_t h = stable_hash64(parsed.target_aspect + "\x1f" + parsed.texts[i]);
      if (noise > 0) {
        const std::uint64_t j = stable_hash64(std::to_string(mp.seed) + "\x1f" + parsed.texts[i]);
        score += noise * (static_cast<double>(j >> 11) * 0x1.0p-53);
      }
      scored.push_back({i, score, h});
    }
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.tie < b.tie;
    });
    std::vector<std::string> labels;
    for (const auto& s : scored) labels.push_back(response_label(s.pos));
    return join(labels, " > ");
  };
}

}  // namespace fincot::jury
