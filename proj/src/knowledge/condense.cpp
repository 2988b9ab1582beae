#include "fincot/knowledge/condense.hpp"

#include <regex>

#include <fmt/core.h>
#include <spdlog/spdlog.h>

#include "fincot/common/error.hpp"
#include "fincot/common/text.hpp"

namespace fincot::knowledge {

json to_json(const ContextPack& p) {
  json chunks = json::array();
  for (const auto& c : p.selected_chunks) {
    chunks.push_back({{"chunk_id", c.chunk_id},
                      {"corpus_tag", std::string(corpus_tag_name(c.corpus_tag))},
                      {"source", c.source},
                      {"score", c.score}});
  }
  return json{{"query_id", p.query_id},         {"selected_chunks", chunks},
              {"condensed_text", p.condensed_text}, {"created_at", format_utc(p.created_at)},
              {"degraded", p.degraded},         {"reranker", p.reranker_id}};
}

ContextPack context_pack_from_json(const json& j) {
  ContextPack p;
  p.query_id = j.at("query_id").get<std::string>();
  for (const auto& c : j.at("selected_chunks")) {
    p.selected_chunks.push_back({c.at("chunk_id").get<std::string>(),
                                 parse_corpus_tag(c.at("corpus_tag").get<std::string>()),
                                 c.value("source", ""), c.value("score", 0.0)});
  }
  p.condensed_text = j.at("condensed_text").get<std::string>();
  p.created_at = parse_timestamp_value(j.at("created_at"));
  p.degraded = j.value("degraded", false);
  p.reranker_id = j.value("reranker", "");
  return p;
}

std::string attribution(const Chunk& c) {
  return fmt::format("[{}; {}; {}]", c.source, corpus_tag_name(c.corpus_tag), c.chunk_id);
}

std::vector<Attribution> find_attributions(std::string_view text) {
  static const std::regex re(R"(\[([^\[\];\n]+); (financial|behavioral); ([^\[\];\s]+)\])");
  std::vector<Attribution> out;
  const std::string s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
    out.push_back({(*it)[1].str(), (*it)[2].str(), (*it)[3].str()});
  }
  return out;
}

void RetrievalConfig::validate() const {
  if (k_per_corpus < 1 || m_keep < 1 || condense_budget < 1) {
    throw ValidationError("retrieval k, m and budget must be positive");
  }
  if (m_keep > 2 * k_per_corpus) throw ValidationError("m_keep must not exceed 2 * k_per_corpus");
}

namespace {

std::string render_chunks(const std::vector<ScoredChunk>& kept) {
  std::string out;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto& c = *kept[i].chunk;
    std::string path = join(c.section_path, " > ");
    if (!out.empty()) out += "\n\n";
    out += fmt::format("[S{}] ({}; {}{}{})\n{}", i + 1, corpus_tag_name(c.corpus_tag), c.source,
                       path.empty() ? "" : "; ", path, c.text);
  }
  return out;
}

// Replaces [S<i>] with the i-th chunk's attribution; drops out-of-range labels.
std::string expand_labels(std::string_view reply, const std::vector<ScoredChunk>& kept, bool* cited) {
  static const std::regex label(R"(\[S(\d{1,4})\])");
  std::string out;
  const std::string s(reply);
  std::size_t last = 0;
  *cited = false;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), label); it != std::sregex_iterator(); ++it) {
    out.append(s, last, static_cast<std::size_t>(it->position()) - last);
    const auto idx = std::stoul((*it)[1].str());
    if (idx >= 1 && idx <= kept.size()) {
      out += attribution(*kept[idx - 1].chunk);
      *cited = true;
    }
    last = static_cast<std::size_t>(it->position() + it->length());
  }
  out.append(s, last);
  return out;
}

}  // namespace

ContextPack condense(gateway::Gateway& gw, const cot::TemplateSet& templates, std::string_view query_id,
                     std::string_view query_text, const std::vector<ScoredChunk>& kept,
                     const CondenseOptions& options) {
  if (kept.empty() || kept.size() > options.max_kept) {
    throw ValidationError(fmt::format("condense needs 1..{} chunks, got {}", options.max_kept, kept.size()));
  }
  ContextPack pack;
  pack.query_id = std::string(query_id);
  pack.created_at = options.created_at.value_or(
      std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now()));
  for (const auto& k : kept) {
    pack.selected_chunks.push_back({k.chunk->chunk_id, k.chunk->corpus_tag, k.chunk->source, k.score});
  }

  gateway::ChatRequest req;
  req.provider_id = options.provider_id;
  req.system_prompt = gateway::task_marker("condense");
  req.user_prompt = cot::render_prompt(templates.get("condense"),
                                       {{"query", std::string(query_text)}, {"chunks", render_chunks(kept)}});
  req.temperature = 0.2;
  req.max_tokens = static_cast<int>(options.budget * 2);
  req.seed = options.seed;
  std::string reply;
  try {
    reply = gw.complete(req).text;
  } catch (const ProviderError& e) {
    spdlog::warn("condensation failed for {}: {}", query_id, e.what());
    pack.degraded = true;
    return pack;
  }

  bool cited = false;
  auto body = std::string(trim(expand_labels(reply, kept, &cited)));
  std::string sources;
  if (!cited) {
    sources = "Sources:";
    for (const auto& k : kept) sources += " " + attribution(*k.chunk);
  }
  const auto reserve = whitespace_token_count(sources);
  const auto room = options.budget > reserve ? options.budget - reserve : 0;
  if (whitespace_token_count(body) > room) body = truncate_tokens(body, room);
  // Truncation can cut through an attribution; drop a dangling half.
  if (const auto open = body.rfind('['); open != std::string::npos && body.find(']', open) == std::string::npos) {
    body = std::string(trim(body.substr(0, open)));
  }
  pack.condensed_text = sources.empty() ? body : (body.empty() ? sources : body + "\n\n" + sources);
  return pack;
}

ContextPack build_context(gateway::Gateway& gw, const KnowledgeIndex& index, Reranker& reranker,
                          const cot::TemplateSet& templates, std::string_view query_id,
                          std::string_view query_text, const RetrievalConfig& config,
                          const CondenseOptions& options) {
  config.validate();
  std::vector<ScoredChunk> candidates;
  for (auto tag : {CorpusTag::kFinancial, CorpusTag::kBehavioral}) {
    auto hits = retrieve(gw, index, query_text, tag, config.k_per_corpus);
    candidates.insert(candidates.end(), hits.begin(), hits.end());
  }
  auto ranked = rerank(query_text, candidates, config.m_keep, reranker);
  auto opts = options;
  opts.budget = config.condense_budget;
  opts.max_kept = config.m_keep;
  auto pack = condense(gw, templates, query_id, query_text, ranked.kept, opts);
  pack.reranker_id = ranked.reranker_id;
  return pack;
}

std::string mock_condense_reply(std::string_view user_prompt) {
  const auto chunks = cot::prompt_input(user_prompt, "Chunks", true).value_or("");
  static const std::regex head(R"(^\[S(\d+)\] \([^\n]*\)$)");
  std::vector<std::string> out;
  std::string label;
  bool want_sentence = false;
  for (const auto& line : split_lines(chunks)) {
    std::smatch m;
    if (std::regex_match(line, m, head)) {
      label = "[S" + m[1].str() + "]";
      want_sentence = true;
      continue;
    }
    const auto t = std::string(trim(line));
    if (!want_sentence || t.empty() || t[0] == '#' || t.rfind("```", 0) == 0) continue;
    auto end = t.find_first_of(".!?");
    auto sentence = end == std::string::npos ? t : t.substr(0, end + 1);
    // Markdown list markers read oddly in a prose summary.
    if (sentence.rfind("- ", 0) == 0 || sentence.rfind("* ", 0) == 0) sentence = sentence.substr(2);
    out.push_back(sentence + " " + label);
    want_sentence = false;
  }
  return join(out, "\n");
}

}  // namespace fincot::knowledge
