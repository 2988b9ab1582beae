#include "fincot/harness/config.hpp"

#include <set>

#include <fmt/core.h>

#include "fincot/common/error.hpp"
#include "fincot/common/jsonl.hpp"
#include "fincot/cot/offline.hpp"
#include "fincot/gateway/mock_backend.hpp"

namespace fincot::harness {

using nlohmann::json;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path out = p;
  return out.is_relative() ? base / out : out;
}

corpus::IngestOptions ingest_from_json(const json& j) {
  corpus::IngestOptions o;
  o.classifier_provider = j.at("classifier_provider").get<std::string>();
  o.embedding_provider = j.at("embedding_provider").get<std::string>();
  if (j.contains("rephrase_provider")) o.rephrase_provider = j.at("rephrase_provider").get<std::string>();
  o.threshold = j.value("threshold", o.threshold);
  o.workers = j.value("workers", o.workers);
  o.max_reasks = j.value("max_reasks", o.max_reasks);
  if (j.contains("quotas")) {
    for (const auto& [k, v] : j.at("quotas").items()) {
      o.quotas.per_category[corpus::parse_category(k)] = v.get<std::size_t>();
    }
  }
  if (j.contains("default_quota")) o.quotas.default_quota = j.at("default_quota").get<std::size_t>();
  return o;
}

}  // namespace

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  RunConfig c;
  c.base_dir = base_dir;
  try {
    if (!j.is_object()) throw ValidationError("config must be a JSON object");
    const auto& prov = j.at("providers");
    if (prov.is_string()) {
      c.providers = gateway::load_provider_profiles(resolve(base_dir, prov.get<std::string>()));
    } else {
      c.providers = gateway::provider_profiles_from_json(prov);
    }
    if (j.contains("retry")) {
      const auto& r = j.at("retry");
      c.retry.max_attempts = r.value("max_attempts", c.retry.max_attempts);
      c.retry.initial_backoff = std::chrono::milliseconds(r.value("initial_backoff_ms", c.retry.initial_backoff.count()));
      c.retry.multiplier = r.value("multiplier", c.retry.multiplier);
      c.retry.max_backoff = std::chrono::milliseconds(r.value("max_backoff_ms", c.retry.max_backoff.count()));
    }
    if (j.contains("cache_dir")) c.cache_dir = resolve(base_dir, j.at("cache_dir").get<std::string>());
    if (j.contains("templates_dir")) c.templates_dir = resolve(base_dir, j.at("templates_dir").get<std::string>());
    if (j.contains("ingest")) c.ingest = ingest_from_json(j.at("ingest"));
    if (j.contains("index")) {
      const auto& x = j.at("index");
      IndexSection s;
      s.embedding_provider = x.at("embedding_provider").get<std::string>();
      s.financial_dir = resolve(base_dir, x.at("financial_dir").get<std::string>());
      s.behavioral_dir = resolve(base_dir, x.at("behavioral_dir").get<std::string>());
      s.max_chunk_tokens = x.value("max_chunk_tokens", s.max_chunk_tokens);
      c.index = s;
    }
    if (j.contains("engine")) c.engine = cot::engine_config_from_json(j.at("engine"));
    if (j.contains("evaluation")) {
      const auto& e = j.at("evaluation");
      EvaluationSection s;
      s.jury = jury::jury_config_from_json(e.at("jury"));
      s.options = eval_options_from_json(e);
      c.evaluation = s;
    }
    if (j.contains("dataset")) c.dataset.train_ratio = j.at("dataset").value("train_ratio", c.dataset.train_ratio);
    c.workers = j.value("workers", c.workers);
    if (j.contains("reranker")) {
      const auto& r = j.at("reranker");
      if (r.contains("url")) c.reranker_url = r.at("url").get<std::string>();
      c.reranker_timeout_s = r.value("timeout_s", c.reranker_timeout_s);
    }
    c.set_seed(j.value("seed", std::uint64_t{0}));
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("bad run config: {}", e.what()));
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ValidationError(fmt::format("config not found: {}", path.string()));
  return run_config_from_json(read_json_file(path), path.parent_path());
}

void RunConfig::set_seed(std::uint64_t s) {
  seed = s;
  if (ingest) ingest->seed = s;
  if (engine) {
    engine->run_seed = s;
    engine->jury.run_seed = s;
  }
  if (evaluation) evaluation->jury.run_seed = s;
  dataset.seed = s;
}

void RunConfig::validate() const {
  std::set<std::string> ids;
  for (const auto& p : providers) {
    p.validate();
    if (!ids.insert(p.provider_id).second) throw ValidationError(fmt::format("duplicate provider {}", p.provider_id));
  }
  auto need = [&](const std::string& id, std::string_view where) {
    if (!ids.count(id)) throw ValidationError(fmt::format("{}: unknown provider '{}'", where, id));
  };
  if (retry.max_attempts < 1) throw ValidationError("retry.max_attempts must be >= 1");
  if (workers < 1) throw ValidationError("workers must be >= 1");
  if (ingest) {
    need(ingest->classifier_provider, "ingest.classifier_provider");
    need(ingest->embedding_provider, "ingest.embedding_provider");
    if (ingest->rephrase_provider) need(*ingest->rephrase_provider, "ingest.rephrase_provider");
    if (!(ingest->threshold > 0 && ingest->threshold <= 1)) throw ValidationError("ingest.threshold must be in (0, 1]");
  }
  if (index) {
    need(index->embedding_provider, "index.embedding_provider");
    for (const auto& d : {index->financial_dir, index->behavioral_dir}) {
      if (!std::filesystem::is_directory(d)) throw ValidationError(fmt::format("index: no such directory {}", d.string()));
    }
  }
  if (engine) {
    engine->validate();
    for (const auto& g : engine->generators) need(g, "engine.generators");
    need(engine->condense_provider, "engine.condense_provider");
    for (const auto& jd : engine->jury.judges) need(jd.provider_id, "engine.jury");
  }
  if (evaluation) {
    evaluation->jury.validate();
    for (const auto& jd : evaluation->jury.judges) need(jd.provider_id, "evaluation.jury");
    std::set<std::string> judges;
    for (const auto& jd : evaluation->jury.judges) judges.insert(jd.judge_id);
    for (const auto* set : {&evaluation->options.judges_a, &evaluation->options.judges_b}) {
      for (const auto& id : *set) {
        if (!judges.count(id)) throw ValidationError(fmt::format("evaluation.judge_sets: unknown judge '{}'", id));
      }
    }
  }
  if (!(dataset.train_ratio > 0 && dataset.train_ratio <= 1)) throw ValidationError("dataset.train_ratio must be in (0, 1]");
  if (templates_dir && !std::filesystem::is_directory(*templates_dir)) {
    throw ValidationError(fmt::format("templates_dir not found: {}", templates_dir->string()));
  }
  if (reranker_timeout_s < 1) throw ValidationError("reranker.timeout_s must be >= 1");
}

void RunConfig::require(std::initializer_list<std::string_view> sections) const {
  validate();
  for (auto s : sections) {
    const bool present = (s == "ingest" && ingest) || (s == "index" && index) || (s == "engine" && engine) ||
                         (s == "evaluation" && evaluation);
    if (!present) throw ValidationError(fmt::format("config has no '{}' section", s));
  }
}

std::unique_ptr<gateway::Gateway> make_gateway(const RunConfig& config) {
  gateway::GatewayOptions opts;
  opts.retry = config.retry;
  opts.cache_dir = config.cache_dir;
  auto gw = std::make_unique<gateway::Gateway>(opts);
  for (const auto& p : config.providers) {
    auto backend = gateway::make_backend(p, config.base_dir);
    if (auto mock = std::dynamic_pointer_cast<gateway::MockBackend>(backend)) cot::install_offline_responders(*mock);
    gw->register_provider(p, backend);
  }
  return gw;
}

std::unique_ptr<knowledge::Reranker> make_reranker(const RunConfig& config) {
  if (config.reranker_url) {
    return std::make_unique<knowledge::RemoteReranker>(*config.reranker_url,
                                                       std::chrono::seconds(config.reranker_timeout_s));
  }
  return std::make_unique<knowledge::LexicalReranker>();
}

cot::TemplateSet make_templates(const RunConfig& config) {
  auto t = cot::TemplateSet::builtin();
  if (config.templates_dir) t.load_overrides(*config.templates_dir);
  return t;
}

}  // namespace fincot::harness
