#include "fincot/gateway/types.hpp"

#include <cstdlib>

#include <fmt/core.h>

#include "fincot/common/error.hpp"
#include "fincot/common/hash.hpp"
#include "fincot/common/jsonl.hpp"

namespace fincot::gateway {

void ChatRequest::validate() const {
  if (provider_id.empty()) throw ValidationError("chat request: empty provider_id");
  if (system_prompt.empty()) throw ValidationError("chat request: empty system_prompt");
  if (user_prompt.empty()) throw ValidationError("chat request: empty user_prompt");
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw ValidationError(fmt::format("chat request: temperature {} outside [0, 2]", temperature));
  }
  if (max_tokens < 1) throw ValidationError("chat request: max_tokens must be >= 1");
}

json to_json(const ChatResponse& r) {
  return json{{"text", r.text},
              {"prompt_tokens", r.prompt_tokens},
              {"completion_tokens", r.completion_tokens},
              {"latency_s", r.latency_s},
              {"estimated_cost", r.estimated_cost}};
}

ChatResponse chat_response_from_json(const json& j) {
  ChatResponse r;
  r.text = j.at("text").get<std::string>();
  r.prompt_tokens = j.at("prompt_tokens").get<std::int64_t>();
  r.completion_tokens = j.at("completion_tokens").get<std::int64_t>();
  r.latency_s = j.at("latency_s").get<double>();
  r.estimated_cost = j.at("estimated_cost").get<double>();
  return r;
}

void ProviderProfile::validate() const {
  if (provider_id.empty()) throw ValidationError("provider profile: empty provider_id");
  const auto where = [&](std::string_view what) {
    return fmt::format("provider '{}': {}", provider_id, what);
  };
  if (price_in < 0 || price_out < 0) throw ValidationError(where("prices must be >= 0"));
  if (max_concurrency < 1) throw ValidationError(where("max_concurrency must be >= 1"));
  if (rate_limit < 0) throw ValidationError(where("rate_limit must be >= 0"));
  if (kind == ProviderKind::kRemote) {
    if (base_url.empty()) throw ValidationError(where("remote provider needs base_url"));
    if (!api_key_env.empty() && std::getenv(api_key_env.c_str()) == nullptr) {
      throw ValidationError(where(fmt::format("credential env var {} is not set", api_key_env)));
    }
  } else if (embedding_dim < 1) {
    throw ValidationError(where("embedding_dim must be >= 1"));
  }
  if (timeout_s <= 0) throw ValidationError(where("timeout_s must be > 0"));
}

ProviderProfile provider_profile_from_json(const json& j) {
  ProviderProfile p;
  try {
    p.provider_id = j.at("provider_id").get<std::string>();
    const auto kind = j.value("kind", std::string("mock"));
    if (kind == "mock") {
      p.kind = ProviderKind::kMock;
    } else if (kind == "remote") {
      p.kind = ProviderKind::kRemote;
    } else {
      throw ValidationError(fmt::format("provider '{}': unknown kind '{}'", p.provider_id, kind));
    }
    p.rate_limit = j.value("rate_limit", 0.0);
    p.price_in = j.value("price_in", 0.0);
    p.price_out = j.value("price_out", 0.0);
    p.max_concurrency = j.value("max_concurrency", 4);
    p.base_url = j.value("base_url", std::string());
    p.model = j.value("model", std::string());
    p.embedding_model = j.value("embedding_model", std::string());
    p.api_key_env = j.value("api_key_env", std::string());
    p.timeout_s = j.value("timeout_s", 120.0);
    p.fixtures = j.value("fixtures", std::string());
    p.embedding_dim = j.value("embedding_dim", 256);
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("provider profile: {}", e.what()));
  }
  return p;
}

json to_json(const ProviderProfile& p) {
  return json{{"provider_id", p.provider_id},
              {"kind", p.kind == ProviderKind::kMock ? "mock" : "remote"},
              {"rate_limit", p.rate_limit},
              {"price_in", p.price_in},
              {"price_out", p.price_out},
              {"max_concurrency", p.max_concurrency},
              {"base_url", p.base_url},
              {"model", p.model},
              {"embedding_model", p.embedding_model},
              {"api_key_env", p.api_key_env},
              {"timeout_s", p.timeout_s},
              {"fixtures", p.fixtures},
              {"embedding_dim", p.embedding_dim}};
}

std::vector<ProviderProfile> provider_profiles_from_json(const json& j) {
  if (!j.is_array()) throw ValidationError("provider configuration must be a JSON array");
  std::vector<ProviderProfile> out;
  for (const auto& item : j) out.push_back(provider_profile_from_json(item));
  return out;
}

std::vector<ProviderProfile> load_provider_profiles(const std::filesystem::path& path) {
  return provider_profiles_from_json(read_json_file(path));
}

std::string cache_key(const ChatRequest& req) {
  const json canonical = json::array({req.provider_id, req.system_prompt, req.user_prompt,
                                      req.temperature, req.max_tokens,
                                      req.seed ? json(*req.seed) : json(nullptr)});
  return sha256_hex(canonical.dump());
}

double estimate_cost(std::int64_t prompt_tokens, std::int64_t completion_tokens, double price_in,
                     double price_out) {
  return static_cast<double>(prompt_tokens) / 1000.0 * price_in +
         static_cast<double>(completion_tokens) / 1000.0 * price_out;
}

namespace {

std::optional<std::string> find_marker(std::string_view text, std::string_view prefix) {
  const auto pos = text.find(prefix);
  if (pos == std::string_view::npos) return std::nullopt;
  const auto start = pos + prefix.size();
  const auto end = text.find(']', start);
  if (end == std::string_view::npos || end == start) return std::nullopt;
  return std::string(text.substr(start, end - start));
}

}  // namespace

std::string task_marker(std::string_view tag) { return fmt::format("[task:{}]", tag); }

std::optional<std::string> find_task_tag(std::string_view text) {
  return find_marker(text, "[task:");
}

std::string fixture_marker(std::string_view key) { return fmt::format("[fixture:{}]", key); }

std::optional<std::string> find_fixture_key(std::string_view text) {
  return find_marker(text, "[fixture:");
}

}  // namespace fincot::gateway
