#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace fincot::gateway {

using json = nlohmann::json;
using Embedding = std::vector<float>;

struct ChatRequest {
  std::string provider_id;
  std::string system_prompt;
  std::string user_prompt;
  double temperature = 0.7;
  int max_tokens = 1024;
  std::optional<std::int64_t> seed;

  // Throws ValidationError: empty prompts, temperature outside [0, 2],
  // max_tokens < 1, empty provider id.
  void validate() const;
};

struct ChatResponse {
  std::string text;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  double latency_s = 0.0;
  double estimated_cost = 0.0;
  // Set on the copy handed back for a cache hit; never persisted.
  bool from_cache = false;
};

json to_json(const ChatResponse& r);
ChatResponse chat_response_from_json(const json& j);

enum class ProviderKind { kRemote, kMock };

struct ProviderProfile {
  std::string provider_id;
  ProviderKind kind = ProviderKind::kMock;
  double rate_limit = 0.0;  // requests per second, 0 = unlimited
  double price_in = 0.0;    // currency per 1k prompt tokens
  double price_out = 0.0;   // currency per 1k completion tokens
  int max_concurrency = 4;

  // remote: OpenAI-compatible endpoint
  std::string base_url;
  std::string model;
  std::string embedding_model;
  std::string api_key_env;
  double timeout_s = 120.0;

  // mock
  std::string fixtures;
  int embedding_dim = 256;

  void validate() const;
};

ProviderProfile provider_profile_from_json(const json& j);
json to_json(const ProviderProfile& p);
// The provider configuration file is a JSON array of profiles.
std::vector<ProviderProfile> load_provider_profiles(const std::filesystem::path& path);
std::vector<ProviderProfile> provider_profiles_from_json(const json& j);

// SHA-256 over (provider_id, system_prompt, user_prompt, temperature,
// max_tokens, seed), serialized canonically.
std::string cache_key(const ChatRequest& req);

double estimate_cost(std::int64_t prompt_tokens, std::int64_t completion_tokens, double price_in,
                     double price_out);

// Prompts carry a routing tag for the offline mock, e.g. "[task:classify]".
std::string task_marker(std::string_view tag);
std::optional<std::string> find_task_tag(std::string_view text);
// Explicit fixture lookup: "[fixture:classify:401k-query]".
std::string fixture_marker(std::string_view key);
std::optional<std::string> find_fixture_key(std::string_view text);

}  // namespace fincot::gateway
