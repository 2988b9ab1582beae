#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "fincot/gateway/backend.hpp"
#include "fincot/gateway/cache.hpp"
#include "fincot/gateway/rate_limiter.hpp"
#include "fincot/gateway/types.hpp"

namespace fincot::gateway {

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds initial_backoff{1000};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{60000};

  // Delay before attempt i+1, for i in [0, max_attempts - 1). Non-decreasing.
  std::vector<std::chrono::milliseconds> schedule() const;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

struct GatewayOptions {
  RetryPolicy retry;
  std::optional<std::filesystem::path> cache_dir;
  // Defaults to std::this_thread::sleep_for; tests inject a recorder.
  Sleeper sleeper;
};

struct ProviderStats {
  std::int64_t requests = 0;
  std::int64_t cache_hits = 0;
  std::int64_t attempts = 0;
  std::int64_t retries = 0;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  double total_cost = 0.0;
  int in_flight_peak = 0;
};

// Provider-agnostic entry point for chat and embedding calls.
class Gateway {
 public:
  explicit Gateway(GatewayOptions options = {});
  ~Gateway();
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  void register_provider(const ProviderProfile& profile, std::shared_ptr<Backend> backend);
  bool has_provider(std::string_view provider_id) const;
  const ProviderProfile& profile(std::string_view provider_id) const;
  std::vector<std::string> provider_ids() const;

  ChatResponse complete(const ChatRequest& req);

  // One unit vector per input, all of the provider's fixed dimension.
  std::vector<Embedding> embed(const std::string& provider_id,
                               const std::vector<std::string>& texts);

  ProviderStats stats(std::string_view provider_id) const;
  const RetryPolicy& retry_policy() const { return options_.retry; }

 private:
  struct Slot;

  GatewayOptions options_;
  ResponseCache cache_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::unique_ptr<Slot>, std::less<>> providers_;

  Slot& slot(std::string_view provider_id) const;
  template <typename Fn>
  auto with_retries(Slot& s, Fn&& call) -> decltype(call());
};

// Builds the backend a profile describes. Mock fixture paths resolve
// relative to `base_dir`.
std::shared_ptr<Backend> make_backend(const ProviderProfile& profile,
                                      const std::filesystem::path& base_dir = {});

}  // namespace fincot::gateway
