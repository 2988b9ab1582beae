#include "fincot/gateway/gateway.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <fmt/core.h>
#include <spdlog/spdlog.h>

#include "fincot/common/error.hpp"
#include "fincot/common/hash.hpp"
#include "fincot/common/text.hpp"
#include "fincot/gateway/mock_backend.hpp"
#include "fincot/gateway/remote_backend.hpp"

namespace fincot::gateway {

std::vector<std::chrono::milliseconds> RetryPolicy::schedule() const {
  std::vector<std::chrono::milliseconds> out;
  double delay = static_cast<double>(initial_backoff.count());
  for (int i = 0; i + 1 < max_attempts; ++i) {
    const auto capped = std::min(delay, static_cast<double>(max_backoff.count()));
    out.emplace_back(static_cast<std::int64_t>(capped));
    delay *= std::max(1.0, multiplier);
  }
  return out;
}

struct Gateway::Slot {
  ProviderProfile profile;
  std::shared_ptr<Backend> backend;
  RateLimiter limiter;
  ConcurrencyGate gate;
  mutable std::mutex stats_mu;
  ProviderStats stats;

  Slot(ProviderProfile p, std::shared_ptr<Backend> b)
      : profile(std::move(p)),
        backend(std::move(b)),
        limiter(profile.rate_limit),
        gate(profile.max_concurrency) {}
};

Gateway::Gateway(GatewayOptions options)
    : options_(std::move(options)),
      cache_(options_.cache_dir ? ResponseCache(*options_.cache_dir) : ResponseCache()) {
  if (options_.retry.max_attempts < 1) throw ValidationError("retry max_attempts must be >= 1");
  if (!options_.sleeper) {
    options_.sleeper = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
}

Gateway::~Gateway() = default;

void Gateway::register_provider(const ProviderProfile& profile, std::shared_ptr<Backend> backend) {
  profile.validate();
  if (!backend) throw ValidationError(fmt::format("provider '{}': null backend", profile.provider_id));
  std::unique_lock lock(mu_);
  providers_[profile.provider_id] = std::make_unique<Slot>(profile, std::move(backend));
}

bool Gateway::has_provider(std::string_view provider_id) const {
  std::shared_lock lock(mu_);
  return providers_.find(provider_id) != providers_.end();
}

Gateway::Slot& Gateway::slot(std::string_view provider_id) const {
  std::shared_lock lock(mu_);
  auto it = providers_.find(provider_id);
  if (it == providers_.end()) {
    throw ValidationError(fmt::format("provider '{}' is not registered", provider_id));
  }
  return *it->second;
}

const ProviderProfile& Gateway::profile(std::string_view provider_id) const {
  return slot(provider_id).profile;
}

std::vector<std::string> Gateway::provider_ids() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> ids;
  for (const auto& [id, _] : providers_) ids.push_back(id);
  return ids;
}

template <typename Fn>
auto Gateway::with_retries(Slot& s, Fn&& call) -> decltype(call()) {
  const auto delays = options_.retry.schedule();
  const int max_attempts = options_.retry.max_attempts;
  for (int attempt = 0;; ++attempt) {
    s.limiter.acquire();
    {
      std::lock_guard lock(s.stats_mu);
      ++s.stats.attempts;
      if (attempt > 0) ++s.stats.retries;
    }
    try {
      return call();
    } catch (const BackendError& e) {
      const auto& id = s.profile.provider_id;
      if (!e.retryable()) {
        if (e.kind() == FailureKind::kMalformed) {
          throw MalformedReplyError(fmt::format("provider '{}': malformed reply: {}", id, e.what()));
        }
        throw ProviderError(fmt::format("provider '{}': request rejected: {}", id, e.what()));
      }
      if (attempt + 1 >= max_attempts) {
        if (e.kind() == FailureKind::kRateLimited) {
          throw RateLimitError(
              fmt::format("provider '{}': rate limit exhausted after {} attempts", id, max_attempts));
        }
        throw ProviderError(fmt::format("provider '{}': unreachable after {} attempts: {}", id,
                                        max_attempts, e.what()));
      }
      spdlog::warn("provider '{}' attempt {} failed ({}); retrying in {} ms", id, attempt + 1,
                   e.what(), delays[static_cast<std::size_t>(attempt)].count());
      options_.sleeper(delays[static_cast<std::size_t>(attempt)]);
    }
  }
}

ChatResponse Gateway::complete(const ChatRequest& req) {
  req.validate();
  Slot& s = slot(req.provider_id);
  const auto key = cache_key(req);
  {
    std::lock_guard lock(s.stats_mu);
    ++s.stats.requests;
  }
  if (auto hit = cache_.get(key)) {
    std::lock_guard lock(s.stats_mu);
    ++s.stats.cache_hits;
    hit->from_cache = true;
    return *hit;
  }

  ChatResponse resp;
  {
    ConcurrencyGate::Hold hold(s.gate);
    const auto t0 = std::chrono::steady_clock::now();
    Completion c = with_retries(s, [&] { return s.backend->complete(req); });
    const auto t1 = std::chrono::steady_clock::now();
    if (c.text.empty()) {
      throw MalformedReplyError(fmt::format("provider '{}': empty completion", req.provider_id));
    }
    resp.text = std::move(c.text);
    resp.prompt_tokens = c.prompt_tokens.value_or(static_cast<std::int64_t>(
        approx_token_count(req.system_prompt) + approx_token_count(req.user_prompt)));
    resp.completion_tokens =
        c.completion_tokens.value_or(static_cast<std::int64_t>(approx_token_count(resp.text)));
    resp.latency_s = std::chrono::duration<double>(t1 - t0).count();
    resp.estimated_cost = estimate_cost(resp.prompt_tokens, resp.completion_tokens,
                                        s.profile.price_in, s.profile.price_out);
  }
  cache_.put(key, resp);
  {
    std::lock_guard lock(s.stats_mu);
    s.stats.prompt_tokens += resp.prompt_tokens;
    s.stats.completion_tokens += resp.completion_tokens;
    s.stats.total_cost += resp.estimated_cost;
  }
  return resp;
}

std::vector<Embedding> Gateway::embed(const std::string& provider_id,
                                      const std::vector<std::string>& texts) {
  if (texts.empty()) throw ValidationError("embed: empty batch");
  for (const auto& t : texts) {
    if (t.empty()) throw ValidationError("embed: empty text in batch");
  }
  Slot& s = slot(provider_id);

  std::vector<std::optional<Embedding>> out(texts.size());
  std::vector<std::string> keys(texts.size());
  std::vector<std::size_t> missing;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    keys[i] = sha256_hex(fmt::format("{}\x1f{}", provider_id, texts[i]));
    out[i] = cache_.get_embedding(keys[i]);
    if (!out[i]) missing.push_back(i);
  }
  if (!missing.empty()) {
    std::vector<std::string> batch;
    batch.reserve(missing.size());
    for (auto i : missing) batch.push_back(texts[i]);
    std::vector<Embedding> fresh;
    {
      ConcurrencyGate::Hold hold(s.gate);
      fresh = with_retries(s, [&] { return s.backend->embed(batch); });
    }
    if (fresh.size() != batch.size()) {
      throw MalformedReplyError(fmt::format("provider '{}': {} embeddings for {} inputs",
                                            provider_id, fresh.size(), batch.size()));
    }
    for (std::size_t j = 0; j < missing.size(); ++j) {
      Embedding& v = fresh[j];
      double norm = 0.0;
      for (float x : v) norm += static_cast<double>(x) * x;
      norm = std::sqrt(norm);
      if (v.empty() || !(norm > 0.0) || !std::isfinite(norm)) {
        throw MalformedReplyError(fmt::format("provider '{}': degenerate embedding", provider_id));
      }
      for (float& x : v) x = static_cast<float>(x / norm);
      cache_.put_embedding(keys[missing[j]], v);
      out[missing[j]] = std::move(v);
    }
  }

  std::vector<Embedding> result;
  result.reserve(out.size());
  for (auto& v : out) result.push_back(std::move(*v));
  const auto dim = result.front().size();
  for (const auto& v : result) {
    if (v.size() != dim) {
      throw ProviderError(fmt::format("provider '{}': embedding dimension mismatch ({} vs {})",
                                      provider_id, v.size(), dim));
    }
  }
  return result;
}

ProviderStats Gateway::stats(std::string_view provider_id) const {
  Slot& s = slot(provider_id);
  std::lock_guard lock(s.stats_mu);
  ProviderStats st = s.stats;
  st.in_flight_peak = s.gate.peak();
  return st;
}

std::shared_ptr<Backend> make_backend(const ProviderProfile& profile,
                                      const std::filesystem::path& base_dir) {
  if (profile.kind == ProviderKind::kRemote) return std::make_shared<RemoteBackend>(profile);
  FixtureTable fixtures;
  if (!profile.fixtures.empty()) {
    std::filesystem::path p = profile.fixtures;
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    fixtures = FixtureTable::load(p);
  }
  return std::make_shared<MockBackend>(std::move(fixtures), profile.embedding_dim);
}

}  // namespace fincot::gateway
