#include "fincot/gateway/mock_backend.hpp"

#include <cmath>
#include <thread>

#include <fmt/core.h>

#include "fincot/common/error.hpp"
#include "fincot/common/hash.hpp"
#include "fincot/common/jsonl.hpp"
#include "fincot/common/text.hpp"

namespace fincot::gateway {

FixtureTable::FixtureTable(std::vector<Fixture> fixtures) {
  for (auto& f : fixtures) add(std::move(f));
}

void FixtureTable::add(Fixture f) {
  if (f.tag.empty()) {
    const auto colon = f.key.find(':');
    f.tag = colon == std::string::npos ? f.key : f.key.substr(0, colon);
  }
  fixtures_.push_back(std::move(f));
}

FixtureTable FixtureTable::from_json(const json& j) {
  FixtureTable table;
  try {
    for (const auto& item : j.at("fixtures")) {
      Fixture f;
      f.key = item.at("key").get<std::string>();
      f.tag = item.value("tag", std::string());
      f.match = item.value("match", std::string());
      f.response = item.at("response").get<std::string>();
      table.add(std::move(f));
    }
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("fixture table: {}", e.what()));
  }
  return table;
}

FixtureTable FixtureTable::load(const std::filesystem::path& path) {
  return from_json(read_json_file(path));
}

const Fixture* FixtureTable::by_key(std::string_view key) const {
  for (const auto& f : fixtures_) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

const Fixture* FixtureTable::by_tag(std::string_view tag, std::string_view text) const {
  for (const auto& f : fixtures_) {
    if (f.tag == tag && !f.match.empty() && text.find(f.match) != std::string_view::npos) {
      return &f;
    }
  }
  return nullptr;
}

MockBackend::MockBackend(FixtureTable fixtures, int embedding_dim)
    : fixtures_(std::move(fixtures)), dim_(embedding_dim) {
  if (dim_ < 1) throw ValidationError("mock embedding_dim must be >= 1");
}

void MockBackend::set_responder(const std::string& tag, MockResponder responder) {
  std::lock_guard lock(mu_);
  responders_[tag] = std::move(responder);
}

void MockBackend::fail_next(int count, FailureKind kind) {
  std::lock_guard lock(mu_);
  pending_failures_ = count;
  failure_kind_ = kind;
}

void MockBackend::maybe_fail() {
  std::lock_guard lock(mu_);
  if (pending_failures_ > 0) {
    --pending_failures_;
    const int status = failure_kind_ == FailureKind::kRateLimited ? 429
                       : failure_kind_ == FailureKind::kServer    ? 503
                                                                  : 0;
    throw BackendError(failure_kind_, "injected mock failure", status);
  }
}

std::string MockBackend::echo(const MockPrompt& prompt) {
  const auto tag = stable_hash64(fmt::format("{}\x1f{}\x1f{}", prompt.system_prompt,
                                             prompt.user_prompt, prompt.seed));
  return fmt::format("echo[{:016x}]: {}", tag, truncate_tokens(prompt.user_prompt, 64));
}

Completion MockBackend::complete(const ChatRequest& req) {
  ++calls_;
  const int now = ++in_flight_;
  int prev = peak_.load();
  while (now > prev && !peak_.compare_exchange_weak(prev, now)) {
  }
  struct Leave {
    std::atomic<int>& n;
    ~Leave() { --n; }
  } leave{in_flight_};

  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
  maybe_fail();

  const MockPrompt prompt{req.system_prompt, req.user_prompt, req.seed.value_or(0)};
  Completion out;
  std::optional<std::string> key = find_fixture_key(req.user_prompt);
  if (!key) key = find_fixture_key(req.system_prompt);
  if (key) {
    if (const auto* f = fixtures_.by_key(*key)) {
      out.text = f->response;
      return out;
    }
  }
  if (const auto tag = find_task_tag(req.system_prompt)) {
    if (const auto* f = fixtures_.by_tag(*tag, req.user_prompt)) {
      out.text = f->response;
      return out;
    }
    MockResponder responder;
    {
      std::lock_guard lock(mu_);
      if (auto it = responders_.find(*tag); it != responders_.end()) responder = it->second;
    }
    if (responder) {
      out.text = responder(prompt);
      return out;
    }
  }
  out.text = echo(prompt);
  return out;
}

Embedding MockBackend::hash_embedding(std::string_view text, int dim) {
  Embedding v(static_cast<std::size_t>(dim), 0.0f);
  auto terms = lexical_terms(text);
  if (terms.empty()) terms.emplace_back(text);
  for (const auto& term : terms) {
    const std::uint64_t h = stable_hash64(term);
    const auto idx = static_cast<std::size_t>(h % static_cast<std::uint64_t>(dim));
    v[idx] += (h >> 63) ? 1.0f : -1.0f;
  }
  double norm = 0.0;
  for (float x : v) norm += static_cast<double>(x) * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) {
    // Every term cancelled out; fall back to a single bucket for the text.
    v[static_cast<std::size_t>(stable_hash64(text) % static_cast<std::uint64_t>(dim))] = 1.0f;
    return v;
  }
  for (float& x : v) x = static_cast<float>(x / norm);
  return v;
}

std::vector<Embedding> MockBackend::embed(const std::vector<std::string>& texts) {
  maybe_fail();
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(hash_embedding(t, dim_));
  return out;
}

}  // namespace fincot::gateway
