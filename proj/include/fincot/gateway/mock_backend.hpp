#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "fincot/gateway/backend.hpp"

namespace fincot::gateway {

struct Fixture {
  std::string key;       // "classify:401k-query"
  std::string tag;       // task tag it answers; defaults to the key's prefix
  std::string match;     // substring that must occur in the user prompt
  std::string response;
};

// Fixture file: {"fixtures": [{"key", "tag", "match", "response"}, ...]}
class FixtureTable {
 public:
  FixtureTable() = default;
  explicit FixtureTable(std::vector<Fixture> fixtures);
  static FixtureTable load(const std::filesystem::path& path);
  static FixtureTable from_json(const json& j);

  void add(Fixture f);
  const Fixture* by_key(std::string_view key) const;
  // First fixture, in file order, with this tag whose match occurs in text.
  const Fixture* by_tag(std::string_view tag, std::string_view text) const;
  std::size_t size() const { return fixtures_.size(); }

 private:
  std::vector<Fixture> fixtures_;
};

// What a mock responder may look at. The mock reply is a pure function of it.
struct MockPrompt {
  std::string_view system_prompt;
  std::string_view user_prompt;
  std::int64_t seed = 0;
};

using MockResponder = std::function<std::string(const MockPrompt&)>;

// Offline provider. Resolution order for a chat request:
//   1. "[fixture:KEY]" marker in either prompt -> that fixture's response
//   2. "[task:TAG]" marker -> first fixture with TAG whose match occurs in the
//      user prompt
//   3. a responder registered for TAG
//   4. deterministic echo of the user prompt
// Embeddings are signed feature hashing of lexical terms, L2-normalized.
class MockBackend : public Backend {
 public:
  explicit MockBackend(FixtureTable fixtures = {}, int embedding_dim = 256);

  void set_responder(const std::string& tag, MockResponder responder);

  Completion complete(const ChatRequest& req) override;
  std::vector<Embedding> embed(const std::vector<std::string>& texts) override;

  // Test hooks.
  void fail_next(int count, FailureKind kind);
  void set_latency(std::chrono::milliseconds latency) { latency_ = latency; }
  std::int64_t calls() const { return calls_.load(); }
  int in_flight_peak() const { return peak_.load(); }

  static std::string echo(const MockPrompt& prompt);
  static Embedding hash_embedding(std::string_view text, int dim);

 private:
  FixtureTable fixtures_;
  int dim_;
  std::map<std::string, MockResponder, std::less<>> responders_;
  mutable std::mutex mu_;
  int pending_failures_ = 0;
  FailureKind failure_kind_ = FailureKind::kServer;
  std::chrono::milliseconds latency_{0};
  std::atomic<std::int64_t> calls_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_{0};

  void maybe_fail();
};

}  // namespace fincot::gateway
