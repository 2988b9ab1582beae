#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fincot/gateway/types.hpp"

namespace fincot::gateway {

enum class FailureKind {
  kTransport,    // connection refused, timeout, DNS
  kServer,       // HTTP 5xx
  kRateLimited,  // HTTP 429
  kClient,       // other HTTP 4xx
  kMalformed,    // reply body not understood
};

// Thrown by backends. Only transport, server and rate-limit failures are
// retried by the gateway.
class BackendError : public std::runtime_error {
 public:
  BackendError(FailureKind kind, const std::string& what, int status = 0)
      : std::runtime_error(what), kind_(kind), status_(status) {}

  FailureKind kind() const { return kind_; }
  int status() const { return status_; }
  bool retryable() const {
    return kind_ == FailureKind::kTransport || kind_ == FailureKind::kServer ||
           kind_ == FailureKind::kRateLimited;
  }

 private:
  FailureKind kind_;
  int status_;
};

struct Completion {
  std::string text;
  std::optional<std::int64_t> prompt_tokens;
  std::optional<std::int64_t> completion_tokens;
};

// One provider's wire protocol. Implementations must be safe to call from
// several threads at once; the gateway bounds how many.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual Completion complete(const ChatRequest& req) = 0;
  virtual std::vector<Embedding> embed(const std::vector<std::string>& texts) = 0;
};

}  // namespace fincot::gateway
