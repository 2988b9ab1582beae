#pragma once

#include <string>

#include "fincot/gateway/backend.hpp"

namespace fincot::gateway {

// "https://api.example.com:8443/v1" -> {"https://api.example.com:8443", "/v1"}
struct EndpointUrl {
  std::string scheme_host_port;
  std::string path_prefix;
};
EndpointUrl split_endpoint_url(const std::string& url);

// OpenAI-compatible chat-completions and embeddings over HTTP(S).
// The bearer token is read from the profile's api_key_env at call time.
class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(ProviderProfile profile);

  Completion complete(const ChatRequest& req) override;
  std::vector<Embedding> embed(const std::vector<std::string>& texts) override;

 private:
  ProviderProfile profile_;
  EndpointUrl endpoint_;

  json post(const std::string& path, const json& body) const;
};

// Maps an HTTP status to the failure class the gateway's retry logic uses.
FailureKind classify_http_status(int status);

}  // namespace fincot::gateway
