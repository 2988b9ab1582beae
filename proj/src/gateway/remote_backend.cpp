#include "fincot/gateway/remote_backend.hpp"

#include <cstdlib>

#include <fmt/core.h>
#include <httplib.h>

#include "fincot/common/error.hpp"

namespace fincot::gateway {

EndpointUrl split_endpoint_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ValidationError(fmt::format("endpoint url '{}' has no scheme", url));
  }
  const auto path_start = url.find('/', scheme_end + 3);
  EndpointUrl out;
  if (path_start == std::string::npos) {
    out.scheme_host_port = url;
  } else {
    out.scheme_host_port = url.substr(0, path_start);
    out.path_prefix = url.substr(path_start);
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
  }
  return out;
}

FailureKind classify_http_status(int status) {
  if (status == 429) return FailureKind::kRateLimited;
  if (status >= 500) return FailureKind::kServer;
  return FailureKind::kClient;
}

RemoteBackend::RemoteBackend(ProviderProfile profile)
    : profile_(std::move(profile)), endpoint_(split_endpoint_url(profile_.base_url)) {}

json RemoteBackend::post(const std::string& path, const json& body) const {
  httplib::Client client(endpoint_.scheme_host_port);
  const auto timeout = std::chrono::duration<double>(profile_.timeout_s);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  httplib::Headers headers;
  if (!profile_.api_key_env.empty()) {
    if (const char* key = std::getenv(profile_.api_key_env.c_str())) {
      headers.emplace("Authorization", fmt::format("Bearer {}", key));
    }
  }
  auto res = client.Post(endpoint_.path_prefix + path, headers, body.dump(), "application/json");
  if (!res) {
    throw BackendError(FailureKind::kTransport,
                       fmt::format("{}: {}", endpoint_.scheme_host_port, httplib::to_string(res.error())));
  }
  if (res->status < 200 || res->status >= 300) {
    throw BackendError(classify_http_status(res->status),
                       fmt::format("HTTP {} from {}{}", res->status, endpoint_.path_prefix, path),
                       res->status);
  }
  try {
    return json::parse(res->body);
  } catch (const json::parse_error&) {
    throw BackendError(FailureKind::kMalformed, "response body is not JSON", res->status);
  }
}

Completion RemoteBackend::complete(const ChatRequest& req) {
  json body{{"model", profile_.model},
            {"messages",
             json::array({json{{"role", "system"}, {"content", req.system_prompt}},
                          json{{"role", "user"}, {"content", req.user_prompt}}})},
            {"temperature", req.temperature},
            {"max_tokens", req.max_tokens}};
  if (req.seed) body["seed"] = *req.seed;
  const json reply = post("/chat/completions", body);
  Completion out;
  try {
    out.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
    if (reply.contains("usage") && reply["usage"].is_object()) {
      const auto& u = reply["usage"];
      if (u.contains("prompt_tokens")) out.prompt_tokens = u["prompt_tokens"].get<std::int64_t>();
      if (u.contains("completion_tokens")) {
        out.completion_tokens = u["completion_tokens"].get<std::int64_t>();
      }
    }
  } catch (const json::exception& e) {
    throw BackendError(FailureKind::kMalformed, fmt::format("chat reply: {}", e.what()));
  }
  return out;
}

std::vector<Embedding> RemoteBackend::embed(const std::vector<std::string>& texts) {
  const json reply = post("/embeddings", json{{"model", profile_.embedding_model.empty()
                                                            ? profile_.model
                                                            : profile_.embedding_model},
                                              {"input", texts}});
  std::vector<Embedding> out(texts.size());
  try {
    const auto& data = reply.at("data");
    if (data.size() != texts.size()) {
      throw BackendError(FailureKind::kMalformed, "embedding count mismatch");
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto idx = data[i].value("index", i);
      if (idx >= out.size()) throw BackendError(FailureKind::kMalformed, "embedding index out of range");
      out[idx] = data[i].at("embedding").get<Embedding>();
    }
  } catch (const json::exception& e) {
    throw BackendError(FailureKind::kMalformed, fmt::format("embedding reply: {}", e.what()));
  }
  return out;
}

}  // namespace fincot::gateway
