#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "fincot/gateway/types.hpp"

namespace fincot::gateway {

// Content-addressed response store. In memory always; mirrored to
// <dir>/<key[0..2]>/<key>.json when a directory is given. All operations
// take one lock, so reads observe every completed write.
class ResponseCache {
 public:
  ResponseCache() = default;
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<ChatResponse> get(const std::string& key);
  void put(const std::string& key, const ChatResponse& response);

  std::optional<Embedding> get_embedding(const std::string& key);
  void put_embedding(const std::string& key, const Embedding& v);

  std::size_t size() const;

 private:
  std::optional<std::filesystem::path> dir_;
  mutable std::mutex mu_;
  std::map<std::string, ChatResponse> chat_;
  std::map<std::string, Embedding> embeddings_;

  std::filesystem::path record_path(std::string_view subdir, const std::string& key) const;
};

}  // namespace fincot::gateway
