#include "fincot/gateway/cache.hpp"

#include <system_error>

#include "fincot/common/jsonl.hpp"

namespace fincot::gateway {

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(*dir_);
}

std::filesystem::path ResponseCache::record_path(std::string_view subdir,
                                                 const std::string& key) const {
  return *dir_ / std::string(subdir) / key.substr(0, 2) / (key + ".json");
}

std::optional<ChatResponse> ResponseCache::get(const std::string& key) {
  std::lock_guard lock(mu_);
  if (auto it = chat_.find(key); it != chat_.end()) return it->second;
  if (!dir_) return std::nullopt;
  const auto path = record_path("chat", key);
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  try {
    auto r = chat_response_from_json(read_json_file(path));
    chat_.emplace(key, r);
    return r;
  } catch (const std::exception&) {
    // A torn or foreign file is treated as a miss and overwritten on put.
    return std::nullopt;
  }
}

void ResponseCache::put(const std::string& key, const ChatResponse& response) {
  std::lock_guard lock(mu_);
  ChatResponse stored = response;
  stored.from_cache = false;
  chat_[key] = stored;
  if (dir_) write_text_file(record_path("chat", key), to_json(stored).dump());
}

std::optional<Embedding> ResponseCache::get_embedding(const std::string& key) {
  std::lock_guard lock(mu_);
  if (auto it = embeddings_.find(key); it != embeddings_.end()) return it->second;
  if (!dir_) return std::nullopt;
  const auto path = record_path("embed", key);
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  try {
    auto v = read_json_file(path).get<Embedding>();
    embeddings_.emplace(key, v);
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void ResponseCache::put_embedding(const std::string& key, const Embedding& v) {
  std::lock_guard lock(mu_);
  embeddings_[key] = v;
  if (dir_) write_text_file(record_path("embed", key), json(v).dump());
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mu_);
  return chat_.size() + embeddings_.size();
}

}  // namespace fincot::gateway
