#include "fincot/corpus/types.hpp"

#include <set>

#include <fmt/core.h>

#include "fincot/common/error.hpp"
#include "fincot/common/text.hpp"

namespace fincot::corpus {
namespace {

std::string id_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw ValidationError("post_id must be a string or integer");
}

std::string opt_string(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return {};
  return j.at(key).get<std::string>();
}

}  // namespace

std::vector<RawPost> raw_posts_from_json(const std::vector<json>& rows) {
  std::vector<RawPost> out;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& j = rows[i];
    try {
      if (!j.is_object() || !j.contains("post_id")) throw ValidationError("missing post_id");
      RawPost p;
      p.post_id = id_string(j.at("post_id"));
      if (p.post_id.empty()) throw ValidationError("empty post_id");
      if (!seen.insert(p.post_id).second) {
        throw ValidationError(fmt::format("duplicate post_id '{}'", p.post_id));
      }
      p.title = opt_string(j, "title");
      p.body = opt_string(j, "body");
      if (j.contains("flair") && !j.at("flair").is_null()) p.flair = j.at("flair").get<std::string>();
      if (!j.contains("created_at")) throw ValidationError("missing created_at");
      p.created_at = parse_timestamp_value(j.at("created_at"));
      p.source = opt_string(j, "source");
      out.push_back(std::move(p));
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("post record {}: {}", i + 1, e.what()));
    } catch (const json::exception& e) {
      throw ValidationError(fmt::format("post record {}: {}", i + 1, e.what()));
    }
  }
  return out;
}

json to_json(const RawPost& p) {
  json j{{"post_id", p.post_id},
         {"title", p.title},
         {"body", p.body},
         {"created_at", format_utc(p.created_at)},
         {"source", p.source}};
  j["flair"] = p.flair ? json(*p.flair) : json(nullptr);
  return j;
}

json to_json(const Query& q) {
  return json{{"query_id", q.query_id},
              {"text", q.text},
              {"category", std::string(category_label(q.category))},
              {"source_post", q.source_post},
              {"token_count", q.token_count}};
}

Query query_from_json(const json& j) {
  try {
    Query q;
    q.query_id = j.at("query_id").get<std::string>();
    q.text = j.at("text").get<std::string>();
    if (q.query_id.empty() || trim(q.text).empty()) throw ValidationError("empty query_id or text");
    q.category = j.contains("category") ? parse_category(j.at("category").get<std::string>())
                                        : Category::kNotApplicable;
    q.source_post = j.value("source_post", "");
    q.token_count = whitespace_token_count(q.text);
    return q;
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("query record: {}", e.what()));
  }
}

std::vector<Query> load_queries(const std::filesystem::path& path) {
  std::vector<Query> out;
  std::set<std::string> seen;
  std::size_t line = 0;
  for (const auto& j : read_jsonl(path)) {
    ++line;
    try {
      out.push_back(query_from_json(j));
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("{}:{}: {}", path.string(), line, e.what()));
    }
    if (!seen.insert(out.back().query_id).second) {
      throw ValidationError(fmt::format("{}:{}: duplicate query_id '{}'", path.string(), line,
                                        out.back().query_id));
    }
  }
  return out;
}

std::string post_text(const RawPost& p) {
  const auto title = std::string(trim(p.title));
  const auto body = std::string(trim(p.body));
  if (title.empty()) return body;
  if (body.empty() || body.rfind(title, 0) == 0) return body.empty() ? title : body;
  return title + "\n\n" + body;
}

}  // namespace fincot::corpus
