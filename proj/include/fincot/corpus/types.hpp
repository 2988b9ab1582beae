#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fincot/common/jsonl.hpp"
#include "fincot/common/timeutil.hpp"
#include "fincot/corpus/category.hpp"

namespace fincot::corpus {

struct RawPost {
  std::string post_id;
  std::string title;
  std::string body;
  std::optional<std::string> flair;
  Timestamp created_at;
  std::string source;
};

// Throws ValidationError naming the offending post: missing id, unparseable
// created_at, duplicate post_id within the batch.
std::vector<RawPost> raw_posts_from_json(const std::vector<json>& rows);
json to_json(const RawPost& p);

struct Query {
  std::string query_id;
  std::string text;
  Category category = Category::kNotApplicable;
  std::string source_post;
  std::size_t token_count = 0;
};

json to_json(const Query& q);
Query query_from_json(const json& j);
std::vector<Query> load_queries(const std::filesystem::path& path);

// Title and body joined; the body alone when it already starts with the title.
std::string post_text(const RawPost& p);

}  // namespace fincot::corpus
