#pragma once

#include <string>
#include <vector>

#include "fincot/corpus/category.hpp"
#include "fincot/corpus/types.hpp"
#include "fincot/cot/templates.hpp"
#include "fincot/gateway/gateway.hpp"

namespace fincot::corpus {

struct Classification {
  Category category = Category::kNotApplicable;
  bool quarantined = false;  // no parseable label after the re-asks
  std::vector<std::string> raw_replies;
  double cost = 0.0;
};

class CategoryClassifier {
 public:
  CategoryClassifier(gateway::Gateway& gw, std::string provider_id, const cot::TemplateSet& templates,
                     std::int64_t seed = 0, int max_reasks = 3);

  // Throws ValidationError for empty text.
  Classification classify(std::string_view query_text) const;

  // The rendered user prompt for a query; exposed for inspection and tests.
  std::string prompt(std::string_view query_text) const;

 private:
  gateway::Gateway& gw_;
  std::string provider_id_;
  const cot::TemplateSet& templates_;
  std::int64_t seed_;
  int max_reasks_;
};

Classification classify_category(const CategoryClassifier& c, std::string_view query_text);

// Post-level gate: the classifier assigns something other than Not_Applicable.
// Throws ValidationError for an empty body.
bool is_topically_valid(const CategoryClassifier& c, const RawPost& post,
                        Classification* detail = nullptr);

// Offline stand-in for an LLM classifier: keyword scores against each
// category's vocabulary, Not_Applicable when nothing matches or no question
// is asked. Reads the query out of a rendered classify prompt.
std::string mock_classify_reply(std::string_view user_prompt);

}  // namespace fincot::corpus
