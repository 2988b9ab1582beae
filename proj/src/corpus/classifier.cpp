#include "fincot/corpus/classifier.hpp"

#include <array>

#include <spdlog/spdlog.h>

#include "fincot/common/error.hpp"
#include "fincot/common/text.hpp"
#include "fincot/gateway/reask.hpp"

namespace fincot::corpus {

CategoryClassifier::CategoryClassifier(gateway::Gateway& gw, std::string provider_id,
                                       const cot::TemplateSet& templates, std::int64_t seed,
                                       int max_reasks)
    : gw_(gw), provider_id_(std::move(provider_id)), templates_(templates), seed_(seed),
      max_reasks_(max_reasks) {}

std::string CategoryClassifier::prompt(std::string_view query_text) const {
  return cot::render_prompt(templates_.get("classify"),
                            {{"category_guide", category_guide()}, {"query", std::string(query_text)}});
}

Classification CategoryClassifier::classify(std::string_view query_text) const {
  if (trim(query_text).empty()) throw ValidationError("cannot classify empty text");
  gateway::ChatRequest req;
  req.provider_id = provider_id_;
  req.system_prompt = gateway::task_marker("classify");
  req.user_prompt = prompt(query_text);
  req.temperature = 0.0;
  req.max_tokens = 16;
  req.seed = seed_;
  auto outcome = gateway::ask_until_valid(gw_, req, max_reasks_,
                                          [](const std::string& r) { return parse_category_reply(r); });
  Classification c;
  c.raw_replies = std::move(outcome.raw_replies);
  c.cost = outcome.cost;
  if (outcome.value) {
    c.category = *outcome.value;
  } else {
    c.quarantined = true;
    spdlog::warn("classifier reply unparseable after {} attempts: {}", c.raw_replies.size(),
                 outcome.last_error);
  }
  return c;
}

Classification classify_category(const CategoryClassifier& c, std::string_view query_text) {
  return c.classify(query_text);
}

bool is_topically_valid(const CategoryClassifier& c, const RawPost& post, Classification* detail) {
  if (trim(post.body).empty()) {
    throw ValidationError("post '" + post.post_id + "' has an empty body");
  }
  auto result = c.classify(post_text(post));
  spdlog::debug("post {} -> {} ({})", post.post_id, category_label(result.category),
                result.raw_replies.empty() ? "" : result.raw_replies.back());
  const bool valid = !result.quarantined && result.category != Category::kNotApplicable;
  if (detail) *detail = std::move(result);
  return valid;
}

namespace {

struct Vocabulary {
  Category category;
  std::array<std::string_view, 12> terms;
};

// Matched against lexical terms and two-word phrases of the query.
constexpr Vocabulary kVocabulary[] = {
    {Category::kDebtManagementCredit,
     {"debt", "loan", "loans", "credit card", "credit cards", "snowball", "avalanche", "credit score",
      "apr", "refinance", "collections", "owe"}},
    {Category::kRetirementPlanning,
     {"retire", "retirement", "401", "pension", "ira", "roth", "rmd", "social security", "annuity",
      "withdrawal", "403b", "retiring"}},
    {Category::kTaxPlanningOptimization,
     {"tax", "taxes", "deduct", "deduction", "deductions", "irs", "capital gains", "write off",
      "filing", "refund", "w2", "1099"}},
    {Category::kInvestingWealthBuilding,
     {"invest", "investing", "index fund", "etf", "stocks", "portfolio", "brokerage", "diversify",
      "bonds", "allocation", "idle", "dividend"}},
    {Category::kBudgetingCashFlow,
     {"budget", "budgeting", "paycheck", "spending", "expenses", "cash flow", "bills", "income",
      "track", "overspend", "rent", "groceries"}},
    {Category::kInsuranceRiskManagement,
     {"insurance", "policy", "premium", "deductible", "coverage", "life insurance", "umbrella",
      "disability", "liability", "insured", "claim", "term"}},
    {Category::kSavingsEmergencyFunds,
     {"emergency fund", "savings", "save", "saving", "hysa", "high yield", "rainy day", "down payment",
      "sinking fund", "cushion", "emergency", "savings account"}},
    {Category::kEstatePlanningLegacy,
     {"will", "trust", "estate", "inheritance", "inherit", "inherited", "beneficiary", "probate",
      "executor", "heirs", "estate tax", "living trust"}},
};

}  // namespace

std::string mock_classify_reply(std::string_view user_prompt) {
  const auto query = cot::prompt_input(user_prompt, "Query").value_or(std::string(user_prompt));
  const auto terms = lexical_terms(query);
  std::vector<std::string> grams(terms.begin(), terms.end());
  for (std::size_t i = 0; i + 1 < terms.size(); ++i) grams.push_back(terms[i] + " " + terms[i + 1]);
  const bool asks = query.find('?') != std::string::npos ||
                    to_lower(query).find("should i") != std::string::npos ||
                    to_lower(query).find("how do i") != std::string::npos;
  int best = 0;
  Category winner = Category::kNotApplicable;
  for (const auto& v : kVocabulary) {
    int score = 0;
    for (const auto& g : grams) {
      for (auto t : v.terms) {
        if (g == t) score += t.find(' ') == std::string_view::npos ? 1 : 2;
      }
    }
    if (score > best) {
      best = score;
      winner = v.category;
    }
  }
  if (!asks) winner = Category::kNotApplicable;
  return std::string(category_label(winner));
}

}  // namespace fincot::corpus
