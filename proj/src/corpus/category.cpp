#include "fincot/corpus/category.hpp"

#include <cctype>
#include <optional>

#include <fmt/core.h>

#include "fincot/common/error.hpp"
#include "fincot/common/text.hpp"

namespace fincot::corpus {
namespace {

struct Info {
  Category category;
  std::string_view label;
  std::string_view key;
  std::string_view scope;
  std::string_view example;
};

constexpr Info kInfo[] = {
    {Category::kDebtManagementCredit, "Debt Management & Credit", "DebtManagementCredit",
     "Strategies for debt reduction (e.g. snowball, avalanche), credit-score improvement, and loan "
     "analysis.",
     "Should I pay off my car loan early or my credit card first?"},
    {Category::kRetirementPlanning, "Retirement Planning", "RetirementPlanning",
     "Strategies, income-needs analysis, benefits optimization (e.g. 401(k), pensions) and "
     "withdrawal strategies.",
     "How much do I need saved to retire at 60 with a small pension?"},
    {Category::kTaxPlanningOptimization, "Tax Planning & Optimization", "TaxPlanningOptimization",
     "Tax-minimization strategies, understanding deductions and credits, and investment-tax "
     "implications.",
     "Can I deduct my home office as a freelancer?"},
    {Category::kInvestingWealthBuilding, "Investing & Wealth Building", "InvestingWealthBuilding",
     "Investment strategies based on risk tolerance, diversification, asset allocation, and "
     "long-term growth.",
     "Is a three-fund portfolio enough diversification for a 25-year-old?"},
    {Category::kBudgetingCashFlow, "Budgeting & Cash-Flow Management", "BudgetingCashFlow",
     "Creating budgets, tracking expenses, managing income streams, and improving cash flow.",
     "My paycheck is gone before the month ends; how do I build a budget that works?"},
    {Category::kInsuranceRiskManagement, "Insurance & Risk Management", "InsuranceRiskManagement",
     "Assessing insurance needs (life, health, property), understanding policies, and managing "
     "financial risks.",
     "Do I need term life insurance if I have no kids yet?"},
    {Category::kSavingsEmergencyFunds, "Savings & Emergency Funds", "SavingsEmergencyFunds",
     "Strategies for building savings, establishing emergency funds, and goal-based saving.",
     "How many months of expenses should my emergency fund cover?"},
    {Category::kEstatePlanningLegacy, "Estate Planning & Legacy", "EstatePlanningLegacy",
     "Wills, trusts, inheritance considerations, and minimising estate taxes (accounting for "
     "regional variations).",
     "Should my parents put their house in a trust?"},
    {Category::kNotApplicable, "Not_Applicable", "NotApplicable",
     "Anything that is not an explicit, answerable personal finance question.",
     "What's the best pizza place downtown?"},
};

const Info& info(Category c) { return kInfo[static_cast<int>(c)]; }

// Lowercase alphanumerics only: "Debt Management & Credit" -> "debtmanagementcredit".
std::string squash(std::string_view s) {
  std::string out;
  for (char ch : s) {
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
  }
  return out;
}

std::optional<Category> exact(std::string_view text) {
  const auto s = squash(text);
  if (s.empty()) return std::nullopt;
  for (const auto& i : kInfo) {
    if (s == squash(i.label) || s == squash(i.key)) return i.category;
  }
  if (s == "na" || s == "notapplicable") return Category::kNotApplicable;
  return std::nullopt;
}

}  // namespace

std::string_view category_label(Category c) { return info(c).label; }
std::string_view category_key(Category c) { return info(c).key; }
std::string_view category_scope(Category c) { return info(c).scope; }
std::string_view category_example(Category c) { return info(c).example; }

Category parse_category(std::string_view text) {
  if (auto c = exact(text)) return *c;
  throw ValidationError(fmt::format("unknown category '{}'", text));
}

Category parse_category_reply(std::string_view reply) {
  for (const auto& raw : split_lines(reply)) {
    auto line = std::string(trim(raw));
    if (line.empty()) continue;
    const auto lower = to_lower(line);
    if (lower.rfind("category:", 0) == 0) line = line.substr(9);
    if (auto c = exact(line)) return *c;
    break;
  }
  // Otherwise the reply must name exactly one label.
  const auto s = squash(reply);
  std::optional<Category> found;
  for (const auto& i : kInfo) {
    if (s.find(squash(i.label)) != std::string::npos) {
      if (found && *found != i.category) throw ValidationError("reply names several categories");
      found = i.category;
    }
  }
  if (!found) throw ValidationError("unrecognized category label");
  return *found;
}

std::string category_guide() {
  std::string out;
  int n = 1;
  for (auto c : kDatasetCategories) {
    out += fmt::format("{}. {}\n   Scope: {}\n   Example: \"{}\"\n", n++, category_label(c),
                       category_scope(c), category_example(c));
  }
  out += fmt::format("{}. {}\n   Scope: {}", n, category_label(Category::kNotApplicable),
                     category_scope(Category::kNotApplicable));
  return out;
}

}  // namespace fincot::corpus
