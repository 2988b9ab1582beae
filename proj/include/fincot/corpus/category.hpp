#pragma once

#include <array>
#include <string>
#include <string_view>

namespace fincot::corpus {

enum class Category {
  kDebtManagementCredit,
  kRetirementPlanning,
  kTaxPlanningOptimization,
  kInvestingWealthBuilding,
  kBudgetingCashFlow,
  kInsuranceRiskManagement,
  kSavingsEmergencyFunds,
  kEstatePlanningLegacy,
  kNotApplicable,
};

// The eight dataset categories, in the dataset table's row order.
inline constexpr std::array<Category, 8> kDatasetCategories = {
    Category::kDebtManagementCredit,   Category::kRetirementPlanning,
    Category::kTaxPlanningOptimization, Category::kInvestingWealthBuilding,
    Category::kBudgetingCashFlow,      Category::kInsuranceRiskManagement,
    Category::kSavingsEmergencyFunds,  Category::kEstatePlanningLegacy};

// "Debt Management & Credit", ..., "Not_Applicable"
std::string_view category_label(Category c);
// "DebtManagementCredit", ..., "NotApplicable"
std::string_view category_key(Category c);
std::string_view category_scope(Category c);
std::string_view category_example(Category c);

// Accepts the label or key in any case and punctuation; throws ValidationError.
Category parse_category(std::string_view text);

// Reads a classifier reply: either a bare label (optionally prefixed with
// "Category:") or a reply naming exactly one label. Throws ValidationError.
Category parse_category_reply(std::string_view reply);

// Scope and example lines for the classification prompt.
std::string category_guide();

}  // namespace fincot::corpus
