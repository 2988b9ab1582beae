#pragma once

#include <vector>

namespace fincot::jury {

// Strict rankings: each a permutation of 1..n.
double kendall_tau(const std::vector<int>& a, const std::vector<int>& b);
double spearman_rho(const std::vector<int>& a, const std::vector<int>& b);

// Average ranks, 1 for the largest score. Equal scores share their mean rank.
std::vector<double> fractional_ranks(const std::vector<double>& scores);

// Tie-aware versions used on per-query score vectors, where models can tie.
// tau-b, and Pearson correlation of fractional ranks. Both reduce to the
// strict formulas when there are no ties. A constant input has no defined
// correlation and throws ValidationError; callers skip it via is_constant.
double kendall_tau_b(const std::vector<double>& a, const std::vector<double>& b);
double spearman_rho_ties(const std::vector<double>& a, const std::vector<double>& b);
bool is_constant(const std::vector<double>& v);

}  // namespace fincot::jury
