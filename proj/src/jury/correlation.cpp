#include "fincot/jury/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/core.h>

#include "fincot/common/error.hpp"

namespace fincot::jury {

namespace {

void check_strict(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) {
    throw ValidationError(fmt::format("ranking length mismatch: {} vs {}", a.size(), b.size()));
  }
  if (a.size() < 2) throw ValidationError("rankings need at least 2 entries");
  for (const auto* v : {&a, &b}) {
    std::vector<int> s = *v;
    std::sort(s.begin(), s.end());
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] != static_cast<int>(i) + 1) throw ValidationError("not a strict ranking of 1..n");
    }
  }
}

// Inversions in v, by merge sort.
long long inversions(std::vector<int>& v, std::vector<int>& tmp, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  long long inv = inversions(v, tmp, lo, mid) + inversions(v, tmp, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[i] <= v[j]) {
      tmp[k++] = v[i++];
    } else {
      inv += static_cast<long long>(mid - i);
      tmp[k++] = v[j++];
    }
  }
  while (i < mid) tmp[k++] = v[i++];
  while (j < hi) tmp[k++] = v[j++];
  std::copy(tmp.begin() + lo, tmp.begin() + hi, v.begin() + lo);
  return inv;
}

void check_scores(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw ValidationError(fmt::format("score length mismatch: {} vs {}", a.size(), b.size()));
  }
  if (a.size() < 2) throw ValidationError("score vectors need at least 2 entries");
  if (is_constant(a) || is_constant(b)) throw ValidationError("correlation undefined for constant input");
}

int sign(double x) { return (x > 0) - (x < 0); }

}  // namespace

double kendall_tau(const std::vector<int>& a, const std::vector<int>& b) {
  check_strict(a, b);
  const std::size_t n = a.size();
  // Order items by a's rank and count inversions of b's ranks in that order:
  // every inversion is a discordant pair.
  std::vector<int> by_a(n);
  for (std::size_t i = 0; i < n; ++i) by_a[a[i] - 1] = b[i];
  std::vector<int> tmp(n);
  const long long d = inversions(by_a, tmp, 0, n);
  const long long pairs = static_cast<long long>(n) * static_cast<long long>(n - 1) / 2;
  return static_cast<double>(pairs - 2 * d) / static_cast<double>(pairs);
}

double spearman_rho(const std::vector<int>& a, const std::vector<int>& b) {
  check_strict(a, b);
  const auto n = static_cast<long long>(a.size());
  long long d2 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const long long d = a[i] - b[i];
    d2 += d * d;
  }
  return 1.0 - 6.0 * static_cast<double>(d2) / static_cast<double>(n * (n * n - 1));
}

bool is_constant(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

std::vector<double> fractional_ranks(const std::vector<double>& scores) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return scores[x] > scores[y]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double kendall_tau_b(const std::vector<double>& a, const std::vector<double>& b) {
  check_scores(a, b);
  long long s = 0, pairs_a = 0, pairs_b = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const int sa = sign(a[i] - a[j]);
      const int sb = sign(b[i] - b[j]);
      s += sa * sb;
      pairs_a += sa != 0;
      pairs_b += sb != 0;
    }
  }
  return static_cast<double>(s) /
         std::sqrt(static_cast<double>(pairs_a) * static_cast<double>(pairs_b));
}

double spearman_rho_ties(const std::vector<double>& a, const std::vector<double>& b) {
  check_scores(a, b);
  const auto ra = fractional_ranks(a);
  const auto rb = fractional_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace fincot::jury
