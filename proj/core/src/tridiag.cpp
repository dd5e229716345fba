#include "sturmian/tridiag.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sturmian/error.hpp"

namespace sturmian {

namespace {

struct Bracket {
  double lo;
  double hi;
  long count_lo;
  long count_hi;
};

}  // namespace

long sturm_count(std::span<const double> diag, std::span<const double> off, double x) {
  constexpr double kTinyPivot = 1e-290;
  long count = 0;
  double d = 1.0;
  for (std::size_t i = 0; i < diag.size(); ++i) {
    d = (i == 0) ? diag[0] - x : diag[i] - x - off[i - 1] * off[i - 1] / d;
    if (d == 0.0) d = kTinyPivot;
    if (d < 0.0) ++count;
  }
  return count;
}

std::vector<double> tridiagonal_eigenvalues(std::span<const double> diag, std::span<const double> off) {
  const std::size_t n = diag.size();
  if (n == 0) return {};
  if (off.size() + 1 != n) throw InvalidInput("off-diagonal must have n - 1 entries");

  // Gershgorin bounds.
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::fabs(off[i - 1]) : 0.0) + (i + 1 < n ? std::fabs(off[i]) : 0.0);
    lo = std::min(lo, diag[i] - r);
    hi = std::max(hi, diag[i] + r);
  }
  const double pad = 1e-12 * std::max({1.0, std::fabs(lo), std::fabs(hi)});
  lo -= pad;
  hi += pad;

  std::vector<double> eig(n);
  std::vector<Bracket> stack{{lo, hi, sturm_count(diag, off, lo), sturm_count(diag, off, hi)}};
  while (!stack.empty()) {
    Bracket b = stack.back();
    stack.pop_back();
    if (b.count_hi == b.count_lo) continue;
    const double mid = b.lo + 0.5 * (b.hi - b.lo);
    if (mid <= b.lo || mid >= b.hi) {
      for (long j = b.count_lo; j < b.count_hi; ++j) eig[static_cast<std::size_t>(j)] = mid;
      continue;
    }
    const long c = sturm_count(diag, off, mid);
    stack.push_back({mid, b.hi, c, b.count_hi});
    stack.push_back({b.lo, mid, b.count_lo, c});
  }
  return eig;
}

}  // namespace sturmian
