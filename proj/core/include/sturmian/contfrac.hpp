#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sturmian {

/// Mantissa bits for configurable-precision arithmetic and the absolute
/// tolerance used for every interval-endpoint comparison.
struct PrecisionBudget {
  int bits = 53;
  double abs_tol = 1e-10;

  /// Throws InvalidInput unless bits >= 53 and abs_tol > 0.
  void validate() const;
};

/// An irrational (or, when truncated, rational) number in (0,1) given by its
/// partial quotients [0; a_1, a_2, ...]. The optional periodic tail repeats
/// indefinitely after the explicit prefix; an empty tail truncates the
/// expansion, so the represented value is the rational [0; a_1, ..., a_K].
class ContinuedFraction {
 public:
  ContinuedFraction(std::vector<int> quotients, std::vector<int> periodic_tail = {});

  /// Parses `0,1,2,(4,3)`: a leading zero, the explicit quotients, and an
  /// optional parenthesised periodic block. The shorthand `golden` is
  /// accepted for `0,(1)`.
  static ContinuedFraction parse(std::string_view text);
  static ContinuedFraction golden_mean();

  /// a_k for k >= 1. Throws InvalidInput past the end of a finite expansion.
  int quotient(int k) const;
  bool has_quotient(int k) const;

  bool is_finite() const { return tail_.empty(); }
  /// Number of explicit quotients K.
  int prefix_length() const { return static_cast<int>(prefix_.size()); }
  const std::vector<int>& prefix() const { return prefix_; }
  const std::vector<int>& tail() const { return tail_; }

  /// Canonical text form, e.g. `0,1,2,(4)`.
  std::string to_string() const;

  friend bool operator==(const ContinuedFraction&, const ContinuedFraction&) = default;

 private:
  std::vector<int> prefix_;
  std::vector<int> tail_;
};

/// p_k / q_k with the seeds (p_{-1}, q_{-1}) = (1, 0), (p_0, q_0) = (0, 1).
struct Convergent {
  int k = 0;
  mpz_class p;
  mpz_class q;
};

/// Convergents for k = -1 .. k_max (k_max + 2 entries), exact.
std::vector<Convergent> convergents(const ContinuedFraction& cf, int k_max);

/// p_k and q_k as machine integers; throws InvalidInput if they do not fit.
struct SmallConvergent {
  long p = 0;
  long q = 1;
};
SmallConvergent small_convergent(const ContinuedFraction& cf, int k);

/// Closed interval with exact rational endpoints.
struct RationalInterval {
  mpq_class lo;
  mpq_class hi;

  mpq_class width() const { return hi - lo; }
  bool contains(const mpq_class& x) const { return lo <= x && x <= hi; }
  bool contains(const RationalInterval& other) const {
    return lo <= other.lo && other.hi <= hi;
  }
  double lo_double() const { return lo.get_d(); }
  double hi_double() const { return hi.get_d(); }
  double mid_double() const;
};

/// Enclosure of alpha of width <= budget.abs_tol, built from two consecutive
/// convergents. Exact (zero width) for a truncated expansion.
RationalInterval alpha_value(const ContinuedFraction& cf, const PrecisionBudget& budget);

/// Exact sign of a * alpha + b.
int sign_of_linear(const ContinuedFraction& cf, const mpz_class& a, const mpz_class& b);

/// floor(n * alpha), exact.
mpz_class floor_n_alpha(const ContinuedFraction& cf, long n);

/// Enclosure of the fractional part {n alpha}, strictly inside (0,1) and of
/// width <= budget.abs_tol. Throws InvalidInput when n alpha is an integer
/// (only possible for truncated expansions) or n == 0.
RationalInterval frac_n_alpha(const ContinuedFraction& cf, long n, const PrecisionBudget& budget);

/// Enclosure of beta_k = |q_k alpha - p_k| = (-1)^k (q_k alpha - p_k).
RationalInterval beta_value(const ContinuedFraction& cf, int k, const PrecisionBudget& budget);

/// Upper bound on the tail sum_{k > k_max} a_{k+1} beta_k of the IDS series.
/// The tail telescopes to beta_{k_max} + beta_{k_max+1}.
mpq_class series_tail_bound(const ContinuedFraction& cf, int k_max);

/// Largest admissible digit at index k: a_{k+1} for k >= 0, and 1 at k = -1.
int digit_bound(const ContinuedFraction& cf, int k);

/// Digits (pi_{-1}, pi_0, ..., pi_{k_max}) of the expansion
///   {n alpha} = -alpha + sum_k (-1)^k pi_k (q_k alpha - p_k).
struct OstrowskiDigits {
  int k_max = -1;
  std::vector<int> digits;  // digits[k + 1] holds pi_k

  int at(int k) const { return digits.at(static_cast<std::size_t>(k + 1)); }
  /// True when the truncated series equals the target exactly.
  bool exact = false;
};

/// Greedy largest-beta-first digit extraction with backtracking. All
/// comparisons are exact. Throws NumericError if no admissible sequence
/// exists up to k_max.
OstrowskiDigits ostrowski_digits(const ContinuedFraction& cf, long n, int k_max);

struct Fraction {
  long p = 0;
  long q = 1;

  double value() const { return static_cast<double>(p) / static_cast<double>(q); }
  friend bool operator==(const Fraction&, const Fraction&) = default;
};

/// All reduced p/q in (0,1] with q <= q_max, ascending.
std::vector<Fraction> rational_grid(long q_max);

/// Parses "p/q"; throws InvalidInput on malformed text.
Fraction parse_fraction(std::string_view text);

}  // namespace sturmian
