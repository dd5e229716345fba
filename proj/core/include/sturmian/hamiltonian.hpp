#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "sturmian/bigfloat.hpp"
#include "sturmian/contfrac.hpp"

namespace sturmian {

/// One period of the Sturmian potential at the rational frequency p/q:
/// v(n) = floor((n+1) p/q) - floor(n p/q) for n = 1..q, scaled by V.
struct PotentialWord {
  long p = 0;
  long q = 1;
  double V = 0.0;
  std::vector<std::uint8_t> word;  // word[n - 1] holds v(n)

  double site(long n) const { return V * word[static_cast<std::size_t>(n - 1)]; }
  long ones() const;
};

/// Throws InvalidInput unless q >= 1, 0 <= p <= q and gcd(p, q) = 1.
PotentialWord potential_word(long p, long q, double V);

/// 2x2 real matrix, row-major.
template <class Real>
struct Mat2 {
  Real m11, m12, m21, m22;
};

/// Product T_q ... T_1 of the one-step transfer matrices
/// T_n(E) = [[E - V v(n), -1], [1, 0]].
///
/// In binary64 the running product is rescaled by exact powers of two to
/// avoid overflow inside spectral gaps; `log2_scale` records the total
/// scaling so that the true product is matrix * 2^log2_scale.
struct TransferMatrixProduct {
  Mat2<double> matrix{1.0, 0.0, 0.0, 1.0};
  long log2_scale = 0;

  double trace() const;
  double determinant() const;
};

TransferMatrixProduct transfer_product(const PotentialWord& word, double E);

/// tr(T_q ... T_1)(E). Returns +-inf when the true value overflows binary64.
double discriminant(const PotentialWord& word, double E);
BigFloat discriminant(const PotentialWord& word, const BigFloat& E);

/// Discriminant and its derivative in E, by forward-mode differentiation of
/// the matrix product.
std::pair<double, double> discriminant_with_derivative(const PotentialWord& word, double E);

/// Sign of D(E) - c for c in {-2, 2}, robust to overflow: returns -1, 0 or 1.
int discriminant_compare(const PotentialWord& word, double E, double c);
int discriminant_compare(const PotentialWord& word, const BigFloat& E, double c);

/// Period-q matrices with periodic (+1 corners) and antiperiodic (-1
/// corners) boundary conditions. q = 1 and q = 2 are assembled analytically.
struct PeriodicMatrices {
  Eigen::MatrixXd periodic;
  Eigen::MatrixXd antiperiodic;
};

PeriodicMatrices periodic_matrices(const PotentialWord& word);

/// Merged ascending eigenvalues E_1 <= ... <= E_{2q} of both matrices
/// (dense symmetric eigensolve).
std::vector<double> periodic_eigenvalues(const PotentialWord& word);

/// Potential values v(1), v(2), ... of a half-line restriction, either the
/// periodic extension of a rational word or the Sturmian word of an
/// irrational alpha given by its continued fraction.
class SiteSequence {
 public:
  static SiteSequence from_rational(long p, long q, double V);
  /// Sturmian word sampled for n = 1..n_max from a convergent of cf whose
  /// denominator exceeds n_max + 1 (floor(n alpha) is exact there).
  static SiteSequence from_continued_fraction(const ContinuedFraction& cf, double V, long n_max);

  double V() const { return V_; }
  long length() const { return static_cast<long>(word_.size()); }
  /// Potential at site n >= 1; rational sequences repeat with period q.
  double potential(long n) const;
  std::uint8_t letter(long n) const;

 private:
  SiteSequence(double V, std::vector<std::uint8_t> word, bool periodic)
      : V_(V), word_(std::move(word)), periodic_(periodic) {}

  double V_ = 0.0;
  std::vector<std::uint8_t> word_;
  bool periodic_ = false;
};

/// Number of eigenvalues <= E of the n x n Dirichlet restriction to sites
/// 1..n, by a Sturm sign-count sweep in O(n). Exact for E not an eigenvalue;
/// otherwise off by at most the multiplicity at E.
long dirichlet_eig_count(const SiteSequence& sites, long n, double E);

}  // namespace sturmian
