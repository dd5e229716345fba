#include "sturmian/hamiltonian.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cfloat>
#include <climits>
#include <cmath>
#include <numeric>

#include "sturmian/error.hpp"

namespace sturmian {

namespace {

constexpr int kRescaleExponent = 600;
constexpr int kRescaleEvery = 8;

int clamp_exponent(long e) {
  return static_cast<int>(std::clamp<long>(e, INT_MIN / 2, INT_MAX / 2));
}

__extension__ using i128 = __int128;

std::uint8_t sturmian_letter(i128 n, i128 p, i128 q) {
  const i128 a = ((n + 1) * p) / q;
  const i128 b = (n * p) / q;
  return static_cast<std::uint8_t>(a - b);
}

// Row-vector form of the running product: rows (a11, a12) and (a21, a22).
struct ProductState {
  double a11 = 1.0, a12 = 0.0, a21 = 0.0, a22 = 1.0;
  long log2_scale = 0;

  void step(double w) {
    const double n11 = w * a11 - a21;
    const double n12 = w * a12 - a22;
    a21 = a11;
    a22 = a12;
    a11 = n11;
    a12 = n12;
  }

  void rescale_if_large() {
    const double big = std::max({std::fabs(a11), std::fabs(a12), std::fabs(a21), std::fabs(a22)});
    if (big > std::ldexp(1.0, kRescaleExponent)) {
      a11 = std::ldexp(a11, -kRescaleExponent);
      a12 = std::ldexp(a12, -kRescaleExponent);
      a21 = std::ldexp(a21, -kRescaleExponent);
      a22 = std::ldexp(a22, -kRescaleExponent);
      log2_scale += kRescaleExponent;
    }
  }
};

ProductState run_product(const PotentialWord& word, double E) {
  ProductState s;
  const double w0 = E;
  const double w1 = E - word.V;
  for (std::size_t n = 0; n < word.word.size(); ++n) {
    s.step(word.word[n] ? w1 : w0);
    if ((n + 1) % kRescaleEvery == 0) s.rescale_if_large();
  }
  return s;
}

BigFloat big_trace(const PotentialWord& word, const BigFloat& E) {
  const int bits = E.bits();
  BigFloat a11(1.0, bits), a12(0.0, bits), a21(0.0, bits), a22(1.0, bits);
  BigFloat n11(bits), n12(bits);
  BigFloat w0(E);
  BigFloat w1 = E - BigFloat(word.V, bits);
  for (std::uint8_t letter : word.word) {
    const BigFloat& w = letter ? w1 : w0;
    mpfr_fms(n11.raw(), w.raw(), a11.raw(), a21.raw(), MPFR_RNDN);
    mpfr_fms(n12.raw(), w.raw(), a12.raw(), a22.raw(), MPFR_RNDN);
    mpfr_swap(a21.raw(), a11.raw());
    mpfr_swap(a22.raw(), a12.raw());
    mpfr_swap(a11.raw(), n11.raw());
    mpfr_swap(a12.raw(), n12.raw());
  }
  return a11 + a22;
}

}  // namespace

long PotentialWord::ones() const {
  return std::accumulate(word.begin(), word.end(), 0L);
}

PotentialWord potential_word(long p, long q, double V) {
  if (q <= 0) throw InvalidInput("q must be positive");
  if (p < 0 || p > q) throw InvalidInput("p must satisfy 0 <= p <= q");
  if (std::gcd(p, q) != 1) {
    throw InvalidInput(std::to_string(p) + "/" + std::to_string(q) + " is not reduced");
  }
  if (!std::isfinite(V)) throw InvalidInput("coupling must be finite");
  PotentialWord w;
  w.p = p;
  w.q = q;
  w.V = V;
  w.word.resize(static_cast<std::size_t>(q));
  for (long n = 1; n <= q; ++n) w.word[static_cast<std::size_t>(n - 1)] = sturmian_letter(n, p, q);
  return w;
}

double TransferMatrixProduct::trace() const {
  return std::ldexp(matrix.m11 + matrix.m22, clamp_exponent(log2_scale));
}

double TransferMatrixProduct::determinant() const {
  const double d = matrix.m11 * matrix.m22 - matrix.m12 * matrix.m21;
  return std::ldexp(d, clamp_exponent(2 * log2_scale));
}

TransferMatrixProduct transfer_product(const PotentialWord& word, double E) {
  const ProductState s = run_product(word, E);
  TransferMatrixProduct out;
  out.matrix = {s.a11, s.a12, s.a21, s.a22};
  out.log2_scale = s.log2_scale;
  return out;
}

double discriminant(const PotentialWord& word, double E) {
  return transfer_product(word, E).trace();
}

BigFloat discriminant(const PotentialWord& word, const BigFloat& E) { return big_trace(word, E); }

std::pair<double, double> discriminant_with_derivative(const PotentialWord& word, double E) {
  double a11 = 1.0, a12 = 0.0, a21 = 0.0, a22 = 1.0;
  double d11 = 0.0, d12 = 0.0, d21 = 0.0, d22 = 0.0;
  long scale = 0;
  for (std::size_t n = 0; n < word.word.size(); ++n) {
    const double w = word.word[n] ? E - word.V : E;
    const double n11 = w * a11 - a21;
    const double n12 = w * a12 - a22;
    const double m11 = a11 + w * d11 - d21;
    const double m12 = a12 + w * d12 - d22;
    a21 = a11;
    a22 = a12;
    a11 = n11;
    a12 = n12;
    d21 = d11;
    d22 = d12;
    d11 = m11;
    d12 = m12;
    if ((n + 1) % kRescaleEvery == 0) {
      const double big = std::max({std::fabs(a11), std::fabs(a12), std::fabs(a21), std::fabs(a22),
                                   std::fabs(d11), std::fabs(d12), std::fabs(d21), std::fabs(d22)});
      if (big > std::ldexp(1.0, kRescaleExponent)) {
        for (double* x : {&a11, &a12, &a21, &a22, &d11, &d12, &d21, &d22}) *x = std::ldexp(*x, -kRescaleExponent);
        scale += kRescaleExponent;
      }
    }
  }
  const int e = clamp_exponent(scale);
  return {std::ldexp(a11 + a22, e), std::ldexp(d11 + d22, e)};
}

int discriminant_compare(const PotentialWord& word, double E, double c) {
  const double d = discriminant(word, E);
  return (d > c) - (d < c);
}

int discriminant_compare(const PotentialWord& word, const BigFloat& E, double c) {
  const BigFloat d = big_trace(word, E);
  return mpfr_cmp_d(d.raw(), c) > 0 ? 1 : (mpfr_cmp_d(d.raw(), c) < 0 ? -1 : 0);
}

PeriodicMatrices periodic_matrices(const PotentialWord& word) {
  const auto q = static_cast<Eigen::Index>(word.q);
  PeriodicMatrices out;
  out.periodic = Eigen::MatrixXd::Zero(q, q);
  out.antiperiodic = Eigen::MatrixXd::Zero(q, q);
  if (q == 1) {
    out.periodic(0, 0) = word.site(1) + 2.0;
    out.antiperiodic(0, 0) = word.site(1) - 2.0;
    return out;
  }
  for (Eigen::Index i = 0; i < q; ++i) {
    out.periodic(i, i) = word.site(i + 1);
    out.antiperiodic(i, i) = word.site(i + 1);
  }
  if (q == 2) {
    // Both neighbours of a site are the other site; the corner coupling adds
    // to (periodic) or cancels (antiperiodic) the bulk hopping.
    out.periodic(0, 1) = out.periodic(1, 0) = 2.0;
    out.antiperiodic(0, 1) = out.antiperiodic(1, 0) = 0.0;
    return out;
  }
  for (Eigen::Index i = 0; i + 1 < q; ++i) {
    out.periodic(i, i + 1) = out.periodic(i + 1, i) = 1.0;
    out.antiperiodic(i, i + 1) = out.antiperiodic(i + 1, i) = 1.0;
  }
  out.periodic(0, q - 1) = out.periodic(q - 1, 0) = 1.0;
  out.antiperiodic(0, q - 1) = out.antiperiodic(q - 1, 0) = -1.0;
  return out;
}

std::vector<double> periodic_eigenvalues(const PotentialWord& word) {
  const PeriodicMatrices m = periodic_matrices(word);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> per(m.periodic, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> anti(m.antiperiodic, Eigen::EigenvaluesOnly);
  if (per.info() != Eigen::Success || anti.info() != Eigen::Success) {
    throw NumericError("dense eigensolve of the periodic matrices failed");
  }
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(2 * word.q));
  for (Eigen::Index i = 0; i < per.eigenvalues().size(); ++i) out.push_back(per.eigenvalues()(i));
  for (Eigen::Index i = 0; i < anti.eigenvalues().size(); ++i) out.push_back(anti.eigenvalues()(i));
  std::sort(out.begin(), out.end());
  return out;
}

SiteSequence SiteSequence::from_rational(long p, long q, double V) {
  PotentialWord w = potential_word(p, q, V);
  return SiteSequence(V, std::move(w.word), true);
}

SiteSequence SiteSequence::from_continued_fraction(const ContinuedFraction& cf, double V, long n_max) {
  if (n_max < 1) throw InvalidInput("n_max must be >= 1");
  // Find the first convergent with q_k > n_max + 1, or the exact value of a
  // truncated expansion.
  mpz_class p_prev = 1, q_prev = 0, p = 0, q = 1;
  int k = 0;
  while (q <= n_max + 1 && cf.has_quotient(k + 1)) {
    const int a = cf.quotient(k + 1);
    mpz_class pn = a * p + p_prev;
    mpz_class qn = a * q + q_prev;
    p_prev = p;
    q_prev = q;
    p = pn;
    q = qn;
    ++k;
  }
  if (!p.fits_slong_p() || !q.fits_slong_p()) throw InvalidInput("n_max too large");
  const long pl = p.get_si();
  const long ql = q.get_si();
  if (ql <= n_max + 1) {
    // Rational alpha: the word is periodic with period q.
    return from_rational(pl, ql, V);
  }
  std::vector<std::uint8_t> word(static_cast<std::size_t>(n_max));
  for (long n = 1; n <= n_max; ++n) word[static_cast<std::size_t>(n - 1)] = sturmian_letter(n, pl, ql);
  return SiteSequence(V, std::move(word), false);
}

std::uint8_t SiteSequence::letter(long n) const {
  if (n < 1) throw InvalidInput("site index must be >= 1");
  if (periodic_) return word_[static_cast<std::size_t>((n - 1) % length())];
  if (n > length()) throw InvalidInput("site index beyond the sampled Sturmian word");
  return word_[static_cast<std::size_t>(n - 1)];
}

double SiteSequence::potential(long n) const { return V_ * letter(n); }

long dirichlet_eig_count(const SiteSequence& sites, long n, double E) {
  if (n < 1) throw InvalidInput("restriction size must be >= 1");
  (void)sites.letter(n);  // throws if a sampled word is too short
  constexpr double kTinyPivot = 1e-290;
  const double V = sites.V();
  long count = 0;
  double d = 1.0;
  bool first = true;
  for (long i = 1; i <= n; ++i) {
    const double a = V * sites.letter(i) - E;
    d = first ? a : a - 1.0 / d;
    first = false;
    if (d == 0.0) d = -kTinyPivot;
    if (d < 0.0) ++count;
  }
  return count;
}

}  // namespace sturmian
