#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string_view>
#include <tuple>
#include <vector>

#include "sturmian/contfrac.hpp"

namespace sturmian {

enum class BandType { Unset, A, B, Root };

std::string_view to_string(BandType type);

/// One closed spectral band of a periodic approximant.
struct Band {
  double lower = 0.0;
  double upper = 0.0;
  int level = -1;
  int index = 0;
  BandType type = BandType::Unset;

  double width() const { return upper - lower; }
  /// min(lower - outer.lower, outer.upper - upper); positive iff strictly
  /// inside `outer`.
  double containment_margin(const Band& outer) const {
    return std::min(lower - outer.lower, outer.upper - upper);
  }
  bool strictly_inside(const Band& outer, double tol) const { return containment_margin(outer) > tol; }
};

/// [a,b] precedes [c,d] iff a < c and b < d, each by more than tol.
inline bool precedes(const Band& x, const Band& y, double tol) {
  return y.lower - x.lower > tol && y.upper - x.upper > tol;
}

/// Band structure of H_{p/q, V}: exactly q bands sorted by lower edge.
struct SpectrumApprox {
  long p = 0;
  long q = 1;
  double V = 0.0;
  int level = -1;  // CF level when built from a convergent, else -1
  int bits = 53;
  std::vector<Band> bands;
  /// Largest first-order edge error | |D(e)| - 2 | / max(1, |D'(e)|).
  double max_edge_error = 0.0;
  /// Largest raw residual | |D(e)| - 2 |.
  double max_edge_residual = 0.0;
};

constexpr long kDefaultMaxQ = 5000;

/// Band edges: the q - 1 Dirichlet eigenvalues of sites 1..q-1 lie one per
/// closed gap and bracket the bands; each edge is then located by bisection
/// on the sign of D(E) -+ 2 to adjacent doubles. A band whose edges fail the
/// residual check, or whose D shows rounding noise, is redone with D in MPFR
/// at 128, 256, ... bits. Edges are also checked at budget.bits.
///
/// Throws InvalidInput for q > max_q or a non-reduced p/q, NumericError when
/// a consistency check on the computed bands fails or a band needs more than
/// 4096 bits.
SpectrumApprox compute_bands(long p, long q, double V, const PrecisionBudget& budget,
                             long max_q = kDefaultMaxQ);

/// Closed interval [lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
};

/// Finite union of closed intervals, stored as sorted maximal disjoint parts.
class IntervalSet {
 public:
  IntervalSet() = default;

  /// Parts closer than merge_tol are fused.
  static IntervalSet from_intervals(std::vector<Interval> parts, double merge_tol = 0.0);
  static IntervalSet from_spectrum(const SpectrumApprox& spectrum, double merge_tol = 0.0);

  const std::vector<Interval>& parts() const { return parts_; }
  bool empty() const { return parts_.empty(); }
  double lower() const { return parts_.front().lo; }
  double upper() const { return parts_.back().hi; }
  double measure() const;
  double distance_to(double x) const;
  IntervalSet unite(const IntervalSet& other, double merge_tol = 0.0) const;

 private:
  std::vector<Interval> parts_;
};

double total_measure(const IntervalSet& set);

/// sup_{x in from} dist(x, to).
double directed_hausdorff(const IntervalSet& from, const IntervalSet& to);

/// Exact Hausdorff distance between two nonempty finite unions of closed
/// intervals. Throws InvalidInput on empty input.
double hausdorff_distance(const IntervalSet& a, const IntervalSet& b);

/// Sigma_k = sigma(H_{alpha_k}) u sigma(H_{alpha_{k+1}}).
struct SigmaSet {
  int level = 0;
  IntervalSet set;
};

/// Thread-safe memo of approximant spectra keyed by (p, q, V, bits, tol).
class SpectrumCache {
 public:
  std::shared_ptr<const SpectrumApprox> get(long p, long q, double V, const PrecisionBudget& budget,
                                            long max_q = kDefaultMaxQ);
  void clear();
  std::size_t size() const;

  static SpectrumCache& global();

 private:
  using Key = std::tuple<long, long, double, int, double>;
  mutable std::mutex mutex_;
  std::map<Key, std::shared_ptr<const SpectrumApprox>> entries_;
};

/// Spectrum of the k-th convergent of cf (cached). Bands carry level k.
std::shared_ptr<const SpectrumApprox> approximant_spectrum(const ContinuedFraction& cf, int k, double V,
                                                           const PrecisionBudget& budget,
                                                           long max_q = kDefaultMaxQ);

SigmaSet sigma_set(const ContinuedFraction& cf, int k, double V, const PrecisionBudget& budget,
                   long max_q = kDefaultMaxQ);

struct NestingLevel {
  int k = 0;
  bool nested = false;
  double protrusion = 0.0;  // sup over Sigma_{k+1} of the distance to Sigma_k
};

struct NestingReport {
  std::vector<NestingLevel> levels;
  bool all_nested = true;
  double worst_protrusion = 0.0;
};

/// Checks Sigma_{k+1} within Sigma_k for k = k_min..k_max with slack
/// 2 * abs_tol. Violations are reported, not thrown.
NestingReport check_nesting(const ContinuedFraction& cf, int k_max, double V, const PrecisionBudget& budget,
                            int k_min = 0, long max_q = kDefaultMaxQ);

/// Largest endpoint mismatch between bands(-V) and -reverse(bands(V)).
double antisymmetry_defect(const SpectrumApprox& positive, const SpectrumApprox& negative);

}  // namespace sturmian
