#include "sturmian/spectrum.hpp"

#include <optional>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "sturmian/bigfloat.hpp"
#include "sturmian/error.hpp"
#include "sturmian/hamiltonian.hpp"
#include "sturmian/numfmt.hpp"
#include "sturmian/parallel.hpp"
#include "sturmian/tridiag.hpp"

namespace sturmian {

namespace {
constexpr std::size_t kParallelBandThreshold = 64;
// First MPFR precision tried when binary64 is not good enough for a band.
constexpr int kEscalationBits = 128;
constexpr int kMaxBits = 4096;
// Rounding noise in D above this makes the sign tests against +-2 unreliable.
constexpr double kMaxNoise = 1e-6;

double discriminant_at(const PotentialWord& word, double E, int bits) {
  return bits <= 53 ? discriminant(word, E) : discriminant(word, BigFloat(E, bits)).to_double();
}

int compare_at(const PotentialWord& word, double E, double c, int bits) {
  return bits <= 53 ? discriminant_compare(word, E, c) : discriminant_compare(word, BigFloat(E, bits), c);
}

struct EdgeCheck {
  double error = 0.0;     // | |D| - 2 | / max(1, |D'|)
  double residual = 0.0;  // | |D| - 2 |
  double noise = 0.0;     // |D(word) - D(rotated word)|, a rounding estimate
};

// The trace is invariant under cyclic rotation of the word, so the disagreement
// of the two evaluations measures the rounding error at this precision.
EdgeCheck check_edge(const PotentialWord& word, const PotentialWord& rotated, double e, int bits) {
  EdgeCheck c;
  const double d = discriminant_at(word, e, bits);
  c.noise = std::fabs(d - discriminant_at(rotated, e, bits));
  double slope;
  if (bits <= 53) {
    slope = discriminant_with_derivative(word, e).second;
  } else {
    const double h = std::ldexp(std::max(1.0, std::fabs(e)), -40);
    const BigFloat E(e, bits), H(h, bits);
    slope = (discriminant(word, E + H) - discriminant(word, E - H)).to_double() / (2.0 * h);
  }
  c.residual = std::fabs(std::fabs(d) - 2.0);
  c.error = (c.residual + c.noise) / std::max(1.0, std::fabs(slope));
  return c;
}

// Smallest point where `pred` turns true on [lo, hi], given pred(lo) false
// and pred(hi) true. Returns the final bracket (last false, first true).
template <class Pred>
std::pair<double, double> bisect(double lo, double hi, Pred pred) {
  while (true) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (pred(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return {lo, hi};
}

// For band j (0-based) of q, s * D(E) increases from -2 to 2 across the band
// with s = (-1)^(q-1-j).
int band_sign(long q, long j) { return ((q - 1 - j) % 2 == 0) ? 1 : -1; }

// Edges of the band in the Dirichlet bracket [a, b] with sign s, resolved to
// adjacent doubles with D evaluated at `bits`.
std::pair<double, double> band_edges(const PotentialWord& word, double a, double b, int s, int bits) {
  // The band is the closed set |D| <= 2: `enters` includes the lower edge and
  // `leaves` excludes the upper one, so exactly representable edges are exact.
  auto enters = [&](double E) {
    return s > 0 ? compare_at(word, E, -2.0, bits) >= 0 : compare_at(word, E, 2.0, bits) <= 0;
  };
  auto leaves = [&](double E) {
    return s > 0 ? compare_at(word, E, 2.0, bits) > 0 : compare_at(word, E, -2.0, bits) < 0;
  };
  // A Dirichlet eigenvalue can sit at either end of its gap, so a bracket end
  // may test as inside the band by rounding alone. Step inward with doubling
  // offsets to find the gap side; a gap narrower than the rounding fuzz is
  // treated as closed.
  auto probe = [](double from, double dir, double limit, auto pred, bool want) -> std::optional<double> {
    for (double delta = std::ldexp(std::max(1.0, std::fabs(from)), -50); delta < limit; delta *= 2.0) {
      const double c = from + dir * delta;
      if (pred(c) == want) return c;
    }
    return std::nullopt;
  };
  double lower;
  if (!enters(a)) {
    lower = bisect(a, b, enters).second;
  } else if (const auto c = probe(a, 1.0, 0.5 * (b - a), enters, false)) {
    lower = bisect(*c, b, enters).second;
  } else {
    lower = a;
  }
  double upper;
  if (leaves(lower)) {
    upper = lower;
  } else if (leaves(b)) {
    upper = bisect(lower, b, leaves).first;
  } else if (const auto c = probe(b, -1.0, 0.5 * (b - lower), leaves, true)) {
    upper = bisect(lower, *c, leaves).first;
  } else {
    upper = b;
  }
  return {std::min(lower, upper), std::max(lower, upper)};
}


}  // namespace

std::string_view to_string(BandType type) {
  switch (type) {
    case BandType::A:
      return "A";
    case BandType::B:
      return "B";
    case BandType::Root:
      return "root";
    case BandType::Unset:
      break;
  }
  return "unset";
}

SpectrumApprox compute_bands(long p, long q, double V, const PrecisionBudget& budget, long max_q) {
  budget.validate();
  if (q > max_q) {
    throw InvalidInput("q = " + std::to_string(q) + " exceeds the configured maximum " + std::to_string(max_q));
  }
  const PotentialWord word = potential_word(p, q, V);

  std::vector<double> diag(static_cast<std::size_t>(q > 1 ? q - 1 : 0));
  for (long n = 1; n < q; ++n) diag[static_cast<std::size_t>(n - 1)] = word.site(n);
  const std::vector<double> off(diag.empty() ? 0 : diag.size() - 1, 1.0);
  const std::vector<double> dirichlet = tridiagonal_eigenvalues(diag, off);

  const double outer_lo = std::min(0.0, V) - 3.0;
  const double outer_hi = std::max(0.0, V) + 3.0;

  SpectrumApprox out;
  out.p = p;
  out.q = q;
  out.V = V;
  out.bits = budget.bits;
  out.bands.resize(static_cast<std::size_t>(q));
  std::vector<double> edge_error(static_cast<std::size_t>(q), 0.0);
  std::vector<double> edge_residual(static_cast<std::size_t>(q), 0.0);

  PotentialWord rotated = word;
  std::rotate(rotated.word.begin(), rotated.word.begin() + q / 2, rotated.word.end());

  auto solve_band = [&](std::size_t j) {
    const double a = j == 0 ? outer_lo : dirichlet[j - 1];
    const double b = j + 1 == static_cast<std::size_t>(q) ? outer_hi : dirichlet[j];
    const int s = band_sign(q, static_cast<long>(j));
    Band& band = out.bands[j];
    band.index = static_cast<int>(j);
    double err = 0.0, res = 0.0;
    // Steep, narrow bands defeat binary64 evaluation of D; escalate until the
    // edges pass their residual check with little rounding noise.
    // Edges are always confirmed at the requested precision as well.
    for (int bits = 53;; bits = std::max(kEscalationBits, 2 * bits)) {
      if (bits > kMaxBits) {
        std::ostringstream os;
        os << "band " << j << " of " << p << "/" << q << " at V = " << format_real(V)
           << " needs more than " << kMaxBits << " bits";
        throw NumericError(os.str());
      }
      std::tie(band.lower, band.upper) = band_edges(word, a, b, s, bits);
      err = res = 0.0;
      double noise = 0.0;
      for (double e : {band.lower, band.upper}) {
        const EdgeCheck c = check_edge(word, rotated, e, std::max(bits, budget.bits));
        err = std::max(err, c.error);
        res = std::max(res, c.residual);
        noise = std::max(noise, c.noise);
      }
      if (noise <= kMaxNoise && err <= 0.25 * budget.abs_tol) break;
    }
    edge_error[j] = err;
    edge_residual[j] = res;
  };

  if (static_cast<std::size_t>(q) >= kParallelBandThreshold) {
    parallel_for(static_cast<std::size_t>(q), solve_band);
  } else {
    for (std::size_t j = 0; j < static_cast<std::size_t>(q); ++j) solve_band(j);
  }

  for (std::size_t j = 0; j + 1 < out.bands.size(); ++j) {
    const Band& x = out.bands[j];
    const Band& y = out.bands[j + 1];
    if (!(x.lower <= y.lower) || x.upper > y.lower + budget.abs_tol) {
      std::ostringstream os;
      os << "bands " << j << " and " << j + 1 << " of " << p << "/" << q << " overlap: [" << format_real(x.lower)
         << ", " << format_real(x.upper) << "] vs [" << format_real(y.lower) << ", " << format_real(y.upper) << "]";
      throw NumericError(os.str());
    }
  }
  out.max_edge_error = *std::max_element(edge_error.begin(), edge_error.end());
  out.max_edge_residual = *std::max_element(edge_residual.begin(), edge_residual.end());
  return out;
}

IntervalSet IntervalSet::from_intervals(std::vector<Interval> parts, double merge_tol) {
  std::sort(parts.begin(), parts.end(), [](const Interval& x, const Interval& y) {
    return x.lo < y.lo || (x.lo == y.lo && x.hi < y.hi);
  });
  IntervalSet out;
  for (const Interval& iv : parts) {
    if (iv.hi < iv.lo) throw InvalidInput("interval with hi < lo");
    if (!out.parts_.empty() && iv.lo <= out.parts_.back().hi + merge_tol) {
      out.parts_.back().hi = std::max(out.parts_.back().hi, iv.hi);
    } else {
      out.parts_.push_back(iv);
    }
  }
  return out;
}

IntervalSet IntervalSet::from_spectrum(const SpectrumApprox& spectrum, double merge_tol) {
  std::vector<Interval> parts;
  parts.reserve(spectrum.bands.size());
  for (const Band& b : spectrum.bands) parts.push_back({b.lower, b.upper});
  return from_intervals(std::move(parts), merge_tol);
}

double IntervalSet::measure() const {
  double sum = 0.0;
  for (const Interval& iv : parts_) sum += iv.length();
  return sum;
}

double IntervalSet::distance_to(double x) const {
  if (parts_.empty()) return std::numeric_limits<double>::infinity();
  auto it = std::upper_bound(parts_.begin(), parts_.end(), x,
                             [](double v, const Interval& iv) { return v < iv.lo; });
  double best = std::numeric_limits<double>::infinity();
  if (it != parts_.end()) best = it->lo - x;
  if (it != parts_.begin()) {
    const Interval& prev = *std::prev(it);
    best = std::min(best, x <= prev.hi ? 0.0 : x - prev.hi);
  }
  return std::max(0.0, best);
}

IntervalSet IntervalSet::unite(const IntervalSet& other, double merge_tol) const {
  std::vector<Interval> parts = parts_;
  parts.insert(parts.end(), other.parts_.begin(), other.parts_.end());
  return from_intervals(std::move(parts), merge_tol);
}

double total_measure(const IntervalSet& set) { return set.measure(); }

double directed_hausdorff(const IntervalSet& from, const IntervalSet& to) {
  if (from.empty() || to.empty()) throw InvalidInput("Hausdorff distance of an empty set");
  double worst = 0.0;
  const auto& gaps = to.parts();
  for (const Interval& iv : from.parts()) {
    worst = std::max({worst, to.distance_to(iv.lo), to.distance_to(iv.hi)});
    // dist(., to) peaks inside iv only at midpoints of the gaps of `to`.
    auto it = std::lower_bound(gaps.begin(), gaps.end(), iv.lo,
                               [](const Interval& g, double v) { return g.hi < v; });
    for (; it != gaps.end() && std::next(it) != gaps.end() && it->hi <= iv.hi; ++it) {
      const double mid = 0.5 * (it->hi + std::next(it)->lo);
      if (mid >= iv.lo && mid <= iv.hi) worst = std::max(worst, to.distance_to(mid));
    }
  }
  return worst;
}

double hausdorff_distance(const IntervalSet& a, const IntervalSet& b) {
  return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

std::shared_ptr<const SpectrumApprox> SpectrumCache::get(long p, long q, double V, const PrecisionBudget& budget,
                                                         long max_q) {
  const Key key{p, q, V, budget.bits, budget.abs_tol};
  {
    std::lock_guard lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) return it->second;
  }
  auto computed = std::make_shared<const SpectrumApprox>(compute_bands(p, q, V, budget, max_q));
  std::lock_guard lock(mutex_);
  auto [it, inserted] = entries_.emplace(key, std::move(computed));
  return it->second;
}

void SpectrumCache::clear() {
  std::lock_guard lock(mutex_);
  entries_.clear();
}

std::size_t SpectrumCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

SpectrumCache& SpectrumCache::global() {
  static SpectrumCache cache;
  return cache;
}

std::shared_ptr<const SpectrumApprox> approximant_spectrum(const ContinuedFraction& cf, int k, double V,
                                                           const PrecisionBudget& budget, long max_q) {
  if (k < 0) throw InvalidInput("approximant level must be >= 0");
  const SmallConvergent c = small_convergent(cf, k);
  if (c.q > max_q) {
    throw InvalidInput("level " + std::to_string(k) + " has q = " + std::to_string(c.q) +
                       " beyond the configured maximum " + std::to_string(max_q));
  }
  auto base = SpectrumCache::global().get(c.p, c.q, V, budget, max_q);
  if (base->level == k) return base;
  auto leveled = std::make_shared<SpectrumApprox>(*base);
  leveled->level = k;
  for (Band& b : leveled->bands) b.level = k;
  return leveled;
}

SigmaSet sigma_set(const ContinuedFraction& cf, int k, double V, const PrecisionBudget& budget, long max_q) {
  const auto s0 = approximant_spectrum(cf, k, V, budget, max_q);
  const auto s1 = approximant_spectrum(cf, k + 1, V, budget, max_q);
  SigmaSet out;
  out.level = k;
  out.set = IntervalSet::from_spectrum(*s0, budget.abs_tol).unite(IntervalSet::from_spectrum(*s1), budget.abs_tol);
  return out;
}

NestingReport check_nesting(const ContinuedFraction& cf, int k_max, double V, const PrecisionBudget& budget,
                            int k_min, long max_q) {
  NestingReport report;
  SigmaSet current = sigma_set(cf, k_min, V, budget, max_q);
  for (int k = k_min; k <= k_max; ++k) {
    SigmaSet next = sigma_set(cf, k + 1, V, budget, max_q);
    NestingLevel lvl;
    lvl.k = k;
    lvl.protrusion = directed_hausdorff(next.set, current.set);
    lvl.nested = lvl.protrusion <= 2.0 * budget.abs_tol;
    report.all_nested = report.all_nested && lvl.nested;
    report.worst_protrusion = std::max(report.worst_protrusion, lvl.protrusion);
    report.levels.push_back(lvl);
    current = std::move(next);
  }
  return report;
}

double antisymmetry_defect(const SpectrumApprox& positive, const SpectrumApprox& negative) {
  if (positive.bands.size() != negative.bands.size()) return std::numeric_limits<double>::infinity();
  const std::size_t n = positive.bands.size();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Band& mirrored = positive.bands[n - 1 - i];
    worst = std::max(worst, std::fabs(negative.bands[i].lower + mirrored.upper));
    worst = std::max(worst, std::fabs(negative.bands[i].upper + mirrored.lower));
  }
  return worst;
}

}  // namespace sturmian
