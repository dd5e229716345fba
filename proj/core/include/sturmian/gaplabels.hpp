#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sturmian/bandtree.hpp"
#include "sturmian/contfrac.hpp"
#include "sturmian/hamiltonian.hpp"
#include "sturmian/spectrum.hpp"

namespace sturmian {

/// Open interval between two consecutive bands of one approximant. `m` bands
/// lie entirely to the left, so the integrated density of states on the gap
/// is exactly m/q.
struct Gap {
  int level = -1;
  long p = 0;
  long q = 1;
  long m = 0;
  double lower = 0.0;
  double upper = 0.0;

  double margin() const { return upper - lower; }
  mpq_class label() const { return mpq_class(m, q); }
};

/// Interior gaps of one approximant. Neighbouring bands whose edges are
/// within `tol` count as touching and produce no gap.
std::vector<Gap> gaps_of_level(const SpectrumApprox& spectrum, double tol);

/// Default Dirichlet size for IDS estimates: 50 q, capped at 10^6.
long default_ids_sites(long q);

/// Finite-volume IDS: eigenvalue count of the n_sites Dirichlet restriction
/// at or below E, divided by n_sites.
double ids_value(const SiteSequence& sites, double E, long n_sites);
double ids_value(long p, long q, double V, double E, long n_sites);
double ids_value(const ContinuedFraction& cf, double V, double E, long n_sites);

/// Enclosures of -alpha + sum_{k=-1}^{k_max} (-1)^k pi_k (q_k alpha - p_k).
struct SeriesLabel {
  int k_max = -1;
  /// The truncated sum equals alpha_coefficient * alpha + constant exactly.
  mpz_class alpha_coefficient;
  mpz_class constant;
  /// The truncated sum, width <= abs_tol.
  RationalInterval truncated;
  /// Bound on the omitted terms sum_{k > k_max} a_{k+1} beta_k.
  mpq_class tail_bound;
  /// [truncated.lo, truncated.hi + tail_bound]: every omitted term is >= 0.
  RationalInterval enclosure;
};

/// Throws InvalidInput when a digit is negative or above its bound.
SeriesLabel series_label(const ContinuedFraction& cf, const OstrowskiDigits& digits, const PrecisionBudget& budget);

/// Exact test of 0 <= {n alpha} - truncated sum <= tail_bound.
bool series_encloses(const ContinuedFraction& cf, const SeriesLabel& label, long n);

/// Upper bound on |{n alpha} - truncated sum|; 0 when they agree exactly.
double series_residual(const ContinuedFraction& cf, const SeriesLabel& label, long n, const PrecisionBudget& budget);

enum class CertificateStatus { Certified, ClosedAtDepth, Undecided };

std::string_view to_string(CertificateStatus status);

/// One inspected level of a certificate. The recorded gap is the gap of
/// Sigma_k = sigma(alpha_k) u sigma(alpha_{k+1}) carrying the label: the
/// intersection of the level-k gap with label m and the level-(k+1) gap with
/// label m_next.
struct GapLevelRecord {
  enum class State { Open, Closed, Absent };

  int k = 0;
  long p = 0;
  long q = 1;
  long m = 0;       // n p_k mod q_k
  long m_next = 0;  // n p_{k+1} mod q_{k+1}
  State state = State::Absent;
  double gap_lower = 0.0;
  double gap_upper = 0.0;

  double margin() const { return state == State::Open ? gap_upper - gap_lower : 0.0; }
};

std::string_view to_string(GapLevelRecord::State state);

struct GapCertificate {
  std::string cf;
  double V = 0.0;
  long n = 0;
  int depth = 0;
  int bits = 53;
  double abs_tol = 1e-10;
  RationalInterval target_label;  // {n alpha}
  std::vector<GapLevelRecord> levels;
  /// Gap intervals never shrink between consecutive open levels.
  bool monotone = true;
  CertificateStatus status = CertificateStatus::Undecided;
  std::string note;

  const GapLevelRecord& final_level() const { return levels.back(); }
};

/// Finite-depth openness evidence for the gap labelled {n alpha}, inspecting
/// levels 3..depth. V < 0 is reduced to |V| through the mirror symmetry.
///
/// certified: the final level is open with margin > 10 abs_tol, the gaps grow
/// monotonically, and the last >= 3 inspected levels are all open.
/// closed-at-depth: the gap is closed or absent at every inspected level.
/// undecided: anything else.
///
/// Throws InvalidInput for n == 0, V == 0, depth < 3 or q_depth <= |n|.
GapCertificate certify_gap(const ContinuedFraction& cf, double V, long n, int depth, const PrecisionBudget& budget,
                           long max_q = kDefaultMaxQ);

/// Certificates for every n in [n_lo, n_hi] except 0, computed in parallel.
std::vector<GapCertificate> certify_gaps(const ContinuedFraction& cf, double V, long n_lo, long n_hi, int depth,
                                         const PrecisionBudget& budget, long max_q = kDefaultMaxQ);

/// The two tree paths ending in the bands that flank a certified gap, with
/// IDS estimates at the flanking edges.
struct TwoPathWitness {
  TreePath left;   // terminal band has upper edge E_1
  TreePath right;  // terminal band has lower edge E_2
  double E1 = 0.0;
  double E2 = 0.0;
  double label = 0.0;  // midpoint of the target enclosure
  double ids_left = 0.0;
  double ids_right = 0.0;
  double tolerance = 0.0;
  long n_sites = 0;
  bool labels_agree = false;
};

/// Needs a certified certificate and a tree for the same cf and V built to at
/// least depth + 1. Throws InvalidInput otherwise.
TwoPathWitness two_path_witness(const BandTree& tree, const GapCertificate& certificate);

/// Mirror image for coupling -V: gaps (-E_2, -E_1), n -> -n, labels m ->
/// q - m. Every mirrored level is recomputed at -V and compared to abs_tol;
/// a mismatch throws NumericError.
GapCertificate negative_coupling_transfer(const ContinuedFraction& cf, const GapCertificate& certificate,
                                          long max_q = kDefaultMaxQ);

/// Some n with |n| < q and m = n p (mod q), if any.
std::optional<long> label_index(long p, long q, long m);

/// Certificate JSON with a fixed field order: {n, V, target_label: {lo, hi},
/// levels: [{k, p, q, m, state, gap_lo, gap_hi, margin}], status}.
std::string certificate_to_json(const GapCertificate& certificate);

}  // namespace sturmian
