#include "sturmian/gaplabels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "json.hpp"
#include "sturmian/error.hpp"
#include "sturmian/numfmt.hpp"
#include "sturmian/parallel.hpp"

namespace sturmian {

namespace {

using nlohmann::ordered_json;

constexpr long kMaxIdsSites = 1000000;
constexpr int kMinOpenRun = 3;

long mod_label(long n, long p, long q) {
  __extension__ using i128 = __int128;
  i128 r = (static_cast<i128>(n) * p) % q;
  if (r < 0) r += q;
  return static_cast<long>(r);
}

// Gap of sigma(alpha_k) u sigma(alpha_{k+1}) labelled by n.
GapLevelRecord sigma_gap(const ContinuedFraction& cf, int k, double V, long n, const PrecisionBudget& budget,
                         long max_q) {
  const auto here = approximant_spectrum(cf, k, V, budget, max_q);
  const auto next = approximant_spectrum(cf, k + 1, V, budget, max_q);
  GapLevelRecord r;
  r.k = k;
  r.p = here->p;
  r.q = here->q;
  r.m = mod_label(n, here->p, here->q);
  r.m_next = mod_label(n, next->p, next->q);
  if (r.m == 0 || r.m_next == 0) {
    r.state = GapLevelRecord::State::Absent;
    return r;
  }
  const auto& a = here->bands;
  const auto& b = next->bands;
  r.gap_lower = std::max(a[static_cast<std::size_t>(r.m - 1)].upper, b[static_cast<std::size_t>(r.m_next - 1)].upper);
  r.gap_upper = std::min(a[static_cast<std::size_t>(r.m)].lower, b[static_cast<std::size_t>(r.m_next)].lower);
  r.state = r.gap_upper - r.gap_lower > budget.abs_tol ? GapLevelRecord::State::Open : GapLevelRecord::State::Closed;
  return r;
}

void classify(GapCertificate& cert) {
  using State = GapLevelRecord::State;
  const double tol = cert.abs_tol;
  bool seen_open = false;
  for (std::size_t i = 0; i < cert.levels.size(); ++i) {
    const GapLevelRecord& r = cert.levels[i];
    if (r.state == State::Open) {
      if (seen_open) {
        const GapLevelRecord& prev = cert.levels[i - 1];
        if (r.gap_lower > prev.gap_lower + tol || r.gap_upper < prev.gap_upper - tol) {
          cert.monotone = false;
          cert.note = "gap at level " + std::to_string(r.k) + " does not contain the gap at level " +
                      std::to_string(prev.k);
        }
      }
      seen_open = true;
    } else if (seen_open) {
      cert.monotone = false;
      cert.note = "gap open before level " + std::to_string(r.k) + " but not at it";
    }
  }
  int run = 0;
  for (auto it = cert.levels.rbegin(); it != cert.levels.rend() && it->state == State::Open; ++it) ++run;
  const GapLevelRecord& last = cert.final_level();
  if (!seen_open) {
    cert.status = CertificateStatus::ClosedAtDepth;
    if (cert.note.empty()) cert.note = "no open gap at any inspected level";
  } else if (cert.monotone && run >= kMinOpenRun && last.state == State::Open && last.margin() > 10.0 * tol) {
    cert.status = CertificateStatus::Certified;
  } else {
    cert.status = CertificateStatus::Undecided;
    if (cert.note.empty()) {
      cert.note = run < kMinOpenRun ? "fewer than 3 consecutive open levels at the end"
                                    : "final margin below 10 abs_tol";
    }
  }
}

GapCertificate certify_positive(const ContinuedFraction& cf, double V, long n, int depth,
                                const PrecisionBudget& budget, long max_q) {
  GapCertificate cert;
  cert.cf = cf.to_string();
  cert.V = V;
  cert.n = n;
  cert.depth = depth;
  cert.bits = budget.bits;
  cert.abs_tol = budget.abs_tol;
  cert.target_label = frac_n_alpha(cf, n, budget);
  for (int k = 3; k <= depth; ++k) cert.levels.push_back(sigma_gap(cf, k, V, n, budget, max_q));
  classify(cert);
  return cert;
}

ordered_json level_json(const GapLevelRecord& r) {
  ordered_json j;
  j["k"] = r.k;
  j["p"] = r.p;
  j["q"] = r.q;
  j["m"] = r.m;
  j["state"] = std::string(to_string(r.state));
  if (r.state == GapLevelRecord::State::Absent) {
    j["gap_lo"] = nullptr;
    j["gap_hi"] = nullptr;
  } else {
    j["gap_lo"] = format_real(r.gap_lower);
    j["gap_hi"] = format_real(r.gap_upper);
  }
  j["margin"] = format_real(r.margin());
  return j;
}

int closest_edge(const BandTree& tree, int level_lo, int level_hi, double E, bool upper_edge) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (int k = level_lo; k <= level_hi; ++k) {
    for (int id : tree.level(k)) {
      const Band& b = tree.node(id).band;
      const double d = std::fabs((upper_edge ? b.upper : b.lower) - E);
      if (d < best_d) {
        best_d = d;
        best = id;
      }
    }
  }
  if (best < 0 || best_d > tree.budget().abs_tol) {
    throw InvalidInput("no band of the tree has an edge at the certified gap boundary");
  }
  return best;
}

}  // namespace

std::vector<Gap> gaps_of_level(const SpectrumApprox& spectrum, double tol) {
  std::vector<Gap> out;
  for (std::size_t i = 0; i + 1 < spectrum.bands.size(); ++i) {
    const double a = spectrum.bands[i].upper;
    const double b = spectrum.bands[i + 1].lower;
    if (b - a <= tol) continue;
    out.push_back({spectrum.level, spectrum.p, spectrum.q, static_cast<long>(i + 1), a, b});
  }
  return out;
}

long default_ids_sites(long q) { return std::min(kMaxIdsSites, 50 * std::max(1L, q)); }

double ids_value(const SiteSequence& sites, double E, long n_sites) {
  if (n_sites < 1) throw InvalidInput("n_sites must be >= 1");
  return static_cast<double>(dirichlet_eig_count(sites, n_sites, E)) / static_cast<double>(n_sites);
}

double ids_value(long p, long q, double V, double E, long n_sites) {
  return ids_value(SiteSequence::from_rational(p, q, V), E, n_sites);
}

double ids_value(const ContinuedFraction& cf, double V, double E, long n_sites) {
  return ids_value(SiteSequence::from_continued_fraction(cf, V, n_sites), E, n_sites);
}

SeriesLabel series_label(const ContinuedFraction& cf, const OstrowskiDigits& digits, const PrecisionBudget& budget) {
  budget.validate();
  if (digits.digits.size() != static_cast<std::size_t>(digits.k_max + 2)) {
    throw InvalidInput("digit vector length does not match k_max");
  }
  const auto conv = convergents(cf, std::max(digits.k_max, 0));
  // Collect the sum as A alpha + B with exact integers.
  mpz_class A = -1, B = 0;
  for (int k = -1; k <= digits.k_max; ++k) {
    const int pi = digits.at(k);
    if (pi < 0 || pi > digit_bound(cf, k)) {
      throw InvalidInput("digit pi_" + std::to_string(k) + " = " + std::to_string(pi) + " is out of range");
    }
    if (pi == 0) continue;
    const Convergent& c = conv.at(static_cast<std::size_t>(k + 1));
    const int sgn = (k % 2 == 0) ? 1 : -1;
    A += sgn * pi * c.q;
    B -= sgn * pi * c.p;
  }
  PrecisionBudget fine = budget;
  fine.abs_tol = budget.abs_tol / (std::fabs(A.get_d()) + 1.0);
  const RationalInterval a = alpha_value(cf, fine);
  mpq_class x = mpq_class(A) * a.lo + mpq_class(B);
  mpq_class y = mpq_class(A) * a.hi + mpq_class(B);
  if (x > y) std::swap(x, y);

  SeriesLabel out;
  out.k_max = digits.k_max;
  out.alpha_coefficient = A;
  out.constant = B;
  out.truncated = {x, y};
  out.tail_bound = series_tail_bound(cf, digits.k_max);
  out.enclosure = {x, y + out.tail_bound};
  return out;
}

bool series_encloses(const ContinuedFraction& cf, const SeriesLabel& label, long n) {
  // d = {n alpha} - S = (n - A) alpha - floor(n alpha) - B.
  const mpz_class a = n - label.alpha_coefficient;
  const mpz_class b = -floor_n_alpha(cf, n) - label.constant;
  if (sign_of_linear(cf, a, b) < 0) return false;
  const mpz_class u = label.tail_bound.get_num();
  const mpz_class v = label.tail_bound.get_den();
  return sign_of_linear(cf, a * v, b * v - u) <= 0;
}

double series_residual(const ContinuedFraction& cf, const SeriesLabel& label, long n, const PrecisionBudget& budget) {
  const mpz_class a = n - label.alpha_coefficient;
  const mpz_class b = -floor_n_alpha(cf, n) - label.constant;
  if (sign_of_linear(cf, a, b) == 0) return 0.0;
  PrecisionBudget fine = budget;
  fine.abs_tol = budget.abs_tol / (std::fabs(a.get_d()) + 1.0);
  const RationalInterval alpha = alpha_value(cf, fine);
  const mpq_class x = mpq_class(a) * alpha.lo + mpq_class(b);
  const mpq_class y = mpq_class(a) * alpha.hi + mpq_class(b);
  return std::max(mpq_class(abs(x)), mpq_class(abs(y))).get_d();
}

std::string_view to_string(CertificateStatus status) {
  switch (status) {
    case CertificateStatus::Certified:
      return "certified";
    case CertificateStatus::ClosedAtDepth:
      return "closed-at-depth";
    case CertificateStatus::Undecided:
      break;
  }
  return "undecided";
}

std::string_view to_string(GapLevelRecord::State state) {
  switch (state) {
    case GapLevelRecord::State::Open:
      return "open";
    case GapLevelRecord::State::Closed:
      return "closed";
    case GapLevelRecord::State::Absent:
      break;
  }
  return "absent";
}

GapCertificate certify_gap(const ContinuedFraction& cf, double V, long n, int depth, const PrecisionBudget& budget,
                           long max_q) {
  budget.validate();
  if (n == 0) throw InvalidInput("n must be nonzero: labels 0 and 1 are the edges of the spectrum");
  if (!std::isfinite(V) || V == 0.0) throw InvalidInput("coupling must be finite and nonzero");
  if (depth < 3) throw InvalidInput("certification depth must be >= 3");
  const SmallConvergent last = small_convergent(cf, depth);
  if (last.q <= std::labs(n)) {
    throw InvalidInput("q_" + std::to_string(depth) + " = " + std::to_string(last.q) + " does not exceed |n| = " +
                       std::to_string(std::labs(n)) + "; increase the depth");
  }
  if (V > 0) return certify_positive(cf, V, n, depth, budget, max_q);
  return negative_coupling_transfer(cf, certify_positive(cf, -V, -n, depth, budget, max_q), max_q);
}

std::vector<GapCertificate> certify_gaps(const ContinuedFraction& cf, double V, long n_lo, long n_hi, int depth,
                                         const PrecisionBudget& budget, long max_q) {
  if (n_lo > n_hi) throw InvalidInput("empty n range");
  std::vector<long> ns;
  for (long n = n_lo; n <= n_hi; ++n) {
    if (n != 0) ns.push_back(n);
  }
  if (ns.empty()) throw InvalidInput("n range contains only 0");
  // Fill the shared spectrum cache once so the workers only read it.
  for (int k = 3; k <= depth + 1; ++k) approximant_spectrum(cf, k, std::fabs(V), budget, max_q);
  std::vector<GapCertificate> out(ns.size());
  parallel_for(ns.size(), [&](std::size_t i) { out[i] = certify_gap(cf, V, ns[i], depth, budget, max_q); });
  return out;
}

TwoPathWitness two_path_witness(const BandTree& tree, const GapCertificate& certificate) {
  if (certificate.status != CertificateStatus::Certified) {
    throw InvalidInput("a two-path witness needs a certified gap, got " +
                       std::string(to_string(certificate.status)));
  }
  if (tree.cf().to_string() != certificate.cf || tree.V() != certificate.V) {
    throw InvalidInput("tree and certificate describe different operators");
  }
  if (tree.depth() < certificate.depth + 1) {
    throw InvalidInput("the tree must be built to depth " + std::to_string(certificate.depth + 1));
  }
  const GapLevelRecord& fin = certificate.final_level();
  TwoPathWitness w;
  w.E1 = fin.gap_lower;
  w.E2 = fin.gap_upper;
  w.left = path_to(tree, closest_edge(tree, fin.k, fin.k + 1, w.E1, true));
  w.right = path_to(tree, closest_edge(tree, fin.k, fin.k + 1, w.E2, false));
  const ContinuedFraction cf = tree.cf();
  w.label = certificate.target_label.mid_double();
  w.n_sites = default_ids_sites(fin.q);
  const SiteSequence sites = SiteSequence::from_continued_fraction(cf, tree.V(), w.n_sites);
  w.ids_left = ids_value(sites, w.E1, w.n_sites);
  w.ids_right = ids_value(sites, w.E2, w.n_sites);
  w.tolerance = 1.0 / static_cast<double>(fin.q);
  w.labels_agree = std::fabs(w.ids_left - w.label) <= w.tolerance && std::fabs(w.ids_right - w.label) <= w.tolerance;
  return w;
}

GapCertificate negative_coupling_transfer(const ContinuedFraction& cf, const GapCertificate& certificate,
                                          long max_q) {
  if (cf.to_string() != certificate.cf) throw InvalidInput("certificate belongs to a different frequency");
  PrecisionBudget budget{certificate.bits, certificate.abs_tol};
  GapCertificate out = certificate;
  out.V = -certificate.V;
  out.n = -certificate.n;
  out.target_label = frac_n_alpha(cf, out.n, budget);
  for (GapLevelRecord& r : out.levels) {
    if (r.m != 0) r.m = r.q - r.m;
    if (r.m_next != 0) {
      const long q_next = small_convergent(cf, r.k + 1).q;
      r.m_next = q_next - r.m_next;
    }
    std::swap(r.gap_lower, r.gap_upper);
    r.gap_lower = -r.gap_lower;
    r.gap_upper = -r.gap_upper;
    if (r.state == GapLevelRecord::State::Absent) r.gap_lower = r.gap_upper = 0.0;

    const GapLevelRecord check = sigma_gap(cf, r.k, out.V, out.n, budget, max_q);
    const bool same_state = check.state == r.state;
    const bool same_edges = r.state == GapLevelRecord::State::Absent ||
                            (std::fabs(check.gap_lower - r.gap_lower) <= budget.abs_tol &&
                             std::fabs(check.gap_upper - r.gap_upper) <= budget.abs_tol);
    if (check.m != r.m || !same_state || !same_edges) {
      throw NumericError("mirrored gap at level " + std::to_string(r.k) + " disagrees with the recomputed spectrum at V = " +
                         format_real(out.V));
    }
  }
  return out;
}

std::optional<long> label_index(long p, long q, long m) {
  for (long n = 0; n < q; ++n) {
    if (mod_label(n, p, q) == ((m % q) + q) % q) return n;
    if (n > 0 && mod_label(-n, p, q) == ((m % q) + q) % q) return -n;
  }
  return std::nullopt;
}

std::string certificate_to_json(const GapCertificate& certificate) {
  ordered_json j;
  j["n"] = certificate.n;
  j["V"] = format_real(certificate.V);
  j["target_label"] = {{"lo", format_real(certificate.target_label.lo_double())},
                       {"hi", format_real(certificate.target_label.hi_double())}};
  ordered_json levels = ordered_json::array();
  for (const GapLevelRecord& r : certificate.levels) levels.push_back(level_json(r));
  j["levels"] = std::move(levels);
  j["status"] = std::string(to_string(certificate.status));
  return j.dump(2);
}

}  // namespace sturmian
