#include <Eigen/Dense>

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "sturmian/error.hpp"
#include "sturmian/gaplabels.hpp"

using namespace sturmian;

namespace {

// Eigenvalues <= E of the n-site Dirichlet matrix, by the pivot recurrence
// d_i = v_i - E - 1 / d_{i-1}.
long pivot_count(const std::vector<double>& v, double E) {
  long count = 0;
  double d = 1.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    d = v[i] - E - (i == 0 ? 0.0 : 1.0 / d);
    if (d == 0.0) d = 1e-300;
    if (d <= 0.0) ++count;
  }
  return count;
}

// v(n) = V [ {n alpha} >= 1 - alpha ] with alpha replaced by a convergent far
// beyond n_max.
std::vector<double> oracle_sites(long p, long q, double V, long n_max) {
  std::vector<double> v(static_cast<std::size_t>(n_max));
  for (long n = 1; n <= n_max; ++n) v[static_cast<std::size_t>(n - 1)] = (n * p) % q >= q - p ? V : 0.0;
  return v;
}

double frac(double x) { return x - std::floor(x); }

}  // namespace

TEST_CASE("pivot-count oracle agrees with dense eigenvalues") {
  const std::vector<double> v = oracle_sites(5, 13, 2.0, 60);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(60, 60);
  for (int i = 0; i < 60; ++i) {
    h(i, i) = v[static_cast<std::size_t>(i)];
    if (i + 1 < 60) h(i, i + 1) = h(i + 1, i) = 1.0;
  }
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(h, Eigen::EigenvaluesOnly).eigenvalues();
  for (double E = -2.9; E < 4.9; E += 0.13) {
    const long want = std::count_if(ev.data(), ev.data() + ev.size(), [E](double e) { return e <= E; });
    CHECK(pivot_count(v, E) == want);
  }
}

TEST_CASE("finite-volume IDS matches the oracle count") {
  for (double E : {-2.5, -0.4, 0.7, 1.0, 2.3, 3.9}) {
    const double want = static_cast<double>(pivot_count(oracle_sites(1, 2, 2.0, 2000), E)) / 2000.0;
    CHECK(ids_value(1, 2, 2.0, E, 2000) == doctest::Approx(want).epsilon(1e-12));
  }
  CHECK(std::fabs(ids_value(1, 2, 2.0, 1.0, 2000) - 0.5) < 1e-3);
  // Golden mean sampled through a deep convergent (F_30 / F_31).
  const ContinuedFraction g = ContinuedFraction::golden_mean();
  const SmallConvergent c = small_convergent(g, 30);
  for (double E : {-1.5, 0.2, 1.1, 2.8}) {
    const double want = static_cast<double>(pivot_count(oracle_sites(c.p, c.q, 2.0, 5000), E)) / 5000.0;
    CHECK(ids_value(g, 2.0, E, 5000) == doctest::Approx(want).epsilon(1e-12));
  }
  CHECK(default_ids_sites(10) == 500);
  CHECK(default_ids_sites(100000) == 1000000);
}

TEST_CASE("approximant gaps carry labels m/q with m = n p mod q") {
  const PrecisionBudget budget;
  for (const Fraction& f : rational_grid(55)) {
    const SpectrumApprox s = compute_bands(f.p, f.q, 2.0, budget);
    const std::vector<Gap> gaps = gaps_of_level(s, budget.abs_tol);
    // Direct recount of open gaps between consecutive bands.
    std::size_t open = 0;
    for (std::size_t j = 0; j + 1 < s.bands.size(); ++j) {
      if (s.bands[j + 1].lower - s.bands[j].upper > budget.abs_tol) ++open;
    }
    CHECK(gaps.size() == open);
    for (const Gap& gap : gaps) {
      CHECK(gap.m >= 1);
      CHECK(gap.m < f.q);
      CHECK(s.bands[static_cast<std::size_t>(gap.m - 1)].upper == gap.lower);
      CHECK(s.bands[static_cast<std::size_t>(gap.m)].lower == gap.upper);
      bool found = false;
      for (long n = -(f.q - 1); n < f.q && !found; ++n) found = ((n * f.p) % f.q + f.q) % f.q == gap.m;
      CHECK(found);
      const auto n = label_index(f.p, f.q, gap.m);
      REQUIRE(n.has_value());
      CHECK(((*n * f.p) % f.q + f.q) % f.q == gap.m);
    }
  }
  CHECK_FALSE(label_index(2, 4, 1).has_value());
}

TEST_CASE("IDS in an approximant gap equals its label") {
  const PrecisionBudget budget;
  const SpectrumApprox s = compute_bands(8, 13, 2.0, budget);
  for (const Gap& gap : gaps_of_level(s, budget.abs_tol)) {
    const double mid = 0.5 * (gap.lower + gap.upper);
    const double got = ids_value(8, 13, 2.0, mid, 13 * 400);
    CHECK(std::fabs(got - static_cast<double>(gap.m) / 13.0) < 2.0 / (13.0 * 400.0));
  }
}

TEST_CASE("certificates at V = 6 are certified, monotone and congruent") {
  const PrecisionBudget budget;
  const ContinuedFraction g = ContinuedFraction::golden_mean();
  const double alpha = (std::sqrt(5.0) - 1.0) / 2.0;
  const auto certs = certify_gaps(g, 6.0, -5, 5, 10, budget);
  REQUIRE(certs.size() == 10);
  for (const GapCertificate& c : certs) {
    CAPTURE(c.n);
    CHECK(c.status == CertificateStatus::Certified);
    CHECK(c.monotone);
    CHECK(std::fabs(c.target_label.mid_double() - frac(c.n * alpha)) <= budget.abs_tol);
    double prev_lo = INFINITY, prev_hi = -INFINITY;
    for (const GapLevelRecord& r : c.levels) {
      const SmallConvergent ck = small_convergent(g, r.k);
      CHECK(r.q == ck.q);
      CHECK(r.m == ((c.n * ck.p) % ck.q + ck.q) % ck.q);
      if (r.state != GapLevelRecord::State::Open) continue;
      // Gap intervals grow: each contains the previous one.
      if (std::isfinite(prev_lo)) {
        CHECK(r.gap_lower <= prev_lo + budget.abs_tol);
        CHECK(r.gap_upper >= prev_hi - budget.abs_tol);
      }
      prev_lo = r.gap_lower;
      prev_hi = r.gap_upper;
    }
    // Deep-sample IDS inside the final gap against the label, with the oracle.
    const GapLevelRecord& last = c.final_level();
    const SmallConvergent deep = small_convergent(g, 30);
    const double E = 0.5 * (last.gap_lower + last.gap_upper);
    const double ids = static_cast<double>(pivot_count(oracle_sites(deep.p, deep.q, 6.0, 20000), E)) / 20000.0;
    CHECK(std::fabs(ids - frac(c.n * alpha)) < 1e-3);
  }
}

TEST_CASE("mirror certificates at -V are recomputed and consistent") {
  const PrecisionBudget budget;
  const ContinuedFraction g = ContinuedFraction::golden_mean();
  const GapCertificate c = certify_gap(g, 2.0, 3, 8, budget);
  const GapCertificate m = negative_coupling_transfer(g, c);
  CHECK(m.V == -2.0);
  CHECK(m.n == -3);
  REQUIRE(m.levels.size() == c.levels.size());
  for (std::size_t i = 0; i < c.levels.size(); ++i) {
    if (c.levels[i].state != GapLevelRecord::State::Open) continue;
    CHECK(m.levels[i].gap_lower == doctest::Approx(-c.levels[i].gap_upper));
    CHECK(m.levels[i].gap_upper == doctest::Approx(-c.levels[i].gap_lower));
  }
  const GapCertificate direct = certify_gap(g, -2.0, -3, 8, budget);
  CHECK(direct.status == c.status);
  CHECK(direct.final_level().gap_lower == doctest::Approx(m.final_level().gap_lower).epsilon(1e-12));

  GapCertificate wrong = c;
  wrong.cf = "0,2,(1)";
  CHECK_THROWS_AS(negative_coupling_transfer(g, wrong), InvalidInput);
}

TEST_CASE("two-path witness flanks the certified gap") {
  const PrecisionBudget budget;
  const ContinuedFraction g = ContinuedFraction::golden_mean();
  const GapCertificate c = certify_gap(g, 2.0, 2, 9, budget);
  REQUIRE(c.status == CertificateStatus::Certified);
  const BandTree t = build_tree(g, 2.0, 10, budget);
  const TwoPathWitness w = two_path_witness(t, c);
  CHECK(w.E1 < w.E2);
  CHECK(t.node(w.left.nodes.back()).band.upper == w.E1);
  CHECK(t.node(w.right.nodes.back()).band.lower == w.E2);
  CHECK(w.left.nodes != w.right.nodes);
  CHECK(w.labels_agree);
  CHECK(std::fabs(w.ids_left - w.label) <= w.tolerance);
  CHECK(std::fabs(w.ids_right - w.label) <= w.tolerance);

  const BandTree shallow = build_tree(g, 2.0, 5, budget);
  CHECK_THROWS_AS(two_path_witness(shallow, c), InvalidInput);
}

TEST_CASE("certificate JSON has a fixed field order") {
  const GapCertificate c = certify_gap(ContinuedFraction::golden_mean(), 6.0, 1, 6, PrecisionBudget{});
  const auto doc = nlohmann::ordered_json::parse(certificate_to_json(c));
  std::vector<std::string> keys;
  for (const auto& [k, v] : doc.items()) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"n", "V", "target_label", "levels", "status"});
  CHECK(doc["status"] == "certified");
  std::vector<std::string> level_keys;
  for (const auto& [k, v] : doc["levels"][0].items()) level_keys.push_back(k);
  CHECK(level_keys == std::vector<std::string>{"k", "p", "q", "m", "state", "gap_lo", "gap_hi", "margin"});
}

TEST_CASE("certify_gap validates its input") {
  const ContinuedFraction g = ContinuedFraction::golden_mean();
  const PrecisionBudget budget;
  CHECK_THROWS_AS(certify_gap(g, 2.0, 0, 8, budget), InvalidInput);
  CHECK_THROWS_AS(certify_gap(g, 0.0, 1, 8, budget), InvalidInput);
  CHECK_THROWS_AS(certify_gap(g, 2.0, 1, 2, budget), InvalidInput);
  CHECK_THROWS_AS(certify_gap(g, 2.0, 40, 6, budget), InvalidInput);
}

TEST_CASE("series label of a certified gap encloses its target") {
  const PrecisionBudget budget;
  const ContinuedFraction g = ContinuedFraction::golden_mean();
  for (long n : {-7L, -2L, 1L, 4L, 9L}) {
    const SeriesLabel s = series_label(g, ostrowski_digits(g, n, 25), budget);
    const RationalInterval target = frac_n_alpha(g, n, budget);
    CHECK(s.enclosure.lo <= target.hi);
    CHECK(target.lo <= s.enclosure.hi);
  }
}
