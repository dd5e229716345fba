#include "verify.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "sturmian/bandtree.hpp"
#include "sturmian/error.hpp"
#include "sturmian/gaplabels.hpp"
#include "sturmian/hamiltonian.hpp"
#include "sturmian/numfmt.hpp"
#include "sturmian/spectrum.hpp"

namespace sturmian::cli {

namespace {

// A check returns an empty string on success, otherwise the reason.
using Check = std::function<std::string()>;

class Runner {
 public:
  Runner(std::string suite, std::vector<CheckResult>& out) : suite_(std::move(suite)), out_(out) {}

  void run(const std::string& name, const Check& check) {
    CheckResult r{suite_, name, false, {}};
    try {
      r.detail = check();
      r.passed = r.detail.empty();
      if (r.passed) r.detail = "ok";
    } catch (const std::exception& e) {
      r.detail = std::string("exception: ") + e.what();
    }
    out_.push_back(std::move(r));
  }

 private:
  std::string suite_;
  std::vector<CheckResult>& out_;
};

std::vector<ContinuedFraction> test_expansions() {
  return {ContinuedFraction::golden_mean(), ContinuedFraction::parse("0,1,2,(4)")};
}

std::string str(double x) { return format_real(x); }

void contfrac_suite(const PrecisionBudget& budget, std::vector<CheckResult>& out) {
  Runner r("contfrac", out);
  r.run("convergent recurrence, coprimality and sign alternation", [] {
    for (const ContinuedFraction& cf : test_expansions()) {
      const auto c = convergents(cf, 30);
      for (int k = 1; k <= 30; ++k) {
        const Convergent& x = c[static_cast<std::size_t>(k + 1)];
        const Convergent& y = c[static_cast<std::size_t>(k)];
        const Convergent& z = c[static_cast<std::size_t>(k - 1)];
        const int a = cf.quotient(k);
        if (x.p != a * y.p + z.p || x.q != a * y.q + z.q) return "recurrence fails at k = " + std::to_string(k);
        if (gcd(x.p, x.q) != 1) return "p_k, q_k not coprime at k = " + std::to_string(k);
        if (k >= 2 && !(x.q > y.q)) return "q_k not increasing at k = " + std::to_string(k);
        const int s = k % 2 == 0 ? 1 : -1;
        if (sign_of_linear(cf, s * x.q, -s * x.p) <= 0) return "sign alternation fails at k = " + std::to_string(k);
      }
    }
    return std::string();
  });
  r.run("convergent error below 1/(q_k q_{k+1})", [] {
    for (const ContinuedFraction& cf : test_expansions()) {
      const auto c = convergents(cf, 30);
      for (int k = 1; k < 30; ++k) {
        const Convergent& x = c[static_cast<std::size_t>(k + 1)];
        const mpz_class& q_next = c[static_cast<std::size_t>(k + 2)].q;
        // q_{k+1} (q_k alpha - p_k) lies in (-1, 1).
        if (sign_of_linear(cf, q_next * x.q, -q_next * x.p - 1) >= 0 ||
            sign_of_linear(cf, q_next * x.q, -q_next * x.p + 1) <= 0) {
          return "bound fails at k = " + std::to_string(k);
        }
      }
    }
    return std::string();
  });
  r.run("beta_k decreasing with beta_{k+1} = beta_{k-1} - a_{k+1} beta_k", [] {
    for (const ContinuedFraction& cf : test_expansions()) {
      const auto c = convergents(cf, 30);
      auto form = [&](int k) {
        const Convergent& x = c[static_cast<std::size_t>(k + 1)];
        const int s = (k % 2 == 0) ? 1 : -1;
        return std::pair<mpz_class, mpz_class>(s * x.q, -s * x.p);
      };
      for (int k = 0; k < 29; ++k) {
        const auto [a0, b0] = form(k);
        const auto [a1, b1] = form(k + 1);
        if (sign_of_linear(cf, a0 - a1, b0 - b1) <= 0) return "beta not decreasing at k = " + std::to_string(k);
        if (k >= 1) {
          const auto [am, bm] = form(k - 1);
          const int a = cf.quotient(k + 1);
          if (sign_of_linear(cf, a1 - am + a * a0, b1 - bm + a * b0) != 0) {
            return "beta recurrence fails at k = " + std::to_string(k);
          }
        }
      }
    }
    return std::string();
  });
  r.run("frac_n_alpha golden-mean values", [budget] {
    const ContinuedFraction g = ContinuedFraction::golden_mean();
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    const std::pair<long, double> cases[] = {{1, phi}, {2, 2 * phi - 1}, {-1, 1 - phi}};
    for (const auto& [n, want] : cases) {
      const RationalInterval f = frac_n_alpha(g, n, budget);
      if (std::fabs(f.mid_double() - want) > 1e-9 || f.width() > budget.abs_tol) {
        return "{" + std::to_string(n) + " alpha} = " + str(f.mid_double());
      }
    }
    return std::string();
  });
  r.run("Ostrowski digits: bounds and series agreement for |n| <= 50", [budget] {
    for (const ContinuedFraction& cf : test_expansions()) {
      for (long n = -50; n <= 50; ++n) {
        if (n == 0) continue;
        const OstrowskiDigits d = ostrowski_digits(cf, n, 25);
        for (int k = -1; k <= 25; ++k) {
          if (d.at(k) < 0 || d.at(k) > digit_bound(cf, k)) return "digit out of range for n = " + std::to_string(n);
        }
        const SeriesLabel s = series_label(cf, d, budget);
        if (!series_encloses(cf, s, n)) return "series does not enclose {n alpha} for n = " + std::to_string(n);
        if (series_residual(cf, s, n, budget) >= 1e-9) return "residual too large for n = " + std::to_string(n);
      }
    }
    return std::string();
  });
}

void spectrum_suite(const PrecisionBudget& budget, std::vector<CheckResult>& out) {
  Runner r("spectrum", out);
  r.run("exact small-q spectra", [budget] {
    const double s5 = std::sqrt(5.0);
    const SpectrumApprox free = compute_bands(0, 1, 3.0, budget);
    const SpectrumApprox shift = compute_bands(1, 1, 2.0, budget);
    const SpectrumApprox half = compute_bands(1, 2, 2.0, budget);
    const double err = std::max({std::fabs(free.bands[0].lower + 2), std::fabs(free.bands[0].upper - 2),
                                 std::fabs(shift.bands[0].lower), std::fabs(shift.bands[0].upper - 4),
                                 std::fabs(half.bands[0].lower - (1 - s5)), std::fabs(half.bands[0].upper),
                                 std::fabs(half.bands[1].lower - 2), std::fabs(half.bands[1].upper - (1 + s5))});
    return err <= 1e-12 ? std::string() : "endpoint error " + str(err);
  });
  r.run("q bands per approximant and edge accuracy (q <= 30)", [budget] {
    for (double V : {0.5, 2.0, 6.0}) {
      for (const Fraction& f : rational_grid(30)) {
        const SpectrumApprox s = compute_bands(f.p, f.q, V, budget);
        if (static_cast<long>(s.bands.size()) != f.q) return "wrong band count at " + std::to_string(f.p) + "/" +
                                                              std::to_string(f.q);
        if (s.max_edge_error > budget.abs_tol) return "edge error " + str(s.max_edge_error);
      }
    }
    return std::string();
  });
  r.run("transfer product has determinant 1", [] {
    for (const Fraction& f : rational_grid(40)) {
      const PotentialWord w = potential_word(f.p, f.q, 2.0);
      for (double E : {-1.3, 0.4, 1.7, 3.1}) {
        const TransferMatrixProduct t = transfer_product(w, E);
        const Mat2<double>& m = t.matrix;
        const double scale = std::max({std::fabs(m.m11 * m.m22), std::fabs(m.m12 * m.m21), 1.0});
        const double det = m.m11 * m.m22 - m.m12 * m.m21;
        if (std::fabs(det - std::ldexp(1.0, static_cast<int>(-2 * t.log2_scale))) > 1e-10 * scale) {
          return "determinant " + str(det) + " at " + std::to_string(f.p) + "/" + std::to_string(f.q);
        }
      }
    }
    return std::string();
  });
  r.run("Sigma_{k+1} inside Sigma_k, golden mean, k <= 10", [budget] {
    for (double V : {0.5, 2.0, 6.0}) {
      const NestingReport rep = check_nesting(ContinuedFraction::golden_mean(), 10, V, budget);
      if (!rep.all_nested) return "protrusion " + str(rep.worst_protrusion) + " at V = " + str(V);
    }
    return std::string();
  });
  r.run("bands(-V) = -reverse(bands(V))", [budget] {
    for (double V : {1.0, 2.0, 6.0}) {
      for (const Fraction& f : rational_grid(25)) {
        const double d = antisymmetry_defect(compute_bands(f.p, f.q, V, budget), compute_bands(f.p, f.q, -V, budget));
        if (d > budget.abs_tol) return "defect " + str(d);
      }
    }
    return std::string();
  });
  r.run("Leb(Sigma_k) non-increasing, golden mean V = 2", [budget] {
    double prev = INFINITY;
    for (int k = 0; k <= 10; ++k) {
      const double m = sigma_set(ContinuedFraction::golden_mean(), k, 2.0, budget).set.measure();
      if (m > prev + budget.abs_tol) return "measure grows at k = " + std::to_string(k);
      prev = m;
    }
    return std::string();
  });
}

void tree_suite(const PrecisionBudget& budget, std::vector<CheckResult>& out) {
  Runner r("tree", out);
  r.run("type rows for [0;1,2,4] at V = 2", [budget] {
    const BandTree t = build_tree(ContinuedFraction::parse("0,1,2,4"), 2.0, 3, budget);
    const char* want[] = {"A", "B", "BAA", "AAAABAAABAAAB"};
    for (int k = 0; k <= 3; ++k) {
      std::string row;
      for (int id : t.level(k)) row += to_string(t.node(id).type());
      if (row != want[k]) return "level " + std::to_string(k) + " types " + row;
    }
    return std::string();
  });
  r.run("level sizes, child counts and interlacing", [budget] {
    for (const ContinuedFraction& cf : test_expansions()) {
      for (double V : {0.5, 2.0, 6.0}) {
        const int depth = cf == ContinuedFraction::golden_mean() ? 9 : 5;
        const BandTree t = build_tree(cf, V, depth, budget);
        for (int k = 0; k <= depth; ++k) {
          if (static_cast<long>(t.level_size(k)) != small_convergent(cf, k).q) return "level size at k = " + std::to_string(k);
        }
        const auto counts = check_child_counts(t);
        if (!counts.empty()) return counts.front();
        const InterlacingReport rep = verify_interlacing(t);
        if (!rep.all_hold) return rep.messages.front();
      }
    }
    return std::string();
  });
  r.run("siblings disjoint at V = 6", [budget] {
    const BandTree t = build_tree(ContinuedFraction::golden_mean(), 6.0, 8, budget);
    return verify_interlacing(t).siblings_disjoint ? std::string() : std::string("overlapping siblings");
  });
  r.run("typed tree independent of V", [budget] {
    const BandTree a = build_tree(ContinuedFraction::golden_mean(), 0.5, 8, budget);
    const BandTree b = build_tree(ContinuedFraction::golden_mean(), 6.0, 8, budget);
    std::string why;
    return isomorphic(a, b, &why) ? std::string() : why;
  });
  r.run("path enclosures shrink strictly", [budget] {
    const BandTree t = build_tree(ContinuedFraction::golden_mean(), 2.0, 10, budget);
    const TreePath path = rightmost_path(t, 10);
    double prev = INFINITY;
    for (std::size_t i = 1; i <= path.nodes.size(); ++i) {
      const Interval iv = path_enclosure(t, TreePath{{path.nodes.begin(), path.nodes.begin() + static_cast<long>(i)}});
      const double w = iv.length();
      if (i > 1 && !(w < prev)) return "width does not shrink at step " + std::to_string(i);
      prev = w;
    }
    return prev < 0.05 ? std::string() : "final width " + str(prev);
  });
}

void labels_suite(const PrecisionBudget& budget, std::vector<CheckResult>& out) {
  Runner r("labels", out);
  r.run("IDS values and monotonicity", [] {
    const double half = ids_value(1, 2, 2.0, 1.0, 2000);
    if (std::fabs(half - 0.5) > 1e-3) return "IDS in the 1/2 gap is " + str(half);
    const double top = ids_value(0, 1, 0.0, 2.0, 1000);
    if (std::fabs(top - 1.0) > 1e-2) return "IDS above the free band is " + str(top);
    if (ids_value(1, 2, 2.0, -3.0, 1000) != 0.0) return std::string("IDS below the spectrum is nonzero");
    double prev = 0.0;
    for (double E = -3.0; E <= 5.0; E += 0.01) {
      const double v = ids_value(ContinuedFraction::golden_mean(), 2.0, E, 3000);
      if (v < prev) return "IDS decreases at E = " + str(E);
      prev = v;
    }
    return std::string();
  });
  r.run("every approximant gap label is {n p/q}", [budget] {
    for (const Fraction& f : rational_grid(55)) {
      for (const Gap& g : gaps_of_level(compute_bands(f.p, f.q, 2.0, budget), budget.abs_tol)) {
        if (!label_index(f.p, f.q, g.m)) return "label " + std::to_string(g.m) + "/" + std::to_string(f.q);
      }
    }
    return std::string();
  });
  r.run("gap certificates at V = 6, n in [-5, 5]", [budget] {
    const ContinuedFraction g = ContinuedFraction::golden_mean();
    for (const GapCertificate& c : certify_gaps(g, 6.0, -5, 5, 10, budget)) {
      if (c.status != CertificateStatus::Certified) return "n = " + std::to_string(c.n) + ": " + c.note;
      for (const GapLevelRecord& rec : c.levels) {
        const long want = ((c.n * rec.p) % rec.q + rec.q) % rec.q;
        if (rec.m != want) return "label congruence fails for n = " + std::to_string(c.n);
      }
      negative_coupling_transfer(g, c);
    }
    return std::string();
  });
  r.run("IDS on a certified gap equals its label", [budget] {
    const ContinuedFraction g = ContinuedFraction::golden_mean();
    const GapCertificate c = certify_gap(g, 2.0, 1, 10, budget);
    const GapLevelRecord& last = c.final_level();
    const long n_sites = default_ids_sites(last.q);
    const double label = c.target_label.mid_double();
    for (int i = 1; i < 8; ++i) {
      const double E = last.gap_lower + (last.gap_upper - last.gap_lower) * i / 8.0;
      const double v = ids_value(g, 2.0, E, n_sites);
      if (std::fabs(v - label) > 1.0 / static_cast<double>(last.q)) return "IDS " + str(v) + " vs " + str(label);
    }
    return std::string();
  });
}

}  // namespace

std::vector<CheckResult> run_verify_suite(const std::string& suite, const PrecisionBudget& budget) {
  static const std::vector<std::pair<std::string, void (*)(const PrecisionBudget&, std::vector<CheckResult>&)>>
      suites = {{"contfrac", contfrac_suite}, {"spectrum", spectrum_suite}, {"tree", tree_suite}, {"labels", labels_suite}};
  std::vector<CheckResult> out;
  bool found = false;
  for (const auto& [name, fn] : suites) {
    if (suite == "all" || suite == name) {
      fn(budget, out);
      found = true;
    }
  }
  if (!found) throw InvalidInput("unknown suite '" + suite + "' (contfrac, spectrum, tree, labels, all)");
  return out;
}

}  // namespace sturmian::cli
