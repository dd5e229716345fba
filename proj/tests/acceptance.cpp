// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <expat.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "sturmian/bandtree.hpp"
#include "sturmian/error.hpp"
#include "sturmian/gaplabels.hpp"
#include "sturmian/spectrum.hpp"

using namespace sturmian;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

Outcome fail(std::string why) { return {false, std::move(why)}; }

long totient(long n) {
  long count = 0;
  for (long k = 1; k <= n; ++k) count += std::gcd(k, n) == 1;
  return count;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome exact_small_spectra() {
  const PrecisionBudget budget{64, 1e-12};
  double worst = 0.0;
  auto check = [&](long p, long q, double V, std::vector<std::pair<double, double>> want) {
    const SpectrumApprox s = compute_bands(p, q, V, budget);
    if (s.bands.size() != want.size()) throw NumericError("band count");
    for (std::size_t j = 0; j < want.size(); ++j) {
      worst = std::max({worst, std::fabs(s.bands[j].lower - want[j].first), std::fabs(s.bands[j].upper - want[j].second)});
    }
  };
  for (double V : {-6.0, -1.0, 0.5, 2.0, 7.0}) {
    check(0, 1, V, {{-2.0, 2.0}});
    check(1, 1, V, {{V - 2.0, V + 2.0}});
  }
  const double r5 = std::sqrt(5.0);
  check(1, 2, 2.0, {{1.0 - r5, 0.0}, {2.0, 1.0 + r5}});
  return {worst <= 1e-12, "max endpoint error " + fmt("%.2e", worst)};
}

Outcome floquet_and_nesting() {
  const PrecisionBudget budget;
  std::string problems;
  int checked = 0;
  for (const char* text : {"golden", "0,1,2,(4)"}) {
    const ContinuedFraction cf = ContinuedFraction::parse(text);
    for (double V : {0.5, 2.0, 6.0}) {
      const std::string tag = std::string(text) + " V=" + fmt("%g", V);
      // Sigma_10 needs level 11; report an out-of-range level before any work.
      if (small_convergent(cf, 11).q > kDefaultMaxQ) {
        problems += tag + ": q_11 = " + std::to_string(small_convergent(cf, 11).q) + " beyond max_q " +
                    std::to_string(kDefaultMaxQ) + "; ";
        continue;
      }
      try {
        for (int k = 0; k <= 11; ++k) {
          const auto s = approximant_spectrum(cf, k, V, budget);
          if (static_cast<long>(s->bands.size()) != s->q) problems += tag + ": band count at k=" + std::to_string(k) + "; ";
        }
        const NestingReport nest = check_nesting(cf, 10, V, budget);
        if (!nest.all_nested || nest.worst_protrusion > 2e-10) {
          problems += tag + ": protrusion " + fmt("%.2e", nest.worst_protrusion) + "; ";
        }
        const IntervalSet last = sigma_set(cf, 10, V, budget).set;
        double prev = INFINITY;
        for (int k = 0; k < 10; ++k) {
          const double d = hausdorff_distance(sigma_set(cf, k, V, budget).set, last);
          if (!(d < prev)) problems += tag + ": d(S_" + std::to_string(k) + ", S_10) = " + fmt("%.3e", d) + " not below previous; ";
          prev = d;
        }
        ++checked;
      } catch (const Error& e) {
        problems += tag + ": " + e.what() + "; ";
      }
    }
  }
  if (!problems.empty()) return fail(problems);
  return {true, std::to_string(checked) + " (cf, V) cases nested and converging"};
}

Outcome tree_reproduction() {
  const BandTree t = build_tree(ContinuedFraction::parse("0,1,2,4"), 2.0, 3, PrecisionBudget{});
  const std::vector<std::string> want{"A", "B", "BAA", "AAAABAAABAAAB"};
  for (int k = 0; k <= 3; ++k) {
    std::string row;
    for (int id : t.level(k)) row += to_string(t.node(id).type());
    if (row != want[static_cast<std::size_t>(k)]) return fail("level " + std::to_string(k) + " row " + row);
  }
  const auto counts = check_child_counts(t);
  if (!counts.empty()) return fail(counts.front());
  if (!verify_interlacing(t).all_hold) return fail("interlacing violated");
  return {true, "rows A | B | BAA | AAAABAAABAAAB"};
}

Outcome v_independence() {
  const PrecisionBudget budget;
  const ContinuedFraction g = ContinuedFraction::golden_mean();
  std::string why;
  const bool iso = isomorphic(build_tree(g, 0.5, 8, budget), build_tree(g, 6.0, 8, budget), &why);
  return {iso, iso ? "isomorphic at depth 8" : why};
}

Outcome measure_decay() {
  const PrecisionBudget budget;
  const ContinuedFraction g = ContinuedFraction::golden_mean();
  std::vector<double> m;
  for (int k = 0; k <= 10; ++k) m.push_back(sigma_set(g, k, 2.0, budget).set.measure());
  for (int k = 1; k <= 10; ++k) {
    if (m[static_cast<std::size_t>(k)] > m[static_cast<std::size_t>(k - 1)] + budget.abs_tol) {
      return fail("measure rises at k=" + std::to_string(k));
    }
  }
  if (!(m[10] < m[4])) return fail("Leb(S_10) not below Leb(S_4)");
  return {true, "Leb(S_4)=" + fmt("%.4f", m[4]) + " Leb(S_10)=" + fmt("%.4f", m[10])};
}

Outcome ids_and_labels() {
  const PrecisionBudget budget;
  const double ids = ids_value(1, 2, 2.0, 1.0, 2000);
  if (std::fabs(ids - 0.5) >= 1e-3) return fail("IDS(1) = " + fmt("%.6f", ids));
  long gaps = 0;
  for (const Fraction& f : rational_grid(55)) {
    const SpectrumApprox s = compute_bands(f.p, f.q, 2.0, budget);
    for (const Gap& gap : gaps_of_level(s, budget.abs_tol)) {
      bool found = false;
      for (long n = -(f.q - 1); n < f.q && !found; ++n) found = ((n * f.p) % f.q + f.q) % f.q == gap.m;
      if (!found) return fail("gap " + std::to_string(gap.m) + "/" + std::to_string(f.q) + " unlabelled");
      ++gaps;
    }
  }
  return {true, "IDS(1)=" + fmt("%.6f", ids) + ", " + std::to_string(gaps) + " gaps labelled"};
}

Outcome series_consistency() {
  const PrecisionBudget budget;
  double worst = 0.0;
  for (const char* text : {"golden", "0,1,2,(4)"}) {
    const ContinuedFraction cf = ContinuedFraction::parse(text);
    for (long n = -50; n <= 50; ++n) {
      if (n == 0) continue;
      const SeriesLabel s = series_label(cf, ostrowski_digits(cf, n, 25), budget);
      if (!series_encloses(cf, s, n)) return fail(std::string(text) + " n=" + std::to_string(n) + " not enclosed");
      worst = std::max(worst, series_residual(cf, s, n, budget));
    }
  }
  return {worst < 1e-9, "max residual " + fmt("%.2e", worst)};
}

std::string certificate_problem(const ContinuedFraction& cf, const GapCertificate& c) {
  if (c.status != CertificateStatus::Certified) return "n=" + std::to_string(c.n) + " " + std::string(to_string(c.status));
  if (!c.monotone) return "n=" + std::to_string(c.n) + " not monotone";
  for (const GapLevelRecord& r : c.levels) {
    const SmallConvergent ck = small_convergent(cf, r.k);
    if (r.m != ((c.n * ck.p) % ck.q + ck.q) % ck.q) return "n=" + std::to_string(c.n) + " label mismatch";
  }
  return "";
}

Outcome gap_certification() {
  const PrecisionBudget budget;
  const ContinuedFraction g = ContinuedFraction::golden_mean();
  long total = 0;
  for (const auto& [V, n_max, depth] : std::vector<std::tuple<double, long, int>>{{6.0, 5, 10}, {2.0, 10, 14}}) {
    for (const GapCertificate& c : certify_gaps(g, V, -n_max, n_max, depth, budget)) {
      const std::string why = certificate_problem(g, c);
      if (!why.empty()) return fail("V=" + fmt("%g", V) + " " + why);
      ++total;
    }
  }
  return {true, std::to_string(total) + "/30 certified"};
}

Outcome antisymmetry() {
  const PrecisionBudget budget;
  std::mt19937_64 rng(20240611);
  std::uniform_int_distribution<long> pick_q(2, 100);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const long q = pick_q(rng);
    long p = 0;
    do p = std::uniform_int_distribution<long>(1, q - 1)(rng);
    while (std::gcd(p, q) != 1);
    for (double V : {1.0, 2.0, 6.0}) {
      worst = std::max(worst, antisymmetry_defect(compute_bands(p, q, V, budget), compute_bands(p, q, -V, budget)));
    }
  }
  if (worst > 1e-10) return fail("defect " + fmt("%.2e", worst));
  // The transfer recomputes every mirrored level at -V and throws on mismatch.
  const ContinuedFraction g = ContinuedFraction::golden_mean();
  long mirrored = 0;
  for (double V : {1.0, 2.0, 6.0}) {
    for (long n : {-3L, -1L, 2L, 4L}) {
      const GapCertificate c = certify_gap(g, V, n, 10, budget);
      const GapCertificate m = negative_coupling_transfer(g, c);
      if (m.status != c.status || m.n != -n) return fail("mirror of n=" + std::to_string(n) + " differs");
      ++mirrored;
    }
  }
  return {true, "defect " + fmt("%.2e", worst) + ", " + std::to_string(mirrored) + " mirrored certificates"};
}

Outcome injectivity() {
  const PrecisionBudget budget;
  const ContinuedFraction g = ContinuedFraction::golden_mean();
  const InjectivityReport strong = injectivity_probe(build_tree(g, 6.0, 7, budget), 6);
  if (strong.separated != strong.pairs) {
    return fail(std::to_string(strong.pairs - strong.separated) + " pairs unseparated at V=6");
  }
  const BandTree weak = build_tree(g, 0.5, 13, budget);
  const double u6 = injectivity_probe(weak, 6).undecided_fraction();
  const double u12 = injectivity_probe(weak, 12).undecided_fraction();
  return {u12 < u6, std::to_string(strong.pairs) + " pairs separated; undecided " + fmt("%.4f", u6) + " -> " +
                        fmt("%.4f", u12)};
}

struct SvgStats {
  bool well_formed = false;
  std::map<std::string, int> lines_per_rational;
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> highlights;  // (class, stroke)
  std::vector<std::string> groups;
};

void XMLCALL on_start(void* data, const XML_Char* name, const XML_Char** attrs) {
  auto* s = static_cast<SvgStats*>(data);
  std::map<std::string, std::string> a;
  for (int i = 0; attrs[i] != nullptr; i += 2) a[attrs[i]] = attrs[i + 1];
  const std::string tag = name;
  if (tag == "g") {
    std::string key;
    if (a["class"] == "rational") key = "r:" + a["data-p"] + "/" + a["data-q"];
    if (a["class"] == "convergent") key = "c:" + a["data-p"] + "/" + a["data-q"];
    s->groups.push_back(key);
  } else if (tag == "line" && !s->groups.empty()) {
    const std::string& key = s->groups.back();
    if (key.rfind("r:", 0) == 0) s->lines_per_rational[key.substr(2)]++;
    if (key.rfind("c:", 0) == 0) s->highlights[key.substr(2)].emplace_back(a["class"], a["stroke"]);
  }
}

void XMLCALL on_end(void* data, const XML_Char* name) {
  if (std::string(name) == "g") static_cast<SvgStats*>(data)->groups.pop_back();
}

Outcome butterfly() {
  long want_rows = 0, rationals = 0;
  for (long q = 1; q <= 30; ++q) {
    want_rows += q * totient(q);
    rationals += totient(q);
  }
  std::ostringstream csv, err;
  if (cli::run({"butterfly", "--qmax", "30", "--V", "2"}, csv, err) != 0) return fail("csv run: " + err.str());
  long rows = -1;  // header
  std::istringstream in(csv.str());
  for (std::string line; std::getline(in, line);) rows += !line.empty();
  if (rows != want_rows) return fail(std::to_string(rows) + " rows, want " + std::to_string(want_rows));

  std::ostringstream svg;
  if (cli::run({"butterfly", "--qmax", "30", "--V", "2", "--format", "svg", "--highlight-cf", "golden", "--depth", "5"},
               svg, err) != 0) {
    return fail("svg run: " + err.str());
  }
  SvgStats s;
  XML_Parser parser = XML_ParserCreate(nullptr);
  XML_SetUserData(parser, &s);
  XML_SetElementHandler(parser, on_start, on_end);
  const std::string text = svg.str();
  s.well_formed = XML_Parse(parser, text.data(), static_cast<int>(text.size()), 1) == XML_STATUS_OK;
  XML_ParserFree(parser);
  if (!s.well_formed) return fail("SVG not well-formed");
  if (static_cast<long>(s.lines_per_rational.size()) != rationals) return fail("rational group count");
  for (const auto& [pq, count] : s.lines_per_rational) {
    if (count != std::stoi(pq.substr(pq.find('/') + 1))) return fail("segments for " + pq);
  }
  // Highlight colours against the band types of the tree itself.
  const BandTree t = build_tree(ContinuedFraction::golden_mean(), 2.0, 5, PrecisionBudget{});
  for (int k = 0; k <= 5; ++k) {
    const SmallConvergent c = small_convergent(ContinuedFraction::golden_mean(), k);
    const std::string pq = std::to_string(c.p) + "/" + std::to_string(c.q);
    const auto it = s.highlights.find(pq);
    if (it == s.highlights.end()) return fail("no highlight for " + pq);
    const auto ids = t.level(k);
    if (it->second.size() != ids.size()) return fail("highlight size for " + pq);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const std::string type(to_string(t.node(ids[i]).type()));
      const auto& [cls, stroke] = it->second[i];
      if (cls != type || stroke != (type == "A" ? "blue" : "red")) return fail("colour of " + pq + " band " + std::to_string(i));
    }
  }
  return {true, std::to_string(rows) + " rows, SVG well-formed, chain 0/1..5/8 typed"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    double budget_s;
    std::function<Outcome()> body;
  };
  const std::vector<Criterion> criteria{
      {1, 1, exact_small_spectra},  {2, 60, floquet_and_nesting}, {3, 30, tree_reproduction},
      {4, 60, v_independence},      {5, 60, measure_decay},       {6, 60, ids_and_labels},
      {7, 60, series_consistency},  {8, 300, gap_certification},  {9, 60, antisymmetry},
      {10, 120, injectivity},       {11, 120, butterfly},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const double dt = seconds_since(t0);
    if (o.passed && dt > c.budget_s) o = fail(o.detail + "; over time budget " + fmt("%g", c.budget_s) + " s");
    failures += !o.passed;
    std::printf("criterion %d: %s %s (%.2f s)\n", c.id, o.passed ? "PASS" : "FAIL", o.detail.c_str(), dt);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
