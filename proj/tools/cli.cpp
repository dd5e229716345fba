#include "cli.hpp"

#include <unistd.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <regex>
#include <sstream>

#include "sturmian/bandtree.hpp"
#include "sturmian/contfrac.hpp"
#include "sturmian/error.hpp"
#include "sturmian/gaplabels.hpp"
#include "sturmian/numfmt.hpp"
#include "sturmian/parallel.hpp"
#include "sturmian/spectrum.hpp"
#include "verify.hpp"

namespace sturmian::cli {

namespace {

using nlohmann::ordered_json;

struct RunConfig {
  std::string command;
  std::string cf;
  std::string pq;
  std::optional<int> level;
  double V = 2.0;
  int depth = 10;
  long q_max = 50;
  std::string n_range;
  int bits = 53;
  double abs_tol = 1e-10;
  std::string out;
  std::string format;
  std::string highlight_cf;
  std::string suite = "all";

  PrecisionBudget budget() const {
    PrecisionBudget b{bits, abs_tol};
    b.validate();
    return b;
  }
};

void write_atomically(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    f << content;
    f.flush();
    if (!f) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw InvalidInput("cannot write " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw InvalidInput("cannot move output into place at " + path.string());
  }
}

void emit(const RunConfig& cfg, const std::string& content, std::ostream& out) {
  if (cfg.out.empty() || cfg.out == "-") {
    out << content;
  } else {
    write_atomically(cfg.out, content);
  }
}

std::pair<long, long> parse_range(const std::string& text) {
  static const std::regex re(R"(^\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, re)) throw InvalidInput("--n-range must look like A..B, got '" + text + "'");
  const long a = std::stol(m[1]);
  const long b = std::stol(m[2]);
  if (a > b) throw InvalidInput("--n-range is empty");
  return {a, b};
}

void require_format(const RunConfig& cfg, std::initializer_list<std::string_view> allowed) {
  if (std::find(allowed.begin(), allowed.end(), cfg.format) == allowed.end()) {
    throw InvalidInput("unsupported --format '" + cfg.format + "' for " + cfg.command);
  }
}

std::string bands_csv_header() { return "p,q,V,index,lower,upper\n"; }

void append_bands_csv(std::ostringstream& os, const SpectrumApprox& s) {
  for (const Band& b : s.bands) {
    os << s.p << ',' << s.q << ',' << format_real(s.V) << ',' << b.index << ',' << format_real(b.lower) << ','
       << format_real(b.upper) << '\n';
  }
}

int cmd_bands(const RunConfig& cfg, std::ostream& out) {
  if (!cfg.format.empty()) require_format(cfg, {"csv"});
  const PrecisionBudget budget = cfg.budget();
  long p = 0, q = 1;
  if (!cfg.pq.empty() == !cfg.cf.empty()) throw InvalidInput("bands needs exactly one of --pq or --cf");
  if (!cfg.pq.empty()) {
    const Fraction f = parse_fraction(cfg.pq);
    p = f.p;
    q = f.q;
  } else {
    if (!cfg.level) throw InvalidInput("bands --cf needs --level");
    const SmallConvergent c = small_convergent(ContinuedFraction::parse(cfg.cf), *cfg.level);
    p = c.p;
    q = c.q;
  }
  const SpectrumApprox s = compute_bands(p, q, cfg.V, budget);
  std::ostringstream os;
  os << bands_csv_header();
  append_bands_csv(os, s);
  emit(cfg, os.str(), out);
  return kOk;
}

struct ButterflyData {
  std::vector<Fraction> grid;
  std::vector<SpectrumApprox> spectra;
};

ButterflyData butterfly_data(const RunConfig& cfg) {
  if (cfg.q_max < 1) throw InvalidInput("--qmax must be >= 1");
  if (cfg.q_max > kDefaultMaxQ) throw InvalidInput("--qmax exceeds the maximum period " + std::to_string(kDefaultMaxQ));
  const PrecisionBudget budget = cfg.budget();
  ButterflyData d;
  d.grid = rational_grid(cfg.q_max);
  d.spectra.resize(d.grid.size());
  parallel_for(d.grid.size(), [&](std::size_t i) {
    d.spectra[i] = compute_bands(d.grid[i].p, d.grid[i].q, cfg.V, budget);
  });
  return d;
}

std::string butterfly_csv(const ButterflyData& d) {
  std::ostringstream os;
  os << "p,q,band_index,lower,upper\n";
  for (const SpectrumApprox& s : d.spectra) {
    for (const Band& b : s.bands) {
      os << s.p << ',' << s.q << ',' << b.index << ',' << format_real(b.lower) << ',' << format_real(b.upper) << '\n';
    }
  }
  return os.str();
}

std::string svg_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", x);
  return buf;
}

std::string butterfly_svg(const RunConfig& cfg, const ButterflyData& d) {
  constexpr double kWidth = 900, kHeight = 900, kMargin = 40;
  const double e_lo = std::min(0.0, cfg.V) - 2.2;
  const double e_hi = std::max(0.0, cfg.V) + 2.2;
  auto x_of = [&](double e) { return kMargin + (e - e_lo) / (e_hi - e_lo) * (kWidth - 2 * kMargin); };
  auto y_of = [&](double alpha) { return kHeight - kMargin - alpha * (kHeight - 2 * kMargin); };

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
     << "  <title>Approximant spectra, V = " << format_real(cfg.V) << ", q &lt;= " << cfg.q_max << "</title>\n"
     << "  <rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n"
     << "  <g id=\"bands\" stroke=\"black\" stroke-width=\"1\">\n";
  for (const SpectrumApprox& s : d.spectra) {
    const double y = y_of(static_cast<double>(s.p) / static_cast<double>(s.q));
    os << "    <g class=\"rational\" data-p=\"" << s.p << "\" data-q=\"" << s.q << "\">\n";
    for (const Band& b : s.bands) {
      os << "      <line x1=\"" << svg_number(x_of(b.lower)) << "\" y1=\"" << svg_number(y) << "\" x2=\""
         << svg_number(std::max(x_of(b.upper), x_of(b.lower) + 0.5)) << "\" y2=\"" << svg_number(y) << "\"/>\n";
    }
    os << "    </g>\n";
  }
  os << "  </g>\n";

  if (!cfg.highlight_cf.empty()) {
    const ContinuedFraction cf = ContinuedFraction::parse(cfg.highlight_cf);
    int depth = 0;
    while (depth < cfg.depth && cf.has_quotient(depth + 1) && small_convergent(cf, depth + 1).q <= cfg.q_max) ++depth;
    if (depth < 2) throw InvalidInput("--highlight-cf needs at least levels 0..2 within --qmax and --depth");
    const BandTree tree = build_tree(cf, cfg.V, depth, cfg.budget());
    os << "  <g id=\"highlight\" stroke-width=\"4\" stroke-linecap=\"butt\">\n";
    for (int k = 0; k <= depth; ++k) {
      const SmallConvergent c = small_convergent(cf, k);
      const double y = y_of(static_cast<double>(c.p) / static_cast<double>(c.q));
      os << "    <g class=\"convergent\" data-level=\"" << k << "\" data-p=\"" << c.p << "\" data-q=\"" << c.q
         << "\">\n";
      for (int id : tree.level(k)) {
        const Band& b = tree.node(id).band;
        const bool a = b.type == BandType::A;
        os << "      <line class=\"" << (a ? "A" : "B") << "\" stroke=\"" << (a ? "blue" : "red") << "\" x1=\""
           << svg_number(x_of(b.lower)) << "\" y1=\"" << svg_number(y) << "\" x2=\""
           << svg_number(std::max(x_of(b.upper), x_of(b.lower) + 0.5)) << "\" y2=\"" << svg_number(y) << "\"/>\n";
      }
      os << "      <text x=\"4\" y=\"" << svg_number(y + 4) << "\" font-size=\"11\">" << c.p << '/' << c.q
         << "</text>\n    </g>\n";
    }
    os << "  </g>\n";
  }
  os << "  <line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\"" << kWidth - kMargin << "\" y2=\""
     << kHeight - kMargin << "\" stroke=\"gray\"/>\n"
     << "  <text x=\"" << kMargin << "\" y=\"" << kHeight - 12 << "\" font-size=\"12\">E = " << svg_number(e_lo)
     << "</text>\n"
     << "  <text x=\"" << kWidth - kMargin - 80 << "\" y=\"" << kHeight - 12 << "\" font-size=\"12\">E = "
     << svg_number(e_hi) << "</text>\n"
     << "</svg>\n";
  return os.str();
}

int cmd_butterfly(const RunConfig& cfg, std::ostream& out) {
  const std::string format = cfg.format.empty() ? "csv" : cfg.format;
  if (format != "csv" && format != "svg") throw InvalidInput("unsupported --format '" + format + "' for butterfly");
  if (!cfg.highlight_cf.empty() && format != "svg") throw InvalidInput("--highlight-cf applies to --format svg");
  const ButterflyData d = butterfly_data(cfg);
  emit(cfg, format == "csv" ? butterfly_csv(d) : butterfly_svg(cfg, d), out);
  return kOk;
}

int cmd_tree(const RunConfig& cfg, std::ostream& out) {
  const std::string format = cfg.format.empty() ? "json" : cfg.format;
  if (format != "json" && format != "dot") throw InvalidInput("unsupported --format '" + format + "' for tree");
  if (cfg.cf.empty()) throw InvalidInput("tree needs --cf");
  const BandTree tree = build_tree(ContinuedFraction::parse(cfg.cf), cfg.V, cfg.depth, cfg.budget());
  emit(cfg, format == "json" ? tree_to_json(tree) : tree_to_dot(tree), out);
  return kOk;
}

int cmd_gaps(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (!cfg.format.empty() && cfg.format != "json") throw InvalidInput("unsupported --format '" + cfg.format + "' for gaps");
  if (cfg.cf.empty()) throw InvalidInput("gaps needs --cf");
  if (cfg.n_range.empty()) throw InvalidInput("gaps needs --n-range");
  if (cfg.V == 0.0) throw InvalidInput("gaps needs V != 0");
  const auto [lo, hi] = parse_range(cfg.n_range);
  const ContinuedFraction cf = ContinuedFraction::parse(cfg.cf);
  const PrecisionBudget budget = cfg.budget();
  const std::vector<GapCertificate> certs = certify_gaps(cf, cfg.V, lo, hi, cfg.depth, budget);

  long certified = 0, closed = 0, undecided = 0;
  ordered_json doc;
  doc["cf"] = cf.to_string();
  doc["V"] = format_real(cfg.V);
  doc["depth"] = cfg.depth;
  doc["bits"] = budget.bits;
  doc["abs_tol"] = format_real(budget.abs_tol);
  ordered_json list = ordered_json::array();
  for (const GapCertificate& c : certs) {
    switch (c.status) {
      case CertificateStatus::Certified:
        ++certified;
        break;
      case CertificateStatus::ClosedAtDepth:
        ++closed;
        break;
      case CertificateStatus::Undecided:
        ++undecided;
        break;
    }
    list.push_back(ordered_json::parse(certificate_to_json(c)));
  }
  doc["certificates"] = std::move(list);
  doc["summary"] = {{"total", certs.size()},
                    {"certified", certified},
                    {"closed_at_depth", closed},
                    {"undecided", undecided}};
  emit(cfg, doc.dump(2) + "\n", out);
  err << "certified " << certified << '/' << certs.size() << ", closed-at-depth " << closed << ", undecided "
      << undecided << '\n';
  return certified == static_cast<long>(certs.size()) ? kOk : kFailed;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const std::vector<CheckResult> results = run_verify_suite(cfg.suite, cfg.budget());
  ordered_json doc;
  doc["suite"] = cfg.suite;
  doc["bits"] = cfg.bits;
  ordered_json checks = ordered_json::array();
  const CheckResult* first_failure = nullptr;
  for (const CheckResult& r : results) {
    checks.push_back({{"suite", r.suite}, {"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
    if (!r.passed && !first_failure) first_failure = &r;
  }
  doc["checks"] = std::move(checks);
  doc["passed"] = first_failure == nullptr;
  emit(cfg, doc.dump(2) + "\n", out);
  if (first_failure) {
    err << "verify failed: " << first_failure->suite << '/' << first_failure->name << ": " << first_failure->detail
        << '\n';
    return kFailed;
  }
  return kOk;
}

void add_precision(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--prec", cfg.bits, "Mantissa bits (>= 53)");
  sub->add_option("--tol", cfg.abs_tol, "Absolute tolerance for endpoint comparisons");
}

void add_output(CLI::App* sub, RunConfig& cfg, const std::string& formats) {
  sub->add_option("--out", cfg.out, "Output file (default: standard output)");
  sub->add_option("--format", cfg.format, "Output format: " + formats);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Spectra, band trees and gap certificates of Sturmian Hamiltonians", "sturmian"};
  app.require_subcommand(1);

  CLI::App* bands = app.add_subcommand("bands", "Band edges of one periodic approximant (CSV)");
  bands->add_option("--pq", cfg.pq, "Rational frequency p/q");
  bands->add_option("--cf", cfg.cf, "Continued fraction, e.g. 0,1,2,(4)");
  bands->add_option("--level", cfg.level, "Convergent level when --cf is given");
  bands->add_option("--V", cfg.V, "Coupling constant")->required();
  add_precision(bands, cfg);
  add_output(bands, cfg, "csv");

  CLI::App* butterfly = app.add_subcommand("butterfly", "Spectra for every p/q with q <= qmax (CSV or SVG)");
  butterfly->add_option("--qmax", cfg.q_max, "Largest denominator")->required();
  butterfly->add_option("--V", cfg.V, "Coupling constant")->required();
  butterfly->add_option("--highlight-cf", cfg.highlight_cf, "Colour the convergent chain of this expansion by type");
  butterfly->add_option("--depth", cfg.depth, "Deepest highlighted level");
  add_precision(butterfly, cfg);
  add_output(butterfly, cfg, "csv, svg");

  CLI::App* tree = app.add_subcommand("tree", "Typed band tree (JSON or DOT)");
  tree->add_option("--cf", cfg.cf, "Continued fraction")->required();
  tree->add_option("--V", cfg.V, "Coupling constant")->required();
  tree->add_option("--depth", cfg.depth, "Deepest level (>= 2)")->required();
  add_precision(tree, cfg);
  add_output(tree, cfg, "json, dot");

  CLI::App* gaps = app.add_subcommand("gaps", "Gap-openness certificates for labels {n alpha} (JSON)");
  gaps->add_option("--cf", cfg.cf, "Continued fraction")->required();
  gaps->add_option("--V", cfg.V, "Coupling constant (nonzero)")->required();
  gaps->add_option("--n-range", cfg.n_range, "Inclusive range A..B of n (0 is skipped)")->required();
  gaps->add_option("--depth", cfg.depth, "Deepest inspected level (>= 3)")->required();
  add_precision(gaps, cfg);
  add_output(gaps, cfg, "json");

  CLI::App* verify = app.add_subcommand("verify", "Invariant suites (JSON summary)");
  verify->add_option("--suite", cfg.suite, "contfrac, spectrum, tree, labels or all");
  add_precision(verify, cfg);
  verify->add_option("--out", cfg.out, "Output file (default: standard output)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  }

  try {
    if (bands->parsed()) {
      cfg.command = "bands";
      return cmd_bands(cfg, out);
    }
    if (butterfly->parsed()) {
      cfg.command = "butterfly";
      return cmd_butterfly(cfg, out);
    }
    if (tree->parsed()) {
      cfg.command = "tree";
      return cmd_tree(cfg, out);
    }
    if (gaps->parsed()) {
      cfg.command = "gaps";
      return cmd_gaps(cfg, out, err);
    }
    cfg.command = "verify";
    return cmd_verify(cfg, out, err);
  } catch (const TreeInvariantError& e) {
    err << e.diagnostics() << '\n';
    return kTreeInvariant;
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumericFailure;
  } catch (const std::exception& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumericFailure;
  }
}

}  // namespace sturmian::cli
