#include "sturmian/bandtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "json.hpp"
#include "sturmian/error.hpp"
#include "sturmian/numfmt.hpp"

namespace sturmian {

namespace {

using nlohmann::ordered_json;

constexpr double kInf = std::numeric_limits<double>::infinity();

ordered_json band_json(const Band& b) {
  return {{"level", b.level}, {"index", b.index}, {"lower", format_real(b.lower)}, {"upper", format_real(b.upper)}};
}

std::string band_text(const Band& b) {
  std::ostringstream os;
  os << "level " << b.level << " band " << b.index << " [" << format_real(b.lower) << ", " << format_real(b.upper)
     << "]";
  return os.str();
}

// Index of the band of `outer` strictly containing `b` with margin > tol, or -1.
// Bands of one level have disjoint interiors, so only the last band starting
// at or before b.lower and its predecessor can qualify.
std::pair<int, double> find_container(const Band& b, const SpectrumApprox& outer, double tol) {
  const auto& bands = outer.bands;
  auto it = std::upper_bound(bands.begin(), bands.end(), b.lower,
                             [](double x, const Band& o) { return x < o.lower; });
  int best = -1;
  double best_margin = -kInf;
  for (int back = 1; back <= 2; ++back) {
    if (std::distance(bands.begin(), it) < back) break;
    const Band& o = *(it - back);
    const double m = b.containment_margin(o);
    if (m > best_margin) {
      best_margin = m;
      best = static_cast<int>(std::distance(bands.begin(), it - back));
    }
  }
  if (best_margin > tol) return {best, best_margin};
  return {-1, best_margin};
}

[[noreturn]] void fail(const std::string& what, ordered_json diagnostics) {
  diagnostics["error"] = what;
  throw TreeInvariantError(what, diagnostics.dump(2));
}

std::vector<std::string> structural_problems(const BandTree& tree) {
  std::vector<std::string> problems = check_child_counts(tree);
  const InterlacingReport inter = verify_interlacing(tree);
  problems.insert(problems.end(), inter.messages.begin(), inter.messages.end());
  return problems;
}

BandTree build_once(const ContinuedFraction& cf, double V, int depth, const PrecisionBudget& budget, long max_q) {
  std::vector<std::shared_ptr<const SpectrumApprox>> spectra;
  for (int k = 0; k <= depth; ++k) spectra.push_back(approximant_spectrum(cf, k, V, budget, max_q));

  std::vector<BandNode> nodes;
  std::vector<std::vector<int>> levels(static_cast<std::size_t>(depth + 1));
  BandNode root;
  root.id = 0;
  root.band = {-kInf, kInf, -1, 0, BandType::Root};
  root.margin = kInf;
  nodes.push_back(root);

  for (int k = 0; k <= depth; ++k) {
    const SpectrumApprox& here = *spectra[static_cast<std::size_t>(k)];
    Classification cls;
    if (k == 0) {
      cls.types.assign(here.bands.size(), BandType::A);
      cls.parent_index.assign(here.bands.size(), -1);
      cls.margins.assign(here.bands.size(), kInf);
    } else {
      const SpectrumApprox* k1 = spectra[static_cast<std::size_t>(k - 1)].get();
      const SpectrumApprox* k2 = k >= 2 ? spectra[static_cast<std::size_t>(k - 2)].get() : nullptr;
      cls = classify_level(here, k1, k2, budget.abs_tol);
    }
    for (std::size_t i = 0; i < here.bands.size(); ++i) {
      BandNode n;
      n.id = static_cast<int>(nodes.size());
      n.band = here.bands[i];
      n.band.level = k;
      n.band.index = static_cast<int>(i);
      n.band.type = cls.types[i];
      n.margin = cls.margins[i];
      const int pi = cls.parent_index[i];
      if (pi < 0) {
        n.parent = 0;
      } else {
        const int parent_level = cls.types[i] == BandType::A ? k - 1 : k - 2;
        n.parent = levels[static_cast<std::size_t>(parent_level)][static_cast<std::size_t>(pi)];
      }
      nodes[static_cast<std::size_t>(n.parent)].children.push_back(n.id);
      levels[static_cast<std::size_t>(k)].push_back(n.id);
      nodes.push_back(std::move(n));
    }
  }
  for (BandNode& n : nodes) {
    std::sort(n.children.begin(), n.children.end(), [&](int x, int y) {
      const Band& a = nodes[static_cast<std::size_t>(x)].band;
      const Band& b = nodes[static_cast<std::size_t>(y)].band;
      return a.lower < b.lower || (a.lower == b.lower && a.upper < b.upper);
    });
  }
  return BandTree(cf, V, depth, budget, std::move(nodes), std::move(levels));
}

}  // namespace

BandTree::BandTree(ContinuedFraction cf, double V, int depth, PrecisionBudget budget, std::vector<BandNode> nodes,
                   std::vector<std::vector<int>> levels)
    : cf_(std::move(cf)),
      V_(V),
      depth_(depth),
      budget_(budget),
      nodes_(std::move(nodes)),
      levels_(std::move(levels)) {}

std::span<const int> BandTree::level(int k) const {
  if (k < 0 || k > depth_) throw InvalidInput("level " + std::to_string(k) + " is not built");
  return levels_[static_cast<std::size_t>(k)];
}

Classification classify_level(const SpectrumApprox& level_k, const SpectrumApprox* level_k1,
                              const SpectrumApprox* level_k2, double tol) {
  if (level_k1 == nullptr) throw InvalidInput("classification needs the previous level");
  Classification out;
  const std::size_t n = level_k.bands.size();
  out.types.resize(n);
  out.parent_index.resize(n);
  out.margins.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Band& b = level_k.bands[i];
    const auto [a_parent, a_margin] = find_container(b, *level_k1, tol);
    if (a_parent >= 0) {
      out.types[i] = BandType::A;
      out.parent_index[i] = a_parent;
      out.margins[i] = a_margin;
      continue;
    }
    if (level_k2 == nullptr) {
      out.types[i] = BandType::B;
      out.parent_index[i] = -1;
      out.margins[i] = kInf;
      continue;
    }
    const auto [b_parent, b_margin] = find_container(b, *level_k2, tol);
    if (b_parent < 0) {
      ordered_json diag;
      diag["band"] = band_json(b);
      diag["best_margin_previous_level"] = a_margin;
      diag["best_margin_two_levels_up"] = b_margin;
      fail("orphan band: " + band_text(b) + " is strictly inside no band one or two levels up", diag);
    }
    out.types[i] = BandType::B;
    out.parent_index[i] = b_parent;
    out.margins[i] = b_margin;
  }
  return out;
}

BandTree build_tree(const ContinuedFraction& cf, double V, int depth, const PrecisionBudget& budget, long max_q,
                    int max_escalations) {
  budget.validate();
  if (depth < 2) throw InvalidInput("tree depth must be >= 2");
  if (!std::isfinite(V) || V == 0.0) throw InvalidInput("coupling must be finite and nonzero");
  if (cf.is_finite() && !cf.has_quotient(depth)) {
    throw InvalidInput("expansion " + cf.to_string() + " has no level " + std::to_string(depth));
  }
  if (const long q = small_convergent(cf, depth).q; q > max_q) {
    throw InvalidInput("level " + std::to_string(depth) + " has q = " + std::to_string(q) +
                       " beyond the configured maximum " + std::to_string(max_q));
  }
  PrecisionBudget current = budget;
  for (int attempt = 0;; ++attempt) {
    const bool last = attempt >= max_escalations;
    try {
      BandTree tree = build_once(cf, V, depth, current, max_q);
      const std::vector<std::string> problems = structural_problems(tree);
      if (problems.empty()) return tree;
      ordered_json diag;
      diag["cf"] = cf.to_string();
      diag["V"] = V;
      diag["bits"] = current.bits;
      diag["problems"] = problems;
      fail(problems.front(), diag);
    } catch (const TreeInvariantError&) {
      if (last) throw;
    }
    current.bits *= 2;
  }
}

InterlacingReport verify_interlacing(const BandTree& tree) {
  InterlacingReport report;
  const double tol = tree.budget().abs_tol;
  for (const BandNode& n : tree.nodes()) {
    if (n.children.empty()) continue;
    ++report.nodes_checked;
    auto violation = [&](const std::string& msg) {
      ++report.violations;
      report.all_hold = false;
      report.messages.push_back(msg);
    };
    // The pattern B, A, B, ..., A, B only makes sense once every child level
    // is built.
    const bool complete = n.level() + 2 <= tree.depth();
    for (std::size_t i = 0; i < n.children.size(); ++i) {
      const BandNode& c = tree.node(n.children[i]);
      if (n.type() != BandType::Root && !c.band.strictly_inside(n.band, tol)) {
        violation(band_text(c.band) + " is not strictly inside its parent " + band_text(n.band));
      }
      if (complete && n.type() != BandType::Root) {
        const BandType want = i % 2 == 0 ? BandType::B : BandType::A;
        if (c.type() != want) {
          violation("child " + std::to_string(i) + " of " + band_text(n.band) + " has type " +
                    std::string(to_string(c.type())) + ", expected " + std::string(to_string(want)));
        }
      }
      if (i == 0) continue;
      const BandNode& prev = tree.node(n.children[i - 1]);
      if (!precedes(prev.band, c.band, tol)) {
        violation("siblings out of order: " + band_text(prev.band) + " vs " + band_text(c.band));
      } else if (prev.band.upper >= c.band.lower) {
        ++report.overlapping_siblings;
      }
    }
    for (std::size_t i = 0; i < n.children.size(); ++i) {
      for (std::size_t j = i + 1; j < n.children.size(); ++j) {
        const Band& x = tree.node(n.children[i]).band;
        const Band& y = tree.node(n.children[j]).band;
        if (x.upper >= y.lower && y.upper >= x.lower) report.siblings_disjoint = false;
      }
    }
  }
  return report;
}

std::vector<std::string> check_child_counts(const BandTree& tree) {
  std::vector<std::string> problems;
  const BandNode& root = tree.root();
  long root_a = 0, root_b = 0;
  for (int c : root.children) (tree.node(c).type() == BandType::A ? root_a : root_b)++;
  if (root_a != 1 || root_b != 1) {
    problems.push_back("root has " + std::to_string(root_a) + " A-children and " + std::to_string(root_b) +
                       " B-children, expected 1 and 1");
  }
  for (const BandNode& n : tree.nodes()) {
    if (n.type() == BandType::Root) continue;
    const int k = n.level();
    if (k + 1 > tree.depth()) continue;
    const long a = tree.cf().quotient(k + 1);
    long got_a = 0, got_b = 0;
    for (int c : n.children) (tree.node(c).type() == BandType::A ? got_a : got_b)++;
    const long want_a = n.type() == BandType::A ? a - 1 : a;
    const long want_b = want_a + 1;
    if (got_a != want_a) {
      problems.push_back(band_text(n.band) + " (" + std::string(to_string(n.type())) + ") has " +
                         std::to_string(got_a) + " A-children, expected " + std::to_string(want_a));
    }
    if (k + 2 <= tree.depth() && got_b != want_b) {
      problems.push_back(band_text(n.band) + " (" + std::string(to_string(n.type())) + ") has " +
                         std::to_string(got_b) + " B-children, expected " + std::to_string(want_b));
    }
  }
  return problems;
}

Interval path_enclosure(const BandTree& tree, const TreePath& path) {
  if (path.nodes.empty() || path.nodes.front() != 0) throw InvalidInput("a path must start at the root");
  for (std::size_t i = 1; i < path.nodes.size(); ++i) {
    const int id = path.nodes[i];
    if (id <= 0 || static_cast<std::size_t>(id) >= tree.nodes().size() || tree.node(id).parent != path.nodes[i - 1]) {
      throw InvalidInput("path step " + std::to_string(i) + " is not a tree edge");
    }
  }
  const Band& b = tree.node(path.nodes.back()).band;
  return {b.lower, b.upper};
}

TreePath rightmost_path(const BandTree& tree, int max_level) {
  TreePath path{{0}};
  while (true) {
    const BandNode& n = tree.node(path.nodes.back());
    int next = -1;
    for (int c : n.children) {
      const BandNode& child = tree.node(c);
      if (child.level() > max_level) continue;
      if (next < 0 || child.band.upper > tree.node(next).band.upper) next = c;
    }
    if (next < 0) break;
    path.nodes.push_back(next);
  }
  return path;
}

TreePath path_to(const BandTree& tree, int node_id) {
  TreePath path;
  for (int id = node_id; id >= 0; id = tree.node(id).parent) {
    path.nodes.push_back(id);
    if (id == 0) break;
  }
  std::reverse(path.nodes.begin(), path.nodes.end());
  return path;
}

std::vector<int> frontier(const BandTree& tree, int depth) {
  if (depth < 0 || depth + 1 > tree.depth()) {
    throw InvalidInput("frontier at depth " + std::to_string(depth) + " needs the tree built to depth " +
                       std::to_string(depth + 1));
  }
  std::vector<int> out(tree.level(depth).begin(), tree.level(depth).end());
  for (int id : tree.level(depth + 1)) {
    if (tree.node(id).type() == BandType::B) out.push_back(id);
  }
  return out;
}

InjectivityReport injectivity_probe(const BandTree& tree, int depth, long samples, std::uint64_t seed) {
  const std::vector<int> ends = frontier(tree, depth);
  const double tol = tree.budget().abs_tol;
  InjectivityReport report;
  report.depth = depth;
  report.frontier_size = static_cast<long>(ends.size());
  auto judge = [&](int x, int y) {
    const Band& a = tree.node(x).band;
    const Band& b = tree.node(y).band;
    ++report.pairs;
    if (a.upper < b.lower - tol || b.upper < a.lower - tol) {
      ++report.separated;
    } else {
      ++report.undecided;
    }
  };
  const long n = report.frontier_size;
  const long total = n * (n - 1) / 2;
  if (total <= samples) {
    report.exhaustive = true;
    for (long i = 0; i < n; ++i) {
      for (long j = i + 1; j < n; ++j) judge(ends[static_cast<std::size_t>(i)], ends[static_cast<std::size_t>(j)]);
    }
    return report;
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<long> pick(0, n - 1);
  for (long s = 0; s < samples; ++s) {
    const long i = pick(rng);
    long j = pick(rng);
    while (j == i) j = pick(rng);
    judge(ends[static_cast<std::size_t>(i)], ends[static_cast<std::size_t>(j)]);
  }
  return report;
}

bool isomorphic(const BandTree& a, const BandTree& b, std::string* why) {
  auto mismatch = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (a.depth() != b.depth()) return mismatch("depths differ");
  for (int k = 0; k <= a.depth(); ++k) {
    if (a.level_size(k) != b.level_size(k)) return mismatch("level " + std::to_string(k) + " sizes differ");
  }
  // Ids are assigned level by level in band order, so equal level sizes make
  // ids comparable directly.
  for (std::size_t id = 1; id < a.nodes().size(); ++id) {
    const BandNode& x = a.nodes()[id];
    const BandNode& y = b.nodes()[id];
    if (x.type() != y.type()) return mismatch("type differs at " + band_text(x.band));
    if (x.parent != y.parent) return mismatch("parent differs at " + band_text(x.band));
    if (x.children != y.children) return mismatch("children differ at " + band_text(x.band));
  }
  return true;
}

std::string tree_to_json(const BandTree& tree) {
  ordered_json doc;
  doc["cf"] = tree.cf().to_string();
  doc["V"] = format_real(tree.V());
  doc["depth"] = tree.depth();
  doc["bits"] = tree.budget().bits;
  ordered_json nodes = ordered_json::array();
  for (const BandNode& n : tree.nodes()) {
    ordered_json j;
    j["id"] = n.id;
    j["level"] = n.level();
    j["index"] = n.band.index;
    j["type"] = std::string(to_string(n.type()));
    if (n.type() == BandType::Root) {
      j["lower"] = nullptr;
      j["upper"] = nullptr;
      j["parent"] = nullptr;
    } else {
      j["lower"] = format_real(n.band.lower);
      j["upper"] = format_real(n.band.upper);
      j["parent"] = n.parent;
    }
    j["children"] = n.children;
    nodes.push_back(std::move(j));
  }
  doc["nodes"] = std::move(nodes);
  return doc.dump(2) + "\n";
}

std::string tree_to_dot(const BandTree& tree) {
  std::ostringstream os;
  os << "digraph band_tree {\n  rankdir=TB;\n  node [shape=box, fontname=\"monospace\"];\n";
  for (const BandNode& n : tree.nodes()) {
    os << "  n" << n.id << " [label=\"";
    if (n.type() == BandType::Root) {
      os << "root\", shape=ellipse];\n";
      continue;
    }
    os << to_string(n.type()) << " k=" << n.level() << " #" << n.band.index << "\\n[" << format_real(n.band.lower)
       << ", " << format_real(n.band.upper) << "]\", color=" << (n.type() == BandType::A ? "blue" : "red")
       << "];\n";
  }
  for (const BandNode& n : tree.nodes()) {
    for (int c : n.children) os << "  n" << n.id << " -> n" << c << ";\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace sturmian
