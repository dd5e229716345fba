#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sturmian/contfrac.hpp"
#include "sturmian/spectrum.hpp"

namespace sturmian {

/// A vertex of the band tree. The root (id 0, level -1) stands for the real
/// line and carries an infinite band.
struct BandNode {
  int id = 0;
  Band band;
  int parent = -1;
  std::vector<int> children;  // ascending by lower edge
  /// Two-sided containment margin inside the parent band (infinite under the
  /// root).
  double margin = 0.0;

  int level() const { return band.level; }
  BandType type() const { return band.type; }
};

class BandTree {
 public:
  BandTree(ContinuedFraction cf, double V, int depth, PrecisionBudget budget, std::vector<BandNode> nodes,
           std::vector<std::vector<int>> levels);

  const ContinuedFraction& cf() const { return cf_; }
  double V() const { return V_; }
  int depth() const { return depth_; }
  /// Budget the tree was finally built with (after any precision escalation).
  const PrecisionBudget& budget() const { return budget_; }

  const std::vector<BandNode>& nodes() const { return nodes_; }
  const BandNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  const BandNode& root() const { return nodes_.front(); }
  /// Node ids of level k in band order.
  std::span<const int> level(int k) const;
  std::size_t level_size(int k) const { return level(k).size(); }

 private:
  ContinuedFraction cf_;
  double V_;
  int depth_;
  PrecisionBudget budget_;
  std::vector<BandNode> nodes_;
  std::vector<std::vector<int>> levels_;
};

/// Per band of one level: type, index of the parent band within its own level
/// (-1 for the root) and the containment margin.
struct Classification {
  std::vector<BandType> types;
  std::vector<int> parent_index;
  std::vector<double> margins;
};

/// Types the bands of level k >= 1 from the spectra of levels k-1 and k-2
/// (null for k = 1, where level k-2 is the real line). A band strictly inside
/// a level-(k-1) band is A; otherwise it is B if strictly inside a
/// level-(k-2) band.
///
/// Throws TreeInvariantError when a band fits neither case.
Classification classify_level(const SpectrumApprox& level_k, const SpectrumApprox* level_k1,
                              const SpectrumApprox* level_k2, double tol);

/// Builds levels 0..depth (depth >= 2). On a structural failure the build is
/// retried at doubled precision up to `max_escalations` times before the
/// TreeInvariantError is propagated.
BandTree build_tree(const ContinuedFraction& cf, double V, int depth, const PrecisionBudget& budget,
                    long max_q = kDefaultMaxQ, int max_escalations = 2);

struct InterlacingReport {
  bool all_hold = true;
  long nodes_checked = 0;
  long violations = 0;
  /// Sibling pairs that intersect while still ordered by the strict order.
  long overlapping_siblings = 0;
  bool siblings_disjoint = true;
  std::vector<std::string> messages;
};

/// Checks that the children of each node alternate B, A, B, ..., A, B and
/// that neighbours satisfy the strict order with margin abs_tol, and that
/// every child lies strictly inside its parent.
InterlacingReport verify_interlacing(const BandTree& tree);

/// Child counts per node: A-children a_{k+1} - 1 (A node) or a_{k+1}
/// (B node), B-children one more. Levels beyond the built depth are skipped.
/// Returns human-readable violations (empty when all counts hold).
std::vector<std::string> check_child_counts(const BandTree& tree);

/// Node ids from the root along tree edges.
struct TreePath {
  std::vector<int> nodes;
};

/// Band of the last node of `path`. Throws InvalidInput for paths that do
/// not start at the root or contain a non-edge.
Interval path_enclosure(const BandTree& tree, const TreePath& path);

/// Path from the root that always follows the child with the largest upper
/// edge, stopping at the deepest node of level <= max_level.
TreePath rightmost_path(const BandTree& tree, int max_level);

/// Path from the root to `node_id`.
TreePath path_to(const BandTree& tree, int node_id);

/// Nodes terminating the depth-d truncations of infinite paths: every node of
/// level d and every type-B node of level d + 1.
std::vector<int> frontier(const BandTree& tree, int depth);

struct InjectivityReport {
  int depth = 0;
  long frontier_size = 0;
  long pairs = 0;
  long separated = 0;
  long undecided = 0;
  bool exhaustive = false;
  double undecided_fraction() const { return pairs ? static_cast<double>(undecided) / pairs : 0.0; }
};

/// Compares pairs of distinct depth-`depth` path enclosures: separated when
/// the bands are disjoint by more than abs_tol, undecided otherwise. All
/// pairs are tested when there are at most `samples`; otherwise `samples`
/// pairs are drawn with the given seed. Needs the tree built to depth + 1.
InjectivityReport injectivity_probe(const BandTree& tree, int depth, long samples = 200000,
                                    std::uint64_t seed = 0x5eed);

/// True when both trees have the same level sizes, types and parent
/// structure. On mismatch `why` receives the first difference.
bool isomorphic(const BandTree& a, const BandTree& b, std::string* why = nullptr);

/// JSON export: {cf, V, depth, bits, nodes: [{id, level, index, type, lower,
/// upper, parent, children}]}, endpoints as 17-digit strings.
std::string tree_to_json(const BandTree& tree);
std::string tree_to_dot(const BandTree& tree);

}  // namespace sturmian
