#pragma once

// Layered tree topologies for the hierarchical wavefunction.
//
// Nodes are stored flat and indexed by id (pre-order). Leaves carry one site
// and the two-dimensional primitive spin basis; internal nodes carry `dim`
// single-particle functions over the product of their children's bases. The
// root always carries exactly one function: the wavefunction itself.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "spinml/types.hpp"

namespace spinml {

struct TreeNode {
  int id = -1;
  int parent = -1;
  std::vector<int> children;
  int site = -1;  // >= 0 only for leaves
  int dim = 0;

  bool is_leaf() const { return site >= 0; }
};

/// Nested description used while building or parsing a tree.
struct NodeDraft {
  int dim = 0;
  int site = -1;
  std::vector<NodeDraft> children;

  static NodeDraft leaf(int site) { return {2, site, {}}; }
  static NodeDraft internal(int dim, std::vector<NodeDraft> children) { return {dim, -1, std::move(children)}; }
};

class TreeSpec {
 public:
  TreeSpec() = default;
  /// Flattens a draft. Does not validate; call validate() for diagnostics.
  explicit TreeSpec(const NodeDraft& root);

  int root() const { return 0; }
  int num_sites() const { return num_sites_; }
  int size() const { return static_cast<int>(nodes_.size()); }
  const TreeNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  const std::vector<TreeNode>& nodes() const { return nodes_; }

  /// Leaf node id for a site; -1 when absent.
  int leaf_of_site(int site) const;
  /// Sites in the subtree of `id`, in leaf order.
  const std::vector<int>& sites_under(int id) const { return sites_under_.at(static_cast<std::size_t>(id)); }
  /// Position of `child` in its parent's child list.
  int slot_in_parent(int child) const;
  /// Layers counting the root layer and the leaf layer.
  int layer_count() const;
  /// Node ids, children before parents.
  std::vector<int> post_order() const;
  /// Product of the children's dims.
  std::int64_t child_configurations(int id) const;

  NodeDraft to_draft() const;
  bool operator==(const TreeSpec& other) const;

 private:
  int flatten(const NodeDraft& d, int parent);

  std::vector<TreeNode> nodes_;
  std::vector<std::vector<int>> sites_under_;
  int num_sites_ = 0;
};

/// Balanced binary tree over L = 2^k sites. `spf_per_layer` is ordered from
/// the root's children downwards; layers without an entry are uncompressed
/// (dim = product of children's dims).
TreeSpec binary_tree(int L, const std::vector<int>& spf_per_layer);

/// Triplet grouping on an nx-by-ny lattice (row-major sites), alternating x
/// and y combinations up to the root. nx and ny must be powers of three.
TreeSpec grid_tree_2d(int nx, int ny, const std::vector<int>& spf_per_layer);

/// Depth-2 tree: root over one node per contiguous group. A single group, or
/// a singleton group with m = 2, collapses onto its leaves.
TreeSpec mode_combination_tree(int L, const std::vector<std::vector<int>>& groups, const std::vector<int>& m);

/// Human-readable invariant violations; empty when the tree is valid.
std::vector<std::string> validate(const TreeSpec& spec);

/// Throws TopologyError carrying all diagnostics when the tree is invalid.
void require_valid(const TreeSpec& spec);

// .tree.json documents: node = {"m": int, "children": [...]} or {"site": int} (1-based)
nlohmann::json serialize_tree(const TreeSpec& spec);
TreeSpec parse_tree(const nlohmann::json& doc);

/// FNV-1a hash of the canonical serialization; used to tag checkpoints.
std::uint64_t tree_hash(const TreeSpec& spec);

}  // namespace spinml
