#pragma once

// Hamiltonian terms restricted to subtrees (upward) and to their complements
// (downward), and the local operators built from them.
//
// A term restricted to the subtree of node n is identified by its "up"
// signature: the tuple of restrictions on n's children. Terms sharing a
// signature share one dim x dim matrix. Likewise the restriction of a term to
// everything outside n is a "down" signature, built from the parent's down
// signature and the siblings' up signatures. Terms that do not touch n at all
// are summed into a single environment Hamiltonian per node.

#include <cstdint>
#include <optional>
#include <vector>

#include "spinml/model.hpp"
#include "spinml/state.hpp"

namespace spinml {

/// Operator ids used in local terms: mode 0 holds kEnvHamiltonian or a down
/// index, child modes hold an up index or kIdentity.
inline constexpr int kIdentity = -1;
inline constexpr int kEnvHamiltonian = -2;

struct LocalTerm {
  double coefficient = 0.0;
  std::vector<int> ops;  // one id per mode
};

/// Terms grouped by the ids of every mode except `mode`; the group's matrices
/// on `mode` are summed before application.
struct LocalGrouping {
  struct Group {
    std::vector<int> key;                          // ids per mode; key[mode] unused
    std::vector<std::pair<double, int>> members;  // (coefficient, id on `mode`)
  };
  int mode = 0;
  std::vector<Group> groups;
};

class OperatorLayout {
 public:
  OperatorLayout(const TreeSpec& spec, const SumOfProducts& H);

  const TreeSpec& spec() const { return spec_; }
  std::size_t num_terms() const { return coefficients_.size(); }
  double coefficient(std::size_t term) const { return coefficients_[term]; }
  double constant() const { return constant_; }

  /// Up index of a term at a node; kIdentity when the term has no factor below.
  int up_index(int node, std::size_t term) const { return up_index_[idx(node)][term]; }
  /// Down index of a term at a node it touches (0 = identity environment).
  int down_index(int node, std::size_t term) const { return down_index_[idx(node)][term]; }
  std::size_t up_count(int node) const { return up_count_[idx(node)]; }
  std::size_t down_count(int node) const { return down_sigs_[idx(node)].size(); }

  const std::vector<Matrix2>& leaf_ops(int leaf) const { return leaf_ops_[idx(leaf)]; }
  const std::vector<std::vector<int>>& up_signatures(int node) const { return up_sigs_[idx(node)]; }
  /// [parent down index, up index per parent slot (own slot = kIdentity)]
  const std::vector<std::vector<int>>& down_signatures(int node) const { return down_sigs_[idx(node)]; }

  const std::vector<LocalTerm>& local_terms(int node) const { return local_terms_[idx(node)]; }
  /// filter_slot < 0: all local terms; otherwise only terms acting as identity on that child slot.
  const LocalGrouping& grouping(int node, int filter_slot = -1) const {
    return groupings_[idx(node)][static_cast<std::size_t>(filter_slot + 1)];
  }

 private:
  static std::size_t idx(int node) { return static_cast<std::size_t>(node); }

  TreeSpec spec_;
  std::vector<double> coefficients_;
  double constant_ = 0.0;
  std::vector<std::vector<Matrix2>> leaf_ops_;
  std::vector<std::vector<std::vector<int>>> up_sigs_;
  std::vector<std::size_t> up_count_;
  std::vector<std::vector<int>> up_index_;
  std::vector<std::vector<std::vector<int>>> down_sigs_;
  std::vector<std::vector<int>> down_index_;
  std::vector<std::vector<LocalTerm>> local_terms_;
  std::vector<std::vector<LocalGrouping>> groupings_;
};

/// Per-node operator matrices for one state.
struct NodeOperatorCache {
  std::vector<std::vector<Matrix>> up;    // [node][up index]
  std::vector<Matrix> overlap;            // SPF overlap matrix per node (identity when orthonormal)
  std::vector<char> overlap_unit;
  std::vector<std::vector<Matrix>> down;  // [node][down index]; index 0 = identity environment
  std::vector<Matrix> env_hamiltonian;    // sum of terms not touching the node, as an environment
  std::vector<char> env_unit;
  std::uint64_t fingerprint = 0;          // of the state the cache was built from
};

std::uint64_t state_fingerprint(const MlState& state);

/// All up matrices, leaves to root.
NodeOperatorCache upward_pass(const MlState& state, const OperatorLayout& layout);
/// All down matrices, root to leaves; requires a complete upward pass.
void downward_pass(const MlState& state, const OperatorLayout& layout, NodeOperatorCache& cache);

/// Sizes the downward storage and sets the root's (trivial) environment only.
void init_root_environment(const OperatorLayout& layout, NodeOperatorCache& cache);

/// Recomputes the up matrices of one internal node from its tensor and its children.
void refresh_up(const MlState& state, const OperatorLayout& layout, NodeOperatorCache& cache, int node);
/// Recomputes the down matrices of `child` from its parent's tensor and caches.
void refresh_down(const MlState& state, const OperatorLayout& layout, NodeOperatorCache& cache, int child);

/// Local effective operator of `node` applied to a tensor shaped like the node's.
Matrix apply_local(const OperatorLayout& layout, const NodeOperatorCache& cache, int node, const Shape& shape,
                   const Matrix& x, int filter_slot = -1);

/// <x|H_local|x> at a node.
cplx local_expectation(const OperatorLayout& layout, const NodeOperatorCache& cache, int node, const Shape& shape,
                       const Matrix& x);

/// sum_{ik} a(i,k) b(i,k)
cplx contract(const Matrix& a, const Matrix& b);

/// Real part of <Psi|H|Psi> from a full upward pass.
double expectation(const MlState& state, const SumOfProducts& H);
double expectation(const MlState& state, const OperatorLayout& layout, const NodeOperatorCache& cache);
/// <Psi|term|Psi> for every term of H (coefficients not applied).
std::vector<cplx> term_expectations(const MlState& state, const SumOfProducts& H);

/// Reduced density matrix on a node's basis (SPFs, or the spin basis at a leaf).
Matrix node_density_matrix(const MlState& state, int node);

/// Environment of every term at a node. Terms touching the node get their own
/// environment and their restriction to the node; the rest are summed into
/// env_hamiltonian and pair with the node's overlap matrix.
struct MeanField {
  std::vector<std::optional<Matrix>> env;  // per term
  std::vector<Matrix> op;                  // per term, restriction to the node subtree
  Matrix env_hamiltonian;
  Matrix overlap;
};
MeanField mean_field_matrices(const MlState& state, const OperatorLayout& layout, const NodeOperatorCache& cache,
                              int node);
MeanField mean_field_matrices(const MlState& state, const SumOfProducts& H, int node);
/// <Psi|H|Psi> assembled from one node's mean fields.
cplx energy_from_mean_field(const MeanField& mf, const OperatorLayout& layout);

}  // namespace spinml
