#pragma once

// Hierarchical wavefunction: one coefficient tensor per internal tree node.
//
// Leaves carry no tensor; their basis is the primitive spin basis with
// index 0 = up. In the default (root) gauge every non-root tensor has
// orthonormal rows and the root tensor holds the normalized amplitudes.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "spinml/tensor_ops.hpp"
#include "spinml/tree.hpp"

namespace spinml {

class MlState {
 public:
  MlState() = default;
  /// Zero tensors shaped after the tree.
  explicit MlState(TreeSpec spec);

  const TreeSpec& spec() const { return spec_; }
  int num_sites() const { return spec_.num_sites(); }

  Matrix& tensor(int node) { return tensors_.at(static_cast<std::size_t>(node)); }
  const Matrix& tensor(int node) const { return tensors_.at(static_cast<std::size_t>(node)); }
  /// [dim, child dims...] of an internal node.
  Shape shape(int node) const;

  std::uint64_t step = 0;

 private:
  TreeSpec spec_;
  std::vector<Matrix> tensors_;  // empty matrices at leaves
};

using Bloch = std::array<double, 3>;

/// Seeded random tensors, rows orthonormalized, unit norm.
MlState random_state(const TreeSpec& spec, std::uint64_t seed);

/// Product of single-spin states pointing along the given Bloch vectors
/// (one per site, indexed by site). Unused SPFs are orthonormal complements.
MlState product_state(const TreeSpec& spec, const std::vector<Bloch>& directions);

/// Spinor (up, down) amplitudes of a unit Bloch vector.
Eigen::Vector2cd spinor(const Bloch& direction);

/// Amplitudes over 2^L configurations, site 0 most significant, up before down.
Vector to_statevector(const MlState& state);

/// Amplitudes of every SPF of `node` over the sites below it (in leaf order):
/// a dim x 2^n matrix.
Matrix spf_amplitudes(const MlState& state, int node);

/// Largest |<phi_a|phi_b> - delta_ab| over all nodes; the root row counts
/// against unit norm.
double orthonormality_check(const MlState& state);

/// <a|b> computed through the tree; both states must share the topology.
cplx overlap(const MlState& a, const MlState& b);
double norm(const MlState& state);

/// Orthonormalizes all non-root rows bottom-up, pushing the triangular factors
/// into the parents; the wavefunction is unchanged. Returns the norm.
double canonicalize(MlState& state);
void normalize(MlState& state);

// .mlstate checkpoints
void write_checkpoint(const std::string& path, const MlState& state);
MlState read_checkpoint(const std::string& path, const TreeSpec& spec);

}  // namespace spinml
