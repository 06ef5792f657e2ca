#pragma once

// Property checks shared by the unit tests and the acceptance binary. Each
// returns the worst deviation it observed.

#include <cstdint>
#include <string>

namespace spinml::ref {

/// Energies from the tree contraction, from every node's mean fields and
/// after a random invertible gauge on every edge, against <psi|H|psi>.
double gauge_consistency(int L, std::uint64_t seed);

/// Worst of: negative eigenvalue, |trace - 1|, non-Hermiticity, over all
/// non-root nodes of a random normalized state.
double density_matrix_defect(int L, std::uint64_t seed);

/// Largest energy increase over `steps` imaginary-time steps.
double max_energy_rise(int L, int steps, std::uint64_t seed);

/// Largest orthonormality deviation over `steps` imaginary-time steps.
double orthonormality_drift(int L, int steps, std::uint64_t seed);

/// |E_tree - E_ED| for improved relaxation on an uncompressed binary tree.
double full_rank_error(int L, std::uint64_t seed);

/// max |S(A) - S(complement of A)| over left blocks A of a random state,
/// through the tree, the dense vector and explicit reduced density matrices.
double entropy_asymmetry(int L, std::uint64_t seed);

/// True when the disorder draws and a full ensemble run repeat bit for bit.
bool runs_are_deterministic(std::string* detail = nullptr);

}  // namespace spinml::ref
