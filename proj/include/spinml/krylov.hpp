#pragma once

// Matrix-free Hermitian eigensolver and propagator.
//
// Eigenpairs come from a thick-restarted Lanczos iteration with explicit
// Rayleigh-Ritz and full reorthogonalization. Higher eigenpairs are found one
// at a time against the already-converged (locked) vectors, each from a fresh
// start vector, so degenerate copies are resolved.

#include <cstdint>
#include <functional>
#include <vector>

#include "spinml/types.hpp"

namespace spinml {

using LinearOp = std::function<Vector(const Vector&)>;

struct KrylovOptions {
  int max_basis = 40;      // basis size before a restart
  int max_restarts = 400;
  double tol = 1e-10;      // residual relative to the operator norm estimate
  std::uint64_t seed = 0x5eed;
  double norm_hint = 0.0;  // lower bound for the norm estimate, if known
  int dense_limit = 48;    // dimensions up to this size are diagonalized directly
};

struct EigenPair {
  double value = 0.0;
  Vector vector;
  double residual = 0.0;
  int matvecs = 0;
};

/// The `count` lowest eigenpairs, ascending. `guesses[k]` (when present and
/// nonzero) seeds the k-th pair.
std::vector<EigenPair> krylov_eigs(const LinearOp& apply, Index dim, int count, const KrylovOptions& opts,
                                   const std::vector<Vector>& guesses = {});

/// The target_index-th lowest eigenpair (0 = ground state). An optional guess
/// seeds the target pair.
EigenPair krylov_lowest(const LinearOp& apply, Index dim, int target_index, const KrylovOptions& opts,
                        const Vector* guess = nullptr);

/// exp(-t (A - shift)) v by Lanczos, splitting t when the basis does not converge.
Vector krylov_expm(const LinearOp& apply, const Vector& v, double t, double shift, int max_basis = 30,
                   double tol = 1e-12, int* matvecs = nullptr);

}  // namespace spinml
