#pragma once

// Reference implementations used only by the tests: dense Kronecker
// assembly of a sum of products and the free-fermion ground energy of the
// open transverse-field Ising chain.

#include <Eigen/Dense>

#include "spinml/model.hpp"
#include "spinml/state.hpp"

namespace spinml::ref {

/// Full 2^L x 2^L matrix; site 0 is the leftmost Kronecker factor.
Matrix dense_hamiltonian(const SumOfProducts& H);

/// Lowest `count` eigenvalues and eigenvectors of a dense Hermitian matrix.
struct DenseSpectrum {
  Eigen::VectorXd values;
  Matrix vectors;
};
DenseSpectrum dense_spectrum(const Matrix& h);

/// Ground energy of -J sum Z Z - h sum X on an open chain from the singular
/// values of the bidiagonal coupling matrix.
double free_fermion_energy(int L, double J, double h);

/// <psi|op|psi> for a dense operator.
cplx dense_expectation(const Matrix& op, const Vector& psi);

/// Kronecker product of single-site operators, identity elsewhere.
Matrix site_operator(int L, const std::map<int, Matrix2>& factors);

/// SPFs of a node as rows over the spin basis of its subtree; `sites` lists
/// the subtree's sites, first = most significant.
Matrix spf_basis(const MlState& state, int node, std::vector<int>& sites);

/// Dense vector of a tree state contracted recursively, independently of the
/// library's own contraction code.
Vector naive_statevector(const MlState& state);

}  // namespace spinml::ref
