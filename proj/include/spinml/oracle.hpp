#pragma once

// Matrix-free exact diagonalization on the full 2^L spin space.
//
// Basis index: site 0 is the most significant bit, bit value 0 = up.

#include <cstdint>
#include <string>
#include <vector>

#include "spinml/krylov.hpp"
#include "spinml/model.hpp"
#include "spinml/observables.hpp"

namespace spinml {

/// c * i^ny * X^x Z^z over bit masks; Y sites have both bits set.
struct PauliString {
  std::uint64_t x = 0;
  std::uint64_t z = 0;
  cplx coefficient = 0.0;
};

/// Every product term expanded into Pauli strings; equal strings merged.
std::vector<PauliString> pauli_expansion(const SumOfProducts& H);

/// H v with the diagonal precomputed and off-diagonal strings grouped by flip mask.
class HamiltonianAction {
 public:
  explicit HamiltonianAction(const SumOfProducts& H);
  Vector operator()(const Vector& v) const;
  int num_sites() const { return L_; }
  std::uint64_t dim() const { return dim_; }
  double norm_estimate() const { return norm_; }

 private:
  struct FlipGroup {
    std::uint64_t x;
    std::vector<std::pair<std::uint64_t, cplx>> strings;  // (z mask, coefficient with i^ny)
  };
  int L_;
  std::uint64_t dim_;
  double norm_;
  Vector diag_;
  std::vector<FlipGroup> flips_;
};

Vector apply_hamiltonian(const SumOfProducts& H, const Vector& v);

struct DenseGroundState {
  double energy = 0.0;
  Vector vector;
  double residual = 0.0;
  bool degenerate = false;  // within 1e-10 ||H||_est of a neighbouring returned level
  std::string model;
  std::optional<std::uint64_t> seed;
  int num_sites = 0;
};

struct EdOptions {
  int krylov_dim = 80;
  int restarts = 4000;
  double tol = 1e-10;
  std::uint64_t seed = 1;
  std::vector<Vector> guesses;  // optional start vectors per level
};

/// The k lowest eigenstates, ascending; L <= 20.
std::vector<DenseGroundState> ed_ground_state(const SumOfProducts& H, int k, const EdOptions& opts = {});

struct EdObservables {
  std::vector<std::pair<Axis, Eigen::MatrixXd>> correlations;
  std::vector<double> entropy;
};
EdObservables ed_observables(const DenseGroundState& gs, const std::vector<Axis>& axes, bool entropy);

// .edstate dumps
void write_edstate(const std::string& path, const DenseGroundState& gs);
DenseGroundState read_edstate(const std::string& path);

}  // namespace spinml
