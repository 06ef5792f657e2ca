#pragma once

// Energies, connected correlations and entanglement entropies of tree states,
// plus the same quantities for dense state vectors (used by the oracle).
//
// Site indices are 0-based here; CSV output labels sites from 1.

#include <string>
#include <vector>

#include <json.hpp>

#include "spinml/model.hpp"
#include "spinml/state.hpp"

namespace spinml {

enum class Axis { X, Y, Z };

Axis parse_axis(const std::string& s);
char axis_label(Axis a);
SiteOperator axis_operator(Axis a);

/// <s_i s_j> - <s_i><s_j> along one axis, for i != j.
double connected_correlation(const MlState& state, Axis axis, int i, int j);

/// All connected correlations C(i, j) along an axis from one contraction
/// pass; C is symmetric and C(i, i) = 1 - <s_i>^2.
Eigen::MatrixXd correlation_matrix(const MlState& state, Axis axis);
Eigen::MatrixXd correlation_matrix(const Vector& psi, int num_sites, Axis axis);

/// Mean of C(i, i + r) over pairs and ensemble members; |C| with `absolute`.
double averaged_correlation(const std::vector<Eigen::MatrixXd>& members, int r, bool absolute = false);
double averaged_correlation(const std::vector<MlState>& states, Axis axis, int r, bool absolute = false);
/// Averaged profile for r = 1 .. L-1.
std::vector<double> averaged_profile(const std::vector<Eigen::MatrixXd>& members, bool absolute = false);

/// -sum lambda ln lambda over eigenvalues above 1e-14.
double entropy_from_spectrum(const Eigen::VectorXd& lambda);
double entropy_from_density(const Matrix& rho);

/// Entanglement entropy of the leftmost `left_sites` spins. Uses a tree node's
/// density matrix when the cut coincides with a tree edge, the dense vector
/// otherwise.
double vnee(const MlState& state, int left_sites);
/// vnee for every cut 1 .. L-1.
std::vector<double> entropy_profile(const MlState& state);

/// Dense counterparts.
double vnee(const Vector& psi, int num_sites, int left_sites);
std::vector<double> entropy_profile(const Vector& psi, int num_sites);
/// Reduced density matrix of `sites` (first listed = most significant).
Matrix reduced_density(const Vector& psi, int num_sites, const std::vector<int>& sites);

/// |E / E_ref - 1|.
double relative_error(double e, double e_ref);

// CSV: "i,j,r,value" with 1-based sites, i < j; "L_s,S_vN".
void write_correlation_csv(const std::string& path, const Eigen::MatrixXd& c);
void write_entropy_csv(const std::string& path, const std::vector<double>& profile);

struct ObservableSummary {
  std::string model;
  std::vector<std::uint64_t> seeds;
  double e0 = 0.0;
  int num_sites = 0;
  double delta_e_rel = 0.0;  // NaN when no reference
  std::vector<double> entropy_profile;
  std::vector<double> correlation_profile;
  Axis axis = Axis::Z;
};
nlohmann::json summary_json(const ObservableSummary& s);

}  // namespace spinml
