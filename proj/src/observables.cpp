#include "spinml/observables.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>

#include "spinml/operator_cache.hpp"

namespace spinml {

using nlohmann::json;

Axis parse_axis(const std::string& s) {
  if (s == "x" || s == "X") return Axis::X;
  if (s == "y" || s == "Y") return Axis::Y;
  if (s == "z" || s == "Z") return Axis::Z;
  throw DomainError("unknown axis '" + s + "'");
}

char axis_label(Axis a) {
  switch (a) {
    case Axis::X: return 'x';
    case Axis::Y: return 'y';
    default: return 'z';
  }
}

SiteOperator axis_operator(Axis a) {
  switch (a) {
    case Axis::X: return SiteOperator::x();
    case Axis::Y: return SiteOperator::y();
    case Axis::Z: return SiteOperator::z();
  }
  throw DomainError("invalid axis");
}

namespace {

double real_part(cplx v) {
  if (std::abs(v.imag()) > 1e-10) throw ConsistencyError("correlation has a non-negligible imaginary part");
  return v.real();
}

// <psi| c i^{ny} X^x Z^z |psi> for unit c
cplx pauli_expect(const Vector& psi, std::uint64_t x, std::uint64_t z) {
  cplx acc = 0.0;
  const auto dim = static_cast<std::uint64_t>(psi.size());
  for (std::uint64_t b = 0; b < dim; ++b) {
    const cplx t = std::conj(psi(static_cast<Index>(b ^ x))) * psi(static_cast<Index>(b));
    acc += (std::popcount(b & z) & 1) ? -t : t;
  }
  switch (std::popcount(x & z) & 3) {
    case 0: return acc;
    case 1: return acc * cplx(0, 1);
    case 2: return -acc;
    default: return acc * cplx(0, -1);
  }
}

void axis_masks(Axis a, std::uint64_t bit, std::uint64_t& x, std::uint64_t& z) {
  if (a != Axis::Z) x |= bit;
  if (a != Axis::X) z |= bit;
}

void require_cut(int L, int left) {
  if (left < 1 || left > L - 1) throw DomainError("subsystem size must lie in [1, L-1]");
}

// per node: identity environment transposed = density matrix on the node basis
std::vector<Matrix> density_matrices(const MlState& state) {
  const OperatorLayout layout(state.spec(), SumOfProducts(state.num_sites(), {}));
  auto cache = upward_pass(state, layout);
  downward_pass(state, layout, cache);
  std::vector<Matrix> out;
  for (const auto& d : cache.down) out.push_back(d.empty() ? Matrix() : Matrix(d[0].transpose()));
  return out;
}

// node whose subtree is the left block or its complement; -1 if none
int cut_node(const TreeSpec& spec, int left) {
  const int L = spec.num_sites();
  for (const auto& n : spec.nodes()) {
    if (n.id == spec.root()) continue;
    const auto& s = spec.sites_under(n.id);
    const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
    const int size = static_cast<int>(s.size());
    if (size == left && *lo == 0 && *hi == left - 1) return n.id;
    if (size == L - left && *lo == left && *hi == L - 1) return n.id;
  }
  return -1;
}

}  // namespace

Eigen::MatrixXd correlation_matrix(const MlState& state, Axis axis) {
  const int L = state.num_sites();
  const SiteOperator op = axis_operator(axis);
  std::vector<ProductTerm> terms;
  for (int i = 0; i < L; ++i) terms.push_back(single_site_term(i, op));
  for (int i = 0; i < L; ++i)
    for (int j = i + 1; j < L; ++j) terms.push_back(two_site_term(i, op, j, op));
  const auto ev = term_expectations(state, SumOfProducts(L, std::move(terms)));
  Eigen::VectorXd single(L);
  for (int i = 0; i < L; ++i) single(i) = real_part(ev[static_cast<std::size_t>(i)]);
  Eigen::MatrixXd c(L, L);
  std::size_t k = static_cast<std::size_t>(L);
  for (int i = 0; i < L; ++i) {
    c(i, i) = 1.0 - single(i) * single(i);
    for (int j = i + 1; j < L; ++j) c(i, j) = c(j, i) = real_part(ev[k++]) - single(i) * single(j);
  }
  return c;
}

Eigen::MatrixXd correlation_matrix(const Vector& psi, int L, Axis axis) {
  if (psi.size() != (Index{1} << L)) throw DomainError("correlation_matrix: vector length is not 2^L");
  Eigen::VectorXd single(L);
  for (int i = 0; i < L; ++i) {
    std::uint64_t x = 0, z = 0;
    axis_masks(axis, 1ULL << (L - 1 - i), x, z);
    single(i) = real_part(pauli_expect(psi, x, z));
  }
  Eigen::MatrixXd c(L, L);
  for (int i = 0; i < L; ++i) {
    c(i, i) = 1.0 - single(i) * single(i);
    for (int j = i + 1; j < L; ++j) {
      std::uint64_t x = 0, z = 0;
      axis_masks(axis, 1ULL << (L - 1 - i), x, z);
      axis_masks(axis, 1ULL << (L - 1 - j), x, z);
      c(i, j) = c(j, i) = real_part(pauli_expect(psi, x, z)) - single(i) * single(j);
    }
  }
  return c;
}

double connected_correlation(const MlState& state, Axis axis, int i, int j) {
  const int L = state.num_sites();
  if (i < 0 || j < 0 || i >= L || j >= L || i == j) throw DomainError("connected_correlation: need two distinct sites");
  const SiteOperator op = axis_operator(axis);
  const auto ev = term_expectations(
      state, SumOfProducts(L, {single_site_term(i, op), single_site_term(j, op), two_site_term(i, op, j, op)}));
  return real_part(ev[2]) - real_part(ev[0]) * real_part(ev[1]);
}

double averaged_correlation(const std::vector<Eigen::MatrixXd>& members, int r, bool absolute) {
  if (members.empty()) throw DomainError("averaged_correlation: empty ensemble");
  const auto L = static_cast<int>(members.front().rows());
  if (r < 1 || r > L - 1) throw DomainError("averaged_correlation: separation out of range");
  double sum = 0.0;
  int count = 0;
  for (const auto& c : members) {
    if (c.rows() != L) throw DomainError("averaged_correlation: members differ in size");
    for (int i = 0; i + r < L; ++i) {
      sum += absolute ? std::abs(c(i, i + r)) : c(i, i + r);
      ++count;
    }
  }
  return sum / count;
}

double averaged_correlation(const std::vector<MlState>& states, Axis axis, int r, bool absolute) {
  std::vector<Eigen::MatrixXd> members;
  for (const auto& s : states) members.push_back(correlation_matrix(s, axis));
  return averaged_correlation(members, r, absolute);
}

std::vector<double> averaged_profile(const std::vector<Eigen::MatrixXd>& members, bool absolute) {
  if (members.empty()) throw DomainError("averaged_profile: empty ensemble");
  std::vector<double> out;
  for (int r = 1; r < members.front().rows(); ++r) out.push_back(averaged_correlation(members, r, absolute));
  return out;
}

double entropy_from_spectrum(const Eigen::VectorXd& lambda) {
  double s = 0.0;
  for (Index k = 0; k < lambda.size(); ++k)
    if (lambda(k) > 1e-14) s -= lambda(k) * std::log(lambda(k));
  return s;
}

double entropy_from_density(const Matrix& rho) {
  const Matrix h = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  return entropy_from_spectrum(es.eigenvalues());
}

double vnee(const Vector& psi, int L, int left) {
  require_cut(L, left);
  if (psi.size() != (Index{1} << L)) throw DomainError("vnee: vector length is not 2^L");
  const Index right = Index{1} << (L - left);
  const Eigen::Map<const Matrix> m(psi.data(), right, Index{1} << left);
  const Matrix g = m.cols() <= m.rows() ? Matrix(m.adjoint() * m) : Matrix(m * m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
  return entropy_from_spectrum(es.eigenvalues());
}

std::vector<double> entropy_profile(const Vector& psi, int L) {
  std::vector<double> out;
  for (int ls = 1; ls < L; ++ls) out.push_back(vnee(psi, L, ls));
  return out;
}

Matrix reduced_density(const Vector& psi, int L, const std::vector<int>& sites) {
  const auto k = static_cast<int>(sites.size());
  std::vector<int> rest;
  for (int s = 0; s < L; ++s)
    if (std::find(sites.begin(), sites.end(), s) == sites.end()) rest.push_back(s);
  Matrix m(Index{1} << k, Index{1} << (L - k));
  for (std::uint64_t b = 0; b < (1ULL << L); ++b) {
    std::uint64_t a = 0, c = 0;
    for (int s : sites) a = (a << 1) | ((b >> (L - 1 - s)) & 1U);
    for (int s : rest) c = (c << 1) | ((b >> (L - 1 - s)) & 1U);
    m(static_cast<Index>(a), static_cast<Index>(c)) = psi(static_cast<Index>(b));
  }
  return m * m.adjoint();
}

double vnee(const MlState& state, int left) {
  const int L = state.num_sites();
  require_cut(L, left);
  const int node = cut_node(state.spec(), left);
  if (node >= 0) return entropy_from_density(node_density_matrix(state, node));
  if (L > 24) throw CapacityError("vnee: cut is not a tree edge and L > 24");
  return vnee(to_statevector(state), L, left);
}

std::vector<double> entropy_profile(const MlState& state) {
  const int L = state.num_sites();
  std::vector<Matrix> rho;
  Vector psi;
  std::vector<double> out;
  for (int ls = 1; ls < L; ++ls) {
    const int node = cut_node(state.spec(), ls);
    if (node >= 0) {
      if (rho.empty()) rho = density_matrices(state);
      out.push_back(entropy_from_density(rho[static_cast<std::size_t>(node)]));
      continue;
    }
    if (L > 24) throw CapacityError("entropy_profile: cut is not a tree edge and L > 24");
    if (psi.size() == 0) psi = to_statevector(state);
    out.push_back(vnee(psi, L, ls));
  }
  return out;
}

double relative_error(double e, double e_ref) {
  if (e_ref == 0.0) throw DomainError("relative_error: zero reference");
  return std::abs(e / e_ref - 1.0);
}

void write_correlation_csv(const std::string& path, const Eigen::MatrixXd& c) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path);
  os.precision(17);
  os << "i,j,r,value\n";
  for (Index i = 0; i < c.rows(); ++i)
    for (Index j = i + 1; j < c.cols(); ++j) os << i + 1 << ',' << j + 1 << ',' << j - i << ',' << c(i, j) << '\n';
}

void write_entropy_csv(const std::string& path, const std::vector<double>& profile) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path);
  os.precision(17);
  os << "L_s,S_vN\n";
  for (std::size_t k = 0; k < profile.size(); ++k) os << k + 1 << ',' << profile[k] << '\n';
}

json summary_json(const ObservableSummary& s) {
  json j{{"model", s.model},
         {"seeds", s.seeds},
         {"L", s.num_sites},
         {"E0", s.e0},
         {"E0_per_spin", s.num_sites > 0 ? s.e0 / s.num_sites : 0.0},
         {"entropy_profile", s.entropy_profile},
         {"correlation_axis", std::string(1, axis_label(s.axis))},
         {"correlation_profile", s.correlation_profile}};
  j["delta_e_rel"] = std::isnan(s.delta_e_rel) ? json(nullptr) : json(s.delta_e_rel);
  return j;
}

}  // namespace spinml
