#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "spinml/observables.hpp"
#include "spinml/operator_cache.hpp"
#include "spinml/state.hpp"
#include "support/dense.hpp"

using namespace spinml;

namespace {

std::vector<TreeSpec> small_trees() {
  return {binary_tree(2, {}), binary_tree(4, {3}), binary_tree(8, {3, 3}), binary_tree(8, {2, 4}),
          mode_combination_tree(6, {{0, 1}, {2, 3, 4}, {5}}, {3, 5, 2}), grid_tree_2d(3, 3, {4})};
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("spinml_test_" + name)).string();
}

}  // namespace

TEST(RandomState, OrthonormalNormalizedDeterministic) {
  for (const auto& t : small_trees()) {
    const auto a = random_state(t, 17), b = random_state(t, 17), c = random_state(t, 18);
    EXPECT_LE(orthonormality_check(a), 1e-12);
    EXPECT_NEAR(norm(a), 1.0, 1e-12);
    EXPECT_NEAR(to_statevector(a).norm(), 1.0, 1e-10);
    for (const auto& n : t.nodes()) {
      if (n.is_leaf()) continue;
      EXPECT_EQ(a.tensor(n.id), b.tensor(n.id));
    }
    EXPECT_GT((to_statevector(a) - to_statevector(c)).norm(), 1e-3);
  }
}

TEST(RandomState, TwoSites) {
  const auto s = random_state(binary_tree(2, {}), 3);
  EXPECT_EQ(s.tensor(0).rows(), 1);
  EXPECT_EQ(s.tensor(0).cols(), 4);
  EXPECT_NEAR(s.tensor(0).norm(), 1.0, 1e-14);
}

TEST(ProductState, AllUp) {
  const auto t = binary_tree(8, {3, 3});
  const auto s = product_state(t, std::vector<Bloch>(8, Bloch{0, 0, 1}));
  const Vector psi = to_statevector(s);
  EXPECT_NEAR(std::abs(psi(0)), 1.0, 1e-14);
  EXPECT_NEAR(psi.norm(), 1.0, 1e-14);
  EXPECT_NEAR(expectation(s, build_sr_tfim(8, 1.0, 0.0, 0.01)), -7.0 - 0.08, 1e-13);
  const auto c = correlation_matrix(s, Axis::Z);
  for (int i = 0; i < 8; ++i)
    for (int j = i + 1; j < 8; ++j) EXPECT_NEAR(c(i, j), 0.0, 1e-14);
  EXPECT_LE(orthonormality_check(s), 1e-13);
}

TEST(ProductState, BlochComponents) {
  const auto t = mode_combination_tree(6, {{0, 1, 2}, {3, 4, 5}}, {4, 4});
  std::vector<Bloch> dirs{{1, 0, 0}, {0, 1, 0}, {0, 0, -1}, {0.6, 0, 0.8}, {0, -0.6, 0.8}, {-1, 0, 0}};
  const auto s = product_state(t, dirs);
  const Vector psi = to_statevector(s);
  for (int i = 0; i < 6; ++i) {
    const auto d = dirs[static_cast<std::size_t>(i)];
    const Matrix x = ref::site_operator(6, {{i, SiteOperator::x().to_matrix()}});
    const Matrix y = ref::site_operator(6, {{i, SiteOperator::y().to_matrix()}});
    const Matrix z = ref::site_operator(6, {{i, SiteOperator::z().to_matrix()}});
    EXPECT_NEAR(ref::dense_expectation(x, psi).real(), d[0], 1e-13);
    EXPECT_NEAR(ref::dense_expectation(y, psi).real(), d[1], 1e-13);
    EXPECT_NEAR(ref::dense_expectation(z, psi).real(), d[2], 1e-13);
  }
  // the statevector is the tensor product of the single-spin states
  Vector kron = Vector::Ones(1);
  for (const auto& d : dirs) {
    const Eigen::Vector2cd sp = spinor(d);
    Vector next(kron.size() * 2);
    for (Index k = 0; k < kron.size(); ++k) next.segment(2 * k, 2) = kron(k) * sp;
    kron = next;
  }
  EXPECT_LT((psi - kron).norm(), 1e-14);
}

TEST(Statevector, MatchesIndependentContraction) {
  for (const auto& t : small_trees()) {
    const auto s = random_state(t, 5);
    EXPECT_LT((to_statevector(s) - ref::naive_statevector(s)).norm(), 1e-12);
  }
}

TEST(Statevector, CapacityGuard) {
  const auto s = product_state(binary_tree(32, {2, 2, 2, 2}), std::vector<Bloch>(32, Bloch{0, 0, 1}));
  EXPECT_THROW(to_statevector(s), CapacityError);
}

TEST(DenseEquivalence, RandomStates) {
  const auto t = binary_tree(8, {3, 4});
  const auto H = build_lr_tfim(8, 1.0, 0.6, 0.2, 2.0);
  const Matrix h = ref::dense_hamiltonian(H);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = random_state(t, seed), b = random_state(t, seed + 100);
    const Vector va = ref::naive_statevector(a), vb = ref::naive_statevector(b);
    EXPECT_NEAR(expectation(a, H), ref::dense_expectation(h, va).real(), 1e-10);
    EXPECT_LT(std::abs(overlap(a, b) - va.dot(vb)), 1e-10);
    for (const auto& n : t.nodes()) {
      if (n.id == t.root()) continue;
      // node density matrix pushed to the spin basis equals the dense partial trace
      std::vector<int> sites;
      const Matrix basis = ref::spf_basis(a, n.id, sites);
      const Matrix rho = node_density_matrix(a, n.id);
      const Matrix spin = basis.transpose() * rho * basis.conjugate();
      EXPECT_LT((spin - reduced_density(va, 8, sites)).norm(), 1e-10) << "node " << n.id;
    }
  }
}

TEST(Orthonormality, ScaledRow) {
  auto s = random_state(binary_tree(4, {3}), 2);
  s.tensor(1).row(0) *= 1.5;
  EXPECT_NEAR(orthonormality_check(s), 1.25, 1e-12);
}

TEST(Canonicalize, PreservesTheState) {
  const auto t = binary_tree(8, {3, 3});
  auto s = random_state(t, 8);
  const Vector before = to_statevector(s);
  s.tensor(1) *= 0.5;
  s.tensor(2).row(1) += s.tensor(2).row(0);
  const Vector scaled = ref::naive_statevector(s);
  normalize(s);
  EXPECT_LE(orthonormality_check(s), 1e-12);
  EXPECT_LT((to_statevector(s) - scaled / scaled.norm()).norm(), 1e-12);
  EXPECT_GT((before - scaled).norm(), 1e-3);
}

TEST(Checkpoint, RoundTripAndHashGuard) {
  const auto t = binary_tree(8, {3, 4});
  auto s = random_state(t, 4);
  s.step = 42;
  const auto path = temp_path("ckpt.mlstate");
  write_checkpoint(path, s);
  const auto back = read_checkpoint(path, t);
  EXPECT_EQ(back.step, 42U);
  for (const auto& n : t.nodes()) {
    if (n.is_leaf()) continue;
    EXPECT_EQ(back.tensor(n.id), s.tensor(n.id));
  }
  EXPECT_THROW(read_checkpoint(path, binary_tree(8, {3, 3})), ConsistencyError);
  std::remove(path.c_str());
  EXPECT_THROW(read_checkpoint(path, t), ParseError);
}
