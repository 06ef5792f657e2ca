#include <gtest/gtest.h>

#include "spinml/oracle.hpp"
#include "support/dense.hpp"

using namespace spinml;

TEST(HamiltonianAction, MatchesDenseMatrix) {
  std::srand(2);
  for (const auto& H : {build_sr_tfim(6, 1.0, 0.8, 0.2), build_lr_tfim(6, 0.7, 1.0, 0.1, 2.0),
                        build_xysg(6, 3.0, DisorderSpec{3}), build_sdrg(6, 1.0), build_sr_tfim_2d(2, 3, 1.0, 3.0, 0.01)}) {
    const Matrix h = ref::dense_hamiltonian(H);
    EXPECT_LT((h - h.adjoint()).norm(), 1e-12);
    const Vector v = Vector::Random(64);
    EXPECT_LT((apply_hamiltonian(H, v) - h * v).norm(), 1e-11) << H.info().name;
    EXPECT_GE(HamiltonianAction(H).norm_estimate(), h.operatorNorm() - 1e-9);
  }
}

TEST(PauliExpansion, MergesEqualStrings) {
  // XX + YY = 2(s+s- + s-s+) on two sites: two strings
  const auto H = build_xysg(2, 0.0, DisorderSpec{1});
  const auto strings = pauli_expansion(H);
  EXPECT_LE(strings.size(), 2u);
}

TEST(Ed, KnownEnergies) {
  EXPECT_NEAR(ed_ground_state(build_sr_tfim(4, 1.0, 0.0, 0.01), 1)[0].energy, -3.04, 1e-10);
  // two-site SDRG chain: 1/2 J0 exp(-2)(XX+YY) with J_0 at the middle bond
  const auto H = build_sdrg(2, 1.0);
  EXPECT_NEAR(ed_ground_state(H, 1)[0].energy, ref::dense_spectrum(ref::dense_hamiltonian(H)).values(0), 1e-12);
  for (int L : {4, 6, 10})
    for (double h : {0.3, 1.0, 2.0})
      EXPECT_NEAR(ed_ground_state(build_sr_tfim(L, 1.0, h, 0.0), 1)[0].energy, ref::free_fermion_energy(L, 1.0, h),
                  1e-10);
}

TEST(Ed, LevelsAndDegeneracy) {
  const auto H = build_xysg(8, 3.0, DisorderSpec{4});
  const auto exact = ref::dense_spectrum(ref::dense_hamiltonian(H)).values;
  const auto levels = ed_ground_state(H, 3);
  ASSERT_EQ(levels.size(), 3u);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(levels[static_cast<std::size_t>(k)].energy, exact(k), 1e-9);
  // U(1) plus spin flip: an even chain with no field has a twofold ground level or a clean gap
  EXPECT_EQ(levels[0].degenerate, std::abs(exact(1) - exact(0)) < 1e-8);
  const auto tfim = ed_ground_state(build_sr_tfim(6, 1.0, 1.0, 0.0), 2);
  EXPECT_FALSE(tfim[0].degenerate);
  EXPECT_LT(tfim[0].residual, 1e-8);
  EXPECT_THROW(ed_ground_state(build_sr_tfim(21, 1.0, 1.0, 0.0), 1), CapacityError);
}

TEST(Ed, ObservablesAndRoundTrip) {
  auto gs = ed_ground_state(build_sr_tfim(6, 1.0, 1.0, 0.0), 1)[0];
  gs.seed = 42;
  const auto obs = ed_observables(gs, {Axis::X, Axis::Z}, true);
  ASSERT_EQ(obs.correlations.size(), 2u);
  ASSERT_EQ(obs.entropy.size(), 5u);
  EXPECT_NEAR(obs.entropy[1], obs.entropy[3], 1e-10);  // reflection symmetry
  const std::string path = testing::TempDir() + "gs.edstate";
  write_edstate(path, gs);
  const auto back = read_edstate(path);
  EXPECT_EQ(back.energy, gs.energy);
  EXPECT_EQ(back.num_sites, 6);
  EXPECT_EQ(back.seed, std::optional<std::uint64_t>(42));
  EXPECT_EQ(back.model, gs.model);
  EXPECT_FALSE(back.model.empty());
  EXPECT_EQ(back.vector, gs.vector);
}
