#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "spinml/observables.hpp"
#include "support/dense.hpp"

using namespace spinml;

namespace {

// (|01> - |10>)/sqrt2 on sites 0,1 of a two-site chain
Vector singlet() {
  Vector v = Vector::Zero(4);
  v(1) = std::sqrt(0.5);
  v(2) = -std::sqrt(0.5);
  return v;
}

std::string slurp(const std::string& path) {
  std::ifstream is(path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Dense, Singlet) {
  const Vector s = singlet();
  EXPECT_NEAR(vnee(s, 2, 1), std::log(2.0), 1e-14);
  for (Axis a : {Axis::X, Axis::Y, Axis::Z}) EXPECT_NEAR(correlation_matrix(s, 2, a)(0, 1), -1.0, 1e-14);
}

TEST(Dense, ProductStateHasNoCorrelations) {
  const auto t = binary_tree(4, {2});
  const auto s = product_state(t, {{1, 0, 0}, {0, 0, 1}, {0, 1, 0}, {0.6, 0, 0.8}});
  const Vector psi = to_statevector(s);
  for (Axis a : {Axis::X, Axis::Y, Axis::Z}) {
    const auto c = correlation_matrix(psi, 4, a);
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) EXPECT_NEAR(c(i, j), 0.0, 1e-14);
    EXPECT_NEAR(correlation_matrix(s, a)(0, 3), 0.0, 1e-14);
  }
  for (double v : entropy_profile(psi, 4)) EXPECT_NEAR(v, 0.0, 1e-12);
  for (double v : entropy_profile(s)) EXPECT_NEAR(v, 0.0, 1e-12);
  EXPECT_NEAR(correlation_matrix(s, Axis::Z)(3, 3), 1.0 - 0.64, 1e-14);
}

TEST(Tree, MatchesDenseObservables) {
  for (const auto& t : {binary_tree(8, {3, 3}), mode_combination_tree(8, {{0, 1, 2}, {3, 4}, {5, 6, 7}}, {4, 3, 4})}) {
    const auto s = random_state(t, 17);
    const Vector psi = to_statevector(s);
    for (Axis a : {Axis::X, Axis::Y, Axis::Z})
      EXPECT_LT((correlation_matrix(s, a) - correlation_matrix(psi, 8, a)).cwiseAbs().maxCoeff(), 1e-12);
    const auto ml = entropy_profile(s);
    const auto ed = entropy_profile(psi, 8);
    ASSERT_EQ(ml.size(), 7u);
    for (std::size_t k = 0; k < ml.size(); ++k) EXPECT_NEAR(ml[k], ed[k], 1e-10) << "L_s=" << k + 1;
    EXPECT_NEAR(connected_correlation(s, Axis::X, 2, 6), correlation_matrix(psi, 8, Axis::X)(2, 6), 1e-12);
  }
}

TEST(Dense, ReducedDensityConsistency) {
  std::srand(4);
  Vector psi = Vector::Random(1 << 6);
  psi.normalize();
  const Matrix rho = reduced_density(psi, 6, {0, 1, 2});
  EXPECT_NEAR(rho.trace().real(), 1.0, 1e-12);
  EXPECT_NEAR(entropy_from_density(rho), vnee(psi, 6, 3), 1e-10);
  EXPECT_NEAR(entropy_from_density(reduced_density(psi, 6, {3, 4, 5})), vnee(psi, 6, 3), 1e-10);
}

TEST(Averaging, HandComputedMeans) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3), b = Eigen::MatrixXd::Zero(3, 3);
  a(0, 1) = 0.2;
  a(1, 2) = -0.4;
  a(0, 2) = 0.1;
  b(0, 1) = 0.6;
  b(1, 2) = 0.0;
  b(0, 2) = -0.3;
  EXPECT_NEAR(averaged_correlation({a, b}, 1), (0.2 - 0.4 + 0.6 + 0.0) / 4, 1e-15);
  EXPECT_NEAR(averaged_correlation({a, b}, 1, true), (0.2 + 0.4 + 0.6) / 4, 1e-15);
  EXPECT_NEAR(averaged_correlation({a, b}, 2), (0.1 - 0.3) / 2, 1e-15);
  const auto p = averaged_profile({a, b});
  ASSERT_EQ(p.size(), 2u);
  EXPECT_THROW(averaged_correlation({a}, 3), DomainError);
  EXPECT_THROW(averaged_correlation(std::vector<Eigen::MatrixXd>{}, 1), DomainError);
}

TEST(Entropy, Spectrum) {
  EXPECT_NEAR(entropy_from_spectrum(Eigen::Vector2d(0.5, 0.5)), std::log(2.0), 1e-15);
  EXPECT_EQ(entropy_from_spectrum(Eigen::Vector3d(1.0, 0.0, -1e-17)), 0.0);
  EXPECT_THROW(vnee(singlet(), 2, 0), DomainError);
  EXPECT_THROW(vnee(singlet(), 2, 2), DomainError);
}

TEST(Errors, RelativeError) {
  EXPECT_NEAR(relative_error(-1.01, -1.0), 0.01, 1e-14);
  EXPECT_THROW(relative_error(1.0, 0.0), DomainError);
  EXPECT_EQ(parse_axis("X"), Axis::X);
  EXPECT_THROW(parse_axis("w"), DomainError);
}

TEST(Csv, Formats) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(3, 3);
  c(0, 2) = c(2, 0) = 0.25;
  const std::string cp = testing::TempDir() + "corr.csv", ep = testing::TempDir() + "ent.csv";
  write_correlation_csv(cp, c);
  EXPECT_EQ(slurp(cp), "i,j,r,value\n1,2,1,0\n1,3,2,0.25\n2,3,1,0\n");
  write_entropy_csv(ep, {0.5, 0.25});
  EXPECT_EQ(slurp(ep), "L_s,S_vN\n1,0.5\n2,0.25\n");

  ObservableSummary s;
  s.model = "sr_tfim";
  s.num_sites = 4;
  s.e0 = -4.0;
  s.delta_e_rel = std::nan("");
  const auto j = summary_json(s);
  EXPECT_EQ(j["E0_per_spin"], -1.0);
  EXPECT_TRUE(j["delta_e_rel"].is_null());
}
