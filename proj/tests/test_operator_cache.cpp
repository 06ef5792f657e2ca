#include <gtest/gtest.h>

#include "spinml/operator_cache.hpp"
#include "support/dense.hpp"
#include "support/properties.hpp"

using namespace spinml;

namespace {

SumOfProducts square(const SumOfProducts& H) {
  std::vector<ProductTerm> terms;
  for (const auto& a : H.terms())
    for (const auto& b : H.terms()) {
      std::map<int, SiteOperator> f;
      for (int s = 0; s < H.num_sites(); ++s) {
        const auto ia = a.factors.find(s), ib = b.factors.find(s);
        if (ia == a.factors.end() && ib == b.factors.end()) continue;
        const Matrix2 ma = ia == a.factors.end() ? Matrix2::Identity() : ia->second.to_matrix();
        const Matrix2 mb = ib == b.factors.end() ? Matrix2::Identity() : ib->second.to_matrix();
        f[s] = SiteOperator::matrix(ma * mb);
      }
      terms.emplace_back(a.coefficient * b.coefficient, f);
    }
  return SumOfProducts(H.num_sites(), terms);
}

}  // namespace

TEST(UpwardPass, RestrictionsMatchDenseOperators) {
  const auto t = binary_tree(8, {3, 4});
  const auto H = build_xysg(8, 3.0, DisorderSpec{2});
  const auto s = random_state(t, 1);
  const OperatorLayout layout(t, H);
  const auto cache = upward_pass(s, layout);
  for (const auto& n : t.nodes()) {
    if (n.is_leaf() || n.id == t.root()) continue;
    std::vector<int> sites;
    const Matrix basis = ref::spf_basis(s, n.id, sites);
    for (std::size_t k = 0; k < H.size(); ++k) {
      const int u = layout.up_index(n.id, k);
      if (u < 0) continue;
      // the term's factors inside this subtree, in subtree site order
      std::map<int, Matrix2> local;
      for (const auto& [site, op] : H.terms()[k].factors) {
        const auto it = std::find(sites.begin(), sites.end(), site);
        if (it != sites.end()) local[static_cast<int>(it - sites.begin())] = op.to_matrix();
      }
      const Matrix op = ref::site_operator(static_cast<int>(sites.size()), local);
      const Matrix want = basis.conjugate() * op * basis.transpose();
      EXPECT_LT((cache.up[static_cast<std::size_t>(n.id)][static_cast<std::size_t>(u)] - want).norm(), 1e-12);
    }
  }
}

TEST(Expectation, TrivialCases) {
  const auto t = binary_tree(4, {3});
  const auto s = random_state(t, 3);
  EXPECT_NEAR(expectation(s, SumOfProducts(4, {ProductTerm(2.5, {})})), 2.5, 1e-14);

  const auto up = product_state(t, std::vector<Bloch>(4, Bloch{0, 0, 1}));
  const auto ev = term_expectations(up, SumOfProducts(4, {single_site_term(2, SiteOperator::z())}));
  EXPECT_NEAR(ev[0].real(), 1.0, 1e-14);
  EXPECT_NEAR(expectation(up, build_xysg(4, 3.0, DisorderSpec{8})), 0.0, 1e-14);
}

TEST(Expectation, SrTfimMatchesDense) {
  const auto t = binary_tree(4, {3});
  const auto H = build_sr_tfim(4, 1.0, 0.8, 0.1);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = random_state(t, seed);
    EXPECT_NEAR(expectation(s, H), ref::dense_expectation(ref::dense_hamiltonian(H), ref::naive_statevector(s)).real(),
                1e-12);
  }
}

TEST(Expectation, VarianceNonNegative) {
  const auto t = binary_tree(4, {3});
  const auto H = build_lr_tfim(4, 1.0, 0.7, 0.3, 2.0);
  const auto H2 = square(H);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = random_state(t, seed);
    const double e = expectation(s, H);
    EXPECT_GE(expectation(s, H2) - e * e, -1e-9);
  }
}

TEST(Expectation, Errors) {
  const auto t = binary_tree(4, {3});
  const auto s = random_state(t, 2);
  EXPECT_THROW(expectation(s, build_sr_tfim(8, 1, 1, 0)), ConsistencyError);
  EXPECT_THROW(expectation(s, SumOfProducts(4, {single_site_term(1, SiteOperator::plus())})), ConsistencyError);
}

TEST(MeanField, EveryNodeReproducesTheEnergy) {
  const auto t = binary_tree(8, {3, 3});
  for (const auto& H : {build_sr_tfim(8, 1.0, 1.0, 0.01), build_lr_tfim(8, 1.0, 0.5, 0.0, 3.0),
                        build_xysg(8, 3.0, DisorderSpec{6}), build_sdrg(8, 1.0)}) {
    const auto s = random_state(t, 12);
    const OperatorLayout layout(t, H);
    const double e = expectation(s, H);
    for (const auto& n : t.nodes()) {
      const cplx em = energy_from_mean_field(mean_field_matrices(s, H, n.id), layout);
      EXPECT_NEAR(em.real(), e, 1e-12) << H.info().name << " node " << n.id;
      EXPECT_NEAR(em.imag(), 0.0, 1e-12);
    }
  }
  for (std::uint64_t seed = 1; seed <= 3; ++seed) EXPECT_LE(ref::gauge_consistency(8, seed), 1e-12);
}

TEST(MeanField, IdentityHamiltonian) {
  const auto t = binary_tree(4, {3});
  const auto s = random_state(t, 4);
  const SumOfProducts H(4, {ProductTerm(1.0, {})});
  for (const auto& n : t.nodes()) {
    if (n.id == t.root()) continue;
    const auto mf = mean_field_matrices(s, H, n.id);
    // only the constant term: the environment Hamiltonian is the density matrix itself
    EXPECT_LT((mf.env_hamiltonian - node_density_matrix(s, n.id).transpose()).norm(), 1e-13);
    EXPECT_NEAR(energy_from_mean_field(mf, OperatorLayout(t, H)).real(), 1.0, 1e-13);
  }
}

TEST(MeanField, StaleCacheRejected) {
  const auto t = binary_tree(4, {3});
  const auto H = build_sr_tfim(4, 1.0, 1.0, 0.0);
  const OperatorLayout layout(t, H);
  const auto a = random_state(t, 1), b = random_state(t, 2);
  auto cache = upward_pass(a, layout);
  downward_pass(a, layout, cache);
  EXPECT_NO_THROW(mean_field_matrices(a, layout, cache, 1));
  EXPECT_THROW(mean_field_matrices(b, layout, cache, 1), ConsistencyError);
}

TEST(MeanField, FiniteDifferenceGradient) {
  const auto t = binary_tree(8, {3, 3});
  const auto H = build_lr_tfim(8, 1.0, 0.9, 0.1, 2.5);
  const auto s = random_state(t, 21);
  const OperatorLayout layout(t, H);
  auto cache = upward_pass(s, layout);
  downward_pass(s, layout, cache);
  const double eps = 1e-6;
  for (const auto& n : t.nodes()) {
    if (n.is_leaf()) continue;
    const Matrix g = apply_local(layout, cache, n.id, s.shape(n.id), s.tensor(n.id));
    const Matrix& a = s.tensor(n.id);
    for (const auto& [i, k] : {std::pair<Index, Index>{0, 0}, {0, a.cols() / 2}, {a.rows() - 1, a.cols() - 1}}) {
      for (const cplx dir : {cplx(1, 0), cplx(0, 1)}) {
        auto p = s, m = s;
        p.tensor(n.id)(i, k) += eps * dir;
        m.tensor(n.id)(i, k) -= eps * dir;
        const double fd = (expectation(p, H) - expectation(m, H)) / (2 * eps);
        const double an = 2.0 * (std::conj(dir) * g(i, k)).real();
        EXPECT_NEAR(fd, an, 1e-6) << "node " << n.id;
      }
    }
  }
}
