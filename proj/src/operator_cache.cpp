#include "spinml/operator_cache.hpp"

#include <algorithm>
#include <cstring>
#include <map>

namespace spinml {

namespace {

constexpr double kUnitTol = 1e-13;

bool is_unit(const Matrix& m) {
  return m.rows() == m.cols() && (m - Matrix::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff() <= kUnitTol;
}

// index of `key` in `table`, appending when new
int intern(std::map<std::vector<int>, int>& seen, std::vector<std::vector<int>>& table, const std::vector<int>& key) {
  const auto [it, fresh] = seen.emplace(key, static_cast<int>(table.size()));
  if (fresh) table.push_back(key);
  return it->second;
}

LocalGrouping make_grouping(const std::vector<LocalTerm>& terms, int modes, int filter_slot) {
  std::vector<const LocalTerm*> pick;
  for (const auto& t : terms)
    if (filter_slot < 0 || t.ops[static_cast<std::size_t>(filter_slot + 1)] == kIdentity) pick.push_back(&t);

  auto key_of = [](const LocalTerm& t, int mode) {
    std::vector<int> k = t.ops;
    k[static_cast<std::size_t>(mode)] = 0;
    return k;
  };

  LocalGrouping best;
  std::size_t best_count = SIZE_MAX;
  for (int mode = 0; mode < modes; ++mode) {
    LocalGrouping g;
    g.mode = mode;
    std::map<std::vector<int>, std::size_t> where;
    for (const LocalTerm* t : pick) {
      const auto k = key_of(*t, mode);
      auto it = where.find(k);
      if (it == where.end()) {
        it = where.emplace(k, g.groups.size()).first;
        g.groups.push_back({t->ops, {}});
      }
      g.groups[it->second].members.emplace_back(t->coefficient, t->ops[static_cast<std::size_t>(mode)]);
    }
    if (g.groups.size() < best_count) {
      best_count = g.groups.size();
      best = std::move(g);
    }
  }
  return best;
}

}  // namespace

OperatorLayout::OperatorLayout(const TreeSpec& spec, const SumOfProducts& H) : spec_(spec) {
  require_valid(spec);
  if (H.num_sites() != spec.num_sites())
    throw ConsistencyError("Hamiltonian has " + std::to_string(H.num_sites()) + " sites, tree has " +
                           std::to_string(spec.num_sites()));
  const auto N = static_cast<std::size_t>(spec.size());
  const std::size_t nt = H.size();

  std::vector<int> leaf_of(static_cast<std::size_t>(spec.num_sites()), -1);
  for (const auto& n : spec.nodes())
    if (n.is_leaf()) leaf_of[static_cast<std::size_t>(n.site)] = n.id;

  leaf_ops_.resize(N);
  up_sigs_.resize(N);
  up_count_.assign(N, 0);
  up_index_.assign(N, std::vector<int>(nt, kIdentity));
  down_sigs_.resize(N);
  down_index_.assign(N, std::vector<int>(nt, -1));
  local_terms_.resize(N);
  groupings_.resize(N);

  for (std::size_t r = 0; r < nt; ++r) {
    const auto& term = H.terms()[r];
    coefficients_.push_back(term.coefficient);
    if (term.factors.empty()) constant_ += term.coefficient;
    for (const auto& [site, op] : term.factors) {
      const int leaf = leaf_of[static_cast<std::size_t>(site)];
      if (leaf < 0) throw ConsistencyError("site " + std::to_string(site + 1) + " is not a leaf of the tree");
      const Matrix2 m = op.to_matrix();
      auto& ops = leaf_ops_[idx(leaf)];
      auto it = std::find_if(ops.begin(), ops.end(), [&](const Matrix2& o) { return o == m; });
      if (it == ops.end()) {
        ops.push_back(m);
        it = ops.end() - 1;
      }
      up_index_[idx(leaf)][r] = static_cast<int>(it - ops.begin());
    }
  }
  for (const auto& n : spec.nodes())
    if (n.is_leaf()) up_count_[idx(n.id)] = leaf_ops_[idx(n.id)].size();

  for (int id : spec.post_order()) {
    const auto& n = spec.node(id);
    if (n.is_leaf()) continue;
    std::map<std::vector<int>, int> seen;
    for (std::size_t r = 0; r < nt; ++r) {
      std::vector<int> key;
      bool touches = false;
      for (int c : n.children) {
        key.push_back(up_index_[idx(c)][r]);
        touches = touches || key.back() != kIdentity;
      }
      if (touches) up_index_[idx(id)][r] = intern(seen, up_sigs_[idx(id)], key);
    }
    up_count_[idx(id)] = up_sigs_[idx(id)].size();
  }

  // node ids are pre-order, so parents come first
  const int root = spec.root();
  down_sigs_[idx(root)] = {{0}};
  for (std::size_t r = 0; r < nt; ++r)
    if (up_index_[idx(root)][r] != kIdentity) down_index_[idx(root)][r] = 0;
  for (const auto& p : spec.nodes()) {
    if (p.is_leaf()) continue;
    const std::size_t k = p.children.size();
    for (std::size_t s = 0; s < k; ++s) {
      const int c = p.children[s];
      std::map<std::vector<int>, int> seen;
      std::vector<int> identity(k + 1, kIdentity);
      identity[0] = 0;
      intern(seen, down_sigs_[idx(c)], identity);
      for (std::size_t r = 0; r < nt; ++r) {
        if (up_index_[idx(c)][r] == kIdentity) continue;
        std::vector<int> key{down_index_[idx(p.id)][r]};
        for (std::size_t t = 0; t < k; ++t) key.push_back(t == s ? kIdentity : up_index_[idx(p.children[t])][r]);
        down_index_[idx(c)][r] = intern(seen, down_sigs_[idx(c)], key);
      }
    }
  }

  for (const auto& n : spec.nodes()) {
    if (n.is_leaf()) continue;
    auto& local = local_terms_[idx(n.id)];
    std::map<std::vector<int>, std::size_t> where;
    auto add = [&](double c, std::vector<int> ops) {
      const auto [it, fresh] = where.emplace(ops, local.size());
      if (fresh)
        local.push_back({c, std::move(ops)});
      else
        local[it->second].coefficient += c;
    };
    std::vector<int> env_ops(n.children.size() + 1, kIdentity);
    env_ops[0] = kEnvHamiltonian;
    add(1.0, env_ops);
    for (std::size_t r = 0; r < nt; ++r) {
      if (up_index_[idx(n.id)][r] == kIdentity) continue;
      std::vector<int> ops{down_index_[idx(n.id)][r]};
      for (int c : n.children) ops.push_back(up_index_[idx(c)][r]);
      add(coefficients_[r], std::move(ops));
    }
    const int modes = static_cast<int>(n.children.size()) + 1;
    for (int f = -1; f < modes - 1; ++f) groupings_[idx(n.id)].push_back(make_grouping(local, modes, f));
  }
}

std::uint64_t state_fingerprint(const MlState& state) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& n : state.spec().nodes()) {
    if (n.is_leaf()) continue;
    const Matrix& a = state.tensor(n.id);
    const auto* bytes = reinterpret_cast<const unsigned char*>(a.data());
    const std::size_t len = static_cast<std::size_t>(a.size()) * sizeof(cplx);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  }
  return h;
}

void refresh_up(const MlState& state, const OperatorLayout& layout, NodeOperatorCache& cache, int node) {
  const auto& n = state.spec().node(node);
  const auto id = static_cast<std::size_t>(node);
  const Matrix& a = state.tensor(node);
  const Shape shape = state.shape(node);

  auto build = [&](const std::vector<int>& sig) {
    Matrix t = a;
    for (std::size_t k = 0; k < n.children.size(); ++k) {
      const auto c = static_cast<std::size_t>(n.children[k]);
      const int mode = static_cast<int>(k) + 1;
      if (sig[k] == kIdentity) {
        if (!cache.overlap_unit[c]) t = mode_product(t, shape, mode, cache.overlap[c]);
      } else {
        t = mode_product(t, shape, mode, cache.up[c][static_cast<std::size_t>(sig[k])]);
      }
    }
    return Matrix(a.conjugate() * t.transpose());
  };

  cache.overlap[id] = build(std::vector<int>(n.children.size(), kIdentity));
  cache.overlap_unit[id] = is_unit(cache.overlap[id]);
  const auto& sigs = layout.up_signatures(node);
  cache.up[id].resize(sigs.size());
  for (std::size_t u = 0; u < sigs.size(); ++u) cache.up[id][u] = build(sigs[u]);
}

NodeOperatorCache upward_pass(const MlState& state, const OperatorLayout& layout) {
  const auto& spec = state.spec();
  if (!(spec == layout.spec())) throw ConsistencyError("operator layout built for a different tree");
  const auto N = static_cast<std::size_t>(spec.size());
  NodeOperatorCache cache;
  cache.up.resize(N);
  cache.overlap.resize(N);
  cache.overlap_unit.assign(N, 0);
  for (int id : spec.post_order()) {
    const auto i = static_cast<std::size_t>(id);
    if (spec.node(id).is_leaf()) {
      for (const auto& m : layout.leaf_ops(id)) cache.up[i].push_back(m);
      cache.overlap[i] = Matrix::Identity(2, 2);
      cache.overlap_unit[i] = 1;
    } else {
      refresh_up(state, layout, cache, id);
    }
  }
  cache.fingerprint = state_fingerprint(state);
  return cache;
}

void refresh_down(const MlState& state, const OperatorLayout& layout, NodeOperatorCache& cache, int child) {
  const auto& spec = state.spec();
  const int p = spec.node(child).parent;
  const auto& pn = spec.node(p);
  const auto ip = static_cast<std::size_t>(p);
  const auto ic = static_cast<std::size_t>(child);
  const int s = spec.slot_in_parent(child);
  const Matrix& a = state.tensor(p);
  const Shape shape = state.shape(p);

  cache.env_hamiltonian[ic] = mode_gram(a, apply_local(layout, cache, p, shape, a, s), shape, s + 1);

  const auto& sigs = layout.down_signatures(child);
  cache.down[ic].resize(sigs.size());
  for (std::size_t d = 0; d < sigs.size(); ++d) {
    const auto& sig = sigs[d];
    Matrix t = a;
    if (!(sig[0] == 0 && cache.env_unit[ip])) t = mode_product(t, shape, 0, cache.down[ip][static_cast<std::size_t>(sig[0])]);
    for (std::size_t k = 0; k < pn.children.size(); ++k) {
      if (static_cast<int>(k) == s) continue;
      const auto c = static_cast<std::size_t>(pn.children[k]);
      const int mode = static_cast<int>(k) + 1;
      const int id = sig[k + 1];
      if (id == kIdentity) {
        if (!cache.overlap_unit[c]) t = mode_product(t, shape, mode, cache.overlap[c]);
      } else {
        t = mode_product(t, shape, mode, cache.up[c][static_cast<std::size_t>(id)]);
      }
    }
    cache.down[ic][d] = mode_gram(a, t, shape, s + 1);
  }
  cache.env_unit[ic] = is_unit(cache.down[ic][0]);
}

void init_root_environment(const OperatorLayout& layout, NodeOperatorCache& cache) {
  const auto& spec = layout.spec();
  const auto N = static_cast<std::size_t>(spec.size());
  cache.down.assign(N, {});
  cache.env_hamiltonian.assign(N, Matrix());
  cache.env_unit.assign(N, 0);
  const auto r = static_cast<std::size_t>(spec.root());
  cache.down[r] = {Matrix::Identity(1, 1)};
  cache.env_hamiltonian[r] = Matrix::Constant(1, 1, cplx(layout.constant(), 0.0));
  cache.env_unit[r] = 1;
}

void downward_pass(const MlState& state, const OperatorLayout& layout, NodeOperatorCache& cache) {
  const auto& spec = state.spec();
  init_root_environment(layout, cache);
  for (const auto& n : spec.nodes()) {
    if (n.is_leaf()) continue;
    for (int c : n.children) refresh_down(state, layout, cache, c);
  }
}

Matrix apply_local(const OperatorLayout& layout, const NodeOperatorCache& cache, int node, const Shape& shape,
                   const Matrix& x, int filter_slot) {
  const auto& n = layout.spec().node(node);
  const auto i = static_cast<std::size_t>(node);

  auto op = [&](int mode, int id) -> const Matrix& {
    if (mode == 0) return id == kEnvHamiltonian ? cache.env_hamiltonian[i] : cache.down[i][static_cast<std::size_t>(id)];
    const auto c = static_cast<std::size_t>(n.children[static_cast<std::size_t>(mode - 1)]);
    return id == kIdentity ? cache.overlap[c] : cache.up[c][static_cast<std::size_t>(id)];
  };
  auto trivial = [&](int mode, int id) {
    if (mode == 0) return id == 0 && cache.env_unit[i];
    const auto c = static_cast<std::size_t>(n.children[static_cast<std::size_t>(mode - 1)]);
    return id == kIdentity && cache.overlap_unit[c];
  };

  const auto& grouping = layout.grouping(node, filter_slot);
  const int gm = grouping.mode;
  const int modes = static_cast<int>(shape.size());
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  for (const auto& g : grouping.groups) {
    Matrix y = x;
    for (int m = 0; m < modes; ++m) {
      if (m == gm) continue;
      const int id = g.key[static_cast<std::size_t>(m)];
      if (!trivial(m, id)) y = mode_product(y, shape, m, op(m, id));
    }
    bool all_trivial = true;
    for (const auto& [c, id] : g.members) all_trivial = all_trivial && trivial(gm, id);
    if (all_trivial) {
      cplx total = 0.0;
      for (const auto& [c, id] : g.members) total += c;
      out += total * y;
      continue;
    }
    const auto extent = shape[static_cast<std::size_t>(gm)];
    Matrix sum = Matrix::Zero(extent, extent);
    for (const auto& [c, id] : g.members) {
      if (trivial(gm, id))
        sum.diagonal().array() += c;
      else
        sum += c * op(gm, id);
    }
    out += mode_product(y, shape, gm, sum);
  }
  return out;
}

cplx contract(const Matrix& a, const Matrix& b) { return a.cwiseProduct(b).sum(); }

cplx local_expectation(const OperatorLayout& layout, const NodeOperatorCache& cache, int node, const Shape& shape,
                       const Matrix& x) {
  return x.conjugate().cwiseProduct(apply_local(layout, cache, node, shape, x)).sum();
}

namespace {

cplx root_value(const OperatorLayout& layout, const NodeOperatorCache& cache, std::size_t r) {
  const auto root = static_cast<std::size_t>(layout.spec().root());
  const int u = layout.up_index(layout.spec().root(), r);
  return u == kIdentity ? cache.overlap[root](0, 0) : cache.up[root][static_cast<std::size_t>(u)](0, 0);
}

double real_checked(cplx e) {
  if (std::abs(e.imag()) > 1e-10 * std::max(1.0, std::abs(e.real())))
    throw ConsistencyError("expectation has imaginary part " + std::to_string(e.imag()) + "; operator not Hermitian?");
  return e.real();
}

}  // namespace

double expectation(const MlState& /*state*/, const OperatorLayout& layout, const NodeOperatorCache& cache) {
  cplx e = 0.0;
  for (std::size_t r = 0; r < layout.num_terms(); ++r) e += layout.coefficient(r) * root_value(layout, cache, r);
  return real_checked(e);
}

double expectation(const MlState& state, const SumOfProducts& H) {
  const OperatorLayout layout(state.spec(), H);
  return expectation(state, layout, upward_pass(state, layout));
}

std::vector<cplx> term_expectations(const MlState& state, const SumOfProducts& H) {
  const OperatorLayout layout(state.spec(), H);
  const auto cache = upward_pass(state, layout);
  std::vector<cplx> out;
  for (std::size_t r = 0; r < layout.num_terms(); ++r) out.push_back(root_value(layout, cache, r));
  return out;
}

Matrix node_density_matrix(const MlState& state, int node) {
  if (node == state.spec().root()) throw DomainError("node_density_matrix: the root density matrix is the scalar 1");
  const OperatorLayout layout(state.spec(), SumOfProducts(state.num_sites(), {}));
  auto cache = upward_pass(state, layout);
  downward_pass(state, layout, cache);
  return cache.down[static_cast<std::size_t>(node)][0].transpose();
}

MeanField mean_field_matrices(const MlState& state, const OperatorLayout& layout, const NodeOperatorCache& cache,
                              int node) {
  if (cache.down.empty() || cache.fingerprint != state_fingerprint(state))
    throw ConsistencyError("mean_field_matrices: operator cache is stale or incomplete");
  const auto i = static_cast<std::size_t>(node);
  MeanField mf;
  mf.env.resize(layout.num_terms());
  for (std::size_t r = 0; r < layout.num_terms(); ++r) {
    const int u = layout.up_index(node, r);
    if (u == kIdentity) {
      mf.op.push_back(cache.overlap[i]);
    } else {
      mf.env[r] = cache.down[i][static_cast<std::size_t>(layout.down_index(node, r))];
      mf.op.push_back(cache.up[i][static_cast<std::size_t>(u)]);
    }
  }
  mf.env_hamiltonian = cache.env_hamiltonian[i];
  mf.overlap = cache.overlap[i];
  return mf;
}

MeanField mean_field_matrices(const MlState& state, const SumOfProducts& H, int node) {
  const OperatorLayout layout(state.spec(), H);
  auto cache = upward_pass(state, layout);
  downward_pass(state, layout, cache);
  return mean_field_matrices(state, layout, cache, node);
}

cplx energy_from_mean_field(const MeanField& mf, const OperatorLayout& layout) {
  cplx e = contract(mf.env_hamiltonian, mf.overlap);
  for (std::size_t r = 0; r < layout.num_terms(); ++r)
    if (mf.env[r]) e += layout.coefficient(r) * contract(*mf.env[r], mf.op[r]);
  return e;
}

}  // namespace spinml
