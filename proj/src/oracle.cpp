#include "spinml/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>

namespace spinml {

namespace {

constexpr int kMaxEdSites = 20;

// Pauli weights of a 2x2 matrix: I, X, Y, Z
std::array<cplx, 4> pauli_weights(const Matrix2& m) {
  const cplx i(0.0, 1.0);
  return {0.5 * (m(0, 0) + m(1, 1)), 0.5 * (m(0, 1) + m(1, 0)), 0.5 * i * (m(0, 1) - m(1, 0)),
          0.5 * (m(0, 0) - m(1, 1))};
}

cplx i_power(int n) {
  switch (n & 3) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

}  // namespace

std::vector<PauliString> pauli_expansion(const SumOfProducts& H) {
  const int L = H.num_sites();
  if (L > 62) throw CapacityError("pauli_expansion: more than 62 sites");
  std::map<std::pair<std::uint64_t, std::uint64_t>, cplx> acc;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> order;
  for (const auto& term : H.terms()) {
    std::vector<PauliString> partial{{0, 0, cplx(term.coefficient, 0.0)}};
    for (const auto& [site, op] : term.factors) {
      const auto w = pauli_weights(op.to_matrix());
      const std::uint64_t bit = 1ULL << (L - 1 - site);
      std::vector<PauliString> next;
      for (const auto& p : partial)
        for (int k = 0; k < 4; ++k) {
          if (w[static_cast<std::size_t>(k)] == cplx(0.0)) continue;
          PauliString q = p;
          q.coefficient *= w[static_cast<std::size_t>(k)];
          if (k == 1 || k == 2) q.x |= bit;
          if (k == 2 || k == 3) q.z |= bit;
          next.push_back(q);
        }
      partial = std::move(next);
    }
    for (const auto& p : partial) {
      const auto key = std::make_pair(p.x, p.z);
      const auto [it, fresh] = acc.emplace(key, cplx(0.0));
      if (fresh) order.push_back(key);
      it->second += p.coefficient;
    }
  }
  std::vector<PauliString> out;
  for (const auto& key : order) {
    const cplx c = acc[key];
    if (c != cplx(0.0)) out.push_back({key.first, key.second, c});
  }
  return out;
}

HamiltonianAction::HamiltonianAction(const SumOfProducts& H) : L_(H.num_sites()) {
  if (L_ > kMaxEdSites) throw CapacityError("exact diagonalization limited to 20 sites");
  dim_ = 1ULL << L_;
  norm_ = H.norm_estimate();
  diag_ = Vector::Zero(static_cast<Index>(dim_));
  std::map<std::uint64_t, std::size_t> where;
  for (const auto& p : pauli_expansion(H)) {
    // i^ny with ny = number of Y sites = popcount(x & z)
    const cplx c = p.coefficient * i_power(std::popcount(p.x & p.z));
    if (p.x == 0) {
      for (std::uint64_t b = 0; b < dim_; ++b)
        diag_(static_cast<Index>(b)) += (std::popcount(b & p.z) & 1) ? -c : c;
      continue;
    }
    const auto [it, fresh] = where.emplace(p.x, flips_.size());
    if (fresh) flips_.push_back({p.x, {}});
    flips_[it->second].strings.emplace_back(p.z, c);
  }
}

Vector HamiltonianAction::operator()(const Vector& v) const {
  if (static_cast<std::uint64_t>(v.size()) != dim_) throw DomainError("apply_hamiltonian: vector length mismatch");
  Vector out = diag_.cwiseProduct(v);
  for (const auto& g : flips_) {
    if (g.strings.size() == 1 && g.strings[0].first == 0) {
      const cplx c = g.strings[0].second;
      for (std::uint64_t b = 0; b < dim_; ++b) out(static_cast<Index>(b ^ g.x)) += c * v(static_cast<Index>(b));
      continue;
    }
    for (std::uint64_t b = 0; b < dim_; ++b) {
      cplx s = 0.0;
      for (const auto& [z, c] : g.strings) s += (std::popcount(b & z) & 1) ? -c : c;
      out(static_cast<Index>(b ^ g.x)) += s * v(static_cast<Index>(b));
    }
  }
  return out;
}

Vector apply_hamiltonian(const SumOfProducts& H, const Vector& v) { return HamiltonianAction(H)(v); }

std::vector<DenseGroundState> ed_ground_state(const SumOfProducts& H, int k, const EdOptions& opts) {
  if (k < 1) throw DomainError("ed_ground_state: k must be at least 1");
  const HamiltonianAction act(H);
  const auto dim = static_cast<Index>(act.dim());
  KrylovOptions ko;
  ko.tol = opts.tol;
  ko.max_restarts = opts.restarts;
  ko.seed = opts.seed;
  // keep the two Krylov blocks (basis and its image) under ~1 GB
  const Index budget = (Index{1} << 30) / (32 * dim);
  ko.max_basis = static_cast<int>(std::clamp<Index>(budget, 12, opts.krylov_dim));
  const LinearOp apply = [&](const Vector& v) { return act(v); };
  const auto pairs = krylov_eigs(apply, dim, std::min<int>(k, static_cast<int>(dim)), ko, opts.guesses);

  const ModelInfo& info = H.info();
  std::vector<DenseGroundState> out;
  for (const auto& p : pairs) {
    DenseGroundState g;
    g.energy = p.value;
    g.vector = p.vector;
    g.residual = (act(p.vector) - p.value * p.vector).norm();
    g.model = info.name;
    g.seed = info.seed;
    g.num_sites = H.num_sites();
    out.push_back(std::move(g));
  }
  const double tol = 1e-10 * std::max(act.norm_estimate(), 1e-300);
  for (std::size_t i = 0; i + 1 < out.size(); ++i)
    if (std::abs(out[i + 1].energy - out[i].energy) <= tol) out[i].degenerate = out[i + 1].degenerate = true;
  return out;
}

EdObservables ed_observables(const DenseGroundState& gs, const std::vector<Axis>& axes, bool entropy) {
  EdObservables o;
  for (Axis a : axes) o.correlations.emplace_back(a, correlation_matrix(gs.vector, gs.num_sites, a));
  if (entropy) o.entropy = entropy_profile(gs.vector, gs.num_sites);
  return o;
}

namespace {

constexpr char kEdMagic[8] = {'S', 'P', 'I', 'N', 'M', 'L', 'E', 'D'};

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is, const std::string& path) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw ParseError(path + ": truncated ground-state dump");
  return v;
}

}  // namespace

void write_edstate(const std::string& path, const DenseGroundState& gs) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path);
  os.write(kEdMagic, sizeof kEdMagic);
  put(os, std::uint32_t{2});
  put(os, static_cast<std::uint32_t>(gs.num_sites));
  put(os, gs.energy);
  put(os, gs.residual);
  put(os, static_cast<std::uint8_t>(gs.degenerate));
  put(os, static_cast<std::uint8_t>(gs.seed.has_value()));
  put(os, gs.seed.value_or(0));
  put(os, static_cast<std::uint32_t>(gs.model.size()));
  os.write(gs.model.data(), static_cast<std::streamsize>(gs.model.size()));
  put(os, static_cast<std::uint64_t>(gs.vector.size()));
  for (Index i = 0; i < gs.vector.size(); ++i) {
    put(os, gs.vector(i).real());
    put(os, gs.vector(i).imag());
  }
  if (!os) throw Error("write failed: " + path);
}

DenseGroundState read_edstate(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("cannot open " + path);
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kEdMagic, sizeof magic) != 0) throw ParseError(path + ": not a ground-state dump");
  const auto version = get<std::uint32_t>(is, path);
  if (version != 1 && version != 2) throw ParseError(path + ": unsupported version");
  DenseGroundState g;
  g.num_sites = static_cast<int>(get<std::uint32_t>(is, path));
  g.energy = get<double>(is, path);
  g.residual = get<double>(is, path);
  if (version >= 2) {  // labels; version 1 dumps carry only the vector
    g.degenerate = get<std::uint8_t>(is, path) != 0;
    const bool has_seed = get<std::uint8_t>(is, path) != 0;
    const auto seed = get<std::uint64_t>(is, path);
    if (has_seed) g.seed = seed;
    const auto len = get<std::uint32_t>(is, path);
    if (len > 4096) throw ParseError(path + ": model label too long");
    g.model.resize(len);
    is.read(g.model.data(), len);
    if (!is) throw ParseError(path + ": truncated");
  }
  const auto n = get<std::uint64_t>(is, path);
  if (g.num_sites > kMaxEdSites || n != (1ULL << g.num_sites)) throw ParseError(path + ": inconsistent length");
  g.vector.resize(static_cast<Index>(n));
  for (Index i = 0; i < g.vector.size(); ++i) {
    const double re = get<double>(is, path);
    const double im = get<double>(is, path);
    g.vector(i) = cplx(re, im);
  }
  return g;
}

}  // namespace spinml
