#include "spinml/state.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

namespace spinml {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

double uniform_pm1(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

// kron of vectors, last factor fastest
Vector kron(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

constexpr char kStateMagic[8] = {'S', 'P', 'I', 'N', 'M', 'L', 'S', 'T'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is, const std::string& path) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw ParseError(path + ": truncated checkpoint");
  return v;
}

}  // namespace

MlState::MlState(TreeSpec spec) : spec_(std::move(spec)) {
  tensors_.resize(static_cast<std::size_t>(spec_.size()));
  for (const auto& n : spec_.nodes()) {
    if (n.is_leaf()) continue;
    tensors_[static_cast<std::size_t>(n.id)] = Matrix::Zero(n.dim, spec_.child_configurations(n.id));
  }
}

Shape MlState::shape(int node) const {
  const auto& n = spec_.node(node);
  Shape s{n.dim};
  for (int c : n.children) s.push_back(spec_.node(c).dim);
  return s;
}

MlState random_state(const TreeSpec& spec, std::uint64_t seed) {
  require_valid(spec);
  MlState st(spec);
  std::mt19937_64 gen(seed);
  for (const auto& n : spec.nodes()) {
    if (n.is_leaf()) continue;
    Matrix& a = st.tensor(n.id);
    for (Index j = 0; j < a.cols(); ++j)
      for (Index i = 0; i < a.rows(); ++i) a(i, j) = cplx(uniform_pm1(gen), uniform_pm1(gen));
    orthonormalize_rows(a);
  }
  return st;
}

Eigen::Vector2cd spinor(const Bloch& d) {
  const double r = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
  if (r < 1e-12) throw DomainError("product_state: zero Bloch vector");
  const double theta = std::acos(std::clamp(d[2] / r, -1.0, 1.0));
  const double phi = std::atan2(d[1], d[0]);
  return {cplx(std::cos(theta / 2), 0.0), std::polar(std::sin(theta / 2), phi)};
}

MlState product_state(const TreeSpec& spec, const std::vector<Bloch>& directions) {
  require_valid(spec);
  if (static_cast<int>(directions.size()) != spec.num_sites())
    throw DomainError("product_state: need one direction per site");
  MlState st(spec);
  for (int id : spec.post_order()) {
    const auto& n = spec.node(id);
    if (n.is_leaf()) continue;
    Vector row = Vector::Ones(1);
    for (int c : n.children) {
      const auto& cn = spec.node(c);
      Vector f;
      if (cn.is_leaf()) {
        f = spinor(directions[static_cast<std::size_t>(cn.site)]);
      } else {
        f = Vector::Zero(cn.dim);
        f(0) = 1.0;
      }
      row = kron(row, f);
    }
    Matrix& a = st.tensor(id);
    a.setZero();
    a.row(0) = row.transpose();
    orthonormalize_rows(a);
  }
  return st;
}

Matrix spf_amplitudes(const MlState& state, int node) {
  const auto& spec = state.spec();
  const auto& n = spec.node(node);
  if (n.is_leaf()) return Matrix::Identity(2, 2);
  Matrix t = state.tensor(node);
  Shape shape = state.shape(node);
  for (std::size_t k = 0; k < n.children.size(); ++k) {
    const Matrix phi = spf_amplitudes(state, n.children[k]);
    t = mode_product(t, shape, static_cast<int>(k) + 1, phi.transpose());
    shape[k + 1] = phi.cols();
  }
  return t;
}

Vector to_statevector(const MlState& state) {
  const int L = state.num_sites();
  if (L > 24) throw CapacityError("to_statevector: more than 24 sites");
  const Matrix amp = spf_amplitudes(state, state.spec().root());
  const auto& order = state.spec().sites_under(state.spec().root());
  bool identity = true;
  for (int k = 0; k < L; ++k) identity = identity && order[static_cast<std::size_t>(k)] == k;
  Vector v = amp.row(0).transpose();
  if (identity) return v;
  // leaf k sits at bit L-1-k of the tree index; move it to bit L-1-site
  Vector out(v.size());
  for (std::uint64_t idx = 0; idx < static_cast<std::uint64_t>(v.size()); ++idx) {
    std::uint64_t target = 0;
    for (int k = 0; k < L; ++k) {
      const std::uint64_t bit = (idx >> (L - 1 - k)) & 1U;
      target |= bit << (L - 1 - order[static_cast<std::size_t>(k)]);
    }
    out(static_cast<Index>(target)) = v(static_cast<Index>(idx));
  }
  return out;
}

double orthonormality_check(const MlState& state) {
  double dev = 0.0;
  for (const auto& n : state.spec().nodes()) {
    if (n.is_leaf()) continue;
    const Matrix& a = state.tensor(n.id);
    const Matrix g = a.conjugate() * a.transpose();
    const Matrix d = g - Matrix::Identity(g.rows(), g.cols());
    dev = std::max(dev, d.cwiseAbs().maxCoeff());
  }
  return dev;
}

cplx overlap(const MlState& a, const MlState& b) {
  if (!(a.spec() == b.spec())) throw ConsistencyError("overlap: states live on different trees");
  const auto& spec = a.spec();
  std::vector<Matrix> o(static_cast<std::size_t>(spec.size()));
  for (int id : spec.post_order()) {
    const auto& n = spec.node(id);
    if (n.is_leaf()) {
      o[static_cast<std::size_t>(id)] = Matrix::Identity(2, 2);
      continue;
    }
    Matrix t = b.tensor(id);
    const Shape shape = b.shape(id);
    for (std::size_t k = 0; k < n.children.size(); ++k) {
      const int c = n.children[k];
      if (!spec.node(c).is_leaf()) t = mode_product(t, shape, static_cast<int>(k) + 1, o[static_cast<std::size_t>(c)]);
    }
    o[static_cast<std::size_t>(id)] = a.tensor(id).conjugate() * t.transpose();
  }
  return o[0](0, 0);
}

double norm(const MlState& state) { return std::sqrt(std::abs(overlap(state, state))); }

double canonicalize(MlState& state) {
  const auto& spec = state.spec();
  for (int id : spec.post_order()) {
    const auto& n = spec.node(id);
    if (n.is_leaf() || id == spec.root()) continue;
    const Matrix l = orthonormalize_rows(state.tensor(id));
    const int p = n.parent;
    Matrix& ap = state.tensor(p);
    ap = mode_product(ap, state.shape(p), spec.slot_in_parent(id) + 1, l.transpose());
  }
  return state.tensor(spec.root()).norm();
}

void normalize(MlState& state) {
  const double nrm = canonicalize(state);
  if (!(nrm > 0.0) || !std::isfinite(nrm)) throw StepFailure("normalize: state has zero or non-finite norm");
  state.tensor(state.spec().root()) /= nrm;
}

void write_checkpoint(const std::string& path, const MlState& state) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path);
  os.write(kStateMagic, sizeof kStateMagic);
  put(os, kVersion);
  put(os, tree_hash(state.spec()));
  put(os, static_cast<std::uint32_t>(state.num_sites()));
  put(os, norm(state));
  put(os, state.step);
  std::uint32_t count = 0;
  for (const auto& n : state.spec().nodes()) count += n.is_leaf() ? 0 : 1;
  put(os, count);
  for (const auto& n : state.spec().nodes()) {
    if (n.is_leaf()) continue;
    const Matrix& a = state.tensor(n.id);
    put(os, static_cast<std::uint32_t>(n.id));
    put(os, static_cast<std::uint64_t>(a.rows()));
    put(os, static_cast<std::uint64_t>(a.cols()));
    // row-major, interleaved re/im
    for (Index i = 0; i < a.rows(); ++i)
      for (Index j = 0; j < a.cols(); ++j) {
        put(os, a(i, j).real());
        put(os, a(i, j).imag());
      }
  }
  if (!os) throw Error("write failed: " + path);
}

MlState read_checkpoint(const std::string& path, const TreeSpec& spec) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("cannot open " + path);
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kStateMagic, sizeof magic) != 0) throw ParseError(path + ": not a state checkpoint");
  if (get<std::uint32_t>(is, path) != kVersion) throw ParseError(path + ": unsupported version");
  if (get<std::uint64_t>(is, path) != tree_hash(spec)) throw ConsistencyError(path + ": checkpoint was written for a different tree");
  if (get<std::uint32_t>(is, path) != static_cast<std::uint32_t>(spec.num_sites()))
    throw ConsistencyError(path + ": site count mismatch");
  get<double>(is, path);
  MlState st(spec);
  st.step = get<std::uint64_t>(is, path);
  const auto count = get<std::uint32_t>(is, path);
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto id = static_cast<int>(get<std::uint32_t>(is, path));
    if (id < 0 || id >= spec.size() || spec.node(id).is_leaf()) throw ParseError(path + ": bad node id");
    const auto rows = get<std::uint64_t>(is, path);
    const auto cols = get<std::uint64_t>(is, path);
    Matrix& a = st.tensor(id);
    if (rows != static_cast<std::uint64_t>(a.rows()) || cols != static_cast<std::uint64_t>(a.cols()))
      throw ConsistencyError(path + ": tensor shape mismatch at node " + std::to_string(id));
    for (Index i = 0; i < a.rows(); ++i)
      for (Index j = 0; j < a.cols(); ++j) {
        const double re = get<double>(is, path);
        const double im = get<double>(is, path);
        a(i, j) = cplx(re, im);
      }
  }
  return st;
}

}  // namespace spinml
