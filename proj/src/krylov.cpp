#include "spinml/krylov.hpp"

#include <cmath>
#include <random>

namespace spinml {

namespace {

Vector random_vector(Index dim, std::mt19937_64& gen) {
  Vector v(dim);
  for (Index i = 0; i < dim; ++i) {
    const double re = static_cast<double>(gen() >> 11) * 0x1.0p-53 - 0.5;
    const double im = static_cast<double>(gen() >> 11) * 0x1.0p-53 - 0.5;
    v(i) = cplx(re, im);
  }
  return v;
}

// two Gram-Schmidt passes against the columns of `basis` (first `cols` of them)
void project_out(Vector& v, const Matrix& basis, Index cols) {
  if (cols == 0) return;
  for (int pass = 0; pass < 2; ++pass) {
    const Vector c = basis.leftCols(cols).adjoint() * v;
    v.noalias() -= basis.leftCols(cols) * c;
  }
}

std::vector<EigenPair> dense_eigs(const LinearOp& apply, Index dim, int count) {
  Matrix h(dim, dim);
  for (Index j = 0; j < dim; ++j) {
    Vector e = Vector::Zero(dim);
    e(j) = 1.0;
    h.col(j) = apply(e);
  }
  h = (0.5 * (h + h.adjoint())).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  std::vector<EigenPair> out;
  for (int k = 0; k < count; ++k) {
    EigenPair p;
    p.value = es.eigenvalues()(k);
    p.vector = es.eigenvectors().col(k);
    p.residual = (h * p.vector - p.value * p.vector).norm();
    p.matvecs = static_cast<int>(dim);
    out.push_back(std::move(p));
  }
  return out;
}

// lowest eigenpair of A on the orthogonal complement of locked.leftCols(nlocked)
EigenPair lowest_deflated(const LinearOp& apply, Index dim, const Matrix& locked, Index nlocked, Vector start,
                          const KrylovOptions& opts, std::mt19937_64& gen) {
  const Index room = dim - nlocked;
  const Index maxb = std::max<Index>(2, std::min<Index>(opts.max_basis, room));
  const Index keep = std::max<Index>(1, std::min<Index>(maxb / 3, 8));

  auto fresh = [&](Vector v) {
    project_out(v, locked, nlocked);
    double n = v.norm();
    while (!(n > 1e-10)) {
      v = random_vector(dim, gen);
      project_out(v, locked, nlocked);
      n = v.norm();
    }
    return Vector(v / n);
  };

  Matrix V(dim, maxb), W(dim, maxb);
  Matrix G = Matrix::Zero(maxb, maxb);
  Index m = 0;
  int matvecs = 0;
  double anorm = opts.norm_hint;

  auto append = [&](const Vector& v) {
    V.col(m) = v;
    W.col(m) = apply(v);
    ++matvecs;
    G.col(m).head(m + 1) = V.leftCols(m + 1).adjoint() * W.col(m);
    G.row(m).head(m) = G.col(m).head(m).adjoint();
    G(m, m) = G(m, m).real();
    ++m;
  };

  append(fresh(start.size() == dim ? start : Vector::Zero(dim)));
  int restarts = 0;
  double res = 0.0;
  for (;;) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(G.topLeftCorner(m, m));
    const auto& theta = es.eigenvalues();
    anorm = std::max(anorm, theta.cwiseAbs().maxCoeff());
    const Vector y = es.eigenvectors().col(0);
    Vector x = V.leftCols(m) * y;
    Vector r = W.leftCols(m) * y - theta(0) * x;
    project_out(r, locked, nlocked);
    res = r.norm();
    if (res <= opts.tol * std::max(anorm, 1e-300) || m == room) {
      const double nx = x.norm();
      return {theta(0), x / nx, res, matvecs};
    }
    if (m == maxb) {
      if (++restarts > opts.max_restarts)
        throw KrylovError("Krylov eigensolver did not converge (residual " + std::to_string(res) + ")", res);
      const Matrix Y = es.eigenvectors().leftCols(keep);
      const Matrix Vk = V.leftCols(m) * Y;
      const Matrix Wk = W.leftCols(m) * Y;
      V.leftCols(keep) = Vk;
      W.leftCols(keep) = Wk;
      G.setZero();
      for (Index k = 0; k < keep; ++k) G(k, k) = theta(k);
      m = keep;
    }
    project_out(r, V, m);
    const double nr = r.norm();
    append(nr > 1e-300 && nr > 1e-14 * res ? Vector(r / nr) : fresh(random_vector(dim, gen)));
  }
}

}  // namespace

std::vector<EigenPair> krylov_eigs(const LinearOp& apply, Index dim, int count, const KrylovOptions& opts,
                                   const std::vector<Vector>& guesses) {
  if (dim < 1) throw DomainError("krylov: empty space");
  if (count < 1 || count > dim) throw DomainError("krylov: requested eigenpair count out of range");
  if (dim <= opts.dense_limit) return dense_eigs(apply, dim, count);
  std::mt19937_64 gen(opts.seed);
  Matrix locked(dim, count);
  std::vector<EigenPair> out;
  for (int k = 0; k < count; ++k) {
    Vector start = static_cast<std::size_t>(k) < guesses.size() ? guesses[static_cast<std::size_t>(k)] : Vector();
    if (start.size() != dim) start = random_vector(dim, gen);
    KrylovOptions o = opts;
    for (const auto& p : out) o.norm_hint = std::max(o.norm_hint, std::abs(p.value));
    EigenPair p = lowest_deflated(apply, dim, locked, k, start, o, gen);
    locked.col(k) = p.vector;
    out.push_back(std::move(p));
  }
  return out;
}

EigenPair krylov_lowest(const LinearOp& apply, Index dim, int target_index, const KrylovOptions& opts,
                        const Vector* guess) {
  if (target_index < 0) throw DomainError("krylov: negative target index");
  std::vector<Vector> guesses(static_cast<std::size_t>(target_index) + 1);
  if (guess) guesses.back() = *guess;
  auto pairs = krylov_eigs(apply, dim, target_index + 1, opts, guesses);
  int total = 0;
  for (const auto& p : pairs) total += p.matvecs;
  EigenPair p = std::move(pairs.back());
  p.matvecs = total;
  return p;
}

namespace {

// one Lanczos exponential; returns false when the error estimate stays above tol
bool expm_once(const LinearOp& apply, const Vector& v, double t, double shift, int max_basis, double tol, Vector& out,
               int& matvecs) {
  const double beta0 = v.norm();
  if (beta0 == 0.0) {
    out = v;
    return true;
  }
  const Index dim = v.size();
  const Index maxb = std::min<Index>(max_basis, dim);
  Matrix V(dim, maxb);
  std::vector<double> alpha, beta;
  V.col(0) = v / beta0;
  for (Index j = 0; j < maxb; ++j) {
    Vector w = apply(V.col(j)) - shift * V.col(j);
    ++matvecs;
    const double a = V.col(j).dot(w).real();
    alpha.push_back(a);
    project_out(w, V, j + 1);
    const double b = w.norm();
    const Index n = j + 1;
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
      T(i, i) = alpha[static_cast<std::size_t>(i)];
      if (i + 1 < n) T(i, i + 1) = T(i + 1, i) = beta[static_cast<std::size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    const Eigen::VectorXd ex = (-t * es.eigenvalues().array()).exp().matrix();
    const Eigen::VectorXd c = es.eigenvectors() * ex.asDiagonal() * es.eigenvectors().row(0).transpose();
    const bool breakdown = b <= 1e-14 * std::max(1.0, std::abs(a));
    if (breakdown || b * std::abs(c(n - 1)) <= tol * c.norm() || n == dim) {
      out = beta0 * (V.leftCols(n) * c.cast<cplx>());
      return true;
    }
    if (n == maxb) return false;
    beta.push_back(b);
    V.col(n) = w / b;
  }
  return false;
}

}  // namespace

Vector krylov_expm(const LinearOp& apply, const Vector& v, double t, double shift, int max_basis, double tol,
                   int* matvecs) {
  int mv = 0;
  Vector cur = v;
  double left = t;
  double h = t;
  int splits = 0;
  while (left > 0.0) {
    h = std::min(h, left);
    Vector next;
    if (expm_once(apply, cur, h, shift, max_basis, tol, next, mv)) {
      cur = std::move(next);
      left -= h;
    } else {
      if (++splits > 40) throw KrylovError("Krylov exponential did not converge", h);
      h *= 0.5;
    }
  }
  if (matvecs) *matvecs += mv;
  return cur;
}

}  // namespace spinml
