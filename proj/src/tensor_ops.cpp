#include "spinml/tensor_ops.hpp"

#include <cmath>

namespace spinml {

namespace {

using Stride = Eigen::OuterStride<>;
using ConstSlab = Eigen::Map<const Matrix, 0, Stride>;
using Slab = Eigen::Map<Matrix, 0, Stride>;

Index cols_of(const Shape& shape) {
  Index c = 1;
  for (std::size_t k = 1; k < shape.size(); ++k) c *= shape[k];
  return c;
}

}  // namespace

ModeSplit split_mode(const Shape& shape, int mode) {
  const auto m = static_cast<std::size_t>(mode);
  if (m >= shape.size()) throw DomainError("mode out of range");
  if (m == 0) return {1, shape[0], cols_of(shape)};
  Index inner = shape[0];
  for (std::size_t k = m + 1; k < shape.size(); ++k) inner *= shape[k];
  Index outer = 1;
  for (std::size_t k = 1; k < m; ++k) outer *= shape[k];
  return {inner, shape[m], outer};
}

Matrix mode_product(const Matrix& t, const Shape& shape, int mode, const Matrix& op) {
  const auto s = split_mode(shape, mode);
  if (op.cols() != s.extent) throw DomainError("mode_product: operator does not match mode extent");
  if (mode == 0) return op * t;
  const Index next = op.rows();
  Matrix out(t.rows(), t.cols() / s.extent * next);
  const Matrix opT = op.transpose();
  for (Index o = 0; o < s.outer; ++o) {
    ConstSlab in(t.data() + o * s.inner * s.extent, s.inner, s.extent, Stride(s.inner));
    Slab res(out.data() + o * s.inner * next, s.inner, next, Stride(s.inner));
    res.noalias() = in * opT;
  }
  return out;
}

void mode_product_inplace(Matrix& t, const Shape& shape, int mode, const Matrix& op) {
  t = mode_product(t, shape, mode, op);
}

Matrix mode_gram(const Matrix& bra, const Matrix& ket, const Shape& shape, int mode) {
  const auto s = split_mode(shape, mode);
  if (mode == 0) return bra.conjugate() * ket.transpose();
  Matrix g = Matrix::Zero(s.extent, s.extent);
  for (Index o = 0; o < s.outer; ++o) {
    ConstSlab b(bra.data() + o * s.inner * s.extent, s.inner, s.extent, Stride(s.inner));
    ConstSlab k(ket.data() + o * s.inner * s.extent, s.inner, s.extent, Stride(s.inner));
    g.noalias() += b.adjoint() * k;
  }
  return g;
}

Matrix unfold(const Matrix& t, const Shape& shape, int mode) {
  const auto s = split_mode(shape, mode);
  if (mode == 0) return t.transpose();
  Matrix u(s.inner * s.outer, s.extent);
  for (Index o = 0; o < s.outer; ++o) {
    ConstSlab in(t.data() + o * s.inner * s.extent, s.inner, s.extent, Stride(s.inner));
    u.middleRows(o * s.inner, s.inner) = in;
  }
  return u;
}

Matrix fold(const Matrix& u, const Shape& shape, int mode) {
  const auto s = split_mode(shape, mode);
  if (mode == 0) return u.transpose();
  Matrix t(shape[0], cols_of(shape));
  for (Index o = 0; o < s.outer; ++o) {
    Slab out(t.data() + o * s.inner * s.extent, s.inner, s.extent, Stride(s.inner));
    out = u.middleRows(o * s.inner, s.inner);
  }
  return t;
}

Matrix orthonormalize_rows(Matrix& a) {
  const Index n = a.rows();
  const Index dim = a.cols();
  Matrix l = Matrix::Zero(n, n);
  Index probe = 0;  // next unit vector tried when a row is dependent
  for (Index i = 0; i < n; ++i) {
    Vector v = a.row(i).transpose();
    const double before = v.norm();
    for (int pass = 0; pass < 2; ++pass) {
      for (Index j = 0; j < i; ++j) {
        const cplx c = a.row(j).transpose().dot(v);
        v -= c * a.row(j).transpose();
        l(i, j) += c;
      }
    }
    double nv = v.norm();
    if (before == 0.0 || nv <= 1e-13 * before) {
      // dependent row: keep its expansion in earlier rows, fill q_i with a complement
      for (; probe < dim; ++probe) {
        Vector e = Vector::Zero(dim);
        e(probe) = 1.0;
        for (int pass = 0; pass < 2; ++pass)
          for (Index j = 0; j < i; ++j) e -= a.row(j).transpose().dot(e) * a.row(j).transpose();
        if (e.norm() > 1e-6) {
          v = e;
          ++probe;
          break;
        }
      }
      nv = v.norm();
      a.row(i) = (v / nv).transpose();
      continue;
    }
    l(i, i) = nv;
    a.row(i) = (v / nv).transpose();
  }
  return l;
}

}  // namespace spinml
