#pragma once

// Mode-wise kernels on node tensors.
//
// A node tensor is stored as a Matrix with one row per SPF and one column per
// child configuration; the column multi-index runs with the last child
// fastest. Viewed as a tensor the modes are [row, child_0, ..., child_{k-1}],
// and every kernel here reshapes a single mode into a dense matrix product.

#include <vector>

#include "spinml/types.hpp"

namespace spinml {

using Shape = std::vector<Index>;  // dims[0] = rows, dims[1 + c] = child c

/// Elements before and after `mode` in memory order.
struct ModeSplit {
  Index inner;
  Index extent;
  Index outer;
};
ModeSplit split_mode(const Shape& shape, int mode);

/// new[.., i, ..] = sum_k op(i, k) old[.., k, ..]; op may change the extent.
Matrix mode_product(const Matrix& t, const Shape& shape, int mode, const Matrix& op);
void mode_product_inplace(Matrix& t, const Shape& shape, int mode, const Matrix& op);

/// G(i, k) = sum over all other indices of conj(bra[.., i, ..]) ket[.., k, ..].
Matrix mode_gram(const Matrix& bra, const Matrix& ket, const Shape& shape, int mode);

/// Matrix with one column per index of `mode` and rows over everything else.
Matrix unfold(const Matrix& t, const Shape& shape, int mode);
/// Inverse of unfold for a tensor of the given shape.
Matrix fold(const Matrix& u, const Shape& shape, int mode);

/// Rows of `a` orthonormalized by modified Gram-Schmidt with one
/// reorthogonalization pass; returns L with a = L * q (L lower triangular).
/// Rows that are numerically dependent are replaced by orthonormal
/// complements and get a zero column in L.
Matrix orthonormalize_rows(Matrix& a);

}  // namespace spinml
