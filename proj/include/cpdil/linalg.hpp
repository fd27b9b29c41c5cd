// Copyright 2026 The cpdil Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CPDIL_LINALG_HPP
#define CPDIL_LINALG_HPP

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "cpdil/types.hpp"

namespace cpdil::linalg {

// Column-stacking vectorization: vec(a)[r + n*c] = a(r, c).
inline Vector vec(const Matrix& a) {
  return Eigen::Map<const Vector>(a.data(), a.size());
}

inline Matrix unvec(const Vector& v, Eigen::Index rows) {
  return Eigen::Map<const Matrix>(v.data(), rows, v.size() / rows);
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// I_k (x) b without materializing the identity.
inline Matrix kron_identity_left(Eigen::Index k, const Matrix& b) {
  Matrix out = Matrix::Zero(k * b.rows(), k * b.cols());
  for (Eigen::Index i = 0; i < k; ++i)
    out.block(i * b.rows(), i * b.cols(), b.rows(), b.cols()) = b;
  return out;
}

inline Matrix matrix_unit(Eigen::Index n, Eigen::Index i, Eigen::Index j) {
  Matrix e = Matrix::Zero(n, n);
  e(i, j) = 1.0;
  return e;
}

inline Matrix hermitian_part(const Matrix& a) {
  return (a + a.adjoint()) / 2.0;
}

// Eigen-decomposition of the Hermitian part; eigenvalues ascending.
inline Eigen::SelfAdjointEigenSolver<Matrix> hermitian_eig(const Matrix& a) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(hermitian_part(a));
}

inline double min_hermitian_eigenvalue(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return hermitian_eig(a).eigenvalues().minCoeff();
}

inline double max_hermitian_eigenvalue(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return hermitian_eig(a).eigenvalues().maxCoeff();
}

// Extends the orthonormal columns of `w` (L x r) to an orthonormal basis of
// C^L and returns only the added columns, L x (L - r). Candidates are the
// standard basis vectors e_0, e_1, ... in order (two-pass Gram-Schmidt), so
// the completion is reproducible.
inline Matrix complete_orthonormal(const Matrix& w, Eigen::Index length) {
  const Eigen::Index r = w.cols();
  Matrix basis(length, length);
  basis.leftCols(r) = w;
  Eigen::Index have = r;
  for (Eigen::Index j = 0; j < length && have < length; ++j) {
    Vector v = Vector::Zero(length);
    v(j) = 1.0;
    for (int pass = 0; pass < 2; ++pass)
      v -= basis.leftCols(have) * (basis.leftCols(have).adjoint() * v);
    const double norm = v.norm();
    if (norm > 1e-6) basis.col(have++) = v / norm;
  }
  return basis.rightCols(length - r);
}

// SVDs below use JacobiSVD. BDCSVD in Eigen 3.4.0 returns wrong singular
// values and NaN vectors on some rank-deficient inputs that arise here.

// Orthonormal basis of the column span of `a`; singular values at or below
// rel_tol * sigma_max are treated as zero.
inline Matrix orthonormal_column_basis(const Matrix& a, double rel_tol) {
  if (a.cols() == 0 || a.rows() == 0) return Matrix(a.rows(), 0);
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  const double cutoff = rel_tol * std::max(s(0), 0.0);
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > cutoff) ++rank;
  return svd.matrixU().leftCols(rank);
}

inline Matrix pseudo_inverse(const Matrix& a, double rel_tol) {
  if (a.size() == 0) return Matrix::Zero(a.cols(), a.rows());
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double cutoff = rel_tol * std::max(s(0), 0.0);
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > cutoff) ++rank;
  Matrix vs = svd.matrixV().leftCols(rank);
  for (Eigen::Index i = 0; i < rank; ++i) vs.col(i) /= s(i);
  return vs * svd.matrixU().leftCols(rank).adjoint();
}

// Operator (spectral) norm.
inline double operator_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

}  // namespace cpdil::linalg

#endif  // CPDIL_LINALG_HPP
