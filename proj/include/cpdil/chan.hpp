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

#ifndef CPDIL_CHAN_HPP
#define CPDIL_CHAN_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "cpdil/linalg.hpp"
#include "cpdil/types.hpp"

namespace cpdil {

//============================================================================
// Representations of completely positive maps on M_n
//============================================================================

// Ordered list of n x n operators {T_i}; the map is a -> sum_i T_i a T_i^*.
// Only shape and finiteness are enforced here; contractivity is a property
// reported by classify() and required by the product-system builders.
class KrausFamily {
 public:
  KrausFamily() = default;

  explicit KrausFamily(std::vector<Matrix> ops) : ops_(std::move(ops)) {
    if (ops_.empty()) throw InvalidInput("Kraus family must be non-empty");
    dim_ = ops_.front().rows();
    if (dim_ == 0) throw InvalidInput("Kraus operators must be non-empty");
    for (std::size_t i = 0; i < ops_.size(); ++i) {
      const Matrix& t = ops_[i];
      if (t.rows() != dim_ || t.cols() != dim_)
        throw InvalidInput("Kraus operator " + std::to_string(i) + " has shape " +
                           shape_str(t.rows(), t.cols()) + ", expected " +
                           shape_str(dim_, dim_));
      if (!all_finite(t))
        throw InvalidInput("Kraus operator " + std::to_string(i) +
                           " has non-finite entries");
    }
  }

  Eigen::Index dim() const { return dim_; }
  std::size_t size() const { return ops_.size(); }
  const std::vector<Matrix>& ops() const { return ops_; }
  const Matrix& operator[](std::size_t i) const { return ops_[i]; }

  // Appends zero operators up to `length`.
  KrausFamily padded(std::size_t length) const {
    std::vector<Matrix> ops = ops_;
    while (ops.size() < length) ops.push_back(Matrix::Zero(dim_, dim_));
    return KrausFamily(std::move(ops));
  }

  // sum_i T_i T_i^*
  Matrix row_gram() const {
    Matrix s = Matrix::Zero(dim_, dim_);
    for (const auto& t : ops_) s.noalias() += t * t.adjoint();
    return s;
  }

 private:
  Eigen::Index dim_ = 0;
  std::vector<Matrix> ops_;
};

struct ChoiMatrix {
  Eigen::Index dim = 0;
  Matrix matrix;  // dim^2 x dim^2, sum_i vec(T_i) vec(T_i)^*

  ChoiMatrix() = default;
  ChoiMatrix(Eigen::Index n, Matrix m) : dim(n), matrix(std::move(m)) {
    if (n <= 0 || matrix.rows() != n * n || matrix.cols() != n * n)
      throw InvalidInput("Choi matrix must be " + shape_str(n * n, n * n) +
                         ", got " + shape_str(matrix.rows(), matrix.cols()));
    if (!all_finite(matrix))
      throw InvalidInput("Choi matrix has non-finite entries");
  }
};

// Acts on column-stacked matrices: vec(Phi(a)) = matrix * vec(a).
struct Superoperator {
  Eigen::Index dim = 0;
  Matrix matrix;

  Superoperator() = default;
  Superoperator(Eigen::Index n, Matrix m) : dim(n), matrix(std::move(m)) {
    if (n <= 0 || matrix.rows() != n * n || matrix.cols() != n * n)
      throw InvalidInput("superoperator must be " + shape_str(n * n, n * n));
  }
};

//============================================================================
// Conversions
//============================================================================

inline ChoiMatrix kraus_to_choi(const KrausFamily& k) {
  const Eigen::Index n = k.dim();
  Matrix c = Matrix::Zero(n * n, n * n);
  for (const auto& t : k.ops()) {
    const Vector v = linalg::vec(t);
    c.noalias() += v * v.adjoint();
  }
  return ChoiMatrix(n, std::move(c));
}

inline KrausFamily choi_to_kraus(const ChoiMatrix& c, double tol = kDefaultTol) {
  const Eigen::Index n = c.dim;
  const double scale = std::max(1.0, c.matrix.norm());
  const double asym = (c.matrix - c.matrix.adjoint()).norm();
  if (asym > tol * scale)
    throw InvalidInput("Choi matrix is not Hermitian (residual " +
                       std::to_string(asym) + ")");
  const auto eig = linalg::hermitian_eig(c.matrix);
  const auto& lambda = eig.eigenvalues();
  if (lambda(0) < -tol)
    throw NotCompletelyPositive(
        "Choi matrix has eigenvalue " + std::to_string(lambda(0)) +
            " < -tol; the map is not completely positive",
        lambda(0));
  std::vector<Matrix> ops;
  // Descending eigenvalue order gives the dominant operator first.
  for (Eigen::Index i = lambda.size() - 1; i >= 0; --i) {
    if (lambda(i) <= tol) continue;
    ops.push_back(linalg::unvec(std::sqrt(lambda(i)) * eig.eigenvectors().col(i), n));
  }
  if (ops.empty()) ops.push_back(Matrix::Zero(n, n));
  return KrausFamily(std::move(ops));
}

inline Superoperator kraus_to_superoperator(const KrausFamily& k) {
  const Eigen::Index n = k.dim();
  Matrix s = Matrix::Zero(n * n, n * n);
  for (const auto& t : k.ops()) s += linalg::kron(t.conjugate(), t);
  return Superoperator(n, std::move(s));
}

// The two encodings differ by an index reshuffle:
// S[r1 + n r2][c1 + n c2] = C[r1 + n c1][r2 + n c2].
inline Matrix reshuffle(const Matrix& m, Eigen::Index n) {
  Matrix out(n * n, n * n);
  for (Eigen::Index r1 = 0; r1 < n; ++r1)
    for (Eigen::Index r2 = 0; r2 < n; ++r2)
      for (Eigen::Index c1 = 0; c1 < n; ++c1)
        for (Eigen::Index c2 = 0; c2 < n; ++c2)
          out(r1 + n * r2, c1 + n * c2) = m(r1 + n * c1, r2 + n * c2);
  return out;
}

inline Superoperator choi_to_superoperator(const ChoiMatrix& c) {
  return Superoperator(c.dim, reshuffle(c.matrix, c.dim));
}

inline ChoiMatrix superoperator_to_choi(const Superoperator& s) {
  return ChoiMatrix(s.dim, reshuffle(s.matrix, s.dim));
}

//============================================================================
// CPMap
//============================================================================

// A CP map on M_n. The Kraus family is the stored form; Choi and
// superoperator matrices are derived on request.
class CPMap {
 public:
  CPMap() = default;
  explicit CPMap(KrausFamily kraus) : kraus_(std::move(kraus)) {}
  explicit CPMap(std::vector<Matrix> ops) : kraus_(std::move(ops)) {}

  static CPMap from_choi(const ChoiMatrix& c, double tol = kDefaultTol) {
    return CPMap(choi_to_kraus(c, tol));
  }
  static CPMap from_superoperator(const Superoperator& s,
                                  double tol = kDefaultTol) {
    return from_choi(superoperator_to_choi(s), tol);
  }

  Eigen::Index dim() const { return kraus_.dim(); }
  const KrausFamily& kraus() const { return kraus_; }
  ChoiMatrix choi() const { return kraus_to_choi(kraus_); }
  Superoperator superoperator() const { return kraus_to_superoperator(kraus_); }

 private:
  KrausFamily kraus_;
};

inline CPMap identity_map(Eigen::Index n) {
  return CPMap(std::vector<Matrix>{Matrix::Identity(n, n)});
}

inline CPMap conjugation(const Matrix& u) { return CPMap(std::vector<Matrix>{u}); }

// Equivalent map with a linearly independent Kraus family (Choi eigenvectors).
inline CPMap with_independent_kraus(const CPMap& phi, double tol = kDefaultTol) {
  return CPMap::from_choi(phi.choi(), tol);
}

//============================================================================
// Application, composition, classification
//============================================================================

inline Matrix apply(const CPMap& phi, const Matrix& a) {
  const Eigen::Index n = phi.dim();
  if (a.rows() != n || a.cols() != n)
    throw InvalidInput("apply: argument is " + shape_str(a.rows(), a.cols()) +
                       ", map acts on " + shape_str(n, n));
  Matrix out = Matrix::Zero(n, n);
  for (const auto& t : phi.kraus().ops()) out.noalias() += t * a * t.adjoint();
  return out;
}

inline Matrix apply(const Superoperator& s, const Matrix& a) {
  if (a.rows() != s.dim || a.cols() != s.dim)
    throw InvalidInput("apply: argument shape does not match superoperator");
  return linalg::unvec(s.matrix * linalg::vec(a), s.dim);
}

// phi after psi. Kraus operators T_i S_j in lexicographic (i, j) order.
inline CPMap compose(const CPMap& phi, const CPMap& psi) {
  if (phi.dim() != psi.dim())
    throw InvalidInput("compose: dimension mismatch (" +
                       std::to_string(phi.dim()) + " vs " +
                       std::to_string(psi.dim()) + ")");
  std::vector<Matrix> ops;
  ops.reserve(phi.kraus().size() * psi.kraus().size());
  for (const auto& t : phi.kraus().ops())
    for (const auto& s : psi.kraus().ops()) ops.push_back(t * s);
  return CPMap(std::move(ops));
}

// phi^k, with phi^0 the identity.
inline CPMap power(const CPMap& phi, int k) {
  CPMap out = identity_map(phi.dim());
  for (int i = 0; i < k; ++i) out = compose(phi, out);
  return out;
}

struct ChannelReport {
  bool is_cp = false;
  bool is_unital = false;
  bool is_contractive = false;
  double min_choi_eigenvalue = 0.0;
  double unitality_residual = 0.0;  // ||Phi(I) - I||_F
  double max_row_gram_eigenvalue = 0.0;
  double tol = kDefaultTol;
};

inline ChannelReport classify(const KrausFamily& k, double tol = kDefaultTol) {
  ChannelReport r;
  r.tol = tol;
  r.min_choi_eigenvalue = linalg::min_hermitian_eigenvalue(kraus_to_choi(k).matrix);
  r.is_cp = r.min_choi_eigenvalue >= -tol;
  const Matrix g = k.row_gram();
  r.unitality_residual = (g - Matrix::Identity(k.dim(), k.dim())).norm();
  r.is_unital = r.unitality_residual <= tol;
  r.max_row_gram_eigenvalue = linalg::max_hermitian_eigenvalue(g);
  r.is_contractive = r.max_row_gram_eigenvalue <= 1.0 + tol;
  return r;
}

inline ChannelReport classify(const CPMap& phi, double tol = kDefaultTol) {
  return classify(phi.kraus(), tol);
}

//============================================================================
// Unitary relating two Kraus decompositions of one map
//============================================================================

struct EquivalenceUnitary {
  Matrix u;  // A_i = sum_j u(i, j) B_j
  double unitarity_residual = 0.0;    // ||u^* u - I||_F
  double intertwining_residual = 0.0; // max_i ||A_i - sum_j u_ij B_j||_F
};

inline double intertwining_residual(const std::vector<Matrix>& a,
                                    const std::vector<Matrix>& b,
                                    const Matrix& u) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    Matrix acc = a[i];
    for (std::size_t j = 0; j < b.size(); ++j)
      acc -= u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * b[j];
    worst = std::max(worst, acc.norm());
  }
  return worst;
}

inline double unitarity_residual(const Matrix& u) {
  return (u.adjoint() * u - Matrix::Identity(u.cols(), u.cols())).norm();
}

// Both families are zero-padded to a common length L. With M_A, M_B the
// n^2 x L matrices of vectorized operators and C = M_A M_A^* = V L V^* the
// shared Choi matrix, W_A = M_A^* V L^{-1/2} and W_B likewise have
// orthonormal columns and M_A = M_B (W_B W_A^* + W_B' W_A'^*), where the
// primed blocks are orthonormal completions. u is the transpose of that
// L x L unitary.
inline EquivalenceUnitary kraus_equivalence_unitary(const KrausFamily& a_in,
                                                    const KrausFamily& b_in,
                                                    double tol = kDefaultTol) {
  if (a_in.dim() != b_in.dim())
    throw InvalidInput("Kraus families act on different dimensions");
  const Eigen::Index n = a_in.dim();
  const std::size_t len = std::max(a_in.size(), b_in.size());
  const KrausFamily a = a_in.padded(len);
  const KrausFamily b = b_in.padded(len);
  const auto L = static_cast<Eigen::Index>(len);

  Matrix ma(n * n, L), mb(n * n, L);
  for (Eigen::Index j = 0; j < L; ++j) {
    ma.col(j) = linalg::vec(a[static_cast<std::size_t>(j)]);
    mb.col(j) = linalg::vec(b[static_cast<std::size_t>(j)]);
  }
  const Matrix ca = ma * ma.adjoint();
  const Matrix cb = mb * mb.adjoint();
  const double scale = std::max(1.0, ca.norm());
  const double mismatch = (ca - cb).norm();
  if (mismatch > tol * scale)
    throw NotSameChannel("Kraus families define different maps (Choi mismatch " +
                             std::to_string(mismatch) + ")",
                         mismatch);

  const auto eig = linalg::hermitian_eig(ca);
  const auto& lambda = eig.eigenvalues();
  const double cutoff = tol * std::max(1.0, lambda.maxCoeff());
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = lambda.size() - 1; i >= 0; --i)
    if (lambda(i) > cutoff) keep.push_back(i);
  const auto r = static_cast<Eigen::Index>(keep.size());

  Matrix wa(L, r), wb(L, r);
  for (Eigen::Index c = 0; c < r; ++c) {
    const Eigen::Index i = keep[static_cast<std::size_t>(c)];
    const Vector v = eig.eigenvectors().col(i);
    const double inv_sqrt = 1.0 / std::sqrt(lambda(i));
    wa.col(c) = ma.adjoint() * v * inv_sqrt;
    wb.col(c) = mb.adjoint() * v * inv_sqrt;
  }
  const Matrix wa_perp = linalg::complete_orthonormal(wa, L);
  const Matrix wb_perp = linalg::complete_orthonormal(wb, L);
  const Matrix y = wb * wa.adjoint() + wb_perp * wa_perp.adjoint();

  EquivalenceUnitary out;
  out.u = y.transpose();
  out.unitarity_residual = unitarity_residual(out.u);
  out.intertwining_residual = intertwining_residual(a.ops(), b.ops(), out.u);
  return out;
}

}  // namespace cpdil

#endif  // CPDIL_CHAN_HPP
