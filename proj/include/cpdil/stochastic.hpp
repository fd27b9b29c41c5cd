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

#ifndef CPDIL_STOCHASTIC_HPP
#define CPDIL_STOCHASTIC_HPP

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "cpdil/types.hpp"

namespace cpdil::stochastic {

//============================================================================
// Stochastic matrices: unital CP maps on the diagonal algebra
//============================================================================

namespace detail {

inline void require_square_nonnegative(const RealMatrix& p) {
  if (p.rows() == 0 || p.rows() != p.cols())
    throw InvalidInput("stochastic matrix must be square and non-empty, got " +
                       shape_str(p.rows(), p.cols()));
  if (!p.allFinite()) throw InvalidInput("stochastic matrix has non-finite entries");
  std::string negatives;
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j)
      if (p(i, j) < 0.0) {
        if (!negatives.empty()) negatives += ", ";
        negatives += "(" + std::to_string(i) + "," + std::to_string(j) +
                     ")=" + std::to_string(p(i, j));
      }
  if (!negatives.empty()) throw InvalidInput("negative entries: " + negatives);
}

inline double max_row_sum_deviation(const RealMatrix& p) {
  return (p.rowwise().sum().array() - 1.0).abs().maxCoeff();
}

}  // namespace detail

// Row sums equal to one within tol. Non-square input or negative entries are
// errors rather than a false result.
inline bool validate(const RealMatrix& p, double tol = kDefaultTol) {
  detail::require_square_nonnegative(p);
  return detail::max_row_sum_deviation(p) <= tol;
}

class StochasticMatrix {
 public:
  StochasticMatrix() = default;
  explicit StochasticMatrix(RealMatrix p, double tol = kDefaultTol) : p_(std::move(p)) {
    if (!validate(p_, tol))
      throw InvalidInput("row sums deviate from 1 by " +
                         std::to_string(detail::max_row_sum_deviation(p_)));
  }

  Eigen::Index n() const { return p_.rows(); }
  const RealMatrix& matrix() const { return p_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return p_(i, j); }

 private:
  RealMatrix p_;
};

inline bool is_nonzero(double x, double zero_tol) { return x > zero_tol; }

//============================================================================
// The cardinality criterion
//============================================================================

struct CardWitness {
  Eigen::Index i = 0;
  Eigen::Index k = 0;
  Eigen::Index count_qp = 0;  // |{j : q_kj p_ji != 0}|
  Eigen::Index count_pq = 0;  // |{j : p_kj q_ji != 0}|
};

struct CardReport {
  bool holds = true;
  std::vector<CardWitness> witnesses;
  double zero_tol = kDefaultZeroTol;
};

inline void require_same_size(const StochasticMatrix& p, const StochasticMatrix& q) {
  if (p.n() != q.n())
    throw InvalidInput("stochastic matrices differ in size (" +
                       std::to_string(p.n()) + " vs " + std::to_string(q.n()) + ")");
}

// Support of the two-step space in each (i, k) sector: the products
// q_kj p_ji (resp. p_kj q_ji) are nonzero iff both factors exceed zero_tol.
inline std::vector<Eigen::Index> support_qp(const StochasticMatrix& p,
                                            const StochasticMatrix& q, Eigen::Index i,
                                            Eigen::Index k, double zero_tol) {
  std::vector<Eigen::Index> js;
  for (Eigen::Index j = 0; j < p.n(); ++j)
    if (is_nonzero(q(k, j), zero_tol) && is_nonzero(p(j, i), zero_tol)) js.push_back(j);
  return js;
}

inline CardReport card_criterion(const StochasticMatrix& p, const StochasticMatrix& q,
                                 double zero_tol = kDefaultZeroTol) {
  require_same_size(p, q);
  CardReport r;
  r.zero_tol = zero_tol;
  for (Eigen::Index i = 0; i < p.n(); ++i)
    for (Eigen::Index k = 0; k < p.n(); ++k) {
      const auto qp = static_cast<Eigen::Index>(support_qp(p, q, i, k, zero_tol).size());
      const auto pq = static_cast<Eigen::Index>(support_qp(q, p, i, k, zero_tol).size());
      if (qp != pq) r.witnesses.push_back({i, k, qp, pq});
    }
  r.holds = r.witnesses.empty();
  return r;
}

struct BorderlineEntry {
  char matrix = 'P';
  Eigen::Index i = 0;
  Eigen::Index j = 0;
  double value = 0.0;
};

// Nonzero entries no larger than 10 * zero_tol; the nonzero count is
// discontinuous there, so callers surface these as warnings.
inline std::vector<BorderlineEntry> borderline_entries(const StochasticMatrix& p,
                                                       char name, double zero_tol) {
  std::vector<BorderlineEntry> out;
  for (Eigen::Index i = 0; i < p.n(); ++i)
    for (Eigen::Index j = 0; j < p.n(); ++j)
      if (p(i, j) > 0.0 && p(i, j) <= 10.0 * zero_tol) out.push_back({name, i, j, p(i, j)});
  return out;
}

struct DiagonalReport {
  bool strongly_commute = false;
  bool commute = false;
  double commutation_residual = 0.0;  // ||PQ - QP||_F
  CardReport card;
  double tol = kDefaultTol;
};

inline double commutation_residual(const StochasticMatrix& p, const StochasticMatrix& q) {
  require_same_size(p, q);
  return (p.matrix() * q.matrix() - q.matrix() * p.matrix()).norm();
}

inline DiagonalReport strongly_commute_diagonal(const StochasticMatrix& p,
                                                const StochasticMatrix& q,
                                                double tol = kDefaultTol,
                                                double zero_tol = kDefaultZeroTol) {
  DiagonalReport r;
  r.tol = tol;
  r.commutation_residual = commutation_residual(p, q);
  r.commute = r.commutation_residual <= tol;
  r.card = card_criterion(p, q, zero_tol);
  r.strongly_commute = r.commute && r.card.holds;
  return r;
}

//============================================================================
// Semigroups e^{-t} e^{tP}
//============================================================================

// Scaling and squaring around a truncated Taylor series. For entrywise
// nonnegative input every term is nonnegative, so the result is too.
inline RealMatrix matrix_exponential(const RealMatrix& a) {
  const Eigen::Index n = a.rows();
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const RealMatrix scaled = a / std::ldexp(1.0, squarings);

  RealMatrix sum = RealMatrix::Identity(n, n);
  RealMatrix term = RealMatrix::Identity(n, n);
  for (int k = 1; k <= 40; ++k) {
    term = term * scaled / static_cast<double>(k);
    sum += term;
    if (term.cwiseAbs().maxCoeff() <= 1e-18 * sum.cwiseAbs().maxCoeff()) break;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

inline StochasticMatrix semigroup_at(const StochasticMatrix& p, double t) {
  if (!(t >= 0.0)) throw InvalidInput("semigroup parameter must be >= 0, got " + std::to_string(t));
  RealMatrix e = std::exp(-t) * matrix_exponential(t * p.matrix());
  return StochasticMatrix(std::move(e), 1e-10);
}

//============================================================================
// Irreducibility
//============================================================================

namespace detail {

inline std::vector<bool> reachable_from_zero(const RealMatrix& p, bool reverse,
                                             double zero_tol) {
  const Eigen::Index n = p.rows();
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::vector<Eigen::Index> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const Eigen::Index v = stack.back();
    stack.pop_back();
    for (Eigen::Index w = 0; w < n; ++w) {
      const double edge = reverse ? p(w, v) : p(v, w);
      if (is_nonzero(edge, zero_tol) && !seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = true;
        stack.push_back(w);
      }
    }
  }
  return seen;
}

}  // namespace detail

// Strong connectivity of the digraph i -> j iff p_ij > zero_tol.
inline bool is_irreducible(const StochasticMatrix& p, double zero_tol = kDefaultZeroTol) {
  for (bool reverse : {false, true})
    for (bool seen : detail::reachable_from_zero(p.matrix(), reverse, zero_tol))
      if (!seen) return false;
  return true;
}

//============================================================================
// Explicit intertwiner
//============================================================================

// One (i, k) sector. Coordinates are w.r.t. the orthonormal bases
// (q_kj p_ji)^{-1/2} e_i (x) e_j (x) e_k, j in `source`, and
// (p_kj q_ji)^{-1/2} e_i (x) e_j (x) e_k, j in `target`.
struct IntertwinerBlock {
  Eigen::Index i = 0;
  Eigen::Index k = 0;
  std::vector<Eigen::Index> source;
  std::vector<Eigen::Index> target;
  RealMatrix unitary;
  Eigen::VectorXd source_vector;  // e_i (x) 1 (x) e_k, squared norm (QP)_ki
  Eigen::VectorXd target_vector;  // squared norm (PQ)_ki
};

struct DiagonalIntertwiner {
  std::vector<IntertwinerBlock> blocks;
  double residual = 0.0;
};

class NoIntertwiner : public Error {
 public:
  NoIntertwiner(const std::string& what, std::vector<CardWitness> witnesses)
      : Error(what), witnesses_(std::move(witnesses)) {}
  const std::vector<CardWitness>& witnesses() const { return witnesses_; }

 private:
  std::vector<CardWitness> witnesses_;
};

// Rotation in span{v, w} taking unit v to unit w, identity on the
// orthogonal complement of that plane. Requires v . w > -1.
inline RealMatrix plane_rotation(const Eigen::VectorXd& v, const Eigen::VectorXd& w) {
  const Eigen::Index d = v.size();
  if ((v - w).norm() <= 1e-15) return RealMatrix::Identity(d, d);
  const double c = v.dot(w);
  const Eigen::VectorXd s = v + w;
  return RealMatrix::Identity(d, d) - s * s.transpose() / (1.0 + c) +
         2.0 * w * v.transpose();
}

inline DiagonalIntertwiner build_diagonal_intertwiner(const StochasticMatrix& p,
                                                      const StochasticMatrix& q,
                                                      double tol = kDefaultTol,
                                                      double zero_tol = kDefaultZeroTol) {
  const DiagonalReport rep = strongly_commute_diagonal(p, q, tol, zero_tol);
  if (!rep.card.holds) {
    const CardWitness& w = rep.card.witnesses.front();
    throw NoIntertwiner("cardinality criterion fails at (i,k)=(" + std::to_string(w.i) +
                            "," + std::to_string(w.k) + "): " +
                            std::to_string(w.count_qp) + " vs " + std::to_string(w.count_pq),
                        rep.card.witnesses);
  }
  if (!rep.commute)
    throw PreconditionError("stochastic matrices do not commute (residual " +
                            std::to_string(rep.commutation_residual) + ")");

  DiagonalIntertwiner out;
  for (Eigen::Index i = 0; i < p.n(); ++i)
    for (Eigen::Index k = 0; k < p.n(); ++k) {
      IntertwinerBlock b;
      b.i = i;
      b.k = k;
      b.source = support_qp(p, q, i, k, zero_tol);
      b.target = support_qp(q, p, i, k, zero_tol);
      if (b.source.empty()) continue;
      const auto d = static_cast<Eigen::Index>(b.source.size());
      b.source_vector.resize(d);
      b.target_vector.resize(d);
      for (Eigen::Index c = 0; c < d; ++c) {
        const Eigen::Index js = b.source[static_cast<std::size_t>(c)];
        const Eigen::Index jt = b.target[static_cast<std::size_t>(c)];
        b.source_vector(c) = std::sqrt(q(k, js) * p(js, i));
        b.target_vector(c) = std::sqrt(p(k, jt) * q(jt, i));
      }
      b.unitary = plane_rotation(b.source_vector.normalized(), b.target_vector.normalized());
      const double intertwining = (b.unitary * b.source_vector - b.target_vector).norm();
      const double unitarity =
          (b.unitary.transpose() * b.unitary - RealMatrix::Identity(d, d)).norm();
      out.residual = std::max({out.residual, intertwining, unitarity});
      out.blocks.push_back(std::move(b));
    }
  return out;
}

}  // namespace cpdil::stochastic

#endif  // CPDIL_STOCHASTIC_HPP
