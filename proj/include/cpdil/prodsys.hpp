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

#ifndef CPDIL_PRODSYS_HPP
#define CPDIL_PRODSYS_HPP

#include <algorithm>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cpdil/chan.hpp"
#include "cpdil/strongcomm.hpp"

namespace cpdil {

//============================================================================
// The grid N^2
//============================================================================

// A point of Z^2. Fibers live at nonnegative points; differences may be
// negative and are split with positive_part() / negative_part().
struct GridPoint {
  int a = 0;
  int b = 0;

  bool nonnegative() const { return a >= 0 && b >= 0; }
  GridPoint positive_part() const { return {std::max(a, 0), std::max(b, 0)}; }
  GridPoint negative_part() const { return {std::max(-a, 0), std::max(-b, 0)}; }

  friend bool operator==(const GridPoint&, const GridPoint&) = default;
  friend GridPoint operator+(GridPoint x, GridPoint y) { return {x.a + y.a, x.b + y.b}; }
  friend GridPoint operator-(GridPoint x, GridPoint y) { return {x.a - y.a, x.b - y.b}; }
  friend GridPoint operator*(int c, GridPoint x) { return {c * x.a, c * x.b}; }
};

// Componentwise order; a partial order, so !(x <= y) does not mean y <= x.
inline bool leq(GridPoint x, GridPoint y) { return x.a <= y.a && x.b <= y.b; }

inline GridPoint grid_min(GridPoint x, GridPoint y) {
  return {std::min(x.a, y.a), std::min(x.b, y.b)};
}

inline std::string to_string(GridPoint g) {
  return "(" + std::to_string(g.a) + "," + std::to_string(g.b) + ")";
}

// All points 0 <= g <= horizon, a-major.
inline std::vector<GridPoint> grid_points(GridPoint horizon) {
  std::vector<GridPoint> out;
  for (int a = 0; a <= horizon.a; ++a)
    for (int b = 0; b <= horizon.b; ++b) out.push_back({a, b});
  return out;
}

inline constexpr GridPoint kStepE{1, 0};
inline constexpr GridPoint kStepF{0, 1};

//============================================================================
// Twisted product system X(a, b) = E^{(x)a} (x) F^{(x)b}
//============================================================================

// E = C^m carries Theta's Kraus operators, F = C^k carries Phi's. The flip
// tau : F (x) E -> E (x) F has rows indexed i*k + j (e_i (x) f_j) and columns
// l*m + q (f_l (x) e_q); it is read off a certificate u as
//   tau[(i,j),(l,q)] = conj(u[(i,j),(q,l)]),
// which encodes S_l T_q = sum_{(i,j)} tau[(i,j),(l,q)] T_i S_j.
class TwistedProductSystem {
 public:
  TwistedProductSystem() = default;

  TwistedProductSystem(KrausFamily theta, KrausFamily phi, Matrix flip)
      : theta_(std::move(theta)), phi_(std::move(phi)), flip_(std::move(flip)) {
    if (theta_.dim() != phi_.dim())
      throw InvalidInput("product system: maps act on different dimensions");
    const auto mk = static_cast<Eigen::Index>(m() * k());
    if (flip_.rows() != mk || flip_.cols() != mk)
      throw InvalidInput("flip is " + shape_str(flip_.rows(), flip_.cols()) +
                         ", expected " + shape_str(mk, mk));
  }

  Eigen::Index dim_h() const { return theta_.dim(); }
  std::size_t m() const { return theta_.size(); }
  std::size_t k() const { return phi_.size(); }
  const KrausFamily& kraus_t() const { return theta_; }
  const KrausFamily& kraus_s() const { return phi_; }
  const Matrix& flip() const { return flip_; }

  // m^a k^b, or CapExceeded when the product passes `cap`.
  std::size_t fiber_dim(GridPoint g,
                        std::size_t cap = std::numeric_limits<std::size_t>::max()) const {
    if (!g.nonnegative()) throw InvalidInput("fiber at negative grid point " + to_string(g));
    std::size_t d = 1;
    auto grow = [&](std::size_t f, int times) {
      for (int i = 0; i < times; ++i) {
        if (f != 0 && d > cap / f)
          throw CapExceeded("fiber X" + to_string(g) + " exceeds dimension cap " +
                            std::to_string(cap));
        d *= f;
      }
    };
    grow(m(), g.a);
    grow(k(), g.b);
    return d;
  }

  // Letters of the word basis: E^a then F^b. Index digits are most
  // significant first, E-digits before F-digits.
  Matrix word_operator(GridPoint g, std::size_t w) const {
    std::vector<std::size_t> digits(static_cast<std::size_t>(g.a + g.b));
    for (std::size_t p = digits.size(); p-- > 0;) {
      const std::size_t base = p < static_cast<std::size_t>(g.a) ? m() : k();
      digits[p] = w % base;
      w /= base;
    }
    Matrix out = Matrix::Identity(dim_h(), dim_h());
    for (std::size_t p = 0; p < digits.size(); ++p)
      out = out * (p < static_cast<std::size_t>(g.a) ? theta_[digits[p]] : phi_[digits[p]]);
    return out;
  }

  // All word operators of X(g) in basis order.
  std::vector<Matrix> word_operators(GridPoint g) const {
    fiber_dim(g);
    std::vector<Matrix> words{Matrix::Identity(dim_h(), dim_h())};
    auto extend = [&](const KrausFamily& fam) {
      std::vector<Matrix> next;
      next.reserve(words.size() * fam.size());
      for (const auto& w : words)
        for (const auto& t : fam.ops()) next.push_back(w * t);
      words = std::move(next);
    };
    for (int i = 0; i < g.a; ++i) extend(theta_);
    for (int j = 0; j < g.b; ++j) extend(phi_);
    return words;
  }

  // Positions p at which tau is applied, in order, to carry the letter
  // word E^a F^b E^c F^d to E^{a+c} F^{b+d}: each step swaps the leftmost
  // adjacent (F, E) pair.
  static std::vector<std::size_t> sweep_positions(GridPoint g, GridPoint h) {
    std::vector<char> letters;
    letters.insert(letters.end(), static_cast<std::size_t>(g.a), 'E');
    letters.insert(letters.end(), static_cast<std::size_t>(g.b), 'F');
    letters.insert(letters.end(), static_cast<std::size_t>(h.a), 'E');
    letters.insert(letters.end(), static_cast<std::size_t>(h.b), 'F');
    std::vector<std::size_t> out;
    for (;;) {
      std::size_t p = 0;
      while (p + 1 < letters.size() && !(letters[p] == 'F' && letters[p + 1] == 'E')) ++p;
      if (p + 1 >= letters.size()) break;
      std::swap(letters[p], letters[p + 1]);
      out.push_back(p);
    }
    return out;
  }

  // Applies the multiplication X(g) (x) X(h) (x) C^trailing -> X(g+h) (x)
  // C^trailing to every column of `cols` (index x * d_h * trailing + y *
  // trailing + t). With adjoint = true, applies the inverse map instead.
  Matrix apply_multiplication(GridPoint g, GridPoint h, const Matrix& cols,
                              Eigen::Index trailing = 1, bool adjoint = false) const {
    const auto total = static_cast<Eigen::Index>(fiber_dim(g) * fiber_dim(h)) * trailing;
    if (cols.rows() != total)
      throw InvalidInput("multiplication input has " + std::to_string(cols.rows()) +
                         " rows, expected " + std::to_string(total));
    std::vector<std::size_t> steps = sweep_positions(g, h);
    // Letter dims before each step, so the adjoint pass can walk backwards.
    std::vector<std::size_t> shape;
    shape.insert(shape.end(), static_cast<std::size_t>(g.a), m());
    shape.insert(shape.end(), static_cast<std::size_t>(g.b), k());
    shape.insert(shape.end(), static_cast<std::size_t>(h.a), m());
    shape.insert(shape.end(), static_cast<std::size_t>(h.b), k());
    std::vector<std::vector<std::size_t>> shapes;
    for (std::size_t p : steps) {
      shapes.push_back(shape);
      std::swap(shape[p], shape[p + 1]);
    }

    Matrix cur = cols;
    auto run = [&](std::size_t idx, bool inverse) {
      const std::size_t p = steps[idx];
      const auto& sh = shapes[idx];  // sh[p] = k, sh[p+1] = m on the F E side
      std::size_t outer = 1, inner = static_cast<std::size_t>(trailing);
      for (std::size_t q = 0; q < p; ++q) outer *= sh[q];
      for (std::size_t q = p + 2; q < sh.size(); ++q) inner *= sh[q];
      cur = apply_pair_map(cur, outer, inner, inverse ? Matrix(flip_.adjoint()) : flip_);
    };
    if (!adjoint)
      for (std::size_t i = 0; i < steps.size(); ++i) run(i, false);
    else
      for (std::size_t i = steps.size(); i-- > 0;) run(i, true);
    return cur;
  }

  // Dense unitary X(g) (x) X(h) -> X(g+h).
  Matrix multiplication_matrix(GridPoint g, GridPoint h) const {
    const auto d = static_cast<Eigen::Index>(fiber_dim(g) * fiber_dim(h));
    return apply_multiplication(g, h, Matrix::Identity(d, d));
  }

 private:
  // (I_outer (x) op (x) I_inner) applied to the columns of `in`, where op is
  // square of size mk.
  static Matrix apply_pair_map(const Matrix& in, std::size_t outer, std::size_t inner,
                               const Matrix& op) {
    const auto pair = op.rows();
    const auto inn = static_cast<Eigen::Index>(inner);
    Matrix out = Matrix::Zero(in.rows(), in.cols());
    for (std::size_t o = 0; o < outer; ++o) {
      const Eigen::Index base = static_cast<Eigen::Index>(o) * pair * inn;
      for (Eigen::Index r = 0; r < pair; ++r)
        for (Eigen::Index c = 0; c < pair; ++c) {
          const Complex z = op(r, c);
          if (z == Complex(0.0, 0.0)) continue;
          out.middleRows(base + r * inn, inn) += z * in.middleRows(base + c * inn, inn);
        }
    }
    return out;
  }

  KrausFamily theta_;
  KrausFamily phi_;
  Matrix flip_;
};

// tau[(i,j),(l,q)] = conj(u[(i,j),(q,l)]).
inline Matrix flip_from_certificate(const Matrix& u, std::size_t m, std::size_t k) {
  Matrix tau(u.rows(), u.cols());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t l = 0; l < k; ++l)
        for (std::size_t q = 0; q < m; ++q)
          tau(static_cast<Eigen::Index>(i * k + j), static_cast<Eigen::Index>(l * m + q)) =
              std::conj(u(static_cast<Eigen::Index>(i * k + j),
                          static_cast<Eigen::Index>(q * k + l)));
  return tau;
}

// Both maps must be contractive; otherwise T~_g is not a contraction and
// nothing downstream is positive.
inline void require_contractive(const CPMap& theta, const CPMap& phi, double tol) {
  for (const CPMap* map : {&theta, &phi}) {
    const ChannelReport rep = classify(*map, tol);
    if (!rep.is_contractive)
      throw PreconditionError("map is not contractive (largest eigenvalue of sum T T^* is " +
                              std::to_string(rep.max_row_gram_eigenvalue) + ")");
  }
}

inline TwistedProductSystem build_product_system(const CPMap& theta, const CPMap& phi,
                                                 const StrongCommutationCertificate& cert,
                                                 double tol = kDefaultTol) {
  require_contractive(theta, phi, tol);
  const CertificateReport check = verify_certificate(theta, phi, cert.u, tol);
  if (!check.pass)
    throw CertificateFailure("certificate does not verify", check.unitarity_residual,
                             check.intertwining_residual);
  return TwistedProductSystem(theta.kraus(), phi.kraus(),
                              flip_from_certificate(cert.u, theta.kraus().size(),
                                                    phi.kraus().size()));
}

// No verification of u. Meant for negative controls and for callers that
// have already checked the certificate.
inline TwistedProductSystem build_product_system_unchecked(const CPMap& theta,
                                                           const CPMap& phi,
                                                           const Matrix& u,
                                                           double tol = kDefaultTol) {
  require_contractive(theta, phi, tol);
  return TwistedProductSystem(
      theta.kraus(), phi.kraus(),
      flip_from_certificate(u, theta.kraus().size(), phi.kraus().size()));
}

//============================================================================
// Fiber vectors and the product
//============================================================================

struct FiberVector {
  GridPoint grid;
  Vector coords;
};

inline FiberVector make_fiber_vector(const TwistedProductSystem& sys, GridPoint g,
                                     Vector coords) {
  if (coords.size() != static_cast<Eigen::Index>(sys.fiber_dim(g)))
    throw InvalidInput("fiber vector at " + to_string(g) + " has length " +
                       std::to_string(coords.size()) + ", expected " +
                       std::to_string(sys.fiber_dim(g)));
  return {g, std::move(coords)};
}

inline FiberVector multiply(const TwistedProductSystem& sys, const FiberVector& x,
                            const FiberVector& y) {
  make_fiber_vector(sys, x.grid, x.coords);
  make_fiber_vector(sys, y.grid, y.coords);
  Vector xy(x.coords.size() * y.coords.size());
  for (Eigen::Index i = 0; i < x.coords.size(); ++i)
    xy.segment(i * y.coords.size(), y.coords.size()) = x.coords(i) * y.coords;
  Matrix out = sys.apply_multiplication(x.grid, y.grid, xy);
  return {x.grid + y.grid, out.col(0)};
}

//============================================================================
// Covariant representation
//============================================================================

// n x (d_g n) matrix whose w-th column block is the word operator T_w.
inline Matrix representation_matrix(const TwistedProductSystem& sys, GridPoint g) {
  const auto words = sys.word_operators(g);
  const Eigen::Index n = sys.dim_h();
  Matrix out(n, static_cast<Eigen::Index>(words.size()) * n);
  for (std::size_t w = 0; w < words.size(); ++w)
    out.middleCols(static_cast<Eigen::Index>(w) * n, n) = words[w];
  return out;
}

// T(x) = sum_w x_w T_w.
inline Matrix represent(const TwistedProductSystem& sys, const FiberVector& x) {
  const auto words = sys.word_operators(x.grid);
  Matrix out = Matrix::Zero(sys.dim_h(), sys.dim_h());
  for (std::size_t w = 0; w < words.size(); ++w)
    out += x.coords(static_cast<Eigen::Index>(w)) * words[w];
  return out;
}

struct RepresentationReport {
  bool pass = false;
  double rep_residual = 0.0;           // T~_g (I (x) x) T~_g^* vs Theta^a Phi^b (x)
  double homomorphism_residual = 0.0;  // T(xy) vs T(x) T(y)
  std::optional<double> coisometry_residual;  // only for unital pairs
  GridPoint worst_rep_point;
  double tol = kDefaultTol;
};

inline RepresentationReport verify_representation(const TwistedProductSystem& sys,
                                                  GridPoint horizon,
                                                  double tol = kDefaultTol,
                                                  std::size_t cap = kDefaultDimCap) {
  if (!horizon.nonnegative()) throw InvalidInput("horizon must be nonnegative");
  const Eigen::Index n = sys.dim_h();
  const auto grid = grid_points(horizon);
  for (GridPoint g : grid) {
    if (sys.fiber_dim(g) * static_cast<std::size_t>(n) > cap)
      throw CapExceeded("X" + to_string(g) + " (x) H has dimension " +
                        std::to_string(sys.fiber_dim(g) * static_cast<std::size_t>(n)) +
                        " > cap " + std::to_string(cap));
  }

  const CPMap theta(sys.kraus_t());
  const CPMap phi(sys.kraus_s());
  const bool unital = classify(sys.kraus_t(), tol).is_unital &&
                      classify(sys.kraus_s(), tol).is_unital;

  RepresentationReport r;
  r.tol = tol;
  std::vector<Matrix> rep(grid.size());
  for (std::size_t gi = 0; gi < grid.size(); ++gi) rep[gi] = representation_matrix(sys, grid[gi]);
  auto rep_at = [&](GridPoint g) -> const Matrix& {
    return rep[static_cast<std::size_t>(g.a * (horizon.b + 1) + g.b)];
  };

  double cois = 0.0;
  for (GridPoint g : grid) {
    const Matrix& t = rep_at(g);
    const Eigen::Index d = t.cols() / n;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        const Matrix x = linalg::matrix_unit(n, i, j);
        Matrix expect = x;
        for (int q = 0; q < g.b; ++q) expect = cpdil::apply(phi, expect);
        for (int q = 0; q < g.a; ++q) expect = cpdil::apply(theta, expect);
        const Matrix got = t * linalg::kron_identity_left(d, x) * t.adjoint();
        const double res = (got - expect).norm();
        if (res > r.rep_residual) {
          r.rep_residual = res;
          r.worst_rep_point = g;
        }
      }
    if (unital) cois = std::max(cois, (t * t.adjoint() - Matrix::Identity(n, n)).norm());
  }
  if (unital) r.coisometry_residual = cois;

  // T~_{g+h} (M_{g,h} (x) I) = T~_g (I (x) T~_h), compared through adjoints
  // so the multiplication is applied to columns.
  for (GridPoint g : grid)
    for (GridPoint h : grid) {
      if (g == GridPoint{} || h == GridPoint{} || !leq(g + h, horizon)) continue;
      const Matrix lhs_adj =
          sys.apply_multiplication(g, h, rep_at(g + h).adjoint(), n, /*adjoint=*/true);
      const auto dg = static_cast<Eigen::Index>(sys.fiber_dim(g));
      const Matrix rhs = rep_at(g) * linalg::kron_identity_left(dg, rep_at(h));
      r.homomorphism_residual =
          std::max(r.homomorphism_residual, (lhs_adj.adjoint() - rhs).norm());
    }

  r.pass = r.rep_residual <= tol && r.homomorphism_residual <= tol &&
           (!r.coisometry_residual || *r.coisometry_residual <= tol);
  return r;
}

}  // namespace cpdil

#endif  // CPDIL_PRODSYS_HPP
