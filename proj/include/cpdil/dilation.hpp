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

#ifndef CPDIL_DILATION_HPP
#define CPDIL_DILATION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "cpdil/chan.hpp"
#include "cpdil/commutant.hpp"
#include "cpdil/prodsys.hpp"
#include "cpdil/strongcomm.hpp"

namespace cpdil {

//============================================================================
// Big space: the direct sum of X(t) (x) H over 0 <= t <= horizon
//============================================================================

struct BigSpace {
  GridPoint horizon;
  std::vector<GridPoint> grid;           // a-major
  std::vector<Eigen::Index> fiber_dims;  // d_t
  std::vector<Eigen::Index> offsets;     // start of block t
  Eigen::Index dim_h = 0;
  Eigen::Index total_dim = 0;

  bool contains(GridPoint t) const { return t.nonnegative() && leq(t, horizon); }
  std::size_t position(GridPoint t) const {
    if (!contains(t))
      throw OutOfHorizon("grid point " + to_string(t) + " outside horizon " + to_string(horizon));
    return static_cast<std::size_t>(t.a * (horizon.b + 1) + t.b);
  }
  Eigen::Index offset(GridPoint t) const { return offsets[position(t)]; }
  Eigen::Index fiber_dim(GridPoint t) const { return fiber_dims[position(t)]; }
  Eigen::Index block_dim(GridPoint t) const { return fiber_dim(t) * dim_h; }
};

// T^ restricted to the big space. The down step along e maps block t >= e
// to block t - e by D_e(t) = (I (x) T~_e)(M_{t-e,e}^* (x) I_H); the up step
// (the adjoint) maps block t to t + e by D_e(t + e)^*, and is only defined
// while t + e stays inside the horizon.
class HatSemigroup {
 public:
  HatSemigroup() = default;
  HatSemigroup(const TwistedProductSystem& sys, BigSpace space)
      : space_(std::move(space)) {
    for (int s = 0; s < 2; ++s) {
      const GridPoint e = s == 0 ? kStepE : kStepF;
      const Matrix te_adj = representation_matrix(sys, e).adjoint();
      auto& blocks = down_[static_cast<std::size_t>(s)];
      blocks.resize(space_.grid.size());
      for (GridPoint t : space_.grid) {
        if (!leq(e, t)) continue;
        const GridPoint rest = t - e;
        // D^* = (M_{rest,e} (x) I)(I (x) T~_e^*)
        const Matrix lifted = linalg::kron_identity_left(space_.fiber_dim(rest), te_adj);
        blocks[space_.position(t)] =
            sys.apply_multiplication(rest, e, lifted, space_.dim_h).adjoint();
      }
    }
  }

  const BigSpace& space() const { return space_; }

  // Block of the down step along e (kStepE or kStepF) leaving block t.
  const Matrix& down_block(GridPoint e, GridPoint t) const {
    if (!leq(e, t))
      throw InvalidInput("down step " + to_string(e) + " undefined at " + to_string(t));
    return down_[step_slot(e)][space_.position(t)];
  }

  // T^_s applied to columns living in block t; the result lives in t - s.
  Matrix down(GridPoint s, GridPoint t, Matrix cols) const {
    if (!leq(s, t)) throw InvalidInput("T^" + to_string(s) + " annihilates block " + to_string(t));
    for (int i = 0; i < s.a; ++i, t = t - kStepE) cols = down_block(kStepE, t) * cols;
    for (int i = 0; i < s.b; ++i, t = t - kStepF) cols = down_block(kStepF, t) * cols;
    return cols;
  }

  // T^_s^* applied to columns in block t; the result lives in t + s.
  Matrix up(GridPoint s, GridPoint t, Matrix cols) const {
    if (!space_.contains(t + s))
      throw OutOfHorizon("T^" + to_string(s) + "^* from " + to_string(t) + " leaves the horizon");
    for (int i = 0; i < s.a; ++i, t = t + kStepE)
      cols = down_block(kStepE, t + kStepE).adjoint() * cols;
    for (int i = 0; i < s.b; ++i, t = t + kStepF)
      cols = down_block(kStepF, t + kStepF).adjoint() * cols;
    return cols;
  }

  // Dense matrix of the down step on the whole big space.
  Matrix dense_step(GridPoint e, std::size_t cap = kDefaultDimCap) const {
    if (static_cast<std::size_t>(space_.total_dim) > cap)
      throw CapExceeded("big space dimension " + std::to_string(space_.total_dim) + " > cap");
    Matrix out = Matrix::Zero(space_.total_dim, space_.total_dim);
    for (GridPoint t : space_.grid) {
      if (!leq(e, t)) continue;
      out.block(space_.offset(t - e), space_.offset(t), space_.block_dim(t - e),
                space_.block_dim(t)) = down_block(e, t);
    }
    return out;
  }

  // max ||D_e(t) D_e(t)^* - I|| over blocks whose preimage is inside.
  double coisometry_residual() const {
    double worst = 0.0;
    for (GridPoint e : {kStepE, kStepF})
      for (GridPoint t : space_.grid)
        if (leq(e, t)) {
          const Matrix& d = down_block(e, t);
          worst = std::max(worst, (d * d.adjoint() - Matrix::Identity(d.rows(), d.rows())).norm());
        }
    return worst;
  }

  // T^_E T^_F = T^_F T^_E on blocks t >= (1,1).
  double commutation_residual() const {
    double worst = 0.0;
    for (GridPoint t : space_.grid) {
      if (!leq(GridPoint{1, 1}, t)) continue;
      const Matrix ef = down_block(kStepE, t - kStepF) * down_block(kStepF, t);
      const Matrix fe = down_block(kStepF, t - kStepE) * down_block(kStepE, t);
      worst = std::max(worst, (ef - fe).norm());
    }
    return worst;
  }

 private:
  static std::size_t step_slot(GridPoint e) {
    if (e == kStepE) return 0;
    if (e == kStepF) return 1;
    throw InvalidInput("not an elementary step: " + to_string(e));
  }

  BigSpace space_;
  std::vector<Matrix> down_[2];
};

inline HatSemigroup build_big_space(const TwistedProductSystem& sys, GridPoint horizon,
                                    std::size_t cap = kDefaultDimCap) {
  if (!horizon.nonnegative()) throw InvalidInput("horizon must be nonnegative");
  BigSpace sp;
  sp.horizon = horizon;
  sp.grid = grid_points(horizon);
  sp.dim_h = sys.dim_h();
  std::size_t total = 0;
  for (GridPoint t : sp.grid) {
    const std::size_t d = sys.fiber_dim(t, cap);
    sp.fiber_dims.push_back(static_cast<Eigen::Index>(d));
    sp.offsets.push_back(static_cast<Eigen::Index>(total));
    total += d * static_cast<std::size_t>(sp.dim_h);
    if (total > cap)
      throw CapExceeded("big space up to " + to_string(horizon) + " exceeds dimension cap " +
                        std::to_string(cap));
  }
  sp.total_dim = static_cast<Eigen::Index>(total);
  return HatSemigroup(sys, std::move(sp));
}

//============================================================================
// Gram realization of K
//============================================================================

// Generator (g, i) stands for V^_g(delta_g (x) basis vector i of X(g) (x) H),
// where i = w * dim H + h. Generators are ordered exactly like the big space,
// so generator number == big-space coordinate.
struct Generator {
  GridPoint grid;
  Eigen::Index index = 0;
};

struct DilationSpace {
  GridPoint horizon;
  std::vector<Generator> generators;
  Matrix gram;
  Matrix factor;  // F, dimK x #generators, gram = F^* F
  Eigen::Index dim_k = 0;
  double gram_min_eig = 0.0;
  double gram_max_eig = 0.0;
  double kept_min_eig = 0.0;     // smallest eigenvalue counted in dimK
  double dropped_max_eig = 0.0;  // largest eigenvalue cut off (0 if none)
  double hermitian_residual = 0.0;
  Matrix embed_h;  // dimK x dim H
  BigSpace space;
  double tol = kDefaultTol;

  // Columns of F for generators at t <= limit, in generator order.
  std::vector<Eigen::Index> generators_upto(GridPoint limit) const {
    std::vector<Eigen::Index> idx;
    for (GridPoint t : space.grid)
      if (leq(t, limit))
        for (Eigen::Index i = 0; i < space.block_dim(t); ++i) idx.push_back(space.offset(t) + i);
    return idx;
  }

  Matrix factor_columns(const std::vector<Eigen::Index>& idx) const {
    Matrix out(dim_k, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c)
      out.col(static_cast<Eigen::Index>(c)) = factor.col(idx[c]);
    return out;
  }

  // Orthonormal basis of K_s, the span of generators at points <= s.
  Matrix subspace_basis(GridPoint s) const {
    if (!s.nonnegative()) return Matrix(dim_k, 0);
    const Matrix f = factor_columns(generators_upto(grid_min(s, horizon)));
    return linalg::orthonormal_column_basis(f, 1e-8);
  }
};

// Inner products of generators: <V^_s zeta, V^_u eta> reduces to
// <T^_{(s-u)+} T^_{(s-u)-}^* delta_s zeta, delta_u eta>, so the (u, s)
// block of the Gram matrix is T^_{r+} T^_{r-}^* restricted to block s and
// read off in block u, r = s - u.
inline DilationSpace build_dilation_space(const HatSemigroup& hat, double tol = kDefaultTol) {
  const BigSpace& sp = hat.space();
  DilationSpace ds;
  ds.horizon = sp.horizon;
  ds.space = sp;
  ds.tol = tol;
  for (GridPoint t : sp.grid)
    for (Eigen::Index i = 0; i < sp.block_dim(t); ++i) ds.generators.push_back({t, i});

  ds.gram = Matrix::Zero(sp.total_dim, sp.total_dim);
  for (GridPoint s : sp.grid)
    for (GridPoint u : sp.grid) {
      const GridPoint r = s - u;
      const Eigen::Index bs = sp.block_dim(s);
      Matrix x = hat.up(r.negative_part(), s, Matrix::Identity(bs, bs));
      x = hat.down(r.positive_part(), s + r.negative_part(), std::move(x));
      ds.gram.block(sp.offset(u), sp.offset(s), sp.block_dim(u), bs) = x;
    }
  ds.hermitian_residual = (ds.gram - ds.gram.adjoint()).norm();

  const auto eig = linalg::hermitian_eig(ds.gram);
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  ds.gram_min_eig = lambda.minCoeff();
  ds.gram_max_eig = lambda.maxCoeff();
  if (ds.gram_min_eig < -tol)
    throw ConstructionFailure("Gram matrix is not positive semidefinite (min eigenvalue " +
                              std::to_string(ds.gram_min_eig) + ")");
  if (ds.hermitian_residual > tol * std::max(1.0, ds.gram_max_eig))
    throw ConstructionFailure("Gram matrix is not Hermitian (residual " +
                              std::to_string(ds.hermitian_residual) + ")");

  const double cutoff = 1e-10 * ds.gram_max_eig;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = lambda.size() - 1; i >= 0; --i) {
    if (lambda(i) > cutoff)
      keep.push_back(i);
    else
      ds.dropped_max_eig = std::max(ds.dropped_max_eig, lambda(i));
  }
  ds.dim_k = static_cast<Eigen::Index>(keep.size());
  ds.factor.resize(ds.dim_k, sp.total_dim);
  for (Eigen::Index c = 0; c < ds.dim_k; ++c) {
    const Eigen::Index i = keep[static_cast<std::size_t>(c)];
    ds.factor.row(c) = std::sqrt(lambda(i)) * eig.eigenvectors().col(i).adjoint();
  }
  ds.kept_min_eig = ds.dim_k > 0 ? lambda(keep.back()) : 0.0;

  ds.embed_h = ds.factor.middleCols(sp.offset({0, 0}), sp.dim_h);
  const double iso =
      (ds.embed_h.adjoint() * ds.embed_h - Matrix::Identity(sp.dim_h, sp.dim_h)).norm();
  if (iso > std::max(tol, 1e-8))
    throw ConstructionFailure("embedding of H is not isometric (residual " +
                              std::to_string(iso) + ")");
  return ds;
}

//============================================================================
// Lifted operators V, rho, alpha
//============================================================================

// An operator on K stored as left * right^*.
struct Factored {
  Matrix left;
  Matrix right;
  Matrix dense() const { return left * right.adjoint(); }
};

// V_g is exact on X(g) (x) K_{N-g}: a generator (u, zeta) with u <= N - g
// is sent to the generator (g + u, M_{g,u}(e_w (x) zeta)). The operators
// are only built for g <= min(N, 2 * margin).
class EDilationResult {
 public:
  EDilationResult() = default;
  EDilationResult(const DilationSpace& ds, const TwistedProductSystem& sys, GridPoint margin)
      : ds_(ds), margin_(margin) {
    if (!margin.nonnegative() || !leq(margin, ds.horizon))
      throw InvalidInput("margin " + to_string(margin) + " must satisfy 0 <= margin <= horizon " +
                         to_string(ds.horizon));
    lift_limit_ = grid_min(ds.horizon, 2 * margin);
    const BigSpace& sp = ds.space;
    const Eigen::Index n = sp.dim_h;
    const Eigen::Index nk = ds.dim_k;
    for (GridPoint g : grid_points(lift_limit_)) {
      const GridPoint rest = ds.horizon - g;
      const std::vector<Eigen::Index> sub = ds.generators_upto(rest);
      const auto nsub = static_cast<Eigen::Index>(sub.size());
      const Matrix f_sub = ds.factor_columns(sub);
      const Matrix f_pinv = linalg::pseudo_inverse(f_sub, 1e-10);
      const Eigen::Index dg = sp.fiber_dim(g);

      // L: (w, sub-generator) -> generator coordinates.
      Matrix l = Matrix::Zero(sp.total_dim, dg * nsub);
      Eigen::Index sub_off = 0;
      for (GridPoint u : grid_points(rest)) {
        const Eigen::Index bu = sp.block_dim(u);
        const Eigen::Index din = dg * bu;
        const Matrix moved = sys.apply_multiplication(g, u, Matrix::Identity(din, din), n);
        for (Eigen::Index w = 0; w < dg; ++w)
          l.block(sp.offset(g + u), w * nsub + sub_off, moved.rows(), bu) =
              moved.middleCols(w * bu, bu);
        sub_off += bu;
      }
      const Matrix fl = ds.factor * l;
      Matrix j(nk, dg * nk);
      for (Eigen::Index w = 0; w < dg; ++w)
        j.middleCols(w * nk, nk) = fl.middleCols(w * nsub, nsub) * f_pinv;
      lifts_.push_back(std::move(j));
      projections_.push_back(f_sub * f_pinv);
    }
    p_ = ds.embed_h * ds.embed_h.adjoint();
  }

  const DilationSpace& space() const { return ds_; }
  GridPoint margin() const { return margin_; }
  GridPoint lift_limit() const { return lift_limit_; }
  Eigen::Index dim_k() const { return ds_.dim_k; }
  const Matrix& embed_h() const { return ds_.embed_h; }
  const Matrix& p() const { return p_; }

  // V~_g restricted to X(g) (x) K_{N-g}, as a dimK x (d_g dimK) matrix.
  const Matrix& lift(GridPoint g) const { return lifts_[lift_slot(g)]; }
  // Orthogonal projection onto K_{N-g}.
  const Matrix& valid_projection(GridPoint g) const { return projections_[lift_slot(g)]; }

  Eigen::Index fiber_dim(GridPoint g) const { return ds_.space.fiber_dim(g); }

  // V_g(e_w) as an operator on K, valid on K_{N-g}.
  Matrix v(GridPoint g, Eigen::Index w) const {
    const Matrix& j = lift(g);
    if (w < 0 || w >= fiber_dim(g)) throw InvalidInput("fiber index out of range");
    return j.middleCols(w * dim_k(), dim_k());
  }

  Matrix v(const FiberVector& x) const {
    if (x.coords.size() != fiber_dim(x.grid)) throw InvalidInput("fiber vector length mismatch");
    Matrix out = Matrix::Zero(dim_k(), dim_k());
    for (Eigen::Index w = 0; w < x.coords.size(); ++w) out += x.coords(w) * v(x.grid, w);
    return out;
  }

  // V_g(e_w) applied to a vector; throws when the vector leaves K_{N-g}.
  Vector apply_v(GridPoint g, Eigen::Index w, const Vector& k) const {
    const Matrix& pr = valid_projection(g);
    if ((k - pr * k).norm() > support_tol(k.norm()))
      throw OutOfHorizon("vector is not supported on K_" + to_string(ds_.horizon - g));
    return v(g, w) * k;
  }

  // For M' = C the commutant action is scalar multiplication.
  Matrix rho(Complex c) const { return c * Matrix::Identity(dim_k(), dim_k()); }

  // alpha_g(b) = V~_g (I (x) b) V~_g^*, for b supported on K_{N-g}.
  Matrix alpha(GridPoint g, const Matrix& b) const {
    if (b.rows() != dim_k() || b.cols() != dim_k())
      throw InvalidInput("alpha: operator is not on K");
    const Matrix& pr = valid_projection(g);
    if ((b - pr * b * pr).norm() > support_tol(b.norm()))
      throw OutOfHorizon("operator is not supported on K_" + to_string(ds_.horizon - g));
    const Matrix& j = lift(g);
    Matrix out = Matrix::Zero(dim_k(), dim_k());
    for (Eigen::Index w = 0; w < fiber_dim(g); ++w) {
      const auto jw = j.middleCols(w * dim_k(), dim_k());
      out.noalias() += jw * b * jw.adjoint();
    }
    return out;
  }

  // Same map on an operator held as left * right^*: the image is
  // [V_{g,0} left, V_{g,1} left, ...] [V_{g,0} right, ...]^*. Cheap for
  // low-rank arguments such as matrix units.
  Factored alpha(GridPoint g, const Factored& b) const {
    if (b.left.rows() != dim_k() || b.right.rows() != dim_k() || b.left.cols() != b.right.cols())
      throw InvalidInput("alpha: factored operator is not on K");
    const Matrix& pr = valid_projection(g);
    if ((b.left - pr * b.left).norm() > support_tol(b.left.norm()) ||
        (b.right - pr * b.right).norm() > support_tol(b.right.norm()))
      throw OutOfHorizon("operator is not supported on K_" + to_string(ds_.horizon - g));
    const Matrix& j = lift(g);
    const Eigen::Index r = b.left.cols();
    Factored out{Matrix(dim_k(), fiber_dim(g) * r), Matrix(dim_k(), fiber_dim(g) * r)};
    for (Eigen::Index w = 0; w < fiber_dim(g); ++w) {
      const auto jw = j.middleCols(w * dim_k(), dim_k());
      out.left.middleCols(w * r, r).noalias() = jw * b.left;
      out.right.middleCols(w * r, r).noalias() = jw * b.right;
    }
    return out;
  }

  // alpha_g(E x E^*) for x in B(H): sum_w F_{g,w} x F_{g,w}^*, where F_{g,w}
  // are the generator columns at (g, w). Exact for every g <= horizon.
  Matrix alpha_on_m(GridPoint g, const Matrix& x) const {
    const BigSpace& sp = ds_.space;
    const Eigen::Index n = sp.dim_h;
    if (x.rows() != n || x.cols() != n) throw InvalidInput("alpha_on_m: operator is not on H");
    if (!sp.contains(g)) throw OutOfHorizon("alpha_" + to_string(g) + " beyond horizon");
    const Matrix fg = ds_.factor.middleCols(sp.offset(g), sp.block_dim(g));
    Matrix out = Matrix::Zero(dim_k(), dim_k());
    for (Eigen::Index w = 0; w < sp.fiber_dim(g); ++w) {
      const auto fw = fg.middleCols(w * n, n);
      out.noalias() += fw * x * fw.adjoint();
    }
    return out;
  }

  // E^* alpha_g(E x E^*) E, the compressed semigroup.
  Matrix compress(GridPoint g, const Matrix& x) const {
    const BigSpace& sp = ds_.space;
    const Eigen::Index n = sp.dim_h;
    if (x.rows() != n || x.cols() != n) throw InvalidInput("compress: operator is not on H");
    if (!sp.contains(g)) throw OutOfHorizon("alpha_" + to_string(g) + " beyond horizon");
    const Matrix efg = embed_h().adjoint() * ds_.factor.middleCols(sp.offset(g), sp.block_dim(g));
    Matrix out = Matrix::Zero(n, n);
    for (Eigen::Index w = 0; w < sp.fiber_dim(g); ++w) {
      const auto fw = efg.middleCols(w * n, n);
      out.noalias() += fw * x * fw.adjoint();
    }
    return out;
  }

 private:
  std::size_t lift_slot(GridPoint g) const {
    if (!g.nonnegative() || !leq(g, lift_limit_))
      throw OutOfHorizon("V_" + to_string(g) + " requested beyond the lift limit " +
                         to_string(lift_limit_));
    return static_cast<std::size_t>(g.a * (lift_limit_.b + 1) + g.b);
  }
  double support_tol(double scale) const { return std::max(ds_.tol, 1e-8) * std::max(1.0, scale); }

  DilationSpace ds_;
  GridPoint margin_;
  GridPoint lift_limit_;
  std::vector<Matrix> lifts_;
  std::vector<Matrix> projections_;
  Matrix p_;
};

inline EDilationResult lift_operators(const DilationSpace& ds, const TwistedProductSystem& sys,
                                      GridPoint margin) {
  return EDilationResult(ds, sys, margin);
}

//============================================================================
// Verification
//============================================================================

struct EDilationReport {
  bool pass = false;
  double isometry = 0.0;          // ||V~_g^* V~_g - I (x) Pi_{N-g}||
  std::optional<double> coisometry;  // ||(I - V~_g V~_g^*) Pi_{N-g}||, unital inputs only
  double dilation = 0.0;          // ||Theta^a Phi^b (x) - E^* alpha_g(E x E^*) E||
  double semigroup = 0.0;         // ||alpha_g alpha_h - alpha_{g+h}||
  double multiplicativity = 0.0;  // ||alpha_g(xy) - alpha_g(x) alpha_g(y)||
  double telescoping = 0.0;       // ||P_g P_h - P_{g+h}|| through the dilation
  double rho = 0.0;               // ||rho(c) V_g(x) - V_g(c x)||
  std::optional<double> increasing_min_eig;  // min eigenvalue of alpha_g(p) - p, unital only
  double tol = kDefaultTol;
  std::vector<std::string> violations;
};

inline constexpr double kIncreasingFloor = -1e-10;

inline EDilationReport verify_e_dilation(const EDilationResult& res, const CPMap& theta,
                                         const CPMap& phi, GridPoint grid_limit,
                                         double tol = kDefaultTol, std::uint64_t seed = 0x5eed) {
  if (!grid_limit.nonnegative() || !leq(grid_limit, res.margin()))
    throw OutOfHorizon("grid limit " + to_string(grid_limit) + " exceeds margin " +
                       to_string(res.margin()));
  const GridPoint horizon = res.space().horizon;
  const Eigen::Index n = theta.dim();
  const Eigen::Index nk = res.dim_k();
  const Matrix& e = res.embed_h();
  const bool unital = classify(theta, tol).is_unital && classify(phi, tol).is_unital;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  // Random rank-two operator supported on span(basis).
  auto random_on = [&](const Matrix& basis) {
    Matrix c1(basis.cols(), 2), c2(basis.cols(), 2);
    for (Eigen::Index i = 0; i < c1.size(); ++i) {
      c1(i) = Complex(normal(rng), normal(rng));
      c2(i) = Complex(normal(rng), normal(rng));
    }
    return Factored{basis * c1, basis * c2};
  };
  auto h_unit = [&](Eigen::Index a, Eigen::Index b) {
    return Factored{e.col(a), e.col(b)};
  };
  auto distance = [](const Factored& x, const Factored& y) {
    return (x.dense() - y.dense()).norm();
  };

  EDilationReport r;
  r.tol = tol;
  auto semigroup_power = [&](GridPoint g, Matrix x) {
    for (int q = 0; q < g.b; ++q) x = cpdil::apply(phi, x);
    for (int q = 0; q < g.a; ++q) x = cpdil::apply(theta, x);
    return x;
  };

  double cois = 0.0;
  for (GridPoint g : grid_points(grid_limit)) {
    const Matrix& j = res.lift(g);
    const Matrix& pr = res.valid_projection(g);
    const Eigen::Index dg = res.fiber_dim(g);
    r.isometry = std::max(r.isometry,
                          (j.adjoint() * j - linalg::kron_identity_left(dg, pr)).norm());
    if (unital) cois = std::max(cois, ((Matrix::Identity(nk, nk) - j * j.adjoint()) * pr).norm());

    // p alpha_g(p) p compresses to Theta^a Phi^b (1), so alpha_g(p) >= p
    // needs unital maps.
    if (unital) {
      const Matrix incr = res.alpha_on_m(g, Matrix::Identity(n, n)) - res.p();
      const double lo = linalg::min_hermitian_eigenvalue(incr);
      r.increasing_min_eig = std::min(r.increasing_min_eig.value_or(lo), lo);
    }

    // Multiplicativity on matrix units of an orthonormal basis of K_{N-g}
    // (sampled) and on the images of matrix units of H.
    const Matrix q = res.space().subspace_basis(horizon - g);
    const Eigen::Index dq = q.cols();
    std::uniform_int_distribution<Eigen::Index> pick(0, std::max<Eigen::Index>(dq - 1, 0));
    auto product_gap = [&](const Factored& x, const Factored& y, const Factored& xy, bool zero) {
      const Factored ax = res.alpha(g, x), ay = res.alpha(g, y);
      // alpha(x) alpha(y) = l_x (r_x^* l_y) r_y^*
      const Factored prod{ax.left * (ax.right.adjoint() * ay.left), ay.right};
      if (zero) return prod.dense().norm();
      return distance(res.alpha(g, xy), prod);
    };
    for (int sample = 0; sample < 32 && dq > 0; ++sample) {
      const Eigen::Index a = pick(rng), b = pick(rng), c = pick(rng), d = pick(rng);
      const Factored x{q.col(a), q.col(b)}, y{q.col(c), q.col(d)}, xy{q.col(a), q.col(d)};
      r.multiplicativity = std::max(r.multiplicativity, product_gap(x, y, xy, b != c));
    }
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b)
        for (Eigen::Index d = 0; d < n; ++d)
          r.multiplicativity = std::max(
              r.multiplicativity, product_gap(h_unit(a, b), h_unit(b, d), h_unit(a, d), false));

    // Dilation identity through the lifted V.
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b) {
        const Factored ax = res.alpha(g, h_unit(a, b));
        const Matrix got = (e.adjoint() * ax.left) * (e.adjoint() * ax.right).adjoint();
        r.dilation =
            std::max(r.dilation, (got - semigroup_power(g, linalg::matrix_unit(n, a, b))).norm());
      }

    // rho(c) V_g(x) = V_g(c x).
    const Complex c(0.3, -0.7);
    for (Eigen::Index w = 0; w < dg; ++w) {
      Vector coords = Vector::Zero(dg);
      coords(w) = c;
      r.rho = std::max(r.rho, (res.rho(c) * res.v(g, w) - res.v(FiberVector{g, coords})).norm());
    }
  }
  if (unital) r.coisometry = cois;

  // Dilation identity and telescoping through alpha on M, over the whole
  // horizon.
  for (GridPoint g : grid_points(horizon))
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b) {
        const Matrix x = linalg::matrix_unit(n, a, b);
        r.dilation = std::max(r.dilation, (res.compress(g, x) - semigroup_power(g, x)).norm());
        for (GridPoint h : grid_points(horizon - g))
          r.telescoping = std::max(
              r.telescoping, (res.compress(g, res.compress(h, x)) - res.compress(g + h, x)).norm());
      }

  // alpha_g alpha_h = alpha_{g+h} on H-units and on random operators
  // supported on K_{N-g-h}.
  for (GridPoint g : grid_points(grid_limit))
    for (GridPoint h : grid_points(grid_limit)) {
      if (!leq(g + h, res.lift_limit())) continue;
      std::vector<Factored> probes;
      for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) probes.push_back(h_unit(a, b));
      const Matrix basis = res.space().subspace_basis(horizon - g - h);
      for (int i = 0; i < 2 && basis.cols() > 0; ++i) probes.push_back(random_on(basis));
      for (const Factored& b : probes) {
        const double scale = std::max(1.0, b.left.norm() * b.right.norm());
        r.semigroup = std::max(
            r.semigroup, distance(res.alpha(g, res.alpha(h, b)), res.alpha(g + h, b)) / scale);
      }
    }

  auto check = [&](const char* name, double value) {
    if (!(value <= tol))
      r.violations.push_back(std::string(name) + " residual " + std::to_string(value));
  };
  check("isometry", r.isometry);
  if (r.coisometry) check("coisometry", *r.coisometry);
  check("dilation", r.dilation);
  check("semigroup", r.semigroup);
  check("multiplicativity", r.multiplicativity);
  check("telescoping", r.telescoping);
  check("rho", r.rho);
  if (r.increasing_min_eig && *r.increasing_min_eig < kIncreasingFloor)
    r.violations.push_back("alpha(p) - p has eigenvalue " + std::to_string(*r.increasing_min_eig));
  r.pass = r.violations.empty();
  return r;
}

struct MinimalityReport {
  Eigen::Index span_dim = 0;
  Eigen::Index target_dim = 0;  // dim K_{grid_limit}
  Eigen::Index dim_k = 0;
  int depth = 0;
  bool span_reached = false;
  bool conclusive = true;  // false if the span did not stabilize within the cap
  Eigen::Index commutant_dim = 0;
  Eigen::Index commutant_unknowns = 0;
  bool minimal = false;
  double tol = kDefaultTol;
};

inline constexpr int kMinimalityDepthCap = 8;

// Span test: grow span(E H) under products of alpha_g(E e_ij E^*) for
// g <= grid_limit until it stabilizes. Commutant test: dimension of the
// commutant of those generators (with adjoints) on K_{grid_limit}.
inline MinimalityReport minimality_check(const EDilationResult& res, GridPoint grid_limit,
                                         double tol = kDefaultTol) {
  const GridPoint horizon = res.space().horizon;
  if (!grid_limit.nonnegative() || !leq(grid_limit, horizon))
    throw OutOfHorizon("grid limit " + to_string(grid_limit) + " beyond horizon " +
                       to_string(horizon));
  const Eigen::Index n = res.embed_h().cols();

  std::vector<Matrix> gens;
  for (GridPoint g : grid_points(grid_limit))
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        gens.push_back(res.alpha_on_m(g, linalg::matrix_unit(n, i, j)));

  MinimalityReport r;
  r.tol = tol;
  r.dim_k = res.dim_k();
  const Matrix target = res.space().subspace_basis(grid_limit);
  r.target_dim = target.cols();

  Matrix span = linalg::orthonormal_column_basis(res.embed_h(), 1e-8);
  r.span_dim = span.cols();
  r.conclusive = false;
  for (int depth = 1; depth <= kMinimalityDepthCap; ++depth) {
    Matrix cols(res.dim_k(), span.cols() * static_cast<Eigen::Index>(gens.size() + 1));
    cols.leftCols(span.cols()) = span;
    for (std::size_t i = 0; i < gens.size(); ++i)
      cols.middleCols(static_cast<Eigen::Index>(i + 1) * span.cols(), span.cols()) = gens[i] * span;
    span = linalg::orthonormal_column_basis(cols, 1e-8);
    r.depth = depth;
    const bool stable = span.cols() == r.span_dim;
    r.span_dim = span.cols();
    if (stable || r.span_dim == r.target_dim) {
      r.conclusive = true;
      break;
    }
  }
  r.span_reached = r.span_dim == r.target_dim;

  std::vector<Matrix> compressed;
  compressed.reserve(gens.size());
  for (const auto& g : gens) compressed.push_back(target.adjoint() * g * target);
  const CommutantReport c = commutant_dimension(compressed, tol);
  r.commutant_dim = c.dimension;
  r.commutant_unknowns = c.unknowns;
  r.minimal = r.span_reached && r.commutant_dim == 1;
  return r;
}

//============================================================================
// End-to-end pipeline
//============================================================================

struct DilationPipeline {
  StrongCommutationCertificate certificate;
  TwistedProductSystem system;
  HatSemigroup hat;
  DilationSpace space;
  EDilationResult result;
};

// Certificate (computed unless supplied), product system, big space,
// Gram realization and lifted operators.
inline DilationPipeline build_dilation(const CPMap& theta, const CPMap& phi, GridPoint horizon,
                                       GridPoint margin, double tol = kDefaultTol,
                                       std::size_t cap = kDefaultDimCap,
                                       const std::optional<Matrix>& certificate = std::nullopt) {
  DilationPipeline p;
  if (certificate) {
    p.certificate.m = theta.kraus().size();
    p.certificate.n = phi.kraus().size();
    p.certificate.u = *certificate;
    const CertificateReport check = verify_certificate(theta, phi, *certificate, tol);
    p.certificate.unitarity_residual = check.unitarity_residual;
    p.certificate.intertwining_residual = check.intertwining_residual;
  } else {
    p.certificate = strong_commutation_certificate(theta, phi, tol);
  }
  p.system = build_product_system(theta, phi, p.certificate, tol);
  p.hat = build_big_space(p.system, horizon, cap);
  p.space = build_dilation_space(p.hat, tol);
  p.result = lift_operators(p.space, p.system, margin);
  return p;
}

}  // namespace cpdil

#endif  // CPDIL_DILATION_HPP
