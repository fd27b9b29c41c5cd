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

#ifndef CPDIL_COMMUTANT_HPP
#define CPDIL_COMMUTANT_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "cpdil/linalg.hpp"
#include "cpdil/types.hpp"

namespace cpdil {

struct CommutantReport {
  Eigen::Index dimension = 0;  // dim of {X : GX = XG for every generator G}
  Eigen::Index unknowns = 0;   // size of the reduced linear system
  Eigen::Index clusters = 0;   // eigenvalue clusters of the generic element
  double smallest_nonzero = 0.0;  // smallest retained eigenvalue of the normal matrix
};

// Dimension of the commutant of a set of D x D matrices.
//
// The commutant of the set equals that of the *-algebra it generates once
// adjoints are added. Anything commuting with a generic Hermitian element
// H of that algebra is block diagonal in H's eigenbasis, so only entries
// (a, b) with lambda_a ~ lambda_b are unknowns. The remaining conditions
// GX - XG = 0 are solved through the normal matrix sum_G C_G^* C_G, whose
// nullity is the answer.
inline CommutantReport commutant_dimension(const std::vector<Matrix>& generators,
                                           double tol = kDefaultTol,
                                           std::uint64_t seed = 0x5eed) {
  if (generators.empty()) throw InvalidInput("commutant of an empty set");
  const Eigen::Index d = generators.front().rows();
  for (const auto& g : generators)
    if (g.rows() != d || g.cols() != d)
      throw InvalidInput("commutant generators must share one square shape");

  std::vector<Matrix> gens;
  gens.reserve(2 * generators.size());
  for (const auto& g : generators) {
    gens.push_back(g);
    gens.push_back(g.adjoint());
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix h = Matrix::Zero(d, d);
  for (const auto& g : generators) {
    const double c = normal(rng), s = normal(rng);
    h += c * (g + g.adjoint()) + Complex(0.0, s) * (g - g.adjoint());
  }
  const auto eig = linalg::hermitian_eig(h);
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const Matrix& w = eig.eigenvectors();

  const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
  std::vector<Eigen::Index> cluster(static_cast<std::size_t>(d), 0);
  Eigen::Index nclusters = d > 0 ? 1 : 0;
  for (Eigen::Index i = 1; i < d; ++i) {
    if (lambda(i) - lambda(i - 1) > 1e-8 * scale) ++nclusters;
    cluster[static_cast<std::size_t>(i)] = nclusters - 1;
  }

  std::vector<std::pair<Eigen::Index, Eigen::Index>> unknowns;
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b)
      if (cluster[static_cast<std::size_t>(a)] == cluster[static_cast<std::size_t>(b)])
        unknowns.emplace_back(a, b);
  const auto u = static_cast<Eigen::Index>(unknowns.size());

  Matrix normal_matrix = Matrix::Zero(u, u);
  for (const auto& g : gens) {
    const Matrix gt = w.adjoint() * g * w;
    const Matrix gsg = gt.adjoint() * gt;
    const Matrix ggs = gt * gt.adjoint();
    for (Eigen::Index p = 0; p < u; ++p) {
      const auto [a, b] = unknowns[static_cast<std::size_t>(p)];
      for (Eigen::Index q = 0; q < u; ++q) {
        const auto [c, e] = unknowns[static_cast<std::size_t>(q)];
        Complex v = -std::conj(gt(c, a)) * gt(e, b) - gt(a, c) * std::conj(gt(b, e));
        if (b == e) v += gsg(a, c);
        if (a == c) v += ggs(e, b);
        normal_matrix(p, q) += v;
      }
    }
  }

  const Eigen::VectorXd nu = linalg::hermitian_eig(normal_matrix).eigenvalues();
  const double cutoff = tol * std::max(1.0, nu.cwiseAbs().maxCoeff());
  CommutantReport r;
  r.unknowns = u;
  r.clusters = nclusters;
  r.smallest_nonzero = 0.0;
  for (Eigen::Index i = 0; i < nu.size(); ++i) {
    if (nu(i) <= cutoff)
      ++r.dimension;
    else if (r.smallest_nonzero == 0.0)
      r.smallest_nonzero = nu(i);
  }
  return r;
}

}  // namespace cpdil

#endif  // CPDIL_COMMUTANT_HPP
