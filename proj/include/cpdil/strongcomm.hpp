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

#ifndef CPDIL_STRONGCOMM_HPP
#define CPDIL_STRONGCOMM_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "cpdil/chan.hpp"

namespace cpdil {

struct CommuteResult {
  bool commute = false;
  double residual = 0.0;  // ||S(phi psi) - S(psi phi)||_F
  double tol = kDefaultTol;
};

inline CommuteResult check_commute(const CPMap& phi, const CPMap& psi,
                                   double tol = kDefaultTol) {
  if (phi.dim() != psi.dim())
    throw InvalidInput("check_commute: dimension mismatch");
  const Matrix sp = phi.superoperator().matrix;
  const Matrix ss = psi.superoperator().matrix;
  CommuteResult r;
  r.tol = tol;
  r.residual = (sp * ss - ss * sp).norm();
  r.commute = r.residual <= tol;
  return r;
}

// Witness for strong commutation on B(H): with Theta = sum T_i . T_i^* (m
// operators) and Phi = sum S_j . S_j^* (n operators),
//   T_i S_j = sum_{(k,l)} u[(i,j),(k,l)] S_l T_k,
// pairs indexed lexicographically, (i, j) -> i * n + j.
struct StrongCommutationCertificate {
  std::size_t m = 0;
  std::size_t n = 0;
  Matrix u;
  double unitarity_residual = 0.0;
  double intertwining_residual = 0.0;
};

inline std::size_t pair_index(std::size_t i, std::size_t j, std::size_t n) {
  return i * n + j;
}

// {T_i S_j} in (i, j) order.
inline std::vector<Matrix> forward_products(const CPMap& theta, const CPMap& phi) {
  std::vector<Matrix> out;
  for (const auto& t : theta.kraus().ops())
    for (const auto& s : phi.kraus().ops()) out.push_back(t * s);
  return out;
}

// {S_l T_k} in (k, l) order.
inline std::vector<Matrix> reversed_products(const CPMap& theta, const CPMap& phi) {
  std::vector<Matrix> out;
  for (const auto& t : theta.kraus().ops())
    for (const auto& s : phi.kraus().ops()) out.push_back(s * t);
  return out;
}

struct CertificateReport {
  bool pass = false;
  double unitarity_residual = 0.0;
  double intertwining_residual = 0.0;
  double tol = kDefaultTol;
};

// Recomputes both residuals from the Kraus data and u alone.
inline CertificateReport verify_certificate(const CPMap& theta, const CPMap& phi,
                                            const Matrix& u,
                                            double tol = kDefaultTol) {
  if (theta.dim() != phi.dim())
    throw InvalidInput("verify_certificate: dimension mismatch");
  const auto mn = static_cast<Eigen::Index>(theta.kraus().size() * phi.kraus().size());
  if (u.rows() != mn || u.cols() != mn)
    throw InvalidInput("certificate unitary is " + shape_str(u.rows(), u.cols()) +
                       ", expected " + shape_str(mn, mn));
  CertificateReport r;
  r.tol = tol;
  r.unitarity_residual = unitarity_residual(u);
  r.intertwining_residual =
      intertwining_residual(forward_products(theta, phi), reversed_products(theta, phi), u);
  r.pass = r.unitarity_residual <= tol && r.intertwining_residual <= tol;
  return r;
}

inline CertificateReport verify_certificate(const CPMap& theta, const CPMap& phi,
                                            const StrongCommutationCertificate& cert,
                                            double tol = kDefaultTol) {
  return verify_certificate(theta, phi, cert.u, tol);
}

// On finite-dimensional B(H) every commuting pair strongly commutes, so the
// only failure modes are a non-commuting input and numerical breakdown.
inline StrongCommutationCertificate strong_commutation_certificate(
    const CPMap& theta, const CPMap& phi, double tol = kDefaultTol) {
  const CommuteResult c = check_commute(theta, phi, tol);
  if (!c.commute)
    throw PreconditionError("maps do not commute (residual " +
                            std::to_string(c.residual) + ")");
  const KrausFamily a(forward_products(theta, phi));
  const KrausFamily b(reversed_products(theta, phi));
  const EquivalenceUnitary eq = kraus_equivalence_unitary(a, b, tol);

  StrongCommutationCertificate cert;
  cert.m = theta.kraus().size();
  cert.n = phi.kraus().size();
  cert.u = eq.u;
  const CertificateReport check = verify_certificate(theta, phi, cert.u, tol);
  cert.unitarity_residual = check.unitarity_residual;
  cert.intertwining_residual = check.intertwining_residual;
  if (!check.pass)
    throw CertificateFailure("unitary completion failed to certify the pair",
                             cert.unitarity_residual, cert.intertwining_residual);
  return cert;
}

// Certificate for the swapped pair (phi, theta) obtained from the inverse of
// u: S_a T_b = sum conj(u[(d,c),(b,a)]) T_d S_c.
inline Matrix swapped_certificate(const StrongCommutationCertificate& cert) {
  const std::size_t m = cert.m, n = cert.n;
  Matrix out(cert.u.rows(), cert.u.cols());
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < m; ++b)
      for (std::size_t c = 0; c < n; ++c)
        for (std::size_t d = 0; d < m; ++d)
          out(static_cast<Eigen::Index>(pair_index(a, b, m)),
              static_cast<Eigen::Index>(pair_index(c, d, m))) =
              std::conj(cert.u(static_cast<Eigen::Index>(pair_index(d, c, n)),
                               static_cast<Eigen::Index>(pair_index(b, a, n))));
  return out;
}

}  // namespace cpdil

#endif  // CPDIL_STRONGCOMM_HPP
