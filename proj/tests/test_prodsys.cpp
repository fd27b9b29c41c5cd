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

#include <gtest/gtest.h>

#include "cpdil/prodsys.hpp"
#include "support/generators.hpp"

namespace cpdil {
namespace {

using testgen::Rng;

TwistedProductSystem certified_system(const CPMap& theta, const CPMap& phi) {
  return build_product_system(theta, phi, strong_commutation_certificate(theta, phi));
}

TwistedProductSystem zx_system() {
  return certified_system(conjugation(testgen::pauli_z()), conjugation(testgen::pauli_x()));
}

FiberVector random_fiber(const TwistedProductSystem& sys, GridPoint g, Rng& rng) {
  const auto d = static_cast<Eigen::Index>(sys.fiber_dim(g));
  return make_fiber_vector(sys, g, testgen::ginibre(d, 1, rng).col(0));
}

FiberVector unit_fiber(const TwistedProductSystem& sys, GridPoint g, Eigen::Index w) {
  Vector c = Vector::Zero(static_cast<Eigen::Index>(sys.fiber_dim(g)));
  c(w) = 1.0;
  return make_fiber_vector(sys, g, c);
}

// Inverse of flip_from_certificate.
Matrix certificate_from_flip(const Matrix& tau, std::size_t m, std::size_t k) {
  Matrix u(tau.rows(), tau.cols());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t l = 0; l < k; ++l)
        for (std::size_t q = 0; q < m; ++q)
          u(static_cast<Eigen::Index>(i * k + j), static_cast<Eigen::Index>(q * k + l)) =
              std::conj(tau(static_cast<Eigen::Index>(i * k + j),
                            static_cast<Eigen::Index>(l * m + q)));
  return u;
}

TEST(GridPoint, OrderAndParts) {
  const GridPoint r{2, -3};
  EXPECT_EQ(r.positive_part(), (GridPoint{2, 0}));
  EXPECT_EQ(r.negative_part(), (GridPoint{0, 3}));
  EXPECT_EQ(r.positive_part() - r.negative_part(), r);
  EXPECT_TRUE(leq(GridPoint{1, 1}, GridPoint{1, 2}));
  EXPECT_FALSE(leq(GridPoint{2, 0}, GridPoint{1, 2}));
  EXPECT_EQ(grid_min(GridPoint{3, 0}, GridPoint{1, 1}), (GridPoint{1, 0}));
  EXPECT_EQ(grid_points(GridPoint{1, 2}).size(), 6u);
}

TEST(BuildProductSystem, IdentityOnScalars) {
  const TwistedProductSystem sys = certified_system(identity_map(1), identity_map(1));
  for (GridPoint g : grid_points(GridPoint{3, 3})) EXPECT_EQ(sys.fiber_dim(g), 1u);
  ASSERT_EQ(sys.flip().rows(), 1);
  EXPECT_NEAR(std::abs(sys.flip()(0, 0) - 1.0), 0.0, 1e-12);
}

TEST(BuildProductSystem, ZXFlipIsMinusOne) {
  const TwistedProductSystem sys = zx_system();
  EXPECT_EQ(sys.m(), 1u);
  EXPECT_EQ(sys.k(), 1u);
  EXPECT_NEAR(std::abs(sys.flip()(0, 0) + 1.0), 0.0, 1e-12);
}

TEST(BuildProductSystem, CornerFibersDoubleAlongE) {
  const TwistedProductSystem sys = certified_system(testgen::corner_map(), identity_map(2));
  for (GridPoint g : grid_points(GridPoint{4, 2}))
    EXPECT_EQ(sys.fiber_dim(g), std::size_t{1} << g.a);
}

TEST(BuildProductSystem, InvalidCertificateThrows) {
  const CPMap z = conjugation(testgen::pauli_z()), x = conjugation(testgen::pauli_x());
  StrongCommutationCertificate bogus;
  bogus.m = bogus.n = 1;
  bogus.u = Matrix::Identity(1, 1);
  EXPECT_THROW(build_product_system(z, x, bogus), CertificateFailure);
}

TEST(BuildProductSystem, NonContractiveMapsAreRejected) {
  const CPMap big(std::vector<Matrix>{2.0 * Matrix::Identity(2, 2)});
  EXPECT_THROW(build_product_system_unchecked(big, identity_map(2), Matrix::Identity(1, 1)),
               PreconditionError);
}

TEST(FiberDim, CapIsEnforced) {
  Rng rng(1);
  const auto pair = testgen::shared_structure_mixes(2, rng);
  const TwistedProductSystem sys = certified_system(pair.theta, pair.phi);
  EXPECT_EQ(sys.fiber_dim(GridPoint{6, 6}), 4096u);
  EXPECT_THROW(sys.fiber_dim(GridPoint{6, 6}, 2048), CapExceeded);
}

TEST(Multiply, UnitLaw) {
  Rng rng(2);
  const auto pair = testgen::shared_structure_mixes(2, rng);
  const TwistedProductSystem sys = certified_system(pair.theta, pair.phi);
  const FiberVector one = unit_fiber(sys, GridPoint{}, 0);
  const FiberVector x = random_fiber(sys, GridPoint{1, 2}, rng);
  EXPECT_LE((multiply(sys, one, x).coords - x.coords).norm(), 1e-15);
  EXPECT_LE((multiply(sys, x, one).coords - x.coords).norm(), 1e-15);
  EXPECT_EQ(multiply(sys, x, one).grid, x.grid);
}

TEST(Multiply, SingleFlipCarriesTheSign) {
  const TwistedProductSystem sys = zx_system();
  const FiberVector e = unit_fiber(sys, kStepE, 0), f = unit_fiber(sys, kStepF, 0);
  const FiberVector ef = multiply(sys, e, f), fe = multiply(sys, f, e);
  EXPECT_EQ(ef.grid, (GridPoint{1, 1}));
  EXPECT_EQ(fe.grid, (GridPoint{1, 1}));
  EXPECT_NEAR(std::abs(ef.coords(0) - 1.0), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(fe.coords(0) + 1.0), 0.0, 1e-12);
}

TEST(Multiply, AssociativeOnMixedGridPoints) {
  Rng rng(3);
  const auto pair = testgen::theta_and_automorphism(2, rng);
  const TwistedProductSystem sys = certified_system(pair.theta, pair.phi);
  ASSERT_EQ(sys.m(), 2u);
  ASSERT_EQ(sys.k(), 2u);
  const FiberVector x = random_fiber(sys, GridPoint{1, 1}, rng);
  const FiberVector y = random_fiber(sys, GridPoint{1, 0}, rng);
  const FiberVector z = random_fiber(sys, GridPoint{0, 1}, rng);
  const Vector left = multiply(sys, multiply(sys, x, y), z).coords;
  const Vector right = multiply(sys, x, multiply(sys, y, z)).coords;
  EXPECT_LE((left - right).norm(), 1e-10);
}

TEST(Multiply, LengthMismatchThrows) {
  const TwistedProductSystem sys = certified_system(testgen::corner_map(), identity_map(2));
  EXPECT_THROW(make_fiber_vector(sys, GridPoint{1, 0}, Vector::Ones(3)), InvalidInput);
}

TEST(RepresentationMatrix, Examples) {
  const CPMap theta = testgen::corner_map();
  const TwistedProductSystem sys = certified_system(theta, identity_map(2));
  EXPECT_LE((representation_matrix(sys, GridPoint{}) - Matrix::Identity(2, 2)).norm(), 0.0);
  Matrix row(2, 4);
  row << theta.kraus()[0], theta.kraus()[1];
  EXPECT_LE((representation_matrix(sys, kStepE) - row).norm(), 0.0);
  const Matrix zx = testgen::pauli_z() * testgen::pauli_x();
  EXPECT_LE((representation_matrix(zx_system(), GridPoint{1, 1}) - zx).norm(), 1e-15);
}

TEST(RepresentationMatrix, IsContractive) {
  Rng rng(4);
  const CPMap theta = testgen::random_contractive(2, 2, rng);
  const CPMap phi = compose(theta, theta);  // commutes with theta
  const TwistedProductSystem sys = certified_system(theta, phi);
  for (GridPoint g : grid_points(GridPoint{2, 1}))
    EXPECT_LE(linalg::operator_norm(representation_matrix(sys, g)), 1.0 + 1e-12);
}

TEST(VerifyRepresentation, IdentityOnScalarsIsExact) {
  const RepresentationReport r =
      verify_representation(certified_system(identity_map(1), identity_map(1)), GridPoint{3, 3});
  EXPECT_TRUE(r.pass);
  EXPECT_LE(r.rep_residual, 1e-15);
  EXPECT_LE(r.homomorphism_residual, 1e-15);
}

TEST(VerifyRepresentation, ZXAgainstConjugationOracle) {
  const TwistedProductSystem sys = zx_system();
  const RepresentationReport r = verify_representation(sys, GridPoint{3, 3});
  EXPECT_TRUE(r.pass);
  EXPECT_LE(r.rep_residual, 1e-10);
  // Independent oracle: both sides equal conjugation by Z^a X^b.
  const Matrix z = testgen::pauli_z(), x = testgen::pauli_x();
  for (GridPoint g : grid_points(GridPoint{3, 3})) {
    Matrix w = Matrix::Identity(2, 2);
    for (int i = 0; i < g.a; ++i) w = w * z;
    for (int i = 0; i < g.b; ++i) w = w * x;
    EXPECT_LE((representation_matrix(sys, g) - w).norm(), 1e-14);
  }
}

TEST(VerifyRepresentation, CornerMapWithIdentity) {
  const RepresentationReport r = verify_representation(
      certified_system(testgen::corner_map(), identity_map(2)), GridPoint{2, 1});
  EXPECT_TRUE(r.pass);
  EXPECT_LE(r.rep_residual, 1e-10);
  ASSERT_TRUE(r.coisometry_residual.has_value());
  EXPECT_LE(*r.coisometry_residual, 1e-10);
}

TEST(VerifyRepresentation, NonUnitalPairSkipsCoisometry) {
  Rng rng(5);
  const CPMap theta = testgen::random_contractive(2, 2, rng);
  const RepresentationReport r =
      verify_representation(certified_system(theta, theta), GridPoint{2, 2});
  EXPECT_TRUE(r.pass);
  EXPECT_FALSE(r.coisometry_residual.has_value());
}

TEST(VerifyRepresentation, CapExceededThrows) {
  Rng rng(6);
  const auto pair = testgen::shared_structure_mixes(2, rng);
  EXPECT_THROW(verify_representation(certified_system(pair.theta, pair.phi), GridPoint{3, 3},
                                     kDefaultTol, 64),
               CapExceeded);
}

// Properties.

TEST(ProdsysProperty, AssociativityOverGridTriples) {
  Rng rng(7);
  for (int kind = 1; kind < 4; ++kind) {
    const auto pair = testgen::random_commuting_pair(kind, 2, rng);
    const TwistedProductSystem sys = certified_system(pair.theta, pair.phi);
    const auto pts = grid_points(GridPoint{2, 2});
    for (GridPoint g : pts)
      for (GridPoint h : pts)
        for (GridPoint l : pts) {
          if (sys.fiber_dim(g + h + l) > 4096) continue;
          if ((g.a + g.b) * (h.a + h.b) * (l.a + l.b) == 0) continue;
          if ((g + h + l).a + (g + h + l).b > 6) continue;
          const FiberVector x = random_fiber(sys, g, rng), y = random_fiber(sys, h, rng),
                            z = random_fiber(sys, l, rng);
          const Vector left = multiply(sys, multiply(sys, x, y), z).coords;
          const Vector right = multiply(sys, x, multiply(sys, y, z)).coords;
          EXPECT_LE((left - right).norm(), 1e-9 * std::max(1.0, left.norm()))
              << pair.label << " " << to_string(g) << to_string(h) << to_string(l);
        }
  }
}

TEST(ProdsysProperty, RepresentationIsMultiplicativeOnRandomVectors) {
  Rng rng(8);
  for (int kind = 0; kind < 4; ++kind) {
    const auto pair = testgen::random_commuting_pair(kind, 3, rng);
    const TwistedProductSystem sys = certified_system(pair.theta, pair.phi);
    for (GridPoint g : grid_points(GridPoint{1, 2}))
      for (GridPoint h : grid_points(GridPoint{2, 1})) {
        const FiberVector x = random_fiber(sys, g, rng), y = random_fiber(sys, h, rng);
        const Matrix lhs = represent(sys, multiply(sys, x, y));
        const Matrix rhs = represent(sys, x) * represent(sys, y);
        EXPECT_LE((lhs - rhs).norm(), 1e-9 * std::max(1.0, rhs.norm())) << pair.label;
      }
  }
}

TEST(ProdsysProperty, RepresentationIdentityHoldsForCertifiedPairs) {
  Rng rng(9);
  for (int kind = 0; kind < 8; ++kind) {
    const auto pair = testgen::random_commuting_pair(kind, 2 + kind % 2, rng);
    const RepresentationReport r =
        verify_representation(certified_system(pair.theta, pair.phi), GridPoint{2, 2}, 1e-9);
    EXPECT_TRUE(r.pass) << pair.label << " rep " << r.rep_residual << " hom "
                        << r.homomorphism_residual;
  }
}

TEST(ProdsysProperty, RandomFlipBreaksTheHomomorphism) {
  Rng rng(10);
  const auto pair = testgen::theta_and_automorphism(2, rng);
  const Matrix bogus = testgen::haar_unitary(4, rng);
  ASSERT_GT(verify_certificate(pair.theta, pair.phi, bogus).intertwining_residual, 1e-2);
  const RepresentationReport r = verify_representation(
      build_product_system_unchecked(pair.theta, pair.phi, bogus), GridPoint{2, 2});
  EXPECT_FALSE(r.pass);
  EXPECT_GT(r.homomorphism_residual, 1e-3);
  // The representation identity itself does not involve the flip.
  EXPECT_LE(r.rep_residual, 1e-9);
}

// Certificates for (Theta^2, Phi) and (Theta, Phi^2) read off the two-step
// multiplication agree with the relation they should witness.
TEST(ProdsysProperty, DerivedMultiStepCertificatesVerify) {
  Rng rng(11);
  for (int kind = 0; kind < 8; ++kind) {
    const auto pair = testgen::random_commuting_pair(kind, 2 + kind % 2, rng);
    const TwistedProductSystem sys = certified_system(pair.theta, pair.phi);
    const std::size_t m = sys.m(), k = sys.k();

    const Matrix tau_e2 = sys.multiplication_matrix(kStepF, GridPoint{2, 0});
    const Matrix u_e2 = certificate_from_flip(tau_e2, m * m, k);
    const CPMap theta2 = compose(pair.theta, pair.theta);
    EXPECT_TRUE(verify_certificate(theta2, pair.phi, u_e2, 1e-8).pass) << pair.label;

    const Matrix tau_f2 = sys.multiplication_matrix(GridPoint{0, 2}, kStepE);
    const Matrix u_f2 = certificate_from_flip(tau_f2, m, k * k);
    const CPMap phi2 = compose(pair.phi, pair.phi);
    EXPECT_TRUE(verify_certificate(pair.theta, phi2, u_f2, 1e-8).pass) << pair.label;

    // An independently computed certificate for the same pair also verifies.
    EXPECT_NO_THROW(strong_commutation_certificate(theta2, pair.phi));
  }
}

}  // namespace
}  // namespace cpdil
