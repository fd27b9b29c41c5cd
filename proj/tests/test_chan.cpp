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

#include <algorithm>
#include <cmath>

#include "cpdil/chan.hpp"
#include "support/generators.hpp"

namespace cpdil {
namespace {

using testgen::Rng;

// Phi(E_jl) computed entrywise from the Kraus operators.
Matrix unit_image(const KrausFamily& k, Eigen::Index j, Eigen::Index l) {
  const Eigen::Index n = k.dim();
  Matrix out = Matrix::Zero(n, n);
  for (const auto& t : k.ops())
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index q = 0; q < n; ++q) out(i, q) += t(i, j) * std::conj(t(q, l));
  return out;
}

// Choi oracle: sum_jl E_jl (x) Phi(E_jl).
Matrix choi_oracle(const KrausFamily& k) {
  const Eigen::Index n = k.dim();
  Matrix c = Matrix::Zero(n * n, n * n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index l = 0; l < n; ++l)
      c += linalg::kron(linalg::matrix_unit(n, j, l), unit_image(k, j, l));
  return c;
}

// Superoperator oracle: column c is vec(Phi(E_c)).
Matrix superoperator_oracle(const KrausFamily& k) {
  const Eigen::Index n = k.dim();
  Matrix s(n * n, n * n);
  for (Eigen::Index l = 0; l < n; ++l)
    for (Eigen::Index j = 0; j < n; ++j) s.col(j + n * l) = linalg::vec(unit_image(k, j, l));
  return s;
}

std::vector<double> sorted_eigenvalues(const Matrix& h) {
  const Eigen::VectorXd ev = linalg::hermitian_eig(h).eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

TEST(KrausToChoi, IdentityIsRankOneWithTraceTwo) {
  const ChoiMatrix c = kraus_to_choi(identity_map(2).kraus());
  const Vector v = linalg::vec(Matrix::Identity(2, 2));
  EXPECT_LE((c.matrix - v * v.adjoint()).norm(), 1e-15);
  EXPECT_NEAR(c.matrix.trace().real(), 2.0, 1e-15);
}

TEST(KrausToChoi, CornerMapActsAsTopLeftEntryTimesIdentity) {
  const KrausFamily k = testgen::corner_map().kraus();
  EXPECT_LE((kraus_to_choi(k).matrix - choi_oracle(k)).norm(), 1e-14);
  for (Eigen::Index j = 0; j < 2; ++j)
    for (Eigen::Index l = 0; l < 2; ++l) {
      const Matrix expect =
          (j == 0 && l == 0) ? Matrix(Matrix::Identity(2, 2)) : Matrix(Matrix::Zero(2, 2));
      EXPECT_LE((cpdil::apply(CPMap(k), linalg::matrix_unit(2, j, l)) - expect).norm(), 1e-15);
    }
}

TEST(KrausToChoi, PauliMixHasEigenvaluesOneOneZeroZero) {
  const double r = 1.0 / std::sqrt(2.0);
  const KrausFamily k(std::vector<Matrix>{r * testgen::pauli_x(), r * testgen::pauli_z()});
  const Vector vx = linalg::vec(testgen::pauli_x()), vz = linalg::vec(testgen::pauli_z());
  const Matrix expect = (vx * vx.adjoint() + vz * vz.adjoint()) / 2.0;
  EXPECT_LE((kraus_to_choi(k).matrix - expect).norm(), 1e-14);
  const auto ev = sorted_eigenvalues(kraus_to_choi(k).matrix);
  EXPECT_NEAR(ev[0], 0.0, 1e-14);
  EXPECT_NEAR(ev[1], 0.0, 1e-14);
  EXPECT_NEAR(ev[2], 1.0, 1e-14);
  EXPECT_NEAR(ev[3], 1.0, 1e-14);
}

TEST(KrausToChoi, MismatchedOperatorsAreRejected) {
  EXPECT_THROW(KrausFamily(std::vector<Matrix>{Matrix::Identity(2, 2), Matrix::Identity(3, 3)}),
               InvalidInput);
}

TEST(ChoiToKraus, IdentityChannelGivesIdentityUpToPhase) {
  const KrausFamily k = choi_to_kraus(kraus_to_choi(identity_map(2).kraus()));
  ASSERT_EQ(k.size(), 1u);
  const Complex phase = k[0](0, 0);
  EXPECT_NEAR(std::abs(phase), 1.0, 1e-12);
  EXPECT_LE((k[0] - phase * Matrix::Identity(2, 2)).norm(), 1e-12);
}

TEST(ChoiToKraus, MaximallyMixedChoiGivesTraceChannel) {
  const ChoiMatrix c(2, Matrix::Identity(4, 4) / 2.0);
  const KrausFamily k = choi_to_kraus(c);
  EXPECT_EQ(k.size(), 4u);
  Rng rng(11);
  const Matrix a = testgen::ginibre(2, 2, rng);
  const Matrix expect = a.trace() / 2.0 * Matrix::Identity(2, 2);
  EXPECT_LE((cpdil::apply(CPMap(k), a) - expect).norm(), 1e-12);
  for (Eigen::Index j = 0; j < 2; ++j)
    for (Eigen::Index l = 0; l < 2; ++l) {
      const Matrix e = linalg::matrix_unit(2, j, l);
      EXPECT_LE((cpdil::apply(CPMap(k), e) - e.trace() / 2.0 * Matrix::Identity(2, 2)).norm(), 1e-12);
    }
}

TEST(ChoiToKraus, NegativeEigenvalueIsNotCompletelyPositive) {
  Matrix m = Matrix::Identity(4, 4) / 2.0;
  m(3, 3) = -0.1;
  try {
    choi_to_kraus(ChoiMatrix(2, m));
    FAIL() << "expected NotCompletelyPositive";
  } catch (const NotCompletelyPositive& e) {
    EXPECT_NEAR(e.eigenvalue(), -0.1, 1e-12);
  }
}

TEST(ChoiToKraus, NonHermitianInputIsRejected) {
  Matrix m = Matrix::Identity(4, 4);
  m(0, 1) = 1.0;
  EXPECT_THROW(choi_to_kraus(ChoiMatrix(2, m)), InvalidInput);
}

TEST(Classify, IdentityIsUnitalContractiveCP) {
  const ChannelReport r = classify(identity_map(2));
  EXPECT_TRUE(r.is_cp);
  EXPECT_TRUE(r.is_unital);
  EXPECT_TRUE(r.is_contractive);
}

TEST(Classify, CornerMapIsUnital) {
  const ChannelReport r = classify(testgen::corner_map());
  EXPECT_TRUE(r.is_unital);
  EXPECT_LE(r.unitality_residual, 1e-15);
}

TEST(Classify, HalfIdentityIsContractiveNotUnital) {
  const ChannelReport r = classify(CPMap(std::vector<Matrix>{0.5 * Matrix::Identity(2, 2)}));
  EXPECT_TRUE(r.is_cp);
  EXPECT_TRUE(r.is_contractive);
  EXPECT_FALSE(r.is_unital);
  EXPECT_NEAR(r.max_row_gram_eigenvalue, 0.25, 1e-15);
}

TEST(Classify, ExpansiveMapIsNotContractive) {
  const ChannelReport r = classify(CPMap(std::vector<Matrix>{2.0 * Matrix::Identity(2, 2)}));
  EXPECT_FALSE(r.is_contractive);
}

TEST(Compose, IdentityOnTheLeftChangesNothing) {
  Rng rng(3);
  const CPMap psi = testgen::random_contractive(3, 2, rng);
  const CPMap c = compose(identity_map(3), psi);
  for (Eigen::Index j = 0; j < 3; ++j)
    for (Eigen::Index l = 0; l < 3; ++l) {
      const Matrix e = linalg::matrix_unit(3, j, l);
      EXPECT_LE((cpdil::apply(c, e) - cpdil::apply(psi, e)).norm(), 1e-14);
    }
}

TEST(Compose, ZAfterXIsConjugationByZXAndCommutes) {
  const CPMap z = conjugation(testgen::pauli_z()), x = conjugation(testgen::pauli_x());
  const Matrix zx = testgen::pauli_z() * testgen::pauli_x();
  const Matrix s = superoperator_oracle(compose(z, x).kraus());
  EXPECT_LE((s - superoperator_oracle(conjugation(zx).kraus())).norm(), 1e-14);
  EXPECT_LE((s - superoperator_oracle(compose(x, z).kraus())).norm(), 1e-14);
  EXPECT_LE((s - z.superoperator().matrix * x.superoperator().matrix).norm(), 1e-14);
}

TEST(Compose, KrausCountMultipliesInLexicographicOrder) {
  Rng rng(5);
  const CPMap a = testgen::random_contractive(2, 2, rng);
  const CPMap b = testgen::random_contractive(2, 3, rng);
  const CPMap c = compose(a, b);
  ASSERT_EQ(c.kraus().size(), 6u);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      EXPECT_LE((c.kraus()[i * 3 + j] - a.kraus()[i] * b.kraus()[j]).norm(), 1e-15);
}

TEST(Compose, DimensionMismatchThrows) {
  EXPECT_THROW(compose(identity_map(2), identity_map(3)), InvalidInput);
}

TEST(Apply, IdentityReturnsArgument) {
  Rng rng(7);
  const Matrix a = testgen::ginibre(3, 3, rng);
  EXPECT_LE((cpdil::apply(identity_map(3), a) - a).norm(), 1e-15);
}

TEST(Apply, CornerMapHandExpansion) {
  Rng rng(8);
  const Matrix a = testgen::ginibre(2, 2, rng);
  EXPECT_LE((cpdil::apply(testgen::corner_map(), a) - a(0, 0) * Matrix::Identity(2, 2)).norm(), 1e-15);
}

TEST(Apply, ConjugatingZByXFlipsSign) {
  EXPECT_LE((cpdil::apply(conjugation(testgen::pauli_x()), testgen::pauli_z()) + testgen::pauli_z()).norm(),
            1e-15);
}

TEST(Apply, ShapeMismatchThrows) {
  EXPECT_THROW(cpdil::apply(identity_map(2), Matrix::Identity(3, 3)), InvalidInput);
}

TEST(EquivalenceUnitary, IdenticalFamiliesGiveOne) {
  const KrausFamily k = identity_map(2).kraus();
  const EquivalenceUnitary eq = kraus_equivalence_unitary(k, k);
  ASSERT_EQ(eq.u.rows(), 1);
  EXPECT_NEAR(std::abs(eq.u(0, 0) - 1.0), 0.0, 1e-12);
}

TEST(EquivalenceUnitary, PhaseOnXIsMinusI) {
  const KrausFamily a(std::vector<Matrix>{testgen::pauli_x()});
  const KrausFamily b(std::vector<Matrix>{Complex(0, 1) * testgen::pauli_x()});
  const EquivalenceUnitary eq = kraus_equivalence_unitary(a, b);
  EXPECT_NEAR(std::abs(eq.u(0, 0) - Complex(0, -1)), 0.0, 1e-12);
}

TEST(EquivalenceUnitary, CornerFamilyAgainstHadamardMix) {
  const Matrix e00 = linalg::matrix_unit(2, 0, 0), e10 = linalg::matrix_unit(2, 1, 0);
  const double r = 1.0 / std::sqrt(2.0);
  const KrausFamily a(std::vector<Matrix>{e00, e10});
  const KrausFamily b(std::vector<Matrix>{r * (e00 + e10), r * (e00 - e10)});
  const EquivalenceUnitary eq = kraus_equivalence_unitary(a, b);
  EXPECT_LE(eq.intertwining_residual, 1e-10);
  EXPECT_LE(eq.unitarity_residual, 1e-10);
  // Up to phases every entry of u has modulus 1/sqrt(2).
  for (Eigen::Index i = 0; i < 2; ++i)
    for (Eigen::Index j = 0; j < 2; ++j) EXPECT_NEAR(std::abs(eq.u(i, j)), r, 1e-10);
  // Least-squares oracle: solve vec(A_i) = sum_j u_ij vec(B_j) directly.
  Matrix mb(4, 2), ma(4, 2);
  for (Eigen::Index j = 0; j < 2; ++j) {
    mb.col(j) = linalg::vec(b[static_cast<std::size_t>(j)]);
    ma.col(j) = linalg::vec(a[static_cast<std::size_t>(j)]);
  }
  const Matrix ut = mb.colPivHouseholderQr().solve(ma);
  EXPECT_LE((ut.transpose() - eq.u).norm(), 1e-10);
}

TEST(EquivalenceUnitary, DifferentChannelsAreRejected) {
  const KrausFamily a(std::vector<Matrix>{testgen::pauli_x()});
  const KrausFamily b(std::vector<Matrix>{testgen::pauli_z()});
  EXPECT_THROW(kraus_equivalence_unitary(a, b), NotSameChannel);
}

// Properties over random inputs.

TEST(ChanProperty, ChoiRoundTripPreservesSuperoperator) {
  Rng rng(101);
  for (Eigen::Index n = 1; n <= 4; ++n)
    for (std::size_t m = 1; m <= 5; ++m) {
      const CPMap phi = testgen::random_contractive(n, m, rng);
      const KrausFamily back = choi_to_kraus(phi.choi());
      const double tol = static_cast<double>(n * n) * kDefaultTol;
      EXPECT_LE((kraus_to_superoperator(back).matrix - phi.superoperator().matrix).norm(), tol);
      EXPECT_LE((phi.choi().matrix - choi_oracle(phi.kraus())).norm(), 1e-12);
      EXPECT_LE((phi.superoperator().matrix - superoperator_oracle(phi.kraus())).norm(), 1e-12);
      EXPECT_LE(back.size(), static_cast<std::size_t>(n * n));
    }
}

TEST(ChanProperty, KrausAndSuperoperatorApplicationAgree) {
  Rng rng(102);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 1 + trial % 4;
    const CPMap phi = testgen::random_contractive(n, 1 + trial % 3, rng);
    const Matrix a = testgen::ginibre(n, n, rng);
    EXPECT_LE((cpdil::apply(phi, a) - cpdil::apply(phi.superoperator(), a)).norm(), 1e-10);
  }
}

TEST(ChanProperty, CompositionIsAssociative) {
  Rng rng(103);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = 2 + trial % 3;
    const CPMap a = testgen::random_contractive(n, 2, rng);
    const CPMap b = testgen::random_contractive(n, 1, rng);
    const CPMap c = testgen::random_contractive(n, 3, rng);
    const Matrix left = compose(compose(a, b), c).superoperator().matrix;
    const Matrix right = compose(a, compose(b, c)).superoperator().matrix;
    EXPECT_LE((left - right).norm(), 1e-10);
  }
}

TEST(ChanProperty, EquivalenceUnitaryRecoversRandomMixing) {
  Rng rng(104);
  for (int trial = 0; trial < 12; ++trial) {
    const Eigen::Index n = 2 + trial % 3;
    const std::size_t m = 1 + static_cast<std::size_t>(trial % 4);
    const CPMap phi = testgen::random_contractive(n, m, rng);
    // B is a unitary remix of A padded by one extra slot.
    const std::size_t len = m + 1;
    const Matrix w = testgen::haar_unitary(static_cast<Eigen::Index>(len), rng);
    const KrausFamily a = phi.kraus().padded(len);
    std::vector<Matrix> bops;
    for (std::size_t j = 0; j < len; ++j) {
      Matrix acc = Matrix::Zero(n, n);
      for (std::size_t i = 0; i < len; ++i)
        acc += w(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) * a[i];
      bops.push_back(acc);
    }
    const EquivalenceUnitary eq = kraus_equivalence_unitary(phi.kraus(), KrausFamily(bops));
    EXPECT_LE(unitarity_residual(eq.u), 1e-8);
    EXPECT_LE(intertwining_residual(a.ops(), bops, eq.u), 1e-8);
  }
}

}  // namespace
}  // namespace cpdil
