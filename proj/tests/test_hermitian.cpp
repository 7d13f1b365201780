#include "bracketflow/hermitian.hpp"
#include "bracketflow/jacobi.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "oracles.hpp"

using namespace bracketflow;
using H = HermitianMatrix<double>;
using oracle::cd;

namespace {

constexpr double kPi = std::numbers::pi;

double max_abs(const Eigen::MatrixXcd& a) { return a.cwiseAbs().maxCoeff(); }

H random_h(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) { return H(oracle::random_hermitian(n, rng, scale)); }

Eigen::Vector3d random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Eigen::Vector3d v(z(rng), z(rng), z(rng));
  return v.normalized();
}

}  // namespace

TEST(HermitianMatrix, RejectsNonHermitianAndSymmetrizesNoise) {
  Eigen::MatrixXcd a(2, 2);
  a << 1, cd(0, 1), cd(0, 1), 2;
  EXPECT_THROW(H{a}, ContractError);

  Eigen::MatrixXcd b(2, 2);
  b << 1, cd(1, 1e-14), cd(1, -1e-14 + 1e-15), 2;
  const H h(b);
  EXPECT_EQ(h(0, 1), std::conj(h(1, 0)));

  EXPECT_THROW(H{Eigen::MatrixXcd::Identity(1, 1)}, ContractError);
  EXPECT_THROW(H{Eigen::MatrixXcd::Identity(2, 3)}, ContractError);
}

TEST(FromBloch, PauliCases) {
  EXPECT_LT(max_abs(from_bloch(0.0, 2.0, Eigen::Vector3d(0, 0, 1)).matrix() - oracle::sz()), 1e-15);
  EXPECT_LT(max_abs(from_bloch(0.0, 2.0, Eigen::Vector3d(1, 0, 0)).matrix() - oracle::sx()), 1e-15);
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(2, 2);
  d(0, 0) = 1;
  EXPECT_LT(max_abs(from_bloch(1.0, 1.0, Eigen::Vector3d(0, 0, 1)).matrix() - d), 1e-15);
}

TEST(FromBloch, Errors) {
  EXPECT_THROW(from_bloch(0.0, -1.0, Eigen::Vector3d(0, 0, 1)), ContractError);
  EXPECT_THROW(from_bloch(0.0, 1.0, Eigen::Vector3d(0, 0, 1.01)), ContractError);
  // Within 1e-9 of unit norm is renormalized.
  const H h = from_bloch(0.0, 2.0, Eigen::Vector3d(0, 0, 1 + 5e-10));
  EXPECT_NEAR(h(0, 0).real(), 1.0, 1e-15);
}

TEST(ToBloch, Examples) {
  const auto bx = to_bloch(H(oracle::sx()));
  EXPECT_NEAR(bx.u, 0, 1e-15);
  EXPECT_NEAR(bx.nu, 2, 1e-15);
  EXPECT_NEAR((bx.n - Eigen::Vector3d(1, 0, 0)).norm(), 0, 1e-15);
  EXPECT_NEAR(bx.theta, kPi / 2, 1e-15);
  EXPECT_NEAR(bx.phi, 0, 1e-15);
  EXPECT_FALSE(bx.degenerate);

  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(2, 2);
  d(0, 0) = 1;
  const auto bd = to_bloch(H(d));
  EXPECT_NEAR(bd.u, 1, 1e-15);
  EXPECT_NEAR(bd.nu, 1, 1e-15);
  EXPECT_NEAR(bd.theta, 0, 1e-15);

  const auto bi = to_bloch(H::identity(2));
  EXPECT_NEAR(bi.u, 2, 1e-15);
  EXPECT_EQ(bi.nu, 0);
  EXPECT_TRUE(bi.degenerate);
  EXPECT_EQ(bi.n, Eigen::Vector3d::UnitZ());

  EXPECT_THROW(to_bloch(H::identity(3)), ContractError);
}

TEST(ToBloch, RoundTripProperty) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3, 3), r(1e-9, 4);
  for (int trial = 0; trial < 1000; ++trial) {
    const double u0 = u(rng), nu = r(rng);
    const Eigen::Vector3d n = random_unit(rng);
    const auto b = to_bloch(from_bloch(u0, nu, n));
    ASSERT_LT(std::abs(b.u - u0), 1e-10);
    ASSERT_LT(std::abs(b.nu - nu), 1e-10);
    ASSERT_LT((b.n - n).norm(), 1e-10 * std::max(1.0, 1.0 / nu)) << "nu=" << nu;
    ASSERT_NEAR(b.n.norm(), 1.0, 1e-12);
    const Eigen::Vector3d from_angles = unit_vector(b.theta, b.phi);
    ASSERT_LT((from_angles - b.n).norm(), 1e-12);
    ASSERT_GE(b.phi, 0.0);
    ASSERT_LT(b.phi, 2 * kPi);
  }
}

TEST(Commutator, PauliAlgebra) {
  const H x(oracle::sx()), z(oracle::sz());
  EXPECT_LT(max_abs(commutator(x, z) - cd(0, -2) * oracle::sy()), 1e-15);
  EXPECT_LT(max_abs(commutator(x, x)), 1e-15);
  std::mt19937_64 rng(1);
  const H h = random_h(4, rng);
  EXPECT_LT(max_abs(commutator(h, H::identity(4))), 1e-15);
  EXPECT_THROW(commutator(h, x), ContractError);
}

TEST(Commutator, AntiHermitianProperty) {
  std::mt19937_64 rng(3);
  for (int n : {2, 3, 5}) {
    const H a = random_h(n, rng), b = random_h(n, rng);
    const Eigen::MatrixXcd c = commutator(a, b);
    EXPECT_LT(max_abs(c.adjoint() + c), 1e-14);
    EXPECT_LT(max_abs(c - (oracle::product(a.matrix(), b.matrix()) - oracle::product(b.matrix(), a.matrix()))), 1e-14);
  }
}

TEST(Commutator, MatchesBlochReductionIdentity) {
  // [H, G] = (i/2) nu mu sigma.(n x g)
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> r(0.1, 3);
  for (int trial = 0; trial < 200; ++trial) {
    const double nu = r(rng), mu = r(rng);
    const Eigen::Vector3d n = random_unit(rng), g = random_unit(rng);
    const H h = from_bloch(r(rng), nu, n), gm = from_bloch(r(rng), mu, g);
    const Eigen::Vector3d c = n.cross(g);
    const Eigen::MatrixXcd expected = cd(0, 0.5 * nu * mu) * (c.x() * oracle::sx() + c.y() * oracle::sy() + c.z() * oracle::sz());
    ASSERT_LT(max_abs(commutator(h, gm) - expected), 1e-10);
  }
}

TEST(DoubleBracket, Examples) {
  const H x(oracle::sx()), z(oracle::sz());
  // -[sx, [sx, sz]] by generic products.
  const Eigen::MatrixXcd inner = oracle::product(x.matrix(), z.matrix()) - oracle::product(z.matrix(), x.matrix());
  const Eigen::MatrixXcd outer = oracle::product(x.matrix(), inner) - oracle::product(inner, x.matrix());
  const Eigen::MatrixXcd expected = -outer;
  EXPECT_LT(max_abs(expected - (-4.0) * oracle::sz()), 1e-15);
  EXPECT_LT(max_abs(double_bracket_rhs(x, z, 1.0).matrix() - expected), 1e-14);

  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(2, 2);
  d(0, 0) = 3;
  d(1, 1) = -1;
  EXPECT_LT(max_abs(double_bracket_rhs(H(d), z, 0.7).matrix()), 1e-15);
  EXPECT_LT(max_abs(double_bracket_rhs(H::identity(2), z, 2.0).matrix()), 1e-15);

  EXPECT_THROW(double_bracket_rhs(x, z, 0.0), ContractError);
  EXPECT_THROW(double_bracket_rhs(x, H::identity(3), 1.0), ContractError);
}

TEST(DoubleBracket, HermitianTracelessAndFixedPointEquivalence) {
  std::mt19937_64 rng(5);
  for (int n : {2, 4}) {
    for (int trial = 0; trial < 100; ++trial) {
      const H h = random_h(n, rng), g = random_h(n, rng);
      const H rhs = double_bracket_rhs(h, g, 0.8);
      ASSERT_LT(std::abs(rhs.trace()), 1e-13);
      ASSERT_GT(commutator_norm_sq(h, g), 1e-12);
      ASSERT_GT(rhs.matrix().norm(), 1e-12);
    }
    // Commuting pair: both vanish.
    Eigen::VectorXd dh = Eigen::VectorXd::LinSpaced(n, -1, 2), dg = Eigen::VectorXd::LinSpaced(n, 3, 0.5);
    const Eigen::MatrixXcd q = oracle::expm(cd(0, 1) * oracle::random_hermitian(n, rng));
    const H h(q * dh.cast<cd>().asDiagonal() * q.adjoint()), g(q * dg.cast<cd>().asDiagonal() * q.adjoint());
    EXPECT_LT(commutator_norm_sq(h, g), 1e-12);
    EXPECT_LT(double_bracket_rhs(h, g, 1.0).matrix().norm(), 1e-12);
  }
}

TEST(Eigenvalues, Examples) {
  const auto ex = eigenvalues(H(oracle::sx()));
  EXPECT_NEAR(ex(0), -1, 1e-15);
  EXPECT_NEAR(ex(1), 1, 1e-15);
  const auto ed = eigenvalues(H::diagonal(Eigen::Vector3d(3, 1, 2)));
  EXPECT_NEAR(ed(0), 1, 1e-15);
  EXPECT_NEAR(ed(1), 2, 1e-15);
  EXPECT_NEAR(ed(2), 3, 1e-15);
}

TEST(Eigenvalues, JacobiAgreesWithEigenSolver) {
  std::mt19937_64 rng(9);
  for (int n : {2, 3, 4, 8, 16}) {
    for (int trial = 0; trial < 20; ++trial) {
      const H h = random_h(n, rng, 2.0);
      const Eigensystem<double> es = jacobi_eigensystem(h);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ref(h.matrix());
      ASSERT_LT((es.values - ref.eigenvalues()).cwiseAbs().maxCoeff(), 1e-12);
      // Eigenvectors: H V = V diag(values), V unitary.
      const Eigen::MatrixXcd& v = es.vectors;
      ASSERT_LT(max_abs(h.matrix() * v - v * es.values.cast<cd>().asDiagonal()), 1e-11);
      ASSERT_LT(max_abs(v.adjoint() * v - Eigen::MatrixXcd::Identity(n, n)), 1e-12);
      ASSERT_LT((eigenvalues(h) - ref.eigenvalues()).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Eigenvalues, DegeneracyFlag) {
  EXPECT_TRUE(is_degenerate(H::identity(2)));
  EXPECT_TRUE(is_degenerate(H::diagonal(Eigen::Vector3d(1, 1, 2))));
  EXPECT_FALSE(is_degenerate(H::diagonal(Eigen::Vector3d(1, 1.5, 2))));
  EXPECT_FALSE(is_degenerate(H(oracle::sx())));
}

TEST(TraceFunctionals, Examples) {
  const H x(oracle::sx()), z(oracle::sz()), mz(-oracle::sz());
  EXPECT_NEAR(trace_distance_sq(z, z), 0, 1e-15);
  // (sx - sz)^2 = 2 * 1
  const Eigen::MatrixXcd d = x.matrix() - z.matrix();
  const double oracle_value = oracle::trace(oracle::product(d, d)).real();
  EXPECT_NEAR(oracle_value, 4, 1e-15);
  EXPECT_NEAR(trace_distance_sq(x, z), 4, 1e-15);
  const Eigen::MatrixXcd d2 = mz.matrix() - z.matrix();
  EXPECT_NEAR(oracle::trace(oracle::product(d2, d2)).real(), 8, 1e-15);
  EXPECT_NEAR(trace_distance_sq(mz, z), 8, 1e-15);

  const Eigen::MatrixXcd c = oracle::product(z.matrix(), x.matrix()) - oracle::product(x.matrix(), z.matrix());
  EXPECT_NEAR(oracle::trace(oracle::product(c.adjoint(), c)).real(), 8, 1e-15);
  EXPECT_NEAR(commutator_norm_sq(x, z), 8, 1e-15);
  EXPECT_NEAR(commutator_norm_sq(z, mz), 0, 1e-15);
  EXPECT_NEAR(trace_product(x, z), 0, 1e-15);
  EXPECT_NEAR(trace_product(mz, z), -2, 1e-15);
}

TEST(TraceFunctionals, CommutatorNormFromBlochAngle) {
  // |[H,G]|^2 = (1/2)(nu mu)^2 sin^2 theta for 2 x 2, cross-checked by products.
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> ang(0, kPi), r(0.2, 3);
  for (int trial = 0; trial < 100; ++trial) {
    const double theta = ang(rng), phi = 2 * ang(rng), nu = r(rng), mu = r(rng);
    const H h = from_bloch(0.3, nu, unit_vector(theta, phi));
    const H g = from_bloch(-0.2, mu, Eigen::Vector3d(0, 0, 1));
    const Eigen::MatrixXcd c = oracle::product(g.matrix(), h.matrix()) - oracle::product(h.matrix(), g.matrix());
    const double direct = oracle::trace(oracle::product(c.adjoint(), c)).real();
    const double formula = 0.5 * nu * nu * mu * mu * std::sin(theta) * std::sin(theta);
    ASSERT_NEAR(direct, formula, 1e-12);
    ASSERT_NEAR(commutator_norm_sq(h, g), direct, 1e-12);
  }
}

TEST(TraceFunctionals, DimensionMismatch) {
  EXPECT_THROW(trace_distance_sq(H::identity(2), H::identity(3)), ContractError);
  EXPECT_THROW(commutator_norm_sq(H::identity(2), H::identity(3)), ContractError);
}

TEST(ReferenceFrame, Validation) {
  EXPECT_THROW(ReferenceFrame<double>(0, 0, 1), ContractError);
  EXPECT_THROW(ReferenceFrame<double>(0, 2, -1), ContractError);
  EXPECT_THROW(ReferenceFrame<double>(0, 2, 1, Eigen::Vector3d(1, 1, 0)), ContractError);
  const ReferenceFrame<double> f(0.5, 2, 0.25);
  EXPECT_DOUBLE_EQ(f.omega(3.0), 0.25 * 3.0 * 2.0);
}

TEST(HermitianMatrix, FloatScalar) {
  // The core is templated on the real scalar.
  const HermitianMatrix<float> h = from_bloch<float>(0.0f, 2.0f, Vector3<float>(1, 0, 0));
  const HermitianMatrix<float> z = from_bloch<float>(0.0f, 2.0f, Vector3<float>(0, 0, 1));
  EXPECT_NEAR(commutator_norm_sq(h, z), 8.0f, 1e-5f);
  EXPECT_NEAR(eigenvalues(h)(1), 1.0f, 1e-6f);
}
