#include <gtest/gtest.h>

#include <random>

#include "cdanneal/pauli.hpp"

using namespace cdanneal;

namespace {

// Independent dense oracle: Kronecker products of the 2x2 matrices, site 0
// leftmost (most significant).
Eigen::MatrixXcd kron_oracle(const PauliString& s) {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
  for (int j = 0; j < s.n_spins(); ++j) {
    Eigen::Matrix2cd p;
    switch (s.at(j)) {
      case Pauli::I: p << 1, 0, 0, 1; break;
      case Pauli::X: p << 0, 1, 1, 0; break;
      case Pauli::Y: p << 0, cplx(0, -1), cplx(0, 1), 0; break;
      case Pauli::Z: p << 1, 0, 0, -1; break;
    }
    Eigen::MatrixXcd next(out.rows() * 2, out.cols() * 2);
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
      for (Eigen::Index c = 0; c < out.cols(); ++c) next.block(2 * r, 2 * c, 2, 2) = out(r, c) * p;
    }
    out = next;
  }
  return s.phase_factor() * out;
}

PauliString random_string(std::mt19937_64& rng, int n, bool with_phase = true) {
  PauliString s(n);
  std::uniform_int_distribution<int> pick(0, 3);
  for (int j = 0; j < n; ++j) s.set(j, static_cast<Pauli>(pick(rng)));
  return with_phase ? s.with_phase(pick(rng)) : s;
}

PauliSum random_sum(std::mt19937_64& rng, int n, int terms) {
  std::normal_distribution<double> g;
  PauliSum s(n);
  for (int k = 0; k < terms; ++k) s.add(random_string(rng, n, false), cplx(g(rng), g(rng)));
  return s;
}

}  // namespace

TEST(PauliString, SingleQubitProduct) {
  const auto x = PauliString::from_label("X");
  const auto z = PauliString::from_label("Z");
  const auto p = multiply(x, z);
  EXPECT_EQ(p.at(0), Pauli::Y);
  EXPECT_EQ(p.phase_factor(), cplx(0, -1));
}

TEST(PauliString, IdentityIsNeutral) {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 20; ++k) {
    const auto p = random_string(rng, 5);
    const auto q = multiply(PauliString::identity(5), p);
    EXPECT_EQ(q.key(), p.key());
    EXPECT_EQ(q.phase(), p.phase());
  }
}

TEST(PauliString, Involution) {
  const auto yx = PauliString::from_label("YX");
  const auto p = multiply(yx, yx);
  EXPECT_TRUE(p.is_identity());
  EXPECT_EQ(p.phase(), 0);
}

TEST(PauliString, SizeMismatchThrows) {
  EXPECT_THROW(multiply(PauliString::from_label("X"), PauliString::from_label("XX")), ArgumentError);
  EXPECT_THROW(commutator(PauliString::from_label("X"), PauliString::from_label("XX")), ArgumentError);
}

TEST(PauliString, LabelRoundTrip) {
  const auto s = PauliString::from_label("-iXYZI");
  EXPECT_EQ(s.n_spins(), 4);
  EXPECT_EQ(s.at(1), Pauli::Y);
  EXPECT_EQ(s.phase_factor(), cplx(0, -1));
  EXPECT_EQ(PauliString::from_label(s.to_string()).key(), s.key());
}

TEST(PauliString, HermiticityViaAdjointProduct) {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 50; ++k) {
    const auto s = random_string(rng, 4);
    const auto p = multiply(s, s.adjoint());
    EXPECT_TRUE(p.is_identity());
    const Eigen::MatrixXcd d = kron_oracle(s);
    EXPECT_EQ(s.is_hermitian(), (d - d.adjoint()).norm() < 1e-12);
  }
}

TEST(PauliString, ProductMatchesDenseOracle) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 100; ++k) {
    const int n = 1 + static_cast<int>(rng() % 4);
    const auto a = random_string(rng, n);
    const auto b = random_string(rng, n);
    EXPECT_LT((kron_oracle(multiply(a, b)) - kron_oracle(a) * kron_oracle(b)).norm(), 1e-12);
    EXPECT_LT((to_dense(multiply(a, b)) - to_dense(a) * to_dense(b)).norm(), 1e-12);
    EXPECT_LT((to_dense(a) - kron_oracle(a)).norm(), 1e-12);
  }
}

TEST(Commutator, Examples) {
  const auto xz = commutator(PauliString::from_label("X"), PauliString::from_label("Z"));
  EXPECT_EQ(xz.size(), 1u);
  EXPECT_EQ(xz.coefficient(PauliString::from_label("Y")), cplx(0, -2));

  EXPECT_TRUE(commutator(PauliString::from_label("XI"), PauliString::from_label("IZ")).empty());

  const auto zz_y = commutator(PauliString::from_label("ZZ"), PauliString::from_label("YI"));
  EXPECT_EQ(zz_y.size(), 1u);
  EXPECT_EQ(zz_y.coefficient(PauliString::from_label("XZ")), cplx(0, -2));
}

TEST(Commutator, Antisymmetry) {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 200; ++k) {
    const auto a = random_string(rng, 3);
    const auto b = random_string(rng, 3);
    PauliSum sum = commutator(a, b);
    sum += commutator(b, a);
    EXPECT_TRUE(sum.empty());
  }
}

TEST(Commutator, MatchesDense) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 100; ++k) {
    const auto a = random_string(rng, 3);
    const auto b = random_string(rng, 3);
    const Eigen::MatrixXcd da = kron_oracle(a), db = kron_oracle(b);
    EXPECT_LT((to_dense(commutator(a, b)) - (da * db - db * da)).norm(), 1e-12);
  }
}

TEST(Commutator, HermiticityClosure) {
  std::mt19937_64 rng(6);
  for (int k = 0; k < 100; ++k) {
    PauliSum h1(4), h2(4);
    h1.add(random_string(rng, 4, false), 1.0);
    h2.add(random_string(rng, 4, false), 1.0);
    PauliSum c = commutator(h1, h2);
    c *= cplx(0, 1);
    EXPECT_TRUE(c.is_hermitian());
  }
}

TEST(InnerProduct, Examples) {
  PauliSum x(1), z(1);
  x.add(PauliString::from_label("X"));
  z.add(PauliString::from_label("Z"));
  EXPECT_EQ(inner_product(x, x), cplx(1.0));
  EXPECT_EQ(inner_product(x, z), cplx(0.0));
  PauliSum s = x * 2.0 + z * 3.0;
  EXPECT_EQ(inner_product(s, s), cplx(13.0));
}

TEST(InnerProduct, Orthonormality) {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 100; ++k) {
    const auto a = random_string(rng, 4, false);
    const auto b = random_string(rng, 4, false);
    PauliSum sa(4), sb(4);
    sa.add(a);
    sb.add(b);
    EXPECT_EQ(inner_product(sa, sb), a.key() == b.key() ? cplx(1.0) : cplx(0.0));
  }
}

TEST(InnerProduct, DenseFaithfulness) {
  std::mt19937_64 rng(8);
  for (int n = 1; n <= 4; ++n) {
    for (int k = 0; k < 20; ++k) {
      const PauliSum a = random_sum(rng, n, 6);
      const PauliSum b = random_sum(rng, n, 6);
      const Eigen::MatrixXcd da = to_dense(a), db = to_dense(b);
      const cplx dense = (da.adjoint() * db).trace() / static_cast<double>(da.rows());
      EXPECT_LT(std::abs(inner_product(a, b) - dense), 1e-12);
    }
  }
}

TEST(PauliSum, PruningDropsTinyCoefficients) {
  PauliSum s(2);
  s.add(PauliString::from_label("XX"), 1.0);
  s.add(PauliString::from_label("XX"), -1.0);
  s.add(PauliString::from_label("ZZ"), 1e-16);
  EXPECT_TRUE(s.empty());
}

TEST(PauliSum, HermitianDetection) {
  PauliSum s(1);
  s.add(PauliString::from_label("X"), 1.0);
  EXPECT_TRUE(s.is_hermitian());
  s.add(PauliString::from_label("Z"), cplx(0, 1));
  EXPECT_FALSE(s.is_hermitian());
}

TEST(ToDense, Examples) {
  Eigen::Matrix2cd x;
  x << 0, 1, 1, 0;
  EXPECT_LT((to_dense(PauliString::from_label("X")) - x).norm(), 1e-15);
  const Eigen::MatrixXcd zz = to_dense(PauliString::from_label("ZZ"));
  EXPECT_EQ(zz.diagonal(), (Eigen::Vector4cd() << 1, -1, -1, 1).finished());
}

TEST(ToDense, CapacityLimit) {
  PauliSum big(kDenseLimit + 1);
  big.add(PauliString::single(kDenseLimit + 1, 0, Pauli::Z));
  EXPECT_THROW(to_dense(big), CapacityError);
}

TEST(ToDense, SiteZeroIsMostSignificant) {
  const Eigen::MatrixXcd z0 = to_dense(PauliString::from_label("ZI"));
  EXPECT_EQ(z0(1, 1), cplx(1.0));   // |01>: site 0 is |0>
  EXPECT_EQ(z0(2, 2), cplx(-1.0));  // |10>: site 0 is |1>
}
