#include <gtest/gtest.h>

#include <random>

#include "cdanneal/exact_dynamics.hpp"

using namespace cdanneal;

namespace {

Instance chain_instance(std::uint64_t seed, int n) { return sample_instance(seed, n, Topology::Chain, 1.0, 0.5); }
Instance all_to_all_instance(std::uint64_t seed, int n) { return sample_instance(seed, n, Topology::AllToAll, 1.0, 1.0); }

// Dense oracle for exp(-i H t) through the eigendecomposition.
Eigen::VectorXcd dense_expm(const Eigen::MatrixXcd& h, const Eigen::VectorXcd& psi, double t) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  const Eigen::VectorXcd ph = (es.eigenvalues().cast<cplx>() * cplx(0, -t)).array().exp().matrix();
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint() * psi;
}

Eigen::VectorXcd random_state(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  Eigen::VectorXcd v(Eigen::Index{1} << n);
  for (auto& a : v) a = cplx(g(rng), g(rng));
  return v.normalized();
}

}  // namespace

TEST(GroundState, SingleSpin) {
  PauliSum h(1);
  h.add(PauliString::from_label("Z"), -1.0);
  const GroundState gs = ground_state(h);
  EXPECT_DOUBLE_EQ(gs.energy, -1.0);
  EXPECT_EQ(gs.degeneracy(), 1);
  EXPECT_NEAR(fidelity(gs.state, StateVector::basis(1, 0)), 1.0, 1e-15);
}

TEST(GroundState, FerromagneticChain) {
  auto inst = chain_instance(1, 6);
  for (auto& b : inst.b) b = std::abs(b) + 0.1;
  const GroundState gs = ground_state(build_problem(inst));
  double e = 0.0;
  for (double b : inst.b) e -= b;
  for (double j : inst.couplings) e -= j;
  EXPECT_NEAR(gs.energy, e, 1e-12);
  EXPECT_NEAR(fidelity(gs.state, StateVector::basis(6, 0)), 1.0, 1e-15);
}

TEST(GroundState, MatchesGeneralEigensolver) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto inst = all_to_all_instance(seed, 6);
    const PauliSum h = build_h0(inst, 0.6);
    // independent route: the non-Hermitian complex solver
    const Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ces(to_dense(h));
    double emin = 1e300;
    for (const auto& e : ces.eigenvalues()) emin = std::min(emin, e.real());
    const GroundState gs = ground_state(h);
    EXPECT_NEAR(gs.energy, emin, 1e-10);
    EXPECT_NEAR(expectation(h, gs.state), gs.energy, 1e-10);
  }
}

TEST(GroundState, DegenerateSubspace) {
  PauliSum h(2);
  h.add(PauliString::from_label("ZZ"), 1.0);
  const GroundState gs = ground_state(h);
  EXPECT_EQ(gs.degeneracy(), 2);
  EXPECT_NEAR(fidelity(StateVector::basis(2, 1), gs), 1.0, 1e-15);
  EXPECT_NEAR(fidelity(StateVector::basis(2, 2), gs), 1.0, 1e-15);
  EXPECT_NEAR(fidelity(StateVector::basis(2, 0), gs), 0.0, 1e-15);
  // canonical representative: lowest-index basis state of the ground space
  EXPECT_NEAR(fidelity(gs.state, StateVector::basis(2, 1)), 1.0, 1e-15);
}

TEST(GroundState, CapacityLimit) {
  PauliSum h(kDenseLimit + 1);
  h.add(PauliString::single(kDenseLimit + 1, 0, Pauli::Z));
  EXPECT_THROW(ground_state(h), CapacityError);
}

TEST(Fidelity, Examples) {
  std::mt19937_64 rng(1);
  StateVector a{3, random_state(rng, 3)};
  EXPECT_NEAR(fidelity(a, a), 1.0, 1e-14);
  EXPECT_EQ(fidelity(StateVector::basis(3, 1), StateVector::basis(3, 2)), 0.0);
  StateVector b{3, random_state(rng, 3)};
  StateVector bp{3, b.amp * std::polar(1.0, 0.77)};
  EXPECT_NEAR(fidelity(a, b), fidelity(a, bp), 1e-14);
  EXPECT_THROW(fidelity(a, StateVector::plus(2)), ArgumentError);
}

TEST(Apply, MatchesDense) {
  std::mt19937_64 rng(2);
  for (std::uint64_t seed : {1, 2}) {
    const auto inst = all_to_all_instance(seed, 5);
    const Protocol p{ProtocolKind::CD2, Schedule(1.0)};
    const AgpProfile prof = agp_profile(inst, p, 16);
    PauliSum h = build_h0(inst, 0.3) + cd_hamiltonian(inst, p, prof, 0.4);
    const StateVector psi{5, random_state(rng, 5)};
    EXPECT_LT((apply(h, psi).amp - to_dense(h) * psi.amp).norm(), 1e-12);
  }
}

TEST(Expmv, MatchesDenseExponential) {
  std::mt19937_64 rng(3);
  const auto inst = chain_instance(4, 6);
  const PauliSum h = build_h0(inst, 0.5);
  const Eigen::VectorXcd psi = random_state(rng, 6);
  for (double t : {0.01, 0.5, 3.0}) {
    Eigen::VectorXcd v = psi;
    expmv(grouped_operator(h), v, t);
    EXPECT_LT((v - dense_expm(to_dense(h), psi, t)).norm(), 1e-10) << "t=" << t;
  }
}

TEST(Evolve, NormPreserved) {
  const auto inst = all_to_all_instance(5, 6);
  for (auto kind : {ProtocolKind::QA, ProtocolKind::CD1, ProtocolKind::CD2}) {
    const EvolveResult r = evolve(inst, Protocol{kind, Schedule(1.0)}, 200);
    EXPECT_LE(r.max_norm_drift, 1e-9);
    EXPECT_NEAR(r.state.norm(), 1.0, 1e-9);
  }
}

TEST(Evolve, AdiabaticLimit) {
  const auto inst = chain_instance(6, 2);
  const EvolveResult r = evolve(inst, Protocol{ProtocolKind::QA, Schedule(50.0)});
  EXPECT_GE(fidelity(r.state, ground_state(build_problem(inst))), 0.99);
}

TEST(Evolve, ExactCdShortSweep) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto inst = chain_instance(seed, 3);
    const EvolveResult r = evolve(inst, Protocol{ProtocolKind::CDExact, Schedule(0.05)});
    EXPECT_GE(fidelity(r.state, ground_state(build_problem(inst))), 0.999);
  }
}

TEST(Evolve, TransitionlessDrivingAcrossDurations) {
  for (double tau : {0.01, 0.1, 1.0, 10.0}) {
    for (int n : {2, 4}) {
      const auto inst = all_to_all_instance(10 + n, n);
      const EvolveResult r = evolve(inst, Protocol{ProtocolKind::CDExact, Schedule(tau)});
      EXPECT_GE(fidelity(r.state, ground_state(build_problem(inst))), 0.999) << "tau=" << tau << " n=" << n;
    }
  }
}

TEST(Evolve, StepHalving) {
  for (auto kind : {ProtocolKind::QA, ProtocolKind::CD2}) {
    const auto inst = chain_instance(7, 8);
    const Protocol p{kind, Schedule(10.0)};
    const AgpProfile prof = agp_profile(inst, p);
    const GroundState gs = ground_state(build_problem(inst));
    const double f1 = fidelity(evolve(inst, p, prof, kDefaultSteps).state, gs);
    const double f2 = fidelity(evolve(inst, p, prof, 2 * kDefaultSteps).state, gs);
    EXPECT_LE(std::abs(f1 - f2), 1e-7) << to_string(kind);
  }
}

TEST(Evolve, MatchesDenseMidpointOracle) {
  // Independent integrator: dense midpoint exponentials with many steps.
  const auto inst = chain_instance(8, 3);
  const Protocol p{ProtocolKind::CD1, Schedule(1.0)};
  const AgpProfile prof = agp_profile(inst, p);
  const int steps = 4000;
  const double h = 1.0 / steps;
  Eigen::VectorXcd psi = StateVector::plus(3).amp;
  for (int k = 0; k < steps; ++k) {
    const double t = (k + 0.5) * h;
    const PauliSum ham = build_h0(inst, p.schedule.lambda(t)) + cd_hamiltonian(inst, p, prof, t);
    psi = dense_expm(to_dense(ham), psi, h);
  }
  const EvolveResult r = evolve(inst, p, prof);
  EXPECT_GT(std::norm(psi.dot(r.state.amp)), 1.0 - 1e-8);
}

TEST(Evolve, QuenchLimit) {
  for (int n : {4, 6, 8}) {
    const auto inst = all_to_all_instance(20 + n, n);
    const EvolveResult r = evolve(inst, Protocol{ProtocolKind::QA, Schedule(0.01)}, 200);
    const double f = fidelity(r.state, ground_state(build_problem(inst)));
    const double base = std::pow(2.0, -n);
    EXPECT_GT(f, base / 3);
    EXPECT_LT(f, base * 3);
  }
}

TEST(Evolve, RejectsNonPositiveDriver) {
  auto inst = chain_instance(1, 3);
  inst.gamma[1] = 0.0;
  EXPECT_THROW(evolve(inst, Protocol{ProtocolKind::QA, Schedule(1.0)}, 10), ArgumentError);
}

TEST(Spectral, Hermitian) {
  const auto inst = all_to_all_instance(3, 4);
  const Eigen::MatrixXcd a = exact_agp_spectral(build_h0(inst, 0.4), build_dh0(inst));
  EXPECT_LT((a - a.adjoint()).norm(), 1e-12);
}

TEST(Spectral, ZeroDiagonalInEigenbasis) {
  const auto inst = all_to_all_instance(4, 3);
  const PauliSum h = build_h0(inst, 0.4);
  const Eigen::MatrixXcd a = exact_agp_spectral(h, build_dh0(inst));
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(to_dense(h));
  const Eigen::MatrixXcd ae = es.eigenvectors().adjoint() * a * es.eigenvectors();
  EXPECT_LT(ae.diagonal().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Spectral, DegenerateSpectrumThrows) {
  PauliSum h(2);
  h.add(PauliString::from_label("ZZ"), 1.0);
  PauliSum dh(2);
  dh.add(PauliString::from_label("XI"), 1.0);
  EXPECT_THROW(exact_agp_spectral(h, dh), DegeneracyError);
}
