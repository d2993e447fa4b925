#include <gtest/gtest.h>

#include "cdanneal/exact_dynamics.hpp"
#include "cdanneal/tebd.hpp"

using namespace cdanneal;

namespace {

Instance chain(std::uint64_t seed, int n) { return sample_instance(seed, n, Topology::Chain, 1.0, 0.5); }

TebdPlan plan(double dt, int order = 4, int chi = 100, double tol = 1e-16) {
  TebdPlan p;
  p.dt = dt;
  p.order = order;
  p.chi_max = chi;
  p.trunc_tol = tol;
  return p;
}

// Classical chain ground energy by dynamic programming over spin values.
double viterbi_energy(const Instance& inst) {
  std::array<double, 2> best{};
  auto z = [](int s) { return s ? -1.0 : 1.0; };
  for (int s = 0; s < 2; ++s) best[static_cast<std::size_t>(s)] = -inst.b[0] * z(s);
  for (int j = 1; j < inst.n_spins; ++j) {
    std::array<double, 2> next{};
    for (int s = 0; s < 2; ++s) {
      double m = 1e300;
      for (int p = 0; p < 2; ++p) {
        m = std::min(m, best[static_cast<std::size_t>(p)] - inst.couplings[static_cast<std::size_t>(j - 1)] * z(p) * z(s));
      }
      next[static_cast<std::size_t>(s)] = m - inst.b[static_cast<std::size_t>(j)] * z(s);
    }
    best = next;
  }
  return std::min(best[0], best[1]);
}

}  // namespace

TEST(SplitLocal, ReconstructsHamiltonian) {
  const auto inst = chain(1, 4);
  const Protocol p{ProtocolKind::CD2, Schedule(1.0)};
  const AgpProfile prof = agp_profile(inst, p, 32);
  const PauliSum h = total_hamiltonian(inst, p, prof, 0.3);
  const LocalTerms t = split_local(h);
  Eigen::MatrixXcd dense = Eigen::MatrixXcd::Zero(16, 16);
  const auto id2 = Eigen::Matrix2cd::Identity();
  auto embed = [&](const Eigen::MatrixXcd& op, int first, int width) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
    for (int j = 0; j < 4;) {
      const Eigen::MatrixXcd f = j == first ? op : Eigen::MatrixXcd(id2);
      Eigen::MatrixXcd next(out.rows() * f.rows(), out.cols() * f.cols());
      for (Eigen::Index r = 0; r < out.rows(); ++r) {
        for (Eigen::Index c = 0; c < out.cols(); ++c) next.block(r * f.rows(), c * f.cols(), f.rows(), f.cols()) = out(r, c) * f;
      }
      out = next;
      j += j == first ? width : 1;
    }
    return out;
  };
  for (int j = 0; j < 4; ++j) dense += embed(t.site[static_cast<std::size_t>(j)], j, 1);
  for (int j = 0; j < 3; ++j) dense += embed(t.bond[static_cast<std::size_t>(j)], j, 2);
  EXPECT_LT((dense - to_dense(h)).norm(), 1e-12);
}

TEST(SplitLocal, RejectsLongRangeTerms) {
  PauliSum h(4);
  h.add(PauliString::from_label("ZIZI"), 1.0);
  EXPECT_THROW(split_local(h), ArgumentError);
}

TEST(Tebd, QaHasNoYTerms) {
  const auto inst = chain(2, 5);
  const Protocol p{ProtocolKind::QA, Schedule(1.0)};
  const AgpProfile prof = agp_profile(inst, p);
  for (double t : {0.1, 0.5, 0.9}) {
    const PauliSum h = total_hamiltonian(inst, p, prof, t);
    for (const auto& [k, c] : h) EXPECT_EQ(k.y_count(), 0);
    const LocalTerms lt = split_local(h);
    for (const auto& s : lt.site) EXPECT_EQ(s.imag().norm(), 0.0);
  }
}

TEST(Tebd, LocalErrorIsThirdOrder) {
  const auto inst = chain(3, 4);
  const Protocol p{ProtocolKind::CD2, Schedule(1.0)};
  const AgpProfile prof = agp_profile(inst, p);
  const DynamicsHamiltonian ham(inst, p, prof);
  const double t0 = 0.4;
  std::vector<double> err;
  for (double dt : {0.02, 0.01}) {
    MpsState m = init_plus_state(4);
    TebdReport rep;
    trotter_step(m, inst, p, prof, t0, dt, plan(dt, 2, 64, 0.0), rep);
    const EvolveResult ex = propagate(ham, StateVector::plus(4), t0, t0 + dt, 400);
    err.push_back((to_dense(m) - ex.state.amp).norm());
  }
  EXPECT_NEAR(err[0] / err[1], 8.0, 1.6) << err[0] << " " << err[1];
}

TEST(Tebd, RealStepPreservesNorm) {
  const auto inst = chain(4, 8);
  const Protocol p{ProtocolKind::CD2, Schedule(2.0)};
  const AgpProfile prof = agp_profile(inst, p);
  MpsState m = init_plus_state(8);
  TebdReport rep;
  bool forward = true;
  for (int k = 0; k < 20; ++k) {
    trotter_advance(m, inst, p, prof, k * 0.05, 0.05, plan(0.05), rep, forward);
    EXPECT_NEAR(norm(m), 1.0, 1e-10);
    EXPECT_TRUE(is_canonical(m));
  }
}

TEST(Tebd, MatchesExactEngine) {
  const auto inst = chain(5, 8);
  const GroundState gs = ground_state(build_problem(inst));
  for (auto kind : {ProtocolKind::QA, ProtocolKind::CD1, ProtocolKind::CD2}) {
    const Protocol p{kind, Schedule(10.0)};
    const AgpProfile prof = agp_profile(inst, p);
    const TebdResult t = evolve_tebd(inst, p, prof, TebdPlan{});
    const EvolveResult e = evolve(inst, p, prof);
    const StateVector tv{8, to_dense(t.state)};
    EXPECT_NEAR(fidelity(tv, gs), fidelity(e.state, gs), 1e-6) << to_string(kind);
    EXPECT_GT(fidelity(tv, e.state), 1.0 - 1e-6) << to_string(kind);
  }
}

TEST(Tebd, UntruncatedReproducesExactFidelity) {
  const auto inst = chain(6, 10);
  const GroundState gs = ground_state(build_problem(inst));
  for (auto kind : {ProtocolKind::QA, ProtocolKind::CD2}) {
    const Protocol p{kind, Schedule(10.0)};
    const AgpProfile prof = agp_profile(inst, p);
    const TebdResult t = evolve_tebd(inst, p, prof, plan(0.025, 4, 1024, 0.0));
    const double fe = fidelity(evolve(inst, p, prof, 4000).state, gs);
    EXPECT_NEAR(fidelity(StateVector{10, to_dense(t.state)}, gs), fe, 1e-8) << to_string(kind);
  }
}

TEST(Tebd, StepHalving) {
  const auto inst = chain(7, 8);
  const Protocol p{ProtocolKind::CD2, Schedule(10.0)};
  const AgpProfile prof = agp_profile(inst, p);
  const ImaginaryResult gs = imaginary_tebd_ground_state(inst, TebdPlan{});
  const double f1 = std::norm(overlap(gs.state, evolve_tebd(inst, p, prof, plan(0.05)).state));
  const double f2 = std::norm(overlap(gs.state, evolve_tebd(inst, p, prof, plan(0.025)).state));
  EXPECT_LE(std::abs(f1 - f2), 1e-6);
}

TEST(Tebd, SecondOrderPlanAvailable) {
  const auto inst = chain(7, 6);
  const Protocol p{ProtocolKind::QA, Schedule(2.0)};
  const AgpProfile prof = agp_profile(inst, p);
  const TebdResult t = evolve_tebd(inst, p, prof, plan(0.05, 2));
  const EvolveResult e = evolve(inst, p, prof);
  EXPECT_GT(fidelity(StateVector{6, to_dense(t.state)}, e.state), 1.0 - 1e-4);
  EXPECT_EQ(t.report.steps, 40);
}

TEST(Tebd, BondDimensionIndependence) {
  const auto inst = chain(8, 24);
  const Protocol p{ProtocolKind::CD2, Schedule(10.0)};
  const AgpProfile prof = agp_profile(inst, p);
  const ImaginaryResult gs = imaginary_tebd_ground_state(inst, TebdPlan{});
  const double f100 = std::norm(overlap(gs.state, evolve_tebd(inst, p, prof, plan(0.05, 4, 100)).state));
  const double f150 = std::norm(overlap(gs.state, evolve_tebd(inst, p, prof, plan(0.05, 4, 150)).state));
  EXPECT_LE(std::abs(f100 - f150), 1e-8);
}

TEST(Tebd, DiscardedWeightLargeChain) {
  const auto inst = chain(9, 50);
  const Protocol p{ProtocolKind::CD2, Schedule(10.0)};
  const TebdResult t = evolve_tebd(inst, p, TebdPlan{});
  EXPECT_LT(t.report.discarded_weight, 1e-8);
  EXPECT_LE(t.report.max_bond, 100);
}

TEST(Tebd, RejectsBadInput) {
  const auto all = sample_instance(1, 4, Topology::AllToAll, 1.0, 1.0);
  EXPECT_THROW(evolve_tebd(all, Protocol{ProtocolKind::QA, Schedule(1.0)}, TebdPlan{}), ArgumentError);
  EXPECT_THROW(step_count(1.0, 0.3), ArgumentError);
  EXPECT_EQ(step_count(10.0, 0.05), 200);
  EXPECT_THROW(plan(0.05, 3).validate(), ArgumentError);
  EXPECT_THROW(plan(-0.05).validate(), ArgumentError);
}

TEST(Imaginary, MatchesDenseEnergy) {
  for (std::uint64_t seed : {1, 2}) {
    const auto inst = chain(seed, 8);
    const ImaginaryResult r = imaginary_tebd_ground_state(inst, TebdPlan{});
    const GroundState gs = ground_state(build_problem(inst));
    EXPECT_NEAR(r.energy, gs.energy, 1e-8);
    EXPECT_GT(fidelity(StateVector{8, to_dense(r.state)}, gs), 1.0 - 1e-9);
  }
}

TEST(Imaginary, QuantumHamiltonianEnergy) {
  const auto inst = chain(3, 8);
  const PauliSum h = build_h0(inst, 0.5);
  const ImaginaryResult r = imaginary_tebd_ground_state(h, plan(0.05, 2, 100, 1e-16));
  const double e0 = ground_state(h).energy;
  EXPECT_NEAR(r.energy, e0, 1e-8);
}

TEST(Imaginary, EnergyNonIncreasing) {
  const auto inst = chain(4, 10);
  const ImaginaryResult r = imaginary_tebd_ground_state(build_h0(inst, 0.7), TebdPlan{});
  ASSERT_GT(r.energies.size(), 10u);
  // alternating sweep directions leave a period-2 cycle of ~1e-11 at each Trotter fixed point
  for (std::size_t k = 1; k < r.energies.size(); ++k) {
    EXPECT_LE(r.energies[k], r.energies[k - 1] + 1e-10) << "sweep " << k;
  }
  EXPECT_LE(r.energy, *std::min_element(r.energies.begin(), r.energies.end()) + 1e-12);
}

TEST(Imaginary, VariationalBound) {
  for (int n : {6, 10, 12}) {
    const auto inst = chain(30 + n, n);
    const PauliSum h = build_h0(inst, 0.6);
    const ImaginaryResult r = imaginary_tebd_ground_state(h, plan(0.05, 2));
    const double e0 = ground_state(h).energy;
    EXPECT_GE(expectation(r.state, h).real(), e0 - 1e-10) << "n=" << n;
  }
}

TEST(Imaginary, UniformFieldGivesAllZero) {
  auto inst = chain(5, 12);
  for (auto& b : inst.b) b = 1.0;
  const ImaginaryResult r = imaginary_tebd_ground_state(inst, TebdPlan{});
  const MpsState zero = basis_state(12, std::vector<int>(12, 0));
  EXPECT_GE(std::norm(overlap(zero, r.state)), 1.0 - 1e-9);
}

TEST(Imaginary, WeakCouplingSmallGaps) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto inst = sample_instance(seed, 20, Topology::Chain, 1.0, 0.1);
    EXPECT_NEAR(imaginary_tebd_ground_state(inst, TebdPlan{}).energy, viterbi_energy(inst), 1e-10) << seed;
  }
}

TEST(Imaginary, DiagonalTieFallsBackToEvolution) {
  PauliSum h(4);
  h.add(PauliString::from_label("ZZII"), -1.0);
  h.add(PauliString::from_label("IZZI"), -1.0);
  h.add(PauliString::from_label("IIZZ"), -1.0);
  const ImaginaryResult r = imaginary_tebd_ground_state(h, TebdPlan{});
  EXPECT_NEAR(r.energy, -3.0, 1e-10);
  EXPECT_GT(r.sweeps, 0);
  // |+> projects onto the symmetric GHZ combination
  EXPECT_NEAR(std::norm(overlap(basis_state(4, {0, 0, 0, 0}), r.state)), 0.5, 1e-8);
}

TEST(Imaginary, MatchesClassicalDynamicProgramming) {
  for (std::uint64_t seed : {11, 12, 13}) {
    const auto inst = chain(seed, 32);
    const ImaginaryResult r = imaginary_tebd_ground_state(inst, TebdPlan{});
    EXPECT_NEAR(r.energy, viterbi_energy(inst), 1e-8);
  }
}
