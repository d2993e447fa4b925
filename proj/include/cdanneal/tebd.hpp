#pragma once

// Second-order TEBD for open chains.
//
// One step of length dt applies, with the Hamiltonian frozen at the step
// midpoint,
//     S(dt/2) E(dt/2) O(dt) E(dt/2) S(dt/2)
// where S holds all single-site terms, E the bonds (j, j+1) with j even and O
// those with j odd. Imaginary-time steps use exp(-h dt) and renormalize.
// Plans of order 4 compose five such steps per dt (Suzuki's fractal
// recursion), each sub-step again frozen at its own midpoint.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cdanneal/agp.hpp"
#include "cdanneal/errors.hpp"
#include "cdanneal/model.hpp"
#include "cdanneal/mps.hpp"
#include "cdanneal/pauli.hpp"

namespace cdanneal {

struct TebdPlan {
  double dt = 0.05;
  int chi_max = 100;
  double trunc_tol = 1e-16;  // discarded weight per truncation, relative
  int order = 4;             // 2: one symmetric step per dt; 4: Suzuki composition

  void validate() const {
    if (order != 2 && order != 4) throw ArgumentError("Trotter order must be 2 or 4");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ArgumentError("TEBD dt must be positive");
    if (chi_max < 1) throw ArgumentError("chi_max must be >= 1");
    if (!(trunc_tol >= 0.0)) throw ArgumentError("trunc_tol must be >= 0");
  }

  [[nodiscard]] Truncation truncation() const { return {chi_max, trunc_tol, true}; }
};

struct TebdReport {
  int steps = 0;
  int max_bond = 1;
  double discarded_weight = 0.0;  // summed over all truncations

  void record(const GateInfo& g) {
    max_bond = std::max(max_bond, g.bond_dim);
    discarded_weight += g.discarded_weight;
  }
};

/// Nearest-neighbour decomposition of a chain Hamiltonian.
struct LocalTerms {
  std::vector<Eigen::Matrix2cd> site;  // per site
  std::vector<Eigen::Matrix4cd> bond;  // per bond (j, j+1), index 2 s_j + s_{j+1}
};

inline Eigen::Matrix4cd kron(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
  Eigen::Matrix4cd out;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  }
  return out;
}

/// Splits h into site and bond matrices; throws if any term reaches beyond
/// nearest neighbours. Identity terms are dropped (global phase).
inline LocalTerms split_local(const PauliSum& h) {
  const int n = h.n_spins();
  LocalTerms out;
  out.site.assign(static_cast<std::size_t>(n), Eigen::Matrix2cd::Zero());
  out.bond.assign(static_cast<std::size_t>(std::max(0, n - 1)), Eigen::Matrix4cd::Zero());
  for (const auto& [k, c] : h) {
    const SiteMask support = k.x | k.z;
    if (support.none()) continue;
    const PauliString s(n, k);
    std::vector<int> sites;
    for (int j = 0; j < n && sites.size() < 3; ++j) {
      if (support.test(j)) sites.push_back(j);
    }
    if (sites.size() == 1) {
      out.site[static_cast<std::size_t>(sites[0])] += c * pauli_matrix(s.at(sites[0]));
    } else if (sites.size() == 2 && sites[1] == sites[0] + 1) {
      out.bond[static_cast<std::size_t>(sites[0])] +=
          c * kron(pauli_matrix(s.at(sites[0])), pauli_matrix(s.at(sites[1])));
    } else {
      throw ArgumentError("TEBD needs nearest-neighbour terms, got " + s.to_string());
    }
  }
  return out;
}

/// exp(-i h dt) for real time, exp(-(h - e_min) dt) for imaginary time.
template <int D>
Eigen::Matrix<cplx, D, D> gate_exponential(const Eigen::Matrix<cplx, D, D>& h, double dt, bool imaginary) {
  const Eigen::Matrix<cplx, D, D> herm = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<cplx, D, D>> es(herm);
  const auto& e = es.eigenvalues();
  Eigen::Matrix<cplx, D, 1> f;
  for (int i = 0; i < D; ++i) {
    f(i) = imaginary ? cplx(std::exp(-(e(i) - e(0)) * dt), 0.0) : std::exp(cplx(0.0, -e(i) * dt));
  }
  return es.eigenvectors() * f.asDiagonal() * es.eigenvectors().adjoint();
}

namespace detail {

inline void apply_site_layer(MpsState& m, const LocalTerms& terms, double dt, bool imaginary) {
  const int n = m.n_spins;
  if (!imaginary) {
    for (int j = 0; j < n; ++j) {
      apply_single_site(m, j, gate_exponential<2>(terms.site[static_cast<std::size_t>(j)], dt, false));
    }
    return;
  }
  // Non-unitary gates are applied at the orthogonality center so that the
  // canonical form survives; sweep away from the current center.
  const bool forward = m.center <= n / 2;
  for (int k = 0; k < n; ++k) {
    const int j = forward ? k : n - 1 - k;
    move_center(m, j);
    apply_single_site(m, j, gate_exponential<2>(terms.site[static_cast<std::size_t>(j)], dt, true));
    normalize(m);
  }
}

inline void apply_bond_layer(MpsState& m, const LocalTerms& terms, int parity, double dt, bool imaginary,
                             bool left_to_right, const Truncation& trunc, TebdReport& report) {
  const int nb = m.n_spins - 1;
  std::vector<int> bonds;
  for (int b = parity; b < nb; b += 2) bonds.push_back(b);
  if (!left_to_right) std::reverse(bonds.begin(), bonds.end());
  for (int b : bonds) {
    const Eigen::Matrix4cd g = gate_exponential<4>(terms.bond[static_cast<std::size_t>(b)], dt, imaginary);
    if (left_to_right) {
      move_center(m, b);
      report.record(apply_two_site_gate(m, b, g, trunc, CenterSide::Right));
    } else {
      move_center(m, b + 1);
      report.record(apply_two_site_gate(m, b, g, trunc, CenterSide::Left));
    }
  }
}

}  // namespace detail

/// One symmetric second-order step under the local Hamiltonian `h`.
/// Bond layers alternate sweep direction with `forward` so consecutive steps
/// never pay for a full center move.
inline void trotter_step_local(MpsState& m, const LocalTerms& terms, double dt, bool imaginary, const TebdPlan& plan,
                               TebdReport& report, bool forward = true) {
  const Truncation trunc = plan.truncation();
  detail::apply_site_layer(m, terms, 0.5 * dt, imaginary);
  detail::apply_bond_layer(m, terms, 0, 0.5 * dt, imaginary, forward, trunc, report);
  detail::apply_bond_layer(m, terms, 1, dt, imaginary, !forward, trunc, report);
  detail::apply_bond_layer(m, terms, 0, 0.5 * dt, imaginary, forward, trunc, report);
  detail::apply_site_layer(m, terms, 0.5 * dt, imaginary);
  ++report.steps;
}

/// H(t) = H0(lambda(t)) + lambda_dot(t) A'(lambda(t)).
inline PauliSum total_hamiltonian(const Instance& inst, const Protocol& protocol, const AgpProfile& prof, double t) {
  PauliSum h = build_h0(inst, protocol.schedule.lambda(t));
  if (protocol.has_cd()) h += cd_hamiltonian(inst, protocol, prof, t);
  return h;
}

/// Real-time step from t to t + dt with the Hamiltonian at t + dt/2.
inline void trotter_step(MpsState& m, const Instance& inst, const Protocol& protocol, const AgpProfile& prof, double t,
                         double dt, const TebdPlan& plan, TebdReport& report, bool forward = true) {
  const double mid = std::min(t + 0.5 * dt, protocol.schedule.tau());
  trotter_step_local(m, split_local(total_hamiltonian(inst, protocol, prof, mid)), dt, false, plan, report, forward);
}

/// Sub-step fractions of the fourth-order Suzuki composition.
inline std::array<double, 5> suzuki4_fractions() {
  const double p = 1.0 / (4.0 - std::cbrt(4.0));
  return {p, p, 1.0 - 4.0 * p, p, p};
}

/// Real-time advance from t to t + dt at the plan's order.
inline void trotter_advance(MpsState& m, const Instance& inst, const Protocol& protocol, const AgpProfile& prof,
                            double t, double dt, const TebdPlan& plan, TebdReport& report, bool& forward) {
  if (plan.order == 2) {
    trotter_step(m, inst, protocol, prof, t, dt, plan, report, forward);
    forward = !forward;
    return;
  }
  double s = t;
  for (const double f : suzuki4_fractions()) {
    const double h = f * dt;
    const double mid = std::clamp(s + 0.5 * h, 0.0, protocol.schedule.tau());
    trotter_step_local(m, split_local(total_hamiltonian(inst, protocol, prof, mid)), h, false, plan, report, forward);
    forward = !forward;
    s += h;
  }
}

struct TebdResult {
  MpsState state;
  TebdReport report;
};

inline void require_chain(const Instance& inst) {
  if (inst.topology != Topology::Chain) throw ArgumentError("MPS engine requires chain topology");
}

/// Number of steps for tau / dt; throws if they are not commensurate.
inline int step_count(double tau, double dt) {
  const double ratio = tau / dt;
  const double steps = std::round(ratio);
  if (steps < 1.0 || std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio)) {
    throw ArgumentError("tau / dt must be a positive integer (tau=" + std::to_string(tau) +
                        ", dt=" + std::to_string(dt) + ")");
  }
  return static_cast<int>(steps);
}

/// Full sweep from |+>^N over [0, tau].
inline TebdResult evolve_tebd(const Instance& inst, const Protocol& protocol, const AgpProfile& prof,
                              const TebdPlan& plan) {
  inst.validate();
  require_chain(inst);
  plan.validate();
  if (std::any_of(inst.gamma.begin(), inst.gamma.end(), [](double g) { return !(g > 0.0); })) {
    throw ArgumentError("initial |+> state requires gamma_j > 0");
  }
  const double tau = protocol.schedule.tau();
  const int steps = step_count(tau, plan.dt);
  const double h = tau / steps;
  TebdResult out{init_plus_state(inst.n_spins), {}};
  bool forward = true;
  for (int k = 0; k < steps; ++k) trotter_advance(out.state, inst, protocol, prof, k * h, h, plan, out.report, forward);
  out.report.max_bond = std::max(out.report.max_bond, out.state.max_bond());
  return out;
}

inline TebdResult evolve_tebd(const Instance& inst, const Protocol& protocol, const TebdPlan& plan) {
  return evolve_tebd(inst, protocol, agp_profile(inst, protocol), plan);
}

// ---------------------------------------------------------------------------
// Imaginary time

struct ImaginaryOptions {
  std::vector<double> dt_stages{1.0, 0.1, 0.01, 1e-3, 1e-4};
  double tol = 1e-10;              // energy change per sweep
  int max_sweeps = 20000;          // per stage
  double admixture_target = 1e-20; // excited-state weight left after a stage
};

struct ImaginaryResult {
  double energy = 0.0;
  MpsState state;
  int sweeps = 0;
  std::vector<double> energies;  // after every sweep
  TebdReport report;
};

namespace detail {

/// Lowest basis state of a diagonal nearest-neighbour Hamiltonian by dynamic
/// programming over the local diagonals. Empty when the minimum is not unique
/// to within `tie`.
inline std::vector<int> diagonal_ground_bits(const LocalTerms& terms, double tie) {
  const auto n = terms.site.size();
  std::vector<std::array<double, 2>> best(n);
  std::vector<std::array<int, 2>> from(n, {0, 0});
  std::vector<std::array<bool, 2>> unique(n, {true, true});
  for (int s = 0; s < 2; ++s) best[0][static_cast<std::size_t>(s)] = terms.site[0](s, s).real();
  for (std::size_t j = 1; j < n; ++j) {
    for (int s = 0; s < 2; ++s) {
      std::array<double, 2> v{};
      for (int p = 0; p < 2; ++p) {
        v[static_cast<std::size_t>(p)] = best[j - 1][static_cast<std::size_t>(p)] + terms.bond[j - 1](2 * p + s, 2 * p + s).real();
      }
      const int arg = v[1] < v[0] ? 1 : 0;
      const auto su = static_cast<std::size_t>(s);
      from[j][su] = arg;
      unique[j][su] = std::abs(v[0] - v[1]) > tie && unique[j - 1][static_cast<std::size_t>(arg)];
      best[j][su] = v[static_cast<std::size_t>(arg)] + terms.site[j](s, s).real();
    }
  }
  const int last = best[n - 1][1] < best[n - 1][0] ? 1 : 0;
  if (std::abs(best[n - 1][0] - best[n - 1][1]) <= tie || !unique[n - 1][static_cast<std::size_t>(last)]) return {};
  std::vector<int> bits(n);
  bits[n - 1] = last;
  for (std::size_t j = n - 1; j > 0; --j) bits[j - 1] = from[j][static_cast<std::size_t>(bits[j])];
  return bits;
}

}  // namespace detail

/// Imaginary-time TEBD ground state of an arbitrary nearest-neighbour h.
///
/// A stage ends once both the last energy change and its geometric tail
/// estimate fall below tol. Energy only resolves the excited-state weight eps
/// down to roughly 1e-14 / gap, so the stage then keeps sweeping blind: the
/// last clean ratio r of successive energy changes gives gap = -ln(r) / (2 dt)
/// and eps = tail / gap, and the extra sweep count brings eps below
/// admixture_target.
///
/// A diagonal h with a unique minimum is projected in one step: the
/// infinite-time limit of exp(-h T)|+> is its lowest basis state, which the
/// finite schedule cannot resolve when classical gaps are tiny.
inline ImaginaryResult imaginary_tebd_ground_state(const PauliSum& h, const TebdPlan& plan,
                                                   const ImaginaryOptions& opt = {}) {
  plan.validate();
  const LocalTerms terms = split_local(h);
  ImaginaryResult out;
  if (h.is_diagonal()) {
    const std::vector<int> bits = detail::diagonal_ground_bits(terms, 1e-12);
    if (!bits.empty()) {
      out.state = basis_state(h.n_spins(), bits);
      out.energy = expectation(out.state, h).real();
      out.energies.push_back(out.energy);
      out.report.max_bond = 1;
      return out;
    }
  }
  out.state = init_plus_state(h.n_spins());
  double e_prev = expectation(out.state, h).real();
  out.energies.push_back(e_prev);
  bool forward = true;
  auto sweep_once = [&](double dt) {
    trotter_step_local(out.state, terms, dt, true, plan, out.report, forward);
    forward = !forward;
    ++out.sweeps;
    const double e = expectation(out.state, h).real();
    if (!std::isfinite(e)) throw NumericError("non-finite energy in imaginary-time evolution");
    out.energies.push_back(e);
    const double de = std::abs(e_prev - e);
    e_prev = e;
    return de;
  };

  for (const double dt : opt.dt_stages) {
    double de_prev = std::numeric_limits<double>::infinity();
    double clean_ratio = 0.0, clean_tail = 0.0;
    int clean_sweep = 0;
    int sweep = 0;
    bool converged = false;
    for (; sweep < opt.max_sweeps; ++sweep) {
      const double de = sweep_once(dt);
      const double noise = 1e-13 * std::max(1.0, std::abs(e_prev));
      double tail = de;
      if (de_prev > 0.0 && de < de_prev) {
        const double r = de / de_prev;
        tail = de * r / (1.0 - r);
        if (de > noise) {
          clean_ratio = r;
          clean_tail = tail;
          clean_sweep = sweep;
        }
      }
      de_prev = de;
      if (sweep >= 1 && de < opt.tol && tail < opt.tol) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      throw ConvergenceError("imaginary-time TEBD did not converge at dt=" + std::to_string(dt) + " after " +
                             std::to_string(opt.max_sweeps) + " sweeps");
    }
    if (clean_ratio > 0.0 && clean_ratio < 1.0) {
      const double gap = -std::log(clean_ratio) / (2.0 * dt);
      const double eps = clean_tail / gap * std::pow(clean_ratio, sweep - clean_sweep);
      if (eps > opt.admixture_target) {
        const double extra = std::ceil(std::log(opt.admixture_target / eps) / std::log(clean_ratio));
        const int budget = opt.max_sweeps - sweep - 1;
        if (extra > budget) {
          throw ConvergenceError("imaginary-time TEBD needs " + std::to_string(extra) +
                                 " more sweeps at dt=" + std::to_string(dt));
        }
        for (int k = 0; k < static_cast<int>(extra); ++k) sweep_once(dt);
      }
    }
  }
  normalize(out.state);
  out.energy = e_prev;
  out.report.max_bond = std::max(out.report.max_bond, out.state.max_bond());
  return out;
}

/// Ground state of the final Hamiltonian H0(1) of a chain instance.
inline ImaginaryResult imaginary_tebd_ground_state(const Instance& inst, const TebdPlan& plan,
                                                   const ImaginaryOptions& opt = {}) {
  inst.validate();
  require_chain(inst);
  return imaginary_tebd_ground_state(build_h0(inst, 1.0), plan, opt);
}

}  // namespace cdanneal
