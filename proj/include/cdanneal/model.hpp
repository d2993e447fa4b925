#pragma once

// Annealing schedule, Ising instances and the interpolating Hamiltonian
//
//     H0(lambda) = (1 - lambda) H_d + lambda H_p,     H_d = -sum_j gamma_j X_j
//
// with H_p either the open nearest-neighbour chain
//     -sum_j b_j Z_j - sum_j J_j Z_j Z_{j+1}
// or the all-to-all model
//     -sum_j b_j Z_j - sum_{j>k} J_jk Z_j Z_k.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cdanneal/errors.hpp"
#include "cdanneal/pauli.hpp"
#include "cdanneal/rng.hpp"

namespace cdanneal {

// ---------------------------------------------------------------------------
// Sweep function

/// lambda(t) = sin^2[(pi/2) sin^2(pi t / (2 tau))].
class Schedule {
 public:
  Schedule() = default;
  explicit Schedule(double tau) : tau_(tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ArgumentError("sweep duration tau must be positive");
  }

  [[nodiscard]] double tau() const { return tau_; }

  [[nodiscard]] double lambda(double t) const {
    check_time(t);
    if (t == tau_) return 1.0;
    const double s = std::sin(std::numbers::pi * t / (2.0 * tau_));
    const double inner = std::sin(0.5 * std::numbers::pi * s * s);
    return inner * inner;
  }

  [[nodiscard]] double lambda_dot(double t) const {
    check_time(t);
    const double u = std::numbers::pi * t / (2.0 * tau_);
    const double s = std::sin(u);
    return std::numbers::pi * std::numbers::pi / (4.0 * tau_) * std::sin(std::numbers::pi * s * s) *
           std::sin(2.0 * u);
  }

  /// lambda_dot expressed through lambda itself (the sweep is monotone).
  [[nodiscard]] double lambda_dot_at(double lam) const {
    if (lam < 0.0 || lam > 1.0) throw ArgumentError("lambda outside [0, 1]");
    const double phi = std::asin(std::sqrt(lam));
    const double s = 2.0 * phi / std::numbers::pi;  // sin^2(u)
    return std::numbers::pi * std::numbers::pi / (4.0 * tau_) * 2.0 * std::sqrt(lam * (1.0 - lam)) * 2.0 *
           std::sqrt(std::max(0.0, s * (1.0 - s)));
  }

 private:
  void check_time(double t) const {
    if (!(t >= 0.0 && t <= tau_)) {
      throw ArgumentError("time " + std::to_string(t) + " outside [0, " + std::to_string(tau_) + "]");
    }
  }

  double tau_ = 1.0;
};

inline double sweep_lambda(double t, double tau) { return Schedule(tau).lambda(t); }
inline double sweep_lambda_dot(double t, double tau) { return Schedule(tau).lambda_dot(t); }

// ---------------------------------------------------------------------------
// Instances

enum class Topology { Chain, AllToAll };

inline std::string to_string(Topology t) { return t == Topology::Chain ? "chain" : "all_to_all"; }

inline Topology parse_topology(std::string_view s) {
  if (s == "chain") return Topology::Chain;
  if (s == "all_to_all" || s == "all-to-all" || s == "all") return Topology::AllToAll;
  throw ArgumentError("unknown topology '" + std::string(s) + "'");
}

/// Index of J_jk (j > k) in the strictly-lower-triangular row-major list
/// J_10, J_20, J_21, J_30, ...
inline std::size_t pair_index(int j, int k) {
  if (j < k) std::swap(j, k);
  return static_cast<std::size_t>(j) * (j - 1) / 2 + k;
}

inline std::size_t coupling_count(Topology t, int n) {
  return t == Topology::Chain ? static_cast<std::size_t>(n - 1) : static_cast<std::size_t>(n) * (n - 1) / 2;
}

struct Instance {
  Topology topology = Topology::Chain;
  int n_spins = 0;
  std::vector<double> gamma;
  std::vector<double> b;
  std::vector<double> couplings;
  std::uint64_t seed = 0;

  /// Coupling between sites j and k (0 when absent).
  [[nodiscard]] double coupling(int j, int k) const {
    if (j == k) return 0.0;
    if (topology == Topology::Chain) {
      if (std::abs(j - k) != 1) return 0.0;
      return couplings[static_cast<std::size_t>(std::min(j, k))];
    }
    return couplings[pair_index(j, k)];
  }

  void validate() const {
    if (n_spins < 1) throw ValidationError("instance needs at least one spin");
    if (n_spins > kMaxSpins) throw ValidationError("instance exceeds " + std::to_string(kMaxSpins) + " spins");
    const auto n = static_cast<std::size_t>(n_spins);
    if (gamma.size() != n) throw ValidationError("gamma must have n entries");
    if (b.size() != n) throw ValidationError("b must have n entries");
    if (couplings.size() != coupling_count(topology, n_spins)) {
      throw ValidationError(topology == Topology::Chain ? "chain instance needs n-1 couplings"
                                                        : "all-to-all instance needs n(n-1)/2 couplings");
    }
    auto finite = [](const std::vector<double>& v) {
      return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    if (!finite(gamma) || !finite(b) || !finite(couplings)) throw ValidationError("instance arrays must be finite");
  }
};

/// b_j ~ N(0, 1) drawn from (seed, j); gamma and couplings uniform.
inline Instance sample_instance(std::uint64_t seed, int n_spins, Topology topology, double gamma_value,
                                double coupling_value) {
  if (n_spins < 1) throw ArgumentError("n_spins must be >= 1");
  Instance inst;
  inst.topology = topology;
  inst.n_spins = n_spins;
  inst.seed = seed;
  inst.gamma.assign(static_cast<std::size_t>(n_spins), gamma_value);
  inst.couplings.assign(coupling_count(topology, n_spins), coupling_value);
  inst.b.resize(static_cast<std::size_t>(n_spins));
  for (int j = 0; j < n_spins; ++j) inst.b[static_cast<std::size_t>(j)] = rng::standard_normal(seed, j);
  inst.validate();
  return inst;
}

/// Seed of instance `index` at size `n_spins` in an ensemble.
inline std::uint64_t ensemble_seed(std::uint64_t master_seed, int n_spins, int index) {
  return rng::counter_hash(master_seed, static_cast<std::uint64_t>(n_spins), static_cast<std::uint64_t>(index));
}

inline nlohmann::json to_json(const Instance& inst) {
  return nlohmann::json{{"topology", to_string(inst.topology)},
                        {"n", inst.n_spins},
                        {"seed", inst.seed},
                        {"gamma", inst.gamma},
                        {"b", inst.b},
                        {"J", inst.couplings}};
}

inline Instance instance_from_json(const nlohmann::json& j) {
  try {
    Instance inst;
    inst.topology = parse_topology(j.at("topology").get<std::string>());
    inst.n_spins = j.at("n").get<int>();
    inst.seed = j.value("seed", std::uint64_t{0});
    inst.gamma = j.at("gamma").get<std::vector<double>>();
    inst.b = j.at("b").get<std::vector<double>>();
    inst.couplings = j.at("J").get<std::vector<double>>();
    inst.validate();
    return inst;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("instance JSON: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ValidationError(std::string("instance JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Protocols

enum class ProtocolKind { QA, CD1, CD2, CDExact };

inline std::string to_string(ProtocolKind k) {
  switch (k) {
    case ProtocolKind::QA: return "QA";
    case ProtocolKind::CD1: return "CD1";
    case ProtocolKind::CD2: return "CD2";
    case ProtocolKind::CDExact: return "CDexact";
  }
  return "?";
}

inline ProtocolKind parse_protocol(std::string_view s) {
  if (s == "QA") return ProtocolKind::QA;
  if (s == "CD1") return ProtocolKind::CD1;
  if (s == "CD2") return ProtocolKind::CD2;
  if (s == "CDexact" || s == "CD_exact" || s == "CD-exact") return ProtocolKind::CDExact;
  throw ArgumentError("unknown protocol '" + std::string(s) + "'");
}

struct Protocol {
  ProtocolKind kind = ProtocolKind::QA;
  Schedule schedule;

  [[nodiscard]] bool has_cd() const { return kind != ProtocolKind::QA; }

  void validate_for(const Instance& inst) const {
    if (kind == ProtocolKind::CDExact && inst.n_spins > kDenseLimit) {
      throw CapacityError("exact CD protocol limited to " + std::to_string(kDenseLimit) + " spins");
    }
  }
};

// ---------------------------------------------------------------------------
// Hamiltonians

inline PauliSum build_driver(const Instance& inst) {
  inst.validate();
  PauliSum h(inst.n_spins);
  for (int j = 0; j < inst.n_spins; ++j) {
    h.add(PauliString::single(inst.n_spins, j, Pauli::X), -inst.gamma[static_cast<std::size_t>(j)]);
  }
  return h;
}

inline PauliSum build_problem(const Instance& inst) {
  inst.validate();
  const int n = inst.n_spins;
  PauliSum h(n);
  for (int j = 0; j < n; ++j) h.add(PauliString::single(n, j, Pauli::Z), -inst.b[static_cast<std::size_t>(j)]);
  if (inst.topology == Topology::Chain) {
    for (int j = 0; j + 1 < n; ++j) {
      h.add(PauliString::from_sites(n, {{j, Pauli::Z}, {j + 1, Pauli::Z}}), -inst.couplings[static_cast<std::size_t>(j)]);
    }
  } else {
    for (int j = 1; j < n; ++j) {
      for (int k = 0; k < j; ++k) {
        h.add(PauliString::from_sites(n, {{j, Pauli::Z}, {k, Pauli::Z}}), -inst.couplings[pair_index(j, k)]);
      }
    }
  }
  return h;
}

/// (1 - lambda) H_d + lambda H_p.
inline PauliSum build_h0(const Instance& inst, double lam) {
  if (!(lam >= 0.0 && lam <= 1.0)) throw ArgumentError("lambda outside [0, 1]");
  PauliSum h = build_driver(inst) * (1.0 - lam);
  h += build_problem(inst) * lam;
  return h;
}

/// d H0 / d lambda = H_p - H_d.
inline PauliSum build_dh0(const Instance& inst) { return build_problem(inst) - build_driver(inst); }

}  // namespace cdanneal
