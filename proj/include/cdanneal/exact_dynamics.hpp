#pragma once

// State-vector engine: ground states, time-ordered evolution under
// H(t) = H0(lambda(t)) + lambda_dot(t) A'(lambda(t)), fidelities and the
// spectral exact gauge potential.
//
// Hamiltonians act on vectors term by term, grouped by X-mask:
//     (H psi)[s] = sum_x D_x[s] psi[s ^ x],
// so nothing of size 2^N x 2^N is formed. The propagator is the fourth-order
// commutator-free Magnus scheme with two exponentials per step, each applied
// by a Lanczos (Krylov) exponential.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cdanneal/agp.hpp"
#include "cdanneal/errors.hpp"
#include "cdanneal/model.hpp"
#include "cdanneal/pauli.hpp"

namespace cdanneal {

inline constexpr int kStateVectorLimit = 26;
inline constexpr int kDefaultSteps = 2000;

struct StateVector {
  int n_spins = 0;
  Eigen::VectorXcd amp;

  [[nodiscard]] Eigen::Index dim() const { return amp.size(); }
  [[nodiscard]] double norm() const { return amp.norm(); }

  static StateVector zero(int n) {
    check_size(n);
    return {n, Eigen::VectorXcd::Zero(Eigen::Index{1} << n)};
  }
  static StateVector basis(int n, std::uint64_t index) {
    StateVector s = zero(n);
    s.amp(static_cast<Eigen::Index>(index)) = 1.0;
    return s;
  }
  /// |+>^N, the ground state of -sum gamma_j X_j for gamma_j > 0.
  static StateVector plus(int n) {
    StateVector s = zero(n);
    s.amp.setConstant(std::pow(2.0, -0.5 * n));
    return s;
  }

  static void check_size(int n) {
    if (n < 1 || n > kStateVectorLimit) {
      throw CapacityError("state vector limited to " + std::to_string(kStateVectorLimit) + " spins");
    }
  }
};

inline double fidelity(const StateVector& psi, const StateVector& phi) {
  if (psi.dim() != phi.dim()) throw ArgumentError("fidelity: dimension mismatch");
  return std::norm(psi.amp.dot(phi.amp));
}

// ---------------------------------------------------------------------------
// Sparse Pauli action

/// sum_x X^x D_x, stored as one diagonal per distinct X-mask.
struct GroupedOperator {
  int n_spins = 0;
  std::vector<std::uint64_t> xmasks;
  std::vector<Eigen::VectorXcd> diags;

  void apply(const Eigen::VectorXcd& in, Eigen::VectorXcd& out) const {
    const auto dim = static_cast<std::uint64_t>(in.size());
    out.setZero(in.size());
    for (std::size_t g = 0; g < xmasks.size(); ++g) {
      const std::uint64_t x = xmasks[g];
      const cplx* d = diags[g].data();
      const cplx* src = in.data();
      cplx* dst = out.data();
      if (x == 0) {
        for (std::uint64_t s = 0; s < dim; ++s) dst[s] += d[s] * src[s];
      } else {
        for (std::uint64_t s = 0; s < dim; ++s) dst[s] += d[s] * src[s ^ x];
      }
    }
  }

  /// a * this + b * other; both must share the group layout.
  [[nodiscard]] GroupedOperator combine(cplx a, const GroupedOperator& other, cplx b) const {
    GroupedOperator out = *this;
    for (std::size_t g = 0; g < diags.size(); ++g) out.diags[g] = a * diags[g] + b * other.diags[g];
    return out;
  }
};

namespace detail {

/// Adds coeff * (phase-free string) to the group layout; s ^ x -> s row form.
inline void add_term(std::map<std::uint64_t, Eigen::VectorXcd>& groups, int n, const PauliKey& key, cplx coeff) {
  const std::uint64_t xb = key.x.to_index_bits(n);
  const std::uint64_t zb = key.z.to_index_bits(n);
  const cplx base = coeff * i_power(key.y_count());
  const std::uint64_t dim = std::uint64_t{1} << n;
  auto [it, inserted] = groups.try_emplace(xb);
  if (inserted) it->second = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dim));
  cplx* d = it->second.data();
  // (P psi)[s] = base * (-1)^{|z & (s^x)|} psi[s ^ x]
  for (std::uint64_t s = 0; s < dim; ++s) {
    d[s] += (std::popcount(zb & (s ^ xb)) & 1) ? -base : base;
  }
}

}  // namespace detail

inline GroupedOperator grouped_operator(const PauliSum& h) {
  StateVector::check_size(h.n_spins());
  std::map<std::uint64_t, Eigen::VectorXcd> groups;
  for (const auto& [k, c] : h) detail::add_term(groups, h.n_spins(), k, c);
  GroupedOperator op;
  op.n_spins = h.n_spins();
  for (auto& [x, d] : groups) {
    op.xmasks.push_back(x);
    op.diags.push_back(std::move(d));
  }
  return op;
}

inline StateVector apply(const PauliSum& h, const StateVector& psi) {
  detail::require_same_size(h.n_spins(), psi.n_spins);
  StateVector out{psi.n_spins, {}};
  grouped_operator(h).apply(psi.amp, out.amp);
  return out;
}

inline double expectation(const PauliSum& h, const StateVector& psi) {
  return psi.amp.dot(apply(h, psi).amp).real();
}

/// H(t) = H0(lambda) + lambda_dot * sum_m c_m O_m with a fixed group layout,
/// rebuilt in O(terms * 2^N) per evaluation.
class DynamicsHamiltonian {
 public:
  DynamicsHamiltonian(const Instance& inst, const Protocol& protocol, const AgpProfile& profile)
      : n_(inst.n_spins), protocol_(protocol), profile_(&profile) {
    StateVector::check_size(n_);
    const std::uint64_t dim = std::uint64_t{1} << n_;
    std::map<std::uint64_t, int> group_of;
    auto group = [&](std::uint64_t x) {
      auto [it, inserted] = group_of.try_emplace(x, static_cast<int>(layout_.xmasks.size()));
      if (inserted) layout_.xmasks.push_back(x);
      return it->second;
    };
    group(0);
    problem_diag_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
    const PauliSum hp = build_problem(inst);
    for (const auto& [k, c] : hp) {
      const std::uint64_t zb = k.z.to_index_bits(n_);
      for (std::uint64_t s = 0; s < dim; ++s) {
        problem_diag_(static_cast<Eigen::Index>(s)) += (std::popcount(zb & s) & 1) ? -c.real() : c.real();
      }
    }
    for (int j = 0; j < n_; ++j) {
      const std::uint64_t xb = std::uint64_t{1} << (n_ - 1 - j);
      driver_.push_back({group(xb), -inst.gamma[static_cast<std::size_t>(j)]});
    }
    if (protocol.has_cd()) {
      detail::require_same_size(n_, profile.ansatz.n_spins);
      for (const auto& o : profile.ansatz.basis) {
        const PauliKey k = o.key();
        const std::uint64_t xb = k.x.to_index_bits(n_);
        cd_terms_.push_back({group(xb), xb, k.z.to_index_bits(n_), i_power(k.y_count()) * o.phase_factor()});
      }
    }
    layout_.n_spins = n_;
    layout_.diags.assign(layout_.xmasks.size(), Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dim)));
  }

  [[nodiscard]] int n_spins() const { return n_; }
  [[nodiscard]] const Protocol& protocol() const { return protocol_; }

  [[nodiscard]] GroupedOperator at(double t) const {
    const double lam = protocol_.schedule.lambda(t);
    const double ldot = protocol_.schedule.lambda_dot(t);
    GroupedOperator h = layout_;
    for (auto& d : h.diags) d.setZero();
    h.diags[0].real() = lam * problem_diag_;
    for (const auto& [g, gamma] : driver_) h.diags[static_cast<std::size_t>(g)].array() += (1.0 - lam) * gamma;
    if (!cd_terms_.empty()) {
      const Eigen::VectorXd c = profile_->at(lam);
      const auto dim = static_cast<std::uint64_t>(problem_diag_.size());
      for (std::size_t m = 0; m < cd_terms_.size(); ++m) {
        const auto& term = cd_terms_[m];
        const cplx base = ldot * c(static_cast<Eigen::Index>(m)) * term.phase;
        if (base == cplx{}) continue;
        cplx* d = h.diags[static_cast<std::size_t>(term.group)].data();
        for (std::uint64_t s = 0; s < dim; ++s) {
          d[s] += (std::popcount(term.zbits & (s ^ term.xbits)) & 1) ? -base : base;
        }
      }
    }
    return h;
  }

 private:
  struct DriverTerm {
    int group;
    double coeff;
  };
  struct CdTerm {
    int group;
    std::uint64_t xbits;
    std::uint64_t zbits;
    cplx phase;
  };

  int n_;
  Protocol protocol_;
  const AgpProfile* profile_;
  GroupedOperator layout_;
  Eigen::VectorXd problem_diag_;
  std::vector<DriverTerm> driver_;
  std::vector<CdTerm> cd_terms_;
};

// ---------------------------------------------------------------------------
// Krylov exponential

struct KrylovOptions {
  double tol = 1e-13;
  int max_dim = 40;
};

namespace detail {

/// psi <- exp(-i dt H) psi for Hermitian H, Lanczos with full reorthogonalization.
/// Returns false when the Krylov space did not converge within max_dim.
inline bool krylov_step(const GroupedOperator& h, Eigen::VectorXcd& psi, double dt, const KrylovOptions& opt) {
  const double beta0 = psi.norm();
  if (beta0 == 0.0) return true;
  const Eigen::Index dim = psi.size();
  const int mmax = static_cast<int>(std::min<Eigen::Index>(opt.max_dim, dim));
  Eigen::MatrixXcd v(dim, mmax);
  std::vector<double> alpha;
  std::vector<double> beta;
  v.col(0) = psi / beta0;
  Eigen::VectorXcd w(dim);
  for (int j = 0; j < mmax; ++j) {
    h.apply(v.col(j), w);
    alpha.push_back(v.col(j).dot(w).real());
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::VectorXcd proj = v.leftCols(j + 1).adjoint() * w;
      w.noalias() -= v.leftCols(j + 1) * proj;
    }
    const double b = w.norm();
    const int m = j + 1;
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (int k = 0; k < m; ++k) t(k, k) = alpha[static_cast<std::size_t>(k)];
    for (int k = 0; k + 1 < m; ++k) t(k, k + 1) = t(k + 1, k) = beta[static_cast<std::size_t>(k)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    const Eigen::VectorXcd phases =
        (es.eigenvalues().cast<cplx>() * cplx(0.0, -dt)).array().exp().matrix();
    const Eigen::VectorXcd y = es.eigenvectors().cast<cplx>() *
                               (phases.cwiseProduct(es.eigenvectors().row(0).transpose().cast<cplx>()));
    const bool invariant = b <= 1e-14 * std::max(1.0, std::abs(alpha.back()));
    const double err = b * std::abs(y(m - 1));
    if (invariant || err <= opt.tol || m == dim) {
      psi = beta0 * (v.leftCols(m) * y);
      return true;
    }
    if (m == mmax) return false;
    beta.push_back(b);
    v.col(j + 1) = w / b;
  }
  return false;
}

}  // namespace detail

inline void expmv(const GroupedOperator& h, Eigen::VectorXcd& psi, double dt, const KrylovOptions& opt = {},
                  int depth = 0) {
  Eigen::VectorXcd trial = psi;
  if (detail::krylov_step(h, trial, dt, opt)) {
    psi = std::move(trial);
    return;
  }
  if (depth > 30) throw NumericError("Krylov exponential failed to converge");
  expmv(h, psi, 0.5 * dt, opt, depth + 1);
  expmv(h, psi, 0.5 * dt, opt, depth + 1);
}

// ---------------------------------------------------------------------------
// Time evolution

struct EvolveResult {
  StateVector state;
  int steps = 0;
  double max_norm_drift = 0.0;
};

inline constexpr double kNormTolerance = 1e-9;

/// Propagates psi from t0 to t1 with `steps` fourth-order Magnus steps.
inline EvolveResult propagate(const DynamicsHamiltonian& ham, StateVector psi, double t0, double t1, int steps,
                              const KrylovOptions& opt = {}) {
  if (steps < 1) throw ArgumentError("steps must be >= 1");
  if (psi.n_spins != ham.n_spins()) throw ArgumentError("state / Hamiltonian size mismatch");
  static const double kSqrt3 = std::sqrt(3.0);
  const double c1 = 0.5 - kSqrt3 / 6.0;
  const double c2 = 0.5 + kSqrt3 / 6.0;
  const double a1 = (3.0 - 2.0 * kSqrt3) / 12.0;
  const double a2 = (3.0 + 2.0 * kSqrt3) / 12.0;
  const double h = (t1 - t0) / steps;
  EvolveResult out;
  for (int k = 0; k < steps; ++k) {
    const double t = t0 + k * h;
    const GroupedOperator h1 = ham.at(t + c1 * h);
    const GroupedOperator h2 = ham.at(t + c2 * h);
    expmv(h1.combine(a2, h2, a1), psi.amp, h, opt);
    expmv(h1.combine(a1, h2, a2), psi.amp, h, opt);
    const double nrm = psi.norm();
    const double drift = std::abs(nrm - 1.0);
    out.max_norm_drift = std::max(out.max_norm_drift, drift);
    if (!std::isfinite(nrm) || drift > kNormTolerance) {
      throw NumericError("norm drift " + std::to_string(drift) + " at step " + std::to_string(k) + " (t=" +
                         std::to_string(t + h) + ")");
    }
  }
  out.state = std::move(psi);
  out.steps = steps;
  return out;
}

inline void require_positive_driver(const Instance& inst) {
  if (std::any_of(inst.gamma.begin(), inst.gamma.end(), [](double g) { return !(g > 0.0); })) {
    throw ArgumentError("initial |+> state requires gamma_j > 0");
  }
}

/// Full sweep from |+>^N over [0, tau].
inline EvolveResult evolve(const Instance& inst, const Protocol& protocol, const AgpProfile& profile,
                           int steps = kDefaultSteps) {
  inst.validate();
  require_positive_driver(inst);
  const DynamicsHamiltonian ham(inst, protocol, profile);
  return propagate(ham, StateVector::plus(inst.n_spins), 0.0, protocol.schedule.tau(), steps);
}

inline EvolveResult evolve(const Instance& inst, const Protocol& protocol, int steps = kDefaultSteps) {
  const AgpProfile profile = agp_profile(inst, protocol);
  return evolve(inst, protocol, profile, steps);
}

// ---------------------------------------------------------------------------
// Ground states

struct GroundState {
  double energy = 0.0;
  StateVector state;               // canonical representative
  Eigen::MatrixXcd subspace;       // orthonormal basis of the ground space
  [[nodiscard]] int degeneracy() const { return static_cast<int>(subspace.cols()); }
  [[nodiscard]] bool degenerate() const { return degeneracy() > 1; }
};

inline constexpr double kDegeneracyTolerance = 1e-10;

namespace detail {

/// Phase fixed so the lowest-index amplitude of maximal magnitude is positive real.
inline void canonical_phase(Eigen::VectorXcd& v) {
  Eigen::Index best = 0;
  double mag = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > mag * (1.0 + 1e-12) + 1e-15) {
      mag = std::abs(v(i));
      best = i;
    }
  }
  if (mag > 0.0) v *= std::conj(v(best)) / mag;
  v(best) = std::abs(v(best));
}

/// Projection of the lowest-index basis state with non-negligible weight.
inline Eigen::VectorXcd canonical_representative(const Eigen::MatrixXcd& basis) {
  if (basis.cols() == 1) {
    Eigen::VectorXcd v = basis.col(0);
    canonical_phase(v);
    return v.normalized();
  }
  for (Eigen::Index s = 0; s < basis.rows(); ++s) {
    const Eigen::VectorXcd coeffs = basis.row(s).adjoint();
    if (coeffs.norm() > 1e-6) {
      Eigen::VectorXcd v = basis * coeffs;
      v.normalize();
      canonical_phase(v);
      return v;
    }
  }
  throw NumericError("empty ground space");
}

}  // namespace detail

/// Lowest eigenpair of a Hermitian Pauli sum. Diagonal Hamiltonians are read
/// off directly; others use a dense eigensolver.
inline GroundState ground_state(const PauliSum& h) {
  const int n = h.n_spins();
  if (n > kDenseLimit) throw CapacityError("ground_state limited to " + std::to_string(kDenseLimit) + " spins");
  if (!h.is_hermitian()) throw ArgumentError("ground_state needs a Hermitian operator");
  GroundState gs;
  const auto dim = Eigen::Index{1} << n;
  if (h.is_diagonal()) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
    for (const auto& [k, c] : h) {
      const std::uint64_t zb = k.z.to_index_bits(n);
      for (Eigen::Index s = 0; s < dim; ++s) {
        e(s) += (std::popcount(zb & static_cast<std::uint64_t>(s)) & 1) ? -c.real() : c.real();
      }
    }
    const double emin = e.minCoeff();
    const double tol = kDegeneracyTolerance * std::max(1.0, std::abs(emin));
    std::vector<Eigen::Index> idx;
    for (Eigen::Index s = 0; s < dim; ++s) {
      if (e(s) - emin <= tol) idx.push_back(s);
    }
    gs.energy = emin;
    gs.subspace = Eigen::MatrixXcd::Zero(dim, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) gs.subspace(idx[k], static_cast<Eigen::Index>(k)) = 1.0;
  } else {
    const Eigen::MatrixXcd m = to_dense(h);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
    if (es.info() != Eigen::Success) throw NumericError("eigensolver failed");
    const double emin = es.eigenvalues()(0);
    const double tol = kDegeneracyTolerance * std::max(1.0, std::abs(emin));
    Eigen::Index count = 1;
    while (count < dim && es.eigenvalues()(count) - emin <= tol) ++count;
    gs.energy = emin;
    gs.subspace = es.eigenvectors().leftCols(count);
  }
  gs.state = {n, detail::canonical_representative(gs.subspace)};
  return gs;
}

/// Weight of psi in the ground space (equals |<gs|psi>|^2 when nondegenerate).
inline double fidelity(const StateVector& psi, const GroundState& gs) {
  if (psi.dim() != gs.subspace.rows()) throw ArgumentError("fidelity: dimension mismatch");
  return (gs.subspace.adjoint() * psi.amp).squaredNorm();
}

// ---------------------------------------------------------------------------
// Spectral gauge potential

/// <m|A|n> = i <m|dH|n> / (E_n - E_m) for m != n, zero diagonal, returned in the
/// computational basis.
inline Eigen::MatrixXcd exact_agp_spectral(const PauliSum& h, const PauliSum& dh) {
  detail::require_same_size(h.n_spins(), dh.n_spins());
  const Eigen::MatrixXcd hm = to_dense(h);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hm);
  if (es.info() != Eigen::Success) throw NumericError("eigensolver failed");
  const Eigen::VectorXd& e = es.eigenvalues();
  for (Eigen::Index k = 0; k + 1 < e.size(); ++k) {
    if (e(k + 1) - e(k) < kDegeneracyTolerance) {
      throw DegeneracyError("degenerate spectrum: gap " + std::to_string(e(k + 1) - e(k)));
    }
  }
  const Eigen::MatrixXcd& v = es.eigenvectors();
  const Eigen::MatrixXcd dh_eig = v.adjoint() * to_dense(dh) * v;
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(e.size(), e.size());
  for (Eigen::Index m = 0; m < e.size(); ++m) {
    for (Eigen::Index k = 0; k < e.size(); ++k) {
      if (m != k) a(m, k) = cplx(0.0, 1.0) * dh_eig(m, k) / (e(k) - e(m));
    }
  }
  Eigen::MatrixXcd out = v * a * v.adjoint();
  return 0.5 * (out + out.adjoint());
}

}  // namespace cdanneal
