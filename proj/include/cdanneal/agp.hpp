#pragma once

// Variational approximate adiabatic gauge potential.
//
// For an ansatz A' = sum_m c_m O_m (odd-Y Pauli strings) the operator
//
//     G(c) = dH0/dlambda + i [A', H0] = dH + sum_m c_m C_m,   C_m = i [O_m, H0]
//
// is Hermitian and the action S(c) = Tr[G^2] / 2^N is the quadratic form
//
//     S(c) = |dH|^2 - 2 w.c + c.M.c,   M_mn = <C_m, C_n>,   w_m = -<dH, C_m>.
//
// Its minimiser solves M c = w. Because H0 is affine in lambda, M(lambda) is a
// quadratic and w(lambda) a linear polynomial in lambda; the profile builder
// assembles the three polynomial blocks once and then solves on a grid.

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "cdanneal/errors.hpp"
#include "cdanneal/model.hpp"
#include "cdanneal/pauli.hpp"

namespace cdanneal {

enum class AgpOrder { None, One, Two, Exact };

inline AgpOrder agp_order(ProtocolKind k) {
  switch (k) {
    case ProtocolKind::QA: return AgpOrder::None;
    case ProtocolKind::CD1: return AgpOrder::One;
    case ProtocolKind::CD2: return AgpOrder::Two;
    case ProtocolKind::CDExact: return AgpOrder::Exact;
  }
  return AgpOrder::None;
}

/// Ordered basis of Hermitian odd-Y strings. Two-spin coefficient families are
/// labelled c_yx, c_xy, c_yz, c_zy (Y_j X_k, X_j Y_k, Y_j Z_k, Z_j Y_k, j < k);
/// single-spin coefficients are alpha_j. Labels use 1-based sites.
struct AgpAnsatz {
  AgpOrder order = AgpOrder::None;
  int n_spins = 0;
  std::vector<PauliString> basis;
  std::vector<std::string> labels;

  [[nodiscard]] int size() const { return static_cast<int>(basis.size()); }
};

/// Number of Pauli strings on n sites with an odd number of Y factors.
inline std::size_t odd_y_count(int n) {
  const std::size_t four = std::size_t{1} << (2 * n);
  const std::size_t two = std::size_t{1} << n;
  return (four - two) / 2;
}

inline AgpAnsatz build_ansatz(AgpOrder order, const Instance& inst) {
  inst.validate();
  const int n = inst.n_spins;
  AgpAnsatz a;
  a.order = order;
  a.n_spins = n;
  if (order == AgpOrder::None) return a;

  if (order == AgpOrder::Exact) {
    if (n > kDenseLimit) throw CapacityError("exact ansatz limited to " + std::to_string(kDenseLimit) + " spins");
    a.basis.reserve(odd_y_count(n));
    const std::uint64_t dim = std::uint64_t{1} << n;
    for (std::uint64_t x = 0; x < dim; ++x) {
      for (std::uint64_t z = 0; z < dim; ++z) {
        if ((std::popcount(x & z) & 1) == 0) continue;
        PauliKey key;
        for (int j = 0; j < n; ++j) {
          if ((x >> j) & 1U) key.x.set(j);
          if ((z >> j) & 1U) key.z.set(j);
        }
        PauliString s(n, key);
        a.labels.push_back(s.to_string());
        a.basis.push_back(std::move(s));
      }
    }
    return a;
  }

  for (int j = 0; j < n; ++j) {
    a.basis.push_back(PauliString::single(n, j, Pauli::Y));
    a.labels.push_back("alpha_" + std::to_string(j + 1));
  }
  if (order == AgpOrder::One) return a;

  auto add_pair = [&](int j, int k) {
    const std::string tag = "_" + std::to_string(j + 1) + "_" + std::to_string(k + 1);
    a.basis.push_back(PauliString::from_sites(n, {{j, Pauli::Y}, {k, Pauli::X}}));
    a.labels.push_back("c_yx" + tag);
    a.basis.push_back(PauliString::from_sites(n, {{j, Pauli::X}, {k, Pauli::Y}}));
    a.labels.push_back("c_xy" + tag);
    a.basis.push_back(PauliString::from_sites(n, {{j, Pauli::Y}, {k, Pauli::Z}}));
    a.labels.push_back("c_yz" + tag);
    a.basis.push_back(PauliString::from_sites(n, {{j, Pauli::Z}, {k, Pauli::Y}}));
    a.labels.push_back("c_zy" + tag);
  };
  if (inst.topology == Topology::Chain) {
    for (int j = 0; j + 1 < n; ++j) add_pair(j, j + 1);
  } else {
    for (int j = 0; j < n; ++j) {
      for (int k = j + 1; k < n; ++k) add_pair(j, k);
    }
  }
  return a;
}

inline AgpAnsatz build_ansatz(ProtocolKind kind, const Instance& inst) { return build_ansatz(agp_order(kind), inst); }

// ---------------------------------------------------------------------------
// Action system

struct ActionSystem {
  Eigen::MatrixXd M;
  Eigen::VectorXd w;
  double force_norm2 = 0.0;  // <dH, dH>, the action at c = 0

  [[nodiscard]] int size() const { return static_cast<int>(w.size()); }
};

/// S(c) = |dH|^2 - 2 w.c + c.M.c (normalized trace).
inline double action_value(const ActionSystem& sys, const Eigen::VectorXd& c) {
  return sys.force_norm2 - 2.0 * sys.w.dot(c) + c.dot(sys.M * c);
}

namespace detail {

/// Columns C_m = i [O_m, H] as a sparse (key x basis) matrix over a shared key index.
class CommutatorColumns {
 public:
  explicit CommutatorColumns(const AgpAnsatz& ansatz) : ansatz_(&ansatz) {}

  Eigen::SparseMatrix<double> build(const PauliSum& h) {
    if (!h.is_hermitian()) throw ArgumentError("Hamiltonian must be Hermitian");
    std::vector<Eigen::Triplet<double>> trips;
    const int dim = ansatz_->size();
    for (int m = 0; m < dim; ++m) {
      const PauliKey ok = ansatz_->basis[static_cast<std::size_t>(m)].key();
      for (const auto& [hk, hc] : h) {
        if (!anticommutes(ok, hk)) continue;
        // i * 2 * c * (O P) with O P anti-Hermitian, hence a real coefficient.
        const cplx v = cplx(0.0, 2.0) * hc * i_power(product_phase(ok, hk));
        trips.emplace_back(key_id({ok.x ^ hk.x, ok.z ^ hk.z}), m, v.real());
      }
    }
    Eigen::SparseMatrix<double> c(static_cast<Eigen::Index>(keys_.size()), dim);
    c.setFromTriplets(trips.begin(), trips.end());
    return c;
  }

  /// Projection of a Hermitian sum onto the key index.
  [[nodiscard]] Eigen::VectorXd project(const PauliSum& h) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(keys_.size()));
    for (const auto& [k, c] : h) {
      auto it = ids_.find(k);
      if (it != ids_.end()) v(it->second) = c.real();
    }
    return v;
  }

  [[nodiscard]] Eigen::Index n_keys() const { return static_cast<Eigen::Index>(keys_.size()); }

 private:
  int key_id(const PauliKey& k) {
    auto [it, inserted] = ids_.try_emplace(k, static_cast<int>(keys_.size()));
    if (inserted) keys_.push_back(k);
    return it->second;
  }

  const AgpAnsatz* ansatz_;
  std::unordered_map<PauliKey, int, PauliKeyHash> ids_;
  std::vector<PauliKey> keys_;
};

inline Eigen::SparseMatrix<double> pad_rows(const Eigen::SparseMatrix<double>& m, Eigen::Index rows) {
  Eigen::SparseMatrix<double> out = m;
  out.conservativeResize(rows, m.cols());
  return out;
}

}  // namespace detail

/// M_mn = <C_m, C_n>, w_m = -<dH, C_m> with C_m = i [O_m, h0].
inline ActionSystem assemble_action_system(const PauliSum& h0, const PauliSum& dh0, const AgpAnsatz& ansatz) {
  detail::require_same_size(h0.n_spins(), dh0.n_spins());
  detail::require_same_size(h0.n_spins(), ansatz.n_spins);
  if (!dh0.is_hermitian()) throw ArgumentError("dH must be Hermitian");
  detail::CommutatorColumns cols(ansatz);
  const Eigen::SparseMatrix<double> c = cols.build(h0);
  ActionSystem sys;
  sys.M = Eigen::MatrixXd(c.transpose() * c);
  sys.M = 0.5 * (sys.M + sys.M.transpose());
  sys.w = -(c.transpose() * cols.project(dh0));
  sys.force_norm2 = norm_squared(dh0);
  return sys;
}

inline double default_regularization(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return 0.0;
  return 1e-12 * m.trace() / static_cast<double>(m.rows());
}

struct SolveResult {
  Eigen::VectorXd c;
  double residual = 0.0;       // |M c - w|
  double regularization = 0.0;
  bool degenerate = false;     // rank deficiency detected from the pivots
};

namespace detail {

inline constexpr double kDegeneratePivotRatio = 1e-9;

inline bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

}  // namespace detail

/// Solves (M + regularization I) c = w.
inline SolveResult solve_coefficients(const ActionSystem& sys, double regularization) {
  if (!(regularization >= 0.0)) throw ArgumentError("regularization must be non-negative");
  if (!detail::all_finite(sys.M) || !sys.w.allFinite()) throw NumericError("non-finite action system");
  const Eigen::Index n = sys.w.size();
  SolveResult out;
  out.regularization = regularization;
  if (n == 0) return out;
  const double scale = sys.M.diagonal().cwiseAbs().maxCoeff();
  if (scale == 0.0) {
    // M = 0 forces w = 0, so every c is a minimiser.
    out.c = Eigen::VectorXd::Zero(n);
    out.degenerate = true;
    out.residual = sys.w.norm();
    return out;
  }
  Eigen::MatrixXd a = sys.M;
  a.diagonal().array() += regularization;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success) throw NumericError("LDLT factorization failed");
  out.c = ldlt.solve(sys.w);
  if (!out.c.allFinite()) throw NumericError("non-finite AGP coefficients");
  const Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
  out.degenerate = d.minCoeff() <= detail::kDegeneratePivotRatio * std::max(scale, d.maxCoeff());
  out.residual = (sys.M * out.c - sys.w).norm();
  return out;
}

// ---------------------------------------------------------------------------
// Coefficient profiles over lambda

/// Coefficients on a uniform lambda grid plus exact slopes dc/dlambda;
/// evaluation between nodes is cubic Hermite interpolation.
struct AgpProfile {
  AgpAnsatz ansatz;
  std::vector<double> lambda_grid;
  Eigen::MatrixXd coeffs;  // grid x basis
  Eigen::MatrixXd slopes;  // grid x basis
  std::vector<double> residuals;
  int degenerate_points = 0;

  [[nodiscard]] int size() const { return ansatz.size(); }

  [[nodiscard]] Eigen::VectorXd at(double lam) const {
    const int dim = size();
    if (dim == 0) return {};
    if (!(lam >= 0.0 && lam <= 1.0)) throw ArgumentError("lambda outside [0, 1]");
    const auto g = static_cast<int>(lambda_grid.size());
    const double h = 1.0 / (g - 1);
    const int i = std::min(static_cast<int>(lam / h), g - 2);
    const double u = (lam - lambda_grid[static_cast<std::size_t>(i)]) / h;
    const double u2 = u * u;
    const double u3 = u2 * u;
    const double h00 = 2 * u3 - 3 * u2 + 1;
    const double h10 = u3 - 2 * u2 + u;
    const double h01 = -2 * u3 + 3 * u2;
    const double h11 = u3 - u2;
    return (h00 * coeffs.row(i) + h10 * h * slopes.row(i) + h01 * coeffs.row(i + 1) + h11 * h * slopes.row(i + 1))
        .transpose();
  }
};

/// Quadratic-in-lambda decomposition of the action system for one instance.
class ActionPolynomial {
 public:
  ActionPolynomial(const Instance& inst, const AgpAnsatz& ansatz) {
    const PauliSum hd = build_driver(inst);
    const PauliSum hp = build_problem(inst);
    const PauliSum dh = hp - hd;
    detail::CommutatorColumns cols(ansatz);
    Eigen::SparseMatrix<double> cd = cols.build(hd);
    Eigen::SparseMatrix<double> cp = cols.build(hp);
    cd = detail::pad_rows(cd, cols.n_keys());
    cp = detail::pad_rows(cp, cols.n_keys());
    const Eigen::VectorXd force = cols.project(dh);
    mdd_ = Eigen::MatrixXd(cd.transpose() * cd);
    mpp_ = Eigen::MatrixXd(cp.transpose() * cp);
    const Eigen::MatrixXd mdp = Eigen::MatrixXd(cd.transpose() * cp);
    mx_ = mdp + mdp.transpose();
    wd_ = -(cd.transpose() * force);
    wp_ = -(cp.transpose() * force);
    force_norm2_ = norm_squared(dh);
  }

  [[nodiscard]] ActionSystem at(double lam) const {
    const double a = 1.0 - lam;
    ActionSystem s;
    s.M = (a * a) * mdd_ + (a * lam) * mx_ + (lam * lam) * mpp_;
    s.w = a * wd_ + lam * wp_;
    s.force_norm2 = force_norm2_;
    return s;
  }

  [[nodiscard]] Eigen::MatrixXd dM(double lam) const {
    return (-2.0 * (1.0 - lam)) * mdd_ + (1.0 - 2.0 * lam) * mx_ + (2.0 * lam) * mpp_;
  }
  [[nodiscard]] Eigen::VectorXd dw() const { return wp_ - wd_; }

 private:
  Eigen::MatrixXd mdd_, mpp_, mx_;
  Eigen::VectorXd wd_, wp_;
  double force_norm2_ = 0.0;
};

inline constexpr int kDefaultGridSize = 512;

inline AgpProfile agp_profile(const Instance& inst, AgpOrder order, int grid_size = kDefaultGridSize) {
  if (grid_size < 2) throw ArgumentError("grid_size must be >= 2");
  AgpProfile prof;
  prof.ansatz = build_ansatz(order, inst);
  const int dim = prof.ansatz.size();
  prof.lambda_grid.resize(static_cast<std::size_t>(grid_size));
  for (int i = 0; i < grid_size; ++i) prof.lambda_grid[static_cast<std::size_t>(i)] = static_cast<double>(i) / (grid_size - 1);
  prof.lambda_grid.back() = 1.0;
  prof.coeffs = Eigen::MatrixXd::Zero(grid_size, dim);
  prof.slopes = Eigen::MatrixXd::Zero(grid_size, dim);
  prof.residuals.assign(static_cast<std::size_t>(grid_size), 0.0);
  if (dim == 0) return prof;

  const ActionPolynomial poly(inst, prof.ansatz);
  const Eigen::VectorXd dw = poly.dw();
  for (int i = 0; i < grid_size; ++i) {
    const double lam = prof.lambda_grid[static_cast<std::size_t>(i)];
    const ActionSystem sys = poly.at(lam);
    const double reg = default_regularization(sys.M);
    const SolveResult sol = solve_coefficients(sys, reg);
    prof.coeffs.row(i) = sol.c.transpose();
    prof.residuals[static_cast<std::size_t>(i)] = sol.residual;
    if (sol.degenerate) ++prof.degenerate_points;
    // (M + reg) c' = w' - M' c
    Eigen::MatrixXd a = sys.M;
    a.diagonal().array() += reg;
    const Eigen::VectorXd rhs = dw - poly.dM(lam) * sol.c;
    if (a.diagonal().cwiseAbs().maxCoeff() > 0.0) {
      prof.slopes.row(i) = Eigen::LDLT<Eigen::MatrixXd>(a).solve(rhs).transpose();
    }
  }
  if (!prof.coeffs.allFinite() || !prof.slopes.allFinite()) throw NumericError("non-finite AGP profile");
  return prof;
}

inline AgpProfile agp_profile(const Instance& inst, const Protocol& protocol, int grid_size = kDefaultGridSize) {
  protocol.validate_for(inst);
  return agp_profile(inst, agp_order(protocol.kind), grid_size);
}

/// sum_m c_m(lambda) O_m.
inline PauliSum agp_operator(const AgpProfile& prof, double lam) {
  PauliSum a(prof.ansatz.n_spins);
  if (prof.size() == 0) return a;
  const Eigen::VectorXd c = prof.at(lam);
  for (int m = 0; m < prof.size(); ++m) a.add(prof.ansatz.basis[static_cast<std::size_t>(m)], c(m));
  return a;
}

/// lambda_dot(t) * A'(lambda(t)); zero for QA.
inline PauliSum cd_hamiltonian(const Instance& inst, const Protocol& protocol, const AgpProfile& prof, double t) {
  const double lam = protocol.schedule.lambda(t);
  const double ldot = protocol.schedule.lambda_dot(t);
  if (!protocol.has_cd() || prof.size() == 0) return PauliSum(inst.n_spins);
  detail::require_same_size(inst.n_spins, prof.ansatz.n_spins);
  return agp_operator(prof, lam) * ldot;
}

/// CSV: lambda, then one column per basis label.
inline void write_profile_csv(std::ostream& os, const AgpProfile& prof) {
  os << "lambda";
  for (const auto& l : prof.ansatz.labels) os << ',' << l;
  os << '\n';
  os.precision(17);
  for (std::size_t i = 0; i < prof.lambda_grid.size(); ++i) {
    os << prof.lambda_grid[i];
    for (int m = 0; m < prof.size(); ++m) os << ',' << prof.coeffs(static_cast<Eigen::Index>(i), m);
    os << '\n';
  }
}

}  // namespace cdanneal
