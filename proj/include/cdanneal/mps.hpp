#pragma once

// Open-boundary matrix product states for spin-1/2 chains.
//
// tensors[j][s] is the (left bond x right bond) matrix for physical index s on
// site j; s = 0 is the Z = +1 state, and site 0 is the most significant bit in
// dense conversions, matching the Pauli-sum conventions.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "cdanneal/errors.hpp"
#include "cdanneal/pauli.hpp"
#include "cdanneal/rng.hpp"

namespace cdanneal {

using SiteTensor = std::array<Eigen::MatrixXcd, 2>;

struct MpsState {
  int n_spins = 0;
  std::vector<SiteTensor> tensors;
  int center = -1;  // orthogonality center, -1 when not canonical

  /// Dimension of the bond between sites b and b + 1.
  [[nodiscard]] int bond_dim(int b) const { return static_cast<int>(tensors[static_cast<std::size_t>(b)][0].cols()); }

  [[nodiscard]] std::vector<int> bond_dims() const {
    std::vector<int> out;
    for (int b = 0; b + 1 < n_spins; ++b) out.push_back(bond_dim(b));
    return out;
  }

  [[nodiscard]] int max_bond() const {
    int m = 1;
    for (int b = 0; b + 1 < n_spins; ++b) m = std::max(m, bond_dim(b));
    return m;
  }

  SiteTensor& operator[](int j) { return tensors[static_cast<std::size_t>(j)]; }
  const SiteTensor& operator[](int j) const { return tensors[static_cast<std::size_t>(j)]; }
};

/// Product state from per-site amplitude pairs.
inline MpsState product_state(const std::vector<Eigen::Vector2cd>& sites) {
  if (sites.empty()) throw ArgumentError("product state needs at least one site");
  MpsState m;
  m.n_spins = static_cast<int>(sites.size());
  for (const auto& v : sites) {
    SiteTensor t;
    t[0] = Eigen::MatrixXcd::Constant(1, 1, v(0));
    t[1] = Eigen::MatrixXcd::Constant(1, 1, v(1));
    m.tensors.push_back(std::move(t));
  }
  m.center = 0;
  return m;
}

/// |+>^N with all bonds of dimension one.
inline MpsState init_plus_state(int n_spins) {
  if (n_spins < 1) throw ArgumentError("n_spins must be >= 1");
  const double a = 1.0 / std::sqrt(2.0);
  return product_state(std::vector<Eigen::Vector2cd>(static_cast<std::size_t>(n_spins), Eigen::Vector2cd(a, a)));
}

/// Computational basis state; bit j of `bits` (site 0 first) selects |1>.
inline MpsState basis_state(int n_spins, const std::vector<int>& bits) {
  std::vector<Eigen::Vector2cd> sites;
  for (int j = 0; j < n_spins; ++j) {
    sites.emplace_back(bits[static_cast<std::size_t>(j)] ? Eigen::Vector2cd(0, 1) : Eigen::Vector2cd(1, 0));
  }
  return product_state(sites);
}

/// Unnormalized random MPS with the given bond dimension, deterministic in seed.
inline MpsState random_mps(int n_spins, int chi, std::uint64_t seed) {
  MpsState m;
  m.n_spins = n_spins;
  std::uint64_t counter = 0;
  for (int j = 0; j < n_spins; ++j) {
    const int dl = j == 0 ? 1 : chi;
    const int dr = j == n_spins - 1 ? 1 : chi;
    SiteTensor t;
    for (auto& a : t) {
      a.resize(dl, dr);
      for (int r = 0; r < dl; ++r) {
        for (int c = 0; c < dr; ++c) {
          a(r, c) = cplx(rng::standard_normal(seed, counter), rng::standard_normal(seed, counter + 1));
          counter += 2;
        }
      }
    }
    m.tensors.push_back(std::move(t));
  }
  return m;
}

/// <a|b>.
inline cplx overlap(const MpsState& a, const MpsState& b) {
  if (a.n_spins != b.n_spins) throw ArgumentError("overlap: size mismatch");
  Eigen::MatrixXcd env = Eigen::MatrixXcd::Identity(1, 1);
  for (int j = 0; j < a.n_spins; ++j) {
    Eigen::MatrixXcd next = a[j][0].adjoint() * env * b[j][0];
    next.noalias() += a[j][1].adjoint() * env * b[j][1];
    env = std::move(next);
  }
  return env(0, 0);
}

inline double norm(const MpsState& m) { return std::sqrt(std::max(0.0, overlap(m, m).real())); }

/// Dense amplitude vector, site 0 most significant.
inline Eigen::VectorXcd to_dense(const MpsState& m, int limit = 24) {
  if (m.n_spins > limit) throw CapacityError("dense MPS conversion limited to " + std::to_string(limit) + " spins");
  std::vector<Eigen::MatrixXcd> rows{Eigen::MatrixXcd::Identity(1, 1)};
  for (int j = 0; j < m.n_spins; ++j) {
    std::vector<Eigen::MatrixXcd> next;
    next.reserve(rows.size() * 2);
    for (const auto& r : rows) {
      next.push_back(r * m[j][0]);
      next.push_back(r * m[j][1]);
    }
    rows = std::move(next);
  }
  Eigen::VectorXcd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = rows[i](0, 0);
  return out;
}

// ---------------------------------------------------------------------------
// Canonical form

namespace detail {

/// Makes site j left-orthonormal and pushes the remainder into site j + 1.
inline void left_orthonormalize(MpsState& m, int j) {
  const Eigen::Index dl = m[j][0].rows();
  const Eigen::Index dr = m[j][0].cols();
  Eigen::MatrixXcd stacked(2 * dl, dr);
  stacked << m[j][0], m[j][1];
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(stacked);
  const Eigen::Index k = std::min(2 * dl, dr);
  const Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(2 * dl, k);
  const Eigen::MatrixXcd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  m[j][0] = q.topRows(dl);
  m[j][1] = q.bottomRows(dl);
  if (j + 1 < m.n_spins) {
    m[j + 1][0] = r * m[j + 1][0];
    m[j + 1][1] = r * m[j + 1][1];
  }
}

/// Makes site j right-orthonormal and pushes the remainder into site j - 1.
inline void right_orthonormalize(MpsState& m, int j) {
  const Eigen::Index dl = m[j][0].rows();
  const Eigen::Index dr = m[j][0].cols();
  Eigen::MatrixXcd wide(dl, 2 * dr);
  wide << m[j][0], m[j][1];
  const Eigen::MatrixXcd tall = wide.adjoint();
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(tall);
  const Eigen::Index k = std::min(dl, 2 * dr);
  const Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(2 * dr, k);
  const Eigen::MatrixXcd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  const Eigen::MatrixXcd qa = q.adjoint();  // k x 2dr
  m[j][0] = qa.leftCols(dr);
  m[j][1] = qa.rightCols(dr);
  if (j > 0) {
    const Eigen::MatrixXcd ra = r.adjoint();  // dl x k
    m[j - 1][0] = m[j - 1][0] * ra;
    m[j - 1][1] = m[j - 1][1] * ra;
  }
}

}  // namespace detail

/// Mixed-canonical form with the orthogonality center at `center`.
inline void canonicalize(MpsState& m, int center) {
  if (center < 0 || center >= m.n_spins) throw ArgumentError("center out of range");
  for (int j = 0; j < center; ++j) detail::left_orthonormalize(m, j);
  for (int j = m.n_spins - 1; j > center; --j) detail::right_orthonormalize(m, j);
  m.center = center;
}

inline void move_center(MpsState& m, int target) {
  if (target < 0 || target >= m.n_spins) throw ArgumentError("center out of range");
  if (m.center < 0) {
    canonicalize(m, target);
    return;
  }
  while (m.center < target) detail::left_orthonormalize(m, m.center++);
  while (m.center > target) detail::right_orthonormalize(m, m.center--);
}

/// Scales the center tensor to unit norm; returns the previous norm.
inline double normalize(MpsState& m) {
  if (m.center < 0) canonicalize(m, 0);
  auto& t = m[m.center];
  const double nrm = std::sqrt(t[0].squaredNorm() + t[1].squaredNorm());
  if (nrm == 0.0 || !std::isfinite(nrm)) throw NumericError("MPS norm is zero or non-finite");
  t[0] /= nrm;
  t[1] /= nrm;
  return nrm;
}

inline double left_isometry_error(const MpsState& m, int j) {
  const Eigen::MatrixXcd g = m[j][0].adjoint() * m[j][0] + m[j][1].adjoint() * m[j][1];
  return (g - Eigen::MatrixXcd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

inline double right_isometry_error(const MpsState& m, int j) {
  const Eigen::MatrixXcd g = m[j][0] * m[j][0].adjoint() + m[j][1] * m[j][1].adjoint();
  return (g - Eigen::MatrixXcd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

/// True when every site left of the center is a left isometry and every site
/// right of it a right isometry, within tol.
inline bool is_canonical(const MpsState& m, double tol = 1e-10) {
  if (m.center < 0) return false;
  for (int j = 0; j < m.center; ++j) {
    if (left_isometry_error(m, j) > tol) return false;
  }
  for (int j = m.center + 1; j < m.n_spins; ++j) {
    if (right_isometry_error(m, j) > tol) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Gates

inline void apply_single_site(MpsState& m, int site, const Eigen::Matrix2cd& u) {
  if (site < 0 || site >= m.n_spins) throw ArgumentError("site out of range");
  auto& t = m[site];
  const Eigen::MatrixXcd a0 = t[0];
  t[0] = u(0, 0) * a0 + u(0, 1) * t[1];
  t[1] = u(1, 0) * a0 + u(1, 1) * t[1];
}

struct Truncation {
  int chi_max = 100;
  double trunc_tol = 1e-12;  // discarded weight relative to the bond weight
  bool normalize = true;
};

struct GateInfo {
  double discarded_weight = 0.0;
  int bond_dim = 0;
  double norm_before = 0.0;  // norm of the two-site block before truncation
};

enum class CenterSide { Left, Right };

/// Applies a 4x4 gate (index 2 s_left + s_right) to sites (site, site + 1),
/// SVD-splits, truncates and leaves the orthogonality center on `side`.
inline GateInfo apply_two_site_gate(MpsState& m, int site, const Eigen::Matrix4cd& gate, const Truncation& trunc,
                                    CenterSide side = CenterSide::Right) {
  if (site < 0 || site + 1 >= m.n_spins) throw ArgumentError("two-site gate site out of range");
  if (trunc.chi_max < 1) throw ArgumentError("chi_max must be >= 1");
  if (m.center != site && m.center != site + 1) move_center(m, site);
  auto& a = m[site];
  auto& b = m[site + 1];
  const Eigen::Index dl = a[0].rows();
  const Eigen::Index dr = b[0].cols();

  std::array<Eigen::MatrixXcd, 4> theta;
  for (int s1 = 0; s1 < 2; ++s1) {
    for (int s2 = 0; s2 < 2; ++s2) theta[static_cast<std::size_t>(2 * s1 + s2)] = a[s1] * b[s2];
  }
  Eigen::MatrixXcd big(2 * dl, 2 * dr);
  for (int o = 0; o < 4; ++o) {
    Eigen::MatrixXcd block = Eigen::MatrixXcd::Zero(dl, dr);
    for (int i = 0; i < 4; ++i) {
      if (gate(o, i) != cplx{}) block += gate(o, i) * theta[static_cast<std::size_t>(i)];
    }
    big.block((o >> 1) * dl, (o & 1) * dr, dl, dr) = block;
  }

  Eigen::BDCSVD<Eigen::MatrixXcd> svd(big, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericError("SVD failed at bond " + std::to_string(site));
  const Eigen::VectorXd& sv = svd.singularValues();
  if (!sv.allFinite()) throw NumericError("non-finite singular values at bond " + std::to_string(site));
  const double total = sv.squaredNorm();
  GateInfo info;
  info.norm_before = std::sqrt(total);
  if (total == 0.0) throw NumericError("two-site block vanished at bond " + std::to_string(site));

  // Singular values at rounding level carry no information.
  Eigen::Index keep = 1;
  while (keep < sv.size() && sv(keep) > 1e-15 * sv(0)) ++keep;
  keep = std::min<Eigen::Index>(keep, trunc.chi_max);
  double tail = 0.0;
  for (Eigen::Index k = sv.size() - 1; k >= 0; --k) {
    const double w = sv(k) * sv(k);
    if (k >= keep) {
      tail += w;
      continue;
    }
    if (k > 0 && tail + w <= trunc.trunc_tol * total) {
      tail += w;
      keep = k;
    } else {
      break;
    }
  }
  info.discarded_weight = tail / total;
  info.bond_dim = static_cast<int>(keep);

  Eigen::VectorXd s = sv.head(keep);
  if (trunc.normalize) s /= s.norm();
  const Eigen::MatrixXcd u = svd.matrixU().leftCols(keep);
  const Eigen::MatrixXcd vh = svd.matrixV().leftCols(keep).adjoint();
  if (side == CenterSide::Right) {
    a[0] = u.topRows(dl);
    a[1] = u.bottomRows(dl);
    const Eigen::MatrixXcd svh = s.asDiagonal() * vh;
    b[0] = svh.leftCols(dr);
    b[1] = svh.rightCols(dr);
    m.center = site + 1;
  } else {
    const Eigen::MatrixXcd us = u * s.asDiagonal();
    a[0] = us.topRows(dl);
    a[1] = us.bottomRows(dl);
    b[0] = vh.leftCols(dr);
    b[1] = vh.rightCols(dr);
    m.center = site;
  }
  return info;
}

// ---------------------------------------------------------------------------
// Expectation values

inline Eigen::Matrix2cd pauli_matrix(Pauli p) {
  Eigen::Matrix2cd m;
  switch (p) {
    case Pauli::I: m << 1, 0, 0, 1; break;
    case Pauli::X: m << 0, 1, 1, 0; break;
    case Pauli::Y: m << 0, cplx(0, -1), cplx(0, 1), 0; break;
    case Pauli::Z: m << 1, 0, 0, -1; break;
  }
  return m;
}

namespace detail {

inline Eigen::MatrixXcd transfer(const Eigen::MatrixXcd& env, const SiteTensor& t, const Eigen::Matrix2cd& op) {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(t[0].cols(), t[0].cols());
  for (int s = 0; s < 2; ++s) {
    for (int sp = 0; sp < 2; ++sp) {
      if (op(s, sp) == cplx{}) continue;
      out.noalias() += op(s, sp) * (t[s].adjoint() * env * t[sp]);
    }
  }
  return out;
}

inline Eigen::MatrixXcd transfer_right(const Eigen::MatrixXcd& env, const SiteTensor& t) {
  return t[0] * env * t[0].adjoint() + t[1] * env * t[1].adjoint();
}

}  // namespace detail

/// <psi|H|psi> / <psi|psi> for a Pauli sum.
inline cplx expectation(const MpsState& m, const PauliSum& h) {
  detail::require_same_size(m.n_spins, h.n_spins());
  const int n = m.n_spins;
  std::vector<Eigen::MatrixXcd> left(static_cast<std::size_t>(n + 1));
  std::vector<Eigen::MatrixXcd> right(static_cast<std::size_t>(n + 1));
  const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
  left[0] = Eigen::MatrixXcd::Identity(1, 1);
  for (int j = 0; j < n; ++j) left[static_cast<std::size_t>(j + 1)] = detail::transfer(left[static_cast<std::size_t>(j)], m[j], id);
  right[static_cast<std::size_t>(n)] = Eigen::MatrixXcd::Identity(1, 1);
  for (int j = n - 1; j >= 0; --j) {
    right[static_cast<std::size_t>(j)] = detail::transfer_right(right[static_cast<std::size_t>(j + 1)], m[j]);
  }
  const cplx nrm2 = left[static_cast<std::size_t>(n)](0, 0);
  cplx acc{};
  for (const auto& [k, c] : h) {
    const PauliString s(n, k);
    const SiteMask support = k.x | k.z;
    if (support.none()) {
      acc += c;
      continue;
    }
    int lo = n, hi = -1;
    for (int j = 0; j < n; ++j) {
      if (support.test(j)) {
        lo = std::min(lo, j);
        hi = std::max(hi, j);
      }
    }
    Eigen::MatrixXcd env = left[static_cast<std::size_t>(lo)];
    for (int j = lo; j <= hi; ++j) env = detail::transfer(env, m[j], pauli_matrix(s.at(j)));
    // env is bra x ket; right env is ket x bra.
    acc += c * (env.transpose().cwiseProduct(right[static_cast<std::size_t>(hi + 1)])).sum();
  }
  return acc / nrm2;
}

// ---------------------------------------------------------------------------
// Checkpoint format (all integers and doubles little-endian):
//   8 bytes  magic "CDMPS001"
//   u64      N
//   i64      orthogonality center (-1 when none)
//   u64      bond dimension, one per internal bond (N - 1 values)
//   per site j, tensor elements in row-major order over
//   (left bond, physical index, right bond), each as (real, imag) doubles.

namespace detail {

inline void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char buf[8];
  for (int k = 0; k < 8; ++k) buf[k] = static_cast<unsigned char>((v >> (8 * k)) & 0xFFU);
  os.write(reinterpret_cast<const char*>(buf), 8);
}

inline std::uint64_t read_u64(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  if (!is) throw ValidationError("truncated MPS checkpoint");
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(buf[k]) << (8 * k);
  return v;
}

inline void write_f64(std::ostream& os, double d) { write_u64(os, std::bit_cast<std::uint64_t>(d)); }
inline double read_f64(std::istream& is) { return std::bit_cast<double>(read_u64(is)); }

inline constexpr char kCheckpointMagic[8] = {'C', 'D', 'M', 'P', 'S', '0', '0', '1'};

}  // namespace detail

inline void write_checkpoint(std::ostream& os, const MpsState& m) {
  os.write(detail::kCheckpointMagic, 8);
  detail::write_u64(os, static_cast<std::uint64_t>(m.n_spins));
  detail::write_u64(os, static_cast<std::uint64_t>(static_cast<std::int64_t>(m.center)));
  for (int b = 0; b + 1 < m.n_spins; ++b) detail::write_u64(os, static_cast<std::uint64_t>(m.bond_dim(b)));
  for (int j = 0; j < m.n_spins; ++j) {
    const auto& t = m[j];
    for (Eigen::Index l = 0; l < t[0].rows(); ++l) {
      for (int s = 0; s < 2; ++s) {
        for (Eigen::Index r = 0; r < t[0].cols(); ++r) {
          detail::write_f64(os, t[s](l, r).real());
          detail::write_f64(os, t[s](l, r).imag());
        }
      }
    }
  }
}

inline MpsState read_checkpoint(std::istream& is) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, detail::kCheckpointMagic, 8) != 0) throw ValidationError("not an MPS checkpoint");
  MpsState m;
  const std::uint64_t n = detail::read_u64(is);
  if (n < 1 || n > static_cast<std::uint64_t>(kMaxSpins)) throw ValidationError("bad spin count in checkpoint");
  m.n_spins = static_cast<int>(n);
  m.center = static_cast<int>(static_cast<std::int64_t>(detail::read_u64(is)));
  std::vector<Eigen::Index> bonds{1};
  for (int b = 0; b + 1 < m.n_spins; ++b) bonds.push_back(static_cast<Eigen::Index>(detail::read_u64(is)));
  bonds.push_back(1);
  for (int j = 0; j < m.n_spins; ++j) {
    SiteTensor t;
    const Eigen::Index dl = bonds[static_cast<std::size_t>(j)];
    const Eigen::Index dr = bonds[static_cast<std::size_t>(j + 1)];
    t[0].resize(dl, dr);
    t[1].resize(dl, dr);
    for (Eigen::Index l = 0; l < dl; ++l) {
      for (int s = 0; s < 2; ++s) {
        for (Eigen::Index r = 0; r < dr; ++r) {
          const double re = detail::read_f64(is);
          const double im = detail::read_f64(is);
          t[s](l, r) = cplx(re, im);
        }
      }
    }
    m.tensors.push_back(std::move(t));
  }
  return m;
}

}  // namespace cdanneal
