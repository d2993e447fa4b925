#pragma once

// Symbolic algebra over N-spin Pauli strings.
//
// A string is stored in symplectic form: bit j of x_mask / z_mask says whether
// X / Z acts on site j, a site set in both masks carries Y. The operator is
//
//     i^phase * sigma_0 (x) sigma_1 (x) ... (x) sigma_{N-1}
//
// with every sigma in {I, X, Y, Z}, so a string is Hermitian iff phase is even.
//
// Sites are 0-based in the API. In dense matrices and state vectors site 0 is
// the most significant bit of the basis index, and bit value 0 is the
// Z = +1 eigenstate |0>.

#include <algorithm>
#include <array>
#include <bit>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cdanneal/errors.hpp"

namespace cdanneal {

using cplx = std::complex<double>;

inline constexpr int kMaxSpins = 256;
inline constexpr int kDenseLimit = 14;
inline constexpr double kPruneThreshold = 1e-15;

/// Fixed-capacity bit set over at most kMaxSpins sites.
class SiteMask {
 public:
  static constexpr int kWords = kMaxSpins / 64;

  constexpr SiteMask() = default;

  void set(int site) { words_[site >> 6] |= (std::uint64_t{1} << (site & 63)); }
  void reset(int site) { words_[site >> 6] &= ~(std::uint64_t{1} << (site & 63)); }
  void flip(int site) { words_[site >> 6] ^= (std::uint64_t{1} << (site & 63)); }
  [[nodiscard]] bool test(int site) const {
    return (words_[site >> 6] >> (site & 63)) & 1U;
  }

  [[nodiscard]] int popcount() const {
    int c = 0;
    for (auto w : words_) c += std::popcount(w);
    return c;
  }
  [[nodiscard]] bool none() const {
    return std::all_of(words_.begin(), words_.end(), [](auto w) { return w == 0; });
  }

  /// Highest set site + 1, or 0 when empty.
  [[nodiscard]] int extent() const {
    for (int k = kWords - 1; k >= 0; --k) {
      if (words_[k] != 0) return 64 * k + 64 - std::countl_zero(words_[k]);
    }
    return 0;
  }

  /// Site bits mapped onto a basis index with site 0 as the most significant bit.
  [[nodiscard]] std::uint64_t to_index_bits(int n_spins) const {
    std::uint64_t out = 0;
    for (int j = 0; j < n_spins; ++j) {
      if (test(j)) out |= std::uint64_t{1} << (n_spins - 1 - j);
    }
    return out;
  }

  SiteMask& operator^=(const SiteMask& o) {
    for (int k = 0; k < kWords; ++k) words_[k] ^= o.words_[k];
    return *this;
  }
  SiteMask& operator&=(const SiteMask& o) {
    for (int k = 0; k < kWords; ++k) words_[k] &= o.words_[k];
    return *this;
  }
  SiteMask& operator|=(const SiteMask& o) {
    for (int k = 0; k < kWords; ++k) words_[k] |= o.words_[k];
    return *this;
  }
  friend SiteMask operator^(SiteMask a, const SiteMask& b) { return a ^= b; }
  friend SiteMask operator&(SiteMask a, const SiteMask& b) { return a &= b; }
  friend SiteMask operator|(SiteMask a, const SiteMask& b) { return a |= b; }

  friend auto operator<=>(const SiteMask&, const SiteMask&) = default;
  friend bool operator==(const SiteMask&, const SiteMask&) = default;

  [[nodiscard]] std::size_t hash() const {
    std::size_t h = 0x9e3779b97f4a7c15ULL;
    for (auto w : words_) h ^= std::hash<std::uint64_t>{}(w) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }

 private:
  std::array<std::uint64_t, kWords> words_{};
};

/// Phase-free identity of a string: the pair of masks.
struct PauliKey {
  SiteMask x;
  SiteMask z;

  friend auto operator<=>(const PauliKey&, const PauliKey&) = default;
  friend bool operator==(const PauliKey&, const PauliKey&) = default;

  [[nodiscard]] int y_count() const { return (x & z).popcount(); }
  [[nodiscard]] int weight() const { return (x | z).popcount(); }
};

struct PauliKeyHash {
  std::size_t operator()(const PauliKey& k) const noexcept {
    return k.x.hash() * 31U + k.z.hash();
  }
};

enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

inline char pauli_char(Pauli p) { return "IXYZ"[static_cast<int>(p)]; }

/// i^k for k mod 4.
inline cplx i_power(int k) {
  switch (((k % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

inline void check_spin_count(int n_spins) {
  if (n_spins < 1) throw ArgumentError("n_spins must be positive");
  if (n_spins > kMaxSpins) {
    throw CapacityError("n_spins " + std::to_string(n_spins) + " exceeds mask capacity " +
                        std::to_string(kMaxSpins));
  }
}

class PauliString {
 public:
  PauliString() = default;

  /// Identity on n_spins sites.
  explicit PauliString(int n_spins) : n_(n_spins) { check_spin_count(n_spins); }

  PauliString(int n_spins, PauliKey key, int phase = 0)
      : n_(n_spins), x_(key.x), z_(key.z), phase_(((phase % 4) + 4) % 4) {
    check_spin_count(n_spins);
    if (std::max(x_.extent(), z_.extent()) > n_spins) {
      throw ArgumentError("mask bits beyond n_spins");
    }
  }

  static PauliString identity(int n_spins) { return PauliString(n_spins); }

  static PauliString single(int n_spins, int site, Pauli p) {
    PauliString s(n_spins);
    s.set(site, p);
    return s;
  }

  /// Product of single-site operators, e.g. {{0, Pauli::Y}, {3, Pauli::X}}.
  static PauliString from_sites(int n_spins, std::initializer_list<std::pair<int, Pauli>> ops) {
    PauliString s(n_spins);
    for (auto [site, p] : ops) s.set(site, p);
    return s;
  }

  /// One character per site, site 0 first: "XIZY". Optional phase prefix
  /// "+", "-", "i", "-i".
  static PauliString from_label(std::string_view label) {
    int phase = 0;
    if (label.starts_with("-i")) {
      phase = 3;
      label.remove_prefix(2);
    } else if (label.starts_with("+i") || label.starts_with("i")) {
      phase = 1;
      label.remove_prefix(label[0] == '+' ? 2 : 1);
    } else if (label.starts_with("-")) {
      phase = 2;
      label.remove_prefix(1);
    } else if (label.starts_with("+")) {
      label.remove_prefix(1);
    }
    PauliString s(static_cast<int>(label.size()));
    for (int j = 0; j < static_cast<int>(label.size()); ++j) {
      switch (label[j]) {
        case 'I': case '_': break;
        case 'X': s.set(j, Pauli::X); break;
        case 'Y': s.set(j, Pauli::Y); break;
        case 'Z': s.set(j, Pauli::Z); break;
        default: throw ArgumentError(std::string("invalid Pauli label character '") + label[j] + "'");
      }
    }
    s.phase_ = phase;
    return s;
  }

  void set(int site, Pauli p) {
    if (site < 0 || site >= n_) throw ArgumentError("site out of range");
    x_.reset(site);
    z_.reset(site);
    if (p == Pauli::X || p == Pauli::Y) x_.set(site);
    if (p == Pauli::Z || p == Pauli::Y) z_.set(site);
  }

  [[nodiscard]] Pauli at(int site) const {
    const bool x = x_.test(site);
    const bool z = z_.test(site);
    if (x && z) return Pauli::Y;
    if (x) return Pauli::X;
    if (z) return Pauli::Z;
    return Pauli::I;
  }

  [[nodiscard]] int n_spins() const { return n_; }
  [[nodiscard]] const SiteMask& x_mask() const { return x_; }
  [[nodiscard]] const SiteMask& z_mask() const { return z_; }
  [[nodiscard]] PauliKey key() const { return {x_, z_}; }
  [[nodiscard]] int phase() const { return phase_; }
  [[nodiscard]] cplx phase_factor() const { return i_power(phase_); }
  [[nodiscard]] int y_count() const { return (x_ & z_).popcount(); }
  [[nodiscard]] int weight() const { return (x_ | z_).popcount(); }
  [[nodiscard]] bool is_identity() const { return x_.none() && z_.none() && phase_ == 0; }
  [[nodiscard]] bool is_hermitian() const { return phase_ % 2 == 0; }

  [[nodiscard]] PauliString with_phase(int phase) const {
    PauliString s = *this;
    s.phase_ = ((phase % 4) + 4) % 4;
    return s;
  }

  [[nodiscard]] PauliString adjoint() const { return with_phase(4 - phase_); }

  [[nodiscard]] std::string to_string() const {
    static constexpr std::array<const char*, 4> prefix{"", "i", "-", "-i"};
    std::string out = prefix[phase_];
    for (int j = 0; j < n_; ++j) out += pauli_char(at(j));
    return out;
  }

  friend bool operator==(const PauliString&, const PauliString&) = default;

 private:
  int n_ = 0;
  SiteMask x_;
  SiteMask z_;
  int phase_ = 0;
};

namespace detail {

inline void require_same_size(int a, int b) {
  if (a != b) {
    throw ArgumentError("spin-count mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

/// Exponent of i picked up by the product of two phase-free strings.
inline int product_phase(const PauliKey& a, const PauliKey& b) {
  const SiteMask x = a.x ^ b.x;
  const SiteMask z = a.z ^ b.z;
  const int k = a.y_count() + b.y_count() + 2 * (a.z & b.x).popcount() - (x & z).popcount();
  return ((k % 4) + 4) % 4;
}

/// Parity of the symplectic form; true when the two strings anticommute.
inline bool anticommutes(const PauliKey& a, const PauliKey& b) {
  return (((a.x & b.z).popcount() + (a.z & b.x).popcount()) & 1) != 0;
}

}  // namespace detail

inline PauliString multiply(const PauliString& a, const PauliString& b) {
  detail::require_same_size(a.n_spins(), b.n_spins());
  const PauliKey key{a.x_mask() ^ b.x_mask(), a.z_mask() ^ b.z_mask()};
  const int phase = a.phase() + b.phase() + detail::product_phase(a.key(), b.key());
  return PauliString(a.n_spins(), key, phase);
}

inline bool commutes(const PauliString& a, const PauliString& b) {
  detail::require_same_size(a.n_spins(), b.n_spins());
  return !detail::anticommutes(a.key(), b.key());
}

/// Linear combination of Pauli strings. Coefficients multiply the phase-free
/// (Hermitian) string of each key, so a Hermitian sum has real coefficients.
class PauliSum {
 public:
  using TermMap = std::map<PauliKey, cplx>;

  PauliSum() = default;
  explicit PauliSum(int n_spins) : n_(n_spins) { check_spin_count(n_spins); }
  PauliSum(const PauliString& s, cplx coeff = 1.0) : n_(s.n_spins()) { add(s, coeff); }

  [[nodiscard]] int n_spins() const { return n_; }
  [[nodiscard]] const TermMap& terms() const { return terms_; }
  [[nodiscard]] std::size_t size() const { return terms_.size(); }
  [[nodiscard]] bool empty() const { return terms_.empty(); }
  [[nodiscard]] auto begin() const { return terms_.begin(); }
  [[nodiscard]] auto end() const { return terms_.end(); }

  [[nodiscard]] cplx coefficient(const PauliKey& key) const {
    auto it = terms_.find(key);
    return it == terms_.end() ? cplx{} : it->second;
  }
  [[nodiscard]] cplx coefficient(const PauliString& s) const {
    return coefficient(s.key()) * std::conj(s.phase_factor());
  }

  PauliSum& add(const PauliKey& key, cplx coeff) {
    if (coeff == cplx{}) return *this;
    auto [it, inserted] = terms_.try_emplace(key, coeff);
    if (!inserted) it->second += coeff;
    if (std::abs(it->second) < kPruneThreshold) terms_.erase(it);
    return *this;
  }

  PauliSum& add(const PauliString& s, cplx coeff = 1.0) {
    detail::require_same_size(n_, s.n_spins());
    return add(s.key(), coeff * s.phase_factor());
  }

  PauliSum& operator+=(const PauliSum& o) {
    detail::require_same_size(n_, o.n_);
    for (const auto& [k, c] : o.terms_) add(k, c);
    return *this;
  }
  PauliSum& operator-=(const PauliSum& o) {
    detail::require_same_size(n_, o.n_);
    for (const auto& [k, c] : o.terms_) add(k, -c);
    return *this;
  }
  PauliSum& operator*=(cplx s) {
    if (s == cplx{}) {
      terms_.clear();
      return *this;
    }
    for (auto& [k, c] : terms_) c *= s;
    return prune();
  }

  friend PauliSum operator+(PauliSum a, const PauliSum& b) { return a += b; }
  friend PauliSum operator-(PauliSum a, const PauliSum& b) { return a -= b; }
  friend PauliSum operator*(PauliSum a, cplx s) { return a *= s; }
  friend PauliSum operator*(cplx s, PauliSum a) { return a *= s; }
  friend PauliSum operator*(PauliSum a, double s) { return a *= cplx(s); }
  friend PauliSum operator*(double s, PauliSum a) { return a *= cplx(s); }

  PauliSum& prune(double threshold = kPruneThreshold) {
    std::erase_if(terms_, [threshold](const auto& kv) { return std::abs(kv.second) < threshold; });
    return *this;
  }

  [[nodiscard]] bool is_hermitian(double tol = 1e-12) const {
    return std::all_of(terms_.begin(), terms_.end(),
                       [tol](const auto& kv) { return std::abs(kv.second.imag()) <= tol; });
  }

  /// True when no term carries an X or Y factor.
  [[nodiscard]] bool is_diagonal() const {
    return std::all_of(terms_.begin(), terms_.end(), [](const auto& kv) { return kv.first.x.none(); });
  }

  [[nodiscard]] PauliSum adjoint() const {
    PauliSum out(n_);
    for (const auto& [k, c] : terms_) out.terms_.emplace(k, std::conj(c));
    return out;
  }

  [[nodiscard]] std::string to_string() const {
    std::string out;
    for (const auto& [k, c] : terms_) {
      if (!out.empty()) out += " + ";
      out += "(" + std::to_string(c.real()) + (c.imag() != 0.0 ? "+" + std::to_string(c.imag()) + "i" : "") +
             ")" + PauliString(n_, k).to_string();
    }
    return out.empty() ? "0" : out;
  }

  friend bool operator==(const PauliSum&, const PauliSum&) = default;

 private:
  int n_ = 0;
  TermMap terms_;
};

/// [a, b] = ab - ba: zero when the strings commute, 2ab otherwise.
inline PauliSum commutator(const PauliString& a, const PauliString& b) {
  detail::require_same_size(a.n_spins(), b.n_spins());
  PauliSum out(a.n_spins());
  if (detail::anticommutes(a.key(), b.key())) out.add(multiply(a, b), 2.0);
  return out;
}

inline PauliSum multiply(const PauliSum& a, const PauliSum& b) {
  detail::require_same_size(a.n_spins(), b.n_spins());
  PauliSum out(a.n_spins());
  for (const auto& [ka, ca] : a) {
    for (const auto& [kb, cb] : b) {
      const PauliKey k{ka.x ^ kb.x, ka.z ^ kb.z};
      out.add(k, ca * cb * i_power(detail::product_phase(ka, kb)));
    }
  }
  return out;
}

inline PauliSum commutator(const PauliSum& a, const PauliSum& b) {
  detail::require_same_size(a.n_spins(), b.n_spins());
  PauliSum out(a.n_spins());
  for (const auto& [ka, ca] : a) {
    for (const auto& [kb, cb] : b) {
      if (!detail::anticommutes(ka, kb)) continue;
      const PauliKey k{ka.x ^ kb.x, ka.z ^ kb.z};
      out.add(k, 2.0 * ca * cb * i_power(detail::product_phase(ka, kb)));
    }
  }
  return out;
}

/// Normalized trace inner product Tr[A^dagger B] / 2^N.
inline cplx inner_product(const PauliSum& a, const PauliSum& b) {
  detail::require_same_size(a.n_spins(), b.n_spins());
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& large = a.size() <= b.size() ? b : a;
  cplx acc{};
  for (const auto& [k, c] : small) {
    auto it = large.terms().find(k);
    if (it == large.terms().end()) continue;
    acc += (&small == &a) ? std::conj(c) * it->second : std::conj(it->second) * c;
  }
  return acc;
}

/// Normalized Frobenius norm squared, Tr[A^dagger A] / 2^N.
inline double norm_squared(const PauliSum& a) {
  double acc = 0.0;
  for (const auto& [k, c] : a) acc += std::norm(c);
  return acc;
}

namespace detail {

inline void check_dense(int n_spins, int limit) {
  if (n_spins > limit || n_spins > 30) {
    throw CapacityError("dense representation limited to " + std::to_string(limit) + " spins, got " +
                        std::to_string(n_spins));
  }
}

/// Adds coeff * (phase-free string) into a dense matrix.
inline void accumulate_dense(Eigen::MatrixXcd& m, int n, const PauliKey& key, cplx coeff) {
  const std::uint64_t xb = key.x.to_index_bits(n);
  const std::uint64_t zb = key.z.to_index_bits(n);
  const cplx base = coeff * i_power(key.y_count());
  const std::uint64_t dim = std::uint64_t{1} << n;
  for (std::uint64_t s = 0; s < dim; ++s) {
    const double sign = (std::popcount(zb & s) & 1) ? -1.0 : 1.0;
    m(static_cast<Eigen::Index>(s ^ xb), static_cast<Eigen::Index>(s)) += sign * base;
  }
}

}  // namespace detail

inline Eigen::MatrixXcd to_dense(const PauliSum& a, int limit = kDenseLimit) {
  detail::check_dense(a.n_spins(), limit);
  const auto dim = Eigen::Index{1} << a.n_spins();
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  for (const auto& [k, c] : a) detail::accumulate_dense(m, a.n_spins(), k, c);
  return m;
}

inline Eigen::MatrixXcd to_dense(const PauliString& s, int limit = kDenseLimit) {
  return to_dense(PauliSum(s), limit);
}

}  // namespace cdanneal
