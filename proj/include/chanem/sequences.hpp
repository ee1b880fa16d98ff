#pragma once

// Sounding code sequences: GLFSR m-sequences, Gold codes, Golay
// complementary pairs and loosely synchronous (LS) codes, plus the
// correlation profiles used to characterize them.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace chanem {

enum class CodeFamily { Glfsr, Gold, GolayA, GolayB, LooselySynchronous };

enum class GolayKind { A, B };

enum class CorrelationMode { Periodic, Aperiodic };

/// Bipolar sounding code. Chips are always -1 or +1; bits map 0 -> +1,
/// 1 -> -1.
struct CodeSequence {
  CodeFamily family = CodeFamily::Glfsr;
  std::vector<int> chips;
  std::string params;

  std::size_t length() const { return chips.size(); }
};

namespace detail {

// Pinned primitive feedback polynomials, one per degree 2..16.
// Bit i is the coefficient of z^i; both z^degree and z^0 are set.
// Degree 8 is x^8 + x^6 + x^5 + x^4 + 1.
inline std::uint32_t primitive_polynomial(int degree) {
  static constexpr std::uint32_t table[] = {
      0,      0,      0x7,    0xB,    0x13,   0x25,   0x43,    0x83,   0x171,
      0x211,  0x409,  0x805,  0x1053, 0x201B, 0x4443, 0x8003, 0x1100B};
  if (degree < 2 || degree > 16)
    throw std::invalid_argument("glfsr degree must be in [2, 16]");
  return table[degree];
}

inline int parity(std::uint32_t v) { return std::popcount(v) & 1; }

// One period of the m-sequence bits for a maximal polynomial, Galois form,
// starting from `seed`. Throws if the polynomial is not maximal.
inline std::vector<int> msequence_bits(std::uint32_t poly, std::uint32_t seed) {
  const int degree = 31 - std::countl_zero(poly);
  if (degree < 2) throw std::invalid_argument("polynomial degree must be >= 2");
  if (seed == 0) throw std::invalid_argument("seed must be nonzero");
  const std::uint32_t state_mask = (1u << degree) - 1;
  if ((seed & state_mask) != seed)
    throw std::invalid_argument("seed wider than the register");
  const std::uint32_t galois = poly >> 1;
  const std::size_t period = (std::size_t{1} << degree) - 1;

  std::vector<int> bits;
  bits.reserve(period);
  std::uint32_t state = seed;
  for (std::size_t i = 0; i < period; ++i) {
    const std::uint32_t out = state & 1u;
    bits.push_back(static_cast<int>(out));
    state >>= 1;
    if (out) state ^= galois;
  }
  if (state != seed)
    throw std::invalid_argument("polynomial is not maximal for its degree");
  return bits;
}

inline int bit_to_chip(int bit) { return bit ? -1 : 1; }

// Recursive Golay pair construction from delay/weight vectors.
// a_k(n) = W_k a_{k-1}(n) + b_{k-1}(n - D_k),
// b_k(n) = W_k a_{k-1}(n) - b_{k-1}(n - D_k), a_0 = b_0 = delta.
inline std::pair<std::vector<int>, std::vector<int>> golay_pair_dw(
    const std::vector<int>& delays, const std::vector<int>& weights) {
  const std::size_t len = std::size_t{1} << delays.size();
  std::vector<int> a(len, 0), b(len, 0), na(len), nb(len);
  a[0] = 1;
  b[0] = 1;
  for (std::size_t k = 0; k < delays.size(); ++k) {
    const int d = delays[k];
    const int w = weights[k];
    for (std::size_t n = 0; n < len; ++n) {
      const int shifted = (static_cast<int>(n) >= d) ? b[n - d] : 0;
      na[n] = w * a[n] + shifted;
      nb[n] = w * a[n] - shifted;
    }
    a.swap(na);
    b.swap(nb);
  }
  return {a, b};
}

// Golay complementary pair of the given power-of-two length. Lengths 32,
// 64 and 128 use the pinned 802.11ad-style delay/weight vectors; other
// power-of-two lengths fall back to the natural-order construction.
inline std::pair<std::vector<int>, std::vector<int>> golay_pair(int length) {
  if (length < 2 || (length & (length - 1)) != 0)
    throw std::invalid_argument("golay pair length must be a power of two >= 2");
  std::vector<int> d, w;
  if (length == 128) {
    d = {1, 8, 2, 4, 16, 32, 64};
    w = {-1, -1, -1, -1, 1, -1, -1};
  } else if (length == 64) {
    d = {2, 1, 4, 8, 16, 32};
    w = {1, 1, -1, -1, 1, -1};
  } else if (length == 32) {
    d = {1, 4, 8, 2, 16};
    w = {-1, 1, -1, 1, -1};
  } else {
    for (int x = 1; x < length; x <<= 1) {
      d.push_back(x);
      w.push_back(1);
    }
  }
  return golay_pair_dw(d, w);
}

}  // namespace detail

/// GLFSR sequence of length 2^degree - 1. With mask 0 this is the plain
/// m-sequence of the pinned primitive polynomial; a nonzero mask XORs the
/// selected register bits into the output.
inline CodeSequence generate_glfsr(int degree, std::uint32_t mask,
                                   std::uint32_t seed) {
  const std::uint32_t poly = detail::primitive_polynomial(degree);
  const std::uint32_t state_mask = (1u << degree) - 1;
  if (seed == 0)
    throw std::invalid_argument("glfsr seed must be nonzero (register would lock)");
  if ((seed & state_mask) != seed)
    throw std::invalid_argument("glfsr seed wider than the register");
  if ((mask & state_mask) != mask)
    throw std::invalid_argument("glfsr mask wider than the register");

  const std::uint32_t galois = poly >> 1;
  const std::size_t period = (std::size_t{1} << degree) - 1;
  CodeSequence seq;
  seq.family = CodeFamily::Glfsr;
  seq.chips.reserve(period);
  std::uint32_t state = seed;
  for (std::size_t i = 0; i < period; ++i) {
    const int out = static_cast<int>(state & 1u) ^ detail::parity(state & mask);
    seq.chips.push_back(detail::bit_to_chip(out));
    const std::uint32_t lsb = state & 1u;
    state >>= 1;
    if (lsb) state ^= galois;
  }
  std::ostringstream p;
  p << "glfsr degree=" << degree << " poly=0x" << std::hex << poly
    << " mask=0x" << mask << " seed=0x" << seed;
  seq.params = p.str();
  return seq;
}

/// Gold sequence: chipwise product of the two parent m-sequences, the
/// second cyclically shifted. Polynomials are coefficient masks (bit i is
/// the coefficient of z^i), e.g. z^6+z+1 -> 0x43.
inline CodeSequence generate_gold(std::uint32_t poly1, std::uint32_t poly2,
                                  int shift) {
  if (poly1 == 0 || poly2 == 0)
    throw std::invalid_argument("gold polynomials must be nonzero");
  const int deg1 = 31 - std::countl_zero(poly1);
  const int deg2 = 31 - std::countl_zero(poly2);
  if (deg1 != deg2)
    throw std::invalid_argument("gold polynomials must have equal degree");
  if (poly1 == poly2)
    throw std::invalid_argument("gold polynomials must form a preferred pair (got equal polynomials)");
  const std::size_t period = (std::size_t{1} << deg1) - 1;
  if (shift < 0 || static_cast<std::size_t>(shift) >= period)
    throw std::invalid_argument("gold shift out of range");

  const std::vector<int> u = detail::msequence_bits(poly1, 1);
  const std::vector<int> v = detail::msequence_bits(poly2, 1);
  CodeSequence seq;
  seq.family = CodeFamily::Gold;
  seq.chips.reserve(period);
  for (std::size_t n = 0; n < period; ++n) {
    const int bit = u[n] ^ v[(n + static_cast<std::size_t>(shift)) % period];
    seq.chips.push_back(detail::bit_to_chip(bit));
  }
  std::ostringstream p;
  p << "gold poly1=0x" << std::hex << poly1 << " poly2=0x" << poly2
    << std::dec << " shift=" << shift;
  seq.params = p.str();
  return seq;
}

/// Type A or B Golay sequence of length 32, 64 or 128.
inline CodeSequence generate_golay(int length, GolayKind which) {
  if (length != 32 && length != 64 && length != 128)
    throw std::invalid_argument("golay length must be 32, 64 or 128");
  auto [a, b] = detail::golay_pair(length);
  CodeSequence seq;
  seq.family = (which == GolayKind::A) ? CodeFamily::GolayA : CodeFamily::GolayB;
  seq.chips = (which == GolayKind::A) ? std::move(a) : std::move(b);
  std::ostringstream p;
  p << "golay length=" << length << " which=" << (which == GolayKind::A ? "A" : "B");
  seq.params = p.str();
  return seq;
}

/// First LS codeset member built from a Golay complementary pair of the
/// given base length: the concatenation A||B, bipolar, no IFW gap.
inline CodeSequence generate_ls(int base_pair_length) {
  if (base_pair_length < 2 || base_pair_length > 128 ||
      (base_pair_length & (base_pair_length - 1)) != 0)
    throw std::invalid_argument("ls base pair length must be a power of two in [2, 128]");
  auto [a, b] = detail::golay_pair(base_pair_length);
  CodeSequence seq;
  seq.family = CodeFamily::LooselySynchronous;
  seq.chips = std::move(a);
  seq.chips.insert(seq.chips.end(), b.begin(), b.end());
  std::ostringstream p;
  p << "ls base_pair_length=" << base_pair_length;
  seq.params = p.str();
  return seq;
}

/// Autocorrelation profile, one value per lag 0..N-1. Periodic mode wraps
/// indices, aperiodic zero-extends.
inline std::vector<double> autocorrelation(const CodeSequence& seq,
                                           CorrelationMode mode) {
  const std::size_t n = seq.chips.size();
  std::vector<double> r(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    if (mode == CorrelationMode::Periodic) {
      for (std::size_t i = 0; i < n; ++i)
        acc += seq.chips[i] * seq.chips[(i + k) % n];
    } else {
      for (std::size_t i = 0; i + k < n; ++i)
        acc += seq.chips[i] * seq.chips[i + k];
    }
    r[k] = acc;
  }
  return r;
}

/// Periodic cross-correlation of two equal-length chip vectors.
inline std::vector<double> periodic_cross_correlation(const std::vector<int>& x,
                                                      const std::vector<int>& y) {
  if (x.size() != y.size())
    throw std::invalid_argument("cross-correlation requires equal lengths");
  const std::size_t n = x.size();
  std::vector<double> r(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[(i + k) % n];
    r[k] = acc;
  }
  return r;
}

inline void save_sequence_text(const CodeSequence& seq, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (int c : seq.chips) out << (c > 0 ? "+1" : "-1") << "\n";
}

inline CodeSequence load_sequence_text(const std::string& path,
                                       CodeFamily family = CodeFamily::Glfsr) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  CodeSequence seq;
  seq.family = family;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    if (line == "+1" || line == "1")
      seq.chips.push_back(1);
    else if (line == "-1")
      seq.chips.push_back(-1);
    else
      throw std::runtime_error(path + ": invalid chip at line " + std::to_string(row));
  }
  seq.params = "loaded from " + path;
  return seq;
}

}  // namespace chanem
