#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace pirnsi::gf {

using symbol = std::uint32_t;

/// GF(2^b) with fixed published reducing polynomial per width and
/// precomputed log/antilog tables over a primitive element.
class Field {
 public:
  explicit Field(int bits);

  int bits() const { return bits_; }
  std::uint32_t order() const { return std::uint32_t(1) << bits_; }
  std::uint32_t poly() const { return poly_; }
  symbol generator() const { return alpha_; }

  symbol add(symbol a, symbol b) const { return a ^ b; }
  symbol sub(symbol a, symbol b) const { return a ^ b; }
  symbol mul(symbol a, symbol b) const {
    if (a == 0 || b == 0) return 0;
    return exp_[(log_[a] + log_[b]) % (order() - 1)];
  }
  symbol inv(symbol a) const;
  symbol div(symbol a, symbol b) const { return mul(a, inv(b)); }
  /// alpha^e, e taken mod 2^b-1
  symbol alpha_pow(std::uint64_t e) const { return exp_[e % (order() - 1)]; }

 private:
  int bits_;
  std::uint32_t poly_;
  symbol alpha_;
  std::vector<symbol> log_, exp_;
};

using FieldPtr = std::shared_ptr<const Field>;

/// Shared construction so MdsParity values can be passed around cheaply.
FieldPtr field_new(int bits);

/// Parity side of a systematic (2*p1-p2, p1) MDS code. V has shape
/// p1 x (p1-p2); the full generator [V | I]^T has every p1-row minor
/// invertible. Evaluation points are alpha^0 .. alpha^(2*p1-p2-1).
struct MdsParity {
  std::size_t p1 = 0;
  std::size_t p2 = 0;
  FieldPtr field;
  std::vector<symbol> v;  // row-major, v[i*(p1-p2)+j]

  symbol at(std::size_t i, std::size_t j) const { return v[i * (p1 - p2) + j]; }
};

MdsParity mds_parity(std::size_t p1, std::size_t p2, FieldPtr field);

/// V^T u, length p1-p2.
std::vector<symbol> mds_encode(const MdsParity& par, std::span<const symbol> u);

/// Reconstruct u from at least p2 known systematic symbols plus the
/// p1-p2 parity symbols. Extra knowns are cross-checked; disagreement
/// raises a corruption error.
std::vector<symbol> mds_recover(
    const MdsParity& par,
    const std::vector<std::pair<std::size_t, symbol>>& known,
    std::span<const symbol> parity);

}  // namespace pirnsi::gf
