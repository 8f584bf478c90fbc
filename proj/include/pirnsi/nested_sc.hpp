#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pirnsi/channels.hpp"

namespace pirnsi::nested_sc {

/// Per-level bin-index bit counts. Cumulative size after level l is
/// ceil(n_src*(H(X|Y_l)+delta)); increments are the differences.
struct RateAllocation {
  std::size_t n_src = 0;
  double delta = 0;
  std::vector<std::size_t> m;           // increment bits per level
  std::vector<double> cum_target;       // H(X|Y_l) + delta

  std::size_t levels() const { return m.size(); }
  std::size_t cum_bits(std::size_t level_count) const {
    std::size_t s = 0;
    for (std::size_t i = 0; i < level_count; ++i) s += m[i];
    return s;
  }
};

RateAllocation allocate_rates(const channels::ChannelBank& bank, double delta,
                              std::size_t n_src);

/// Per-level bin indices of one source block, big-endian bit packing.
struct BinIndices {
  std::vector<std::vector<std::uint8_t>> level_bits;  // packed, m[l] bits each
};

inline void pack_bit(std::vector<std::uint8_t>& buf, std::size_t i, int bit) {
  if (bit) buf[i / 8] |= std::uint8_t(0x80u >> (i % 8));
}
inline int unpack_bit(const std::vector<std::uint8_t>& buf, std::size_t i) {
  return (buf[i / 8] >> (7 - i % 8)) & 1;
}

// ---------------------------------------------------------------- binning

/// Hard cap on the exhaustive-scan oracle regime.
constexpr std::size_t kBinningMaxStates = std::size_t(1) << 20;

BinIndices rb_encode(const std::vector<std::uint8_t>& x,
                     const RateAllocation& alloc, std::uint64_t seed,
                     std::size_t alphabet = 2);

/// Exhaustive ML decode among candidates matching bins of levels 1..level.
/// Empty candidate set or a likelihood tie yields nullopt.
std::optional<std::vector<std::uint8_t>> rb_decode(
    std::size_t level, const std::vector<std::vector<std::uint8_t>>& bins,
    const std::vector<std::uint8_t>& y, const RateAllocation& alloc,
    std::uint64_t seed, const channels::ChannelSpec& chan);

// ------------------------------------------------------------------ polar

/// u = x * G with G = [[1,0],[1,1]]^{\otimes log2 n}; involutive.
std::vector<std::uint8_t> polar_transform(const std::vector<std::uint8_t>& x);

/// H(U_i | U^{i-1}, Y^n) per index. Exact erasure recursion for the BEC;
/// genie-aided Monte-Carlo estimate (fixed seed) otherwise.
std::vector<double> polar_entropy_profile(const channels::ChannelSpec& chan,
                                          std::size_t n,
                                          std::size_t mc_samples = 10000,
                                          std::uint64_t mc_seed = 1);

enum class SelectRule {
  entropy,  // highest conditional entropy first (ties: lowest index)
  weight,   // transform row weight classes first, entropy inside a class
};

/// Nested frozen sets S_1 c S_2 c ... grown level by level; sizes are the
/// cumulative bit counts of alloc. Returned sets are cumulative and sorted.
std::vector<std::vector<std::uint32_t>> polar_select_sets(
    const std::vector<std::vector<double>>& profiles,
    const RateAllocation& alloc, SelectRule rule = SelectRule::entropy);

BinIndices polar_encode(const std::vector<std::uint8_t>& x,
                        const std::vector<std::vector<std::uint32_t>>& sets);

/// Reconstruct x from bins of levels 1..level plus side information y.
/// BEC side information uses exact linear erasure solving (nullopt when the
/// system is underdetermined); other channels use successive cancellation.
std::optional<std::vector<std::uint8_t>> polar_sc_decode(
    std::size_t level, const std::vector<std::vector<std::uint8_t>>& bins,
    const std::vector<std::uint8_t>& y, const channels::ChannelSpec& chan,
    const std::vector<std::vector<std::uint32_t>>& sets);

// ------------------------------------------------------------- nested code

enum class Backend { binning, polar };

/// Backend-agnostic nested source code for one (bank, alloc) pair.
struct NestedCode {
  Backend backend = Backend::binning;
  RateAllocation alloc;
  std::uint64_t seed = 0;                          // binning
  std::vector<std::vector<std::uint32_t>> sets;    // polar
  std::size_t alphabet = 2;

  BinIndices encode(const std::vector<std::uint8_t>& x) const;
  std::optional<std::vector<std::uint8_t>> decode(
      std::size_t level, const std::vector<std::vector<std::uint8_t>>& bins,
      const std::vector<std::uint8_t>& y,
      const channels::ChannelSpec& chan) const;
};

/// Pick polar when it applies (power-of-two block, binary input, degraded
/// chain), else fall back to the binning oracle.
NestedCode make_nested_code(const channels::ChannelBank& bank,
                            const RateAllocation& alloc, std::uint64_t seed,
                            std::optional<Backend> forced = std::nullopt);

}  // namespace pirnsi::nested_sc
