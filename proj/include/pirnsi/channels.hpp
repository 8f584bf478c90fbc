#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pirnsi/rational.hpp"
#include "pirnsi/rng.hpp"

namespace pirnsi::channels {

enum class Kind { bec, bsc, dmc };

/// Erasure output symbol for the BEC (outside the binary input alphabet).
constexpr std::uint8_t kErasure = 2;

/// A discrete memoryless test channel. BEC/BSC keep their parameter as an
/// exact rational so downstream capacity formulas stay exact.
struct ChannelSpec {
  Kind kind = Kind::bec;
  Rat param = 0;                             // epsilon (bec) or p (bsc)
  std::vector<std::vector<double>> matrix;   // dmc rows, |X| x |Y|

  std::size_t input_size() const { return kind == Kind::dmc ? matrix.size() : 2; }
  std::size_t output_size() const {
    if (kind == Kind::bec) return 3;
    if (kind == Kind::bsc) return 2;
    return matrix.empty() ? 0 : matrix[0].size();
  }
  double trans(std::size_t x, std::size_t y) const;
  bool same_law(const ChannelSpec& other) const;
  std::string describe() const;
};

/// Parse `bec:<e>`, `bsc:<p>` or `dmc:<path>` (path: text rows of decimals).
ChannelSpec parse_channel_spec(const std::string& text);

/// H(X|Y) in bits for uniform X. Exact closed forms for BEC/BSC.
double conditional_entropy(const ChannelSpec& spec);

/// Exact rational H(X|Y) where one exists (BEC, degenerate BSC); otherwise
/// the dyadic rational of the double value.
Rat conditional_entropy_exact(const ChannelSpec& spec);

/// IID application of the channel to an input sequence.
std::vector<std::uint8_t> sample(const ChannelSpec& spec,
                                 const std::vector<std::uint8_t>& x, Rng& rng);

/// Channels sorted so H(X|Y_1) <= ... <= H(X|Y_D); ties keep original
/// order and set tie_flag.
struct ChannelBank {
  std::vector<ChannelSpec> specs;
  std::vector<double> cond_entropy;
  std::vector<std::size_t> original_index;
  bool tie_flag = false;

  std::size_t levels() const { return specs.size(); }
};

ChannelBank order_and_validate(std::vector<ChannelSpec> specs);

/// True iff C^(j) = T of C^(i) for a stochastic T, for every i < j.
/// Decided by exact rational feasibility (simplex phase 1).
bool is_degraded_chain(const ChannelBank& bank);
bool is_degraded_pair(const ChannelSpec& better, const ChannelSpec& worse);

/// File-to-channel assignment; level_of[k] in [0, D).
struct Mapping {
  std::vector<std::uint8_t> level_of;

  std::size_t files() const { return level_of.size(); }
  std::vector<std::size_t> counts(std::size_t d_levels) const;
};

/// Uniform over all mappings with |M^-1(i)| = d[i]; counts must be >= 1.
Mapping sample_mapping(const std::vector<std::size_t>& d, Rng& rng);

}  // namespace pirnsi::channels
