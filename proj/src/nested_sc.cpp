#include "pirnsi/nested_sc.hpp"

#include <openssl/sha.h>

#include <algorithm>
#include <bit>
#include <span>
#include <cmath>
#include <cstring>
#include <numeric>
#include <stdexcept>

#include "pirnsi/rng.hpp"

namespace pirnsi::nested_sc {

namespace {

bool is_pow2(std::size_t n) { return n && (n & (n - 1)) == 0; }

std::uint64_t bin_hash(std::uint64_t seed, std::size_t level,
                       const std::vector<std::uint8_t>& x) {
  std::vector<std::uint8_t> buf(16 + x.size());
  for (int i = 0; i < 8; ++i) buf[i] = std::uint8_t(seed >> (8 * i));
  for (int i = 0; i < 8; ++i) buf[8 + i] = std::uint8_t(std::uint64_t(level) >> (8 * i));
  std::memcpy(buf.data() + 16, x.data(), x.size());
  unsigned char d[SHA256_DIGEST_LENGTH];
  SHA256(buf.data(), buf.size(), d);
  std::uint64_t h = 0;
  for (int i = 0; i < 8; ++i) h = h << 8 | d[i];
  return h;
}

double log_likelihood(const channels::ChannelSpec& chan,
                      const std::vector<std::uint8_t>& x,
                      const std::vector<std::uint8_t>& y) {
  double ll = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double p = chan.trans(x[i], y[i]);
    if (p <= 0) return -std::numeric_limits<double>::infinity();
    ll += std::log(p);
  }
  return ll;
}

}  // namespace

RateAllocation allocate_rates(const channels::ChannelBank& bank, double delta,
                              std::size_t n_src) {
  if (delta < 0) throw std::invalid_argument("nested_sc: delta must be >= 0");
  if (n_src == 0) throw std::invalid_argument("nested_sc: n_src must be >= 1");
  for (std::size_t i = 0; i + 1 < bank.levels(); ++i)
    if (bank.cond_entropy[i] > bank.cond_entropy[i + 1] + 1e-12)
      throw std::invalid_argument("nested_sc: channel bank is not ordered");

  RateAllocation alloc;
  alloc.n_src = n_src;
  alloc.delta = delta;
  std::size_t prev = 0;
  for (std::size_t l = 0; l < bank.levels(); ++l) {
    alloc.cum_target.push_back(bank.cond_entropy[l] + delta);
    const double t = double(n_src) * alloc.cum_target.back();
    auto cum = std::size_t(std::ceil(t - 1e-9));
    cum = std::min(cum, n_src);  // a bin string longer than the block is useless
    if (cum < prev) cum = prev;
    alloc.m.push_back(cum - prev);
    prev = cum;
  }
  return alloc;
}

// ---------------------------------------------------------------- binning

BinIndices rb_encode(const std::vector<std::uint8_t>& x,
                     const RateAllocation& alloc, std::uint64_t seed,
                     std::size_t alphabet) {
  if (x.size() != alloc.n_src)
    throw std::invalid_argument("nested_sc: block length mismatch");
  double states = std::pow(double(alphabet), double(alloc.n_src));
  if (states > double(kBinningMaxStates))
    throw std::invalid_argument("nested_sc: block too long for the binning oracle");

  BinIndices out;
  for (std::size_t l = 0; l < alloc.levels(); ++l) {
    const std::size_t m = alloc.m[l];
    std::vector<std::uint8_t> bits((m + 7) / 8, 0);
    if (m > 0) {
      if (m > 64) throw std::invalid_argument("nested_sc: binning level index too wide");
      const std::uint64_t h = bin_hash(seed, l, x);
      for (std::size_t i = 0; i < m; ++i)
        pack_bit(bits, i, int((h >> (m - 1 - i)) & 1));
    }
    out.level_bits.push_back(std::move(bits));
  }
  return out;
}

std::optional<std::vector<std::uint8_t>> rb_decode(
    std::size_t level, const std::vector<std::vector<std::uint8_t>>& bins,
    const std::vector<std::uint8_t>& y, const RateAllocation& alloc,
    std::uint64_t seed, const channels::ChannelSpec& chan) {
  if (level == 0 || level > alloc.levels())
    throw std::invalid_argument("nested_sc: level out of range");
  if (bins.size() < level)
    throw std::invalid_argument("nested_sc: missing bin levels");
  const std::size_t n = alloc.n_src;
  const std::size_t alphabet = chan.input_size();

  std::vector<std::uint8_t> cand(n, 0);
  std::optional<std::vector<std::uint8_t>> best;
  double best_ll = -std::numeric_limits<double>::infinity();
  bool tie = false;
  while (true) {
    BinIndices enc = rb_encode(cand, alloc, seed, alphabet);
    bool match = true;
    for (std::size_t l = 0; l < level && match; ++l)
      match = enc.level_bits[l] == bins[l];
    if (match) {
      const double ll = log_likelihood(chan, cand, y);
      if (ll > best_ll + 1e-9) {
        best_ll = ll;
        best = cand;
        tie = false;
      } else if (std::isfinite(ll) && ll > best_ll - 1e-9) {
        tie = true;
      }
    }
    // odometer
    std::size_t i = 0;
    while (i < n && ++cand[i] == alphabet) cand[i++] = 0;
    if (i == n) break;
  }
  if (!best || tie || !std::isfinite(best_ll)) return std::nullopt;
  return best;
}

// ------------------------------------------------------------------ polar

std::vector<std::uint8_t> polar_transform(const std::vector<std::uint8_t>& x) {
  const std::size_t n = x.size();
  if (!is_pow2(n)) throw std::invalid_argument("nested_sc: length must be a power of two");
  // u = ((top ^ bot) G, bot G), applied iteratively from the whole block down.
  std::vector<std::uint8_t> u(x);
  for (std::size_t half = n / 2; half >= 1; half /= 2) {
    for (std::size_t start = 0; start < n; start += 2 * half)
      for (std::size_t i = 0; i < half; ++i)
        u[start + i] ^= u[start + half + i];
    if (half == 1) break;
  }
  return u;
}

std::vector<double> polar_entropy_profile(const channels::ChannelSpec& chan,
                                          std::size_t n, std::size_t mc_samples,
                                          std::uint64_t mc_seed) {
  if (!is_pow2(n)) throw std::invalid_argument("nested_sc: n must be a power of two");
  if (chan.input_size() != 2)
    throw std::invalid_argument("nested_sc: polar backend needs binary input");

  if (chan.kind == channels::Kind::bec) {
    const double eps = rat_to_double(chan.param);
    std::vector<double> z{eps};
    while (z.size() < n) {
      std::vector<double> nz;
      nz.reserve(z.size() * 2);
      for (double v : z) {
        nz.push_back(2 * v - v * v);
        nz.push_back(v * v);
      }
      z = std::move(nz);
    }
    return z;
  }

  // Genie-aided SC: average H2(P[U_i=1 | U^{i-1}, Y^n]) over samples.
  std::vector<double> acc(n, 0.0);
  Rng rng(mc_seed);
  std::vector<std::uint8_t> x(n);
  std::vector<double> llr(n);
  // Per-symbol channel LLR log(P(y|0)/P(y|1)).
  const std::size_t ny = chan.output_size();
  std::vector<double> sym_llr(ny);
  for (std::size_t y = 0; y < ny; ++y) {
    const double p0 = chan.trans(0, y), p1 = chan.trans(1, y);
    sym_llr[y] = std::log(std::max(p0, 1e-300)) - std::log(std::max(p1, 1e-300));
  }

  // Recursive genie pass: fills per-index LLR of U_i given true past.
  std::vector<double> bit_llr(n);
  struct Walker {
    std::vector<double>& out;
    void run(std::span<const double> llrs, std::size_t ustart,
             std::span<const std::uint8_t> xtrue) {
      const std::size_t m = llrs.size();
      if (m == 1) {
        out[ustart] = llrs[0];
        return;
      }
      const std::size_t h = m / 2;
      std::vector<double> lm(h);
      for (std::size_t i = 0; i < h; ++i) {
        const double t = std::tanh(llrs[i] / 2) * std::tanh(llrs[h + i] / 2);
        lm[i] = 2 * std::atanh(std::max(-1 + 1e-15, std::min(1 - 1e-15, t)));
      }
      std::vector<std::uint8_t> v1(h);
      for (std::size_t i = 0; i < h; ++i) v1[i] = xtrue[i] ^ xtrue[h + i];
      run(lm, ustart, v1);
      std::vector<double> lp(h);
      for (std::size_t i = 0; i < h; ++i)
        lp[i] = llrs[h + i] + (v1[i] ? -llrs[i] : llrs[i]);
      run(lp, ustart + h, xtrue.subspan(h));
    }
  };

  for (std::size_t s = 0; s < mc_samples; ++s) {
    for (auto& b : x) b = std::uint8_t(rng.below(2));
    auto y = channels::sample(chan, x, rng);
    for (std::size_t i = 0; i < n; ++i) llr[i] = sym_llr[y[i]];
    Walker w{bit_llr};
    w.run(llr, 0, x);
    for (std::size_t i = 0; i < n; ++i) {
      const double p1 = 1.0 / (1.0 + std::exp(bit_llr[i]));
      const double p = std::min(std::max(p1, 0.0), 1.0);
      acc[i] += (p <= 0 || p >= 1) ? 0.0 : -p * std::log2(p) - (1 - p) * std::log2(1 - p);
    }
  }
  for (auto& v : acc) v /= double(mc_samples);
  return acc;
}

std::vector<std::vector<std::uint32_t>> polar_select_sets(
    const std::vector<std::vector<double>>& profiles,
    const RateAllocation& alloc, SelectRule rule) {
  if (profiles.size() != alloc.levels())
    throw std::invalid_argument("nested_sc: profile/allocation level mismatch");
  const std::size_t n = profiles.empty() ? 0 : profiles[0].size();
  std::size_t cum = 0;
  for (auto m : alloc.m) cum += m;
  if (cum > n) throw std::invalid_argument("nested_sc: rate targets exceed block length");

  std::vector<char> in_set(n, 0);
  std::vector<std::vector<std::uint32_t>> sets;
  std::size_t have = 0;
  for (std::size_t l = 0; l < alloc.levels(); ++l) {
    if (profiles[l].size() != n)
      throw std::invalid_argument("nested_sc: ragged profiles");
    std::vector<std::uint32_t> rest;
    for (std::uint32_t i = 0; i < n; ++i)
      if (!in_set[i]) rest.push_back(i);
    const auto& prof = profiles[l];
    std::sort(rest.begin(), rest.end(), [&](std::uint32_t a, std::uint32_t b) {
      if (rule == SelectRule::weight) {
        const int wa = std::popcount(a), wb = std::popcount(b);
        if (wa != wb) return wa < wb;
      }
      if (prof[a] != prof[b]) return prof[a] > prof[b];
      return a < b;
    });
    for (std::size_t t = 0; t < alloc.m[l]; ++t) in_set[rest[t]] = 1;
    have += alloc.m[l];
    std::vector<std::uint32_t> s;
    for (std::uint32_t i = 0; i < n; ++i)
      if (in_set[i]) s.push_back(i);
    sets.push_back(std::move(s));
  }
  return sets;
}

BinIndices polar_encode(const std::vector<std::uint8_t>& x,
                        const std::vector<std::vector<std::uint32_t>>& sets) {
  auto u = polar_transform(x);
  BinIndices out;
  std::vector<char> prev(u.size(), 0);
  for (const auto& s : sets) {
    std::vector<std::uint32_t> inc;
    for (auto i : s)
      if (!prev[i]) {
        inc.push_back(i);
        prev[i] = 1;
      }
    std::vector<std::uint8_t> bits((inc.size() + 7) / 8, 0);
    for (std::size_t t = 0; t < inc.size(); ++t) pack_bit(bits, t, u[inc[t]]);
    out.level_bits.push_back(std::move(bits));
  }
  return out;
}

namespace {

/// Bitset column j of G (rows where G[row][j] = 1), length n bits.
std::vector<std::uint64_t> g_column(std::size_t n, std::uint32_t j) {
  const std::size_t words = (n + 63) / 64;
  std::vector<std::uint64_t> cur(words, 0), tmp(words, 0);
  cur[0] = 1;  // n=1 base: single row
  std::size_t m = 1;
  // Reconstruct the recursion path top-down: G_{2m} = [[G,0],[G,G]].
  // Column j < m lives in both halves; column j >= m only in the bottom.
  std::vector<bool> bottom;
  std::size_t nn = n;
  std::uint32_t jj = j;
  while (nn > 1) {
    bottom.push_back(jj >= nn / 2);
    if (jj >= nn / 2) jj -= std::uint32_t(nn / 2);
    nn /= 2;
  }
  for (auto it = bottom.rbegin(); it != bottom.rend(); ++it) {
    // shift current bitset by m into tmp and merge
    std::fill(tmp.begin(), tmp.end(), 0);
    const std::size_t ws = m / 64, bs = m % 64;
    for (std::size_t w = 0; w + ws < tmp.size(); ++w) {
      tmp[w + ws] |= cur[w] << bs;
      if (bs && w + ws + 1 < tmp.size()) tmp[w + ws + 1] |= cur[w] >> (64 - bs);
    }
    if (*it) {
      cur = tmp;  // bottom only
    } else {
      for (std::size_t w = 0; w < cur.size(); ++w) cur[w] |= tmp[w];
    }
    m *= 2;
  }
  return cur;
}

/// Exact erasure solve: unknown x on erased positions, equations from the
/// frozen transform values. Returns nullopt when underdetermined.
std::optional<std::vector<std::uint8_t>> bec_ml_decode(
    const std::vector<std::uint8_t>& y, const std::vector<std::uint32_t>& frozen,
    const std::vector<std::uint8_t>& frozen_vals) {
  const std::size_t n = y.size();
  std::vector<std::uint32_t> erased;
  std::vector<std::int32_t> col_of(n, -1);
  for (std::uint32_t i = 0; i < n; ++i)
    if (y[i] == channels::kErasure) {
      col_of[i] = std::int32_t(erased.size());
      erased.push_back(i);
    }
  std::vector<std::uint8_t> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = (y[i] == channels::kErasure) ? 0 : y[i];
  const std::size_t e = erased.size();
  if (e == 0) return x;

  const std::size_t words = e / 64 + 1;  // last bit slot feeds nothing; rhs kept apart
  std::vector<std::vector<std::uint64_t>> pivot_row(e);
  std::vector<std::uint8_t> pivot_rhs(e, 0);
  std::vector<char> have_piv(e, 0);
  std::size_t rank = 0;

  std::vector<std::uint64_t> row(words);
  for (std::size_t t = 0; t < frozen.size() && rank < e; ++t) {
    const auto col = g_column(n, frozen[t]);
    std::fill(row.begin(), row.end(), 0);
    int rhs = frozen_vals[t];
    for (std::uint32_t i = 0; i < n; ++i) {
      if (!((col[i / 64] >> (i % 64)) & 1)) continue;
      if (col_of[i] >= 0)
        row[std::size_t(col_of[i]) / 64] ^= std::uint64_t(1) << (col_of[i] % 64);
      else
        rhs ^= x[i];
    }
    // reduce against existing pivots
    while (true) {
      std::size_t lead = e;
      for (std::size_t w = 0; w < words; ++w)
        if (row[w]) {
          lead = w * 64 + std::size_t(std::countr_zero(row[w]));
          break;
        }
      if (lead >= e) break;
      if (!have_piv[lead]) {
        pivot_row[lead] = row;
        pivot_rhs[lead] = std::uint8_t(rhs);
        have_piv[lead] = 1;
        ++rank;
        break;
      }
      for (std::size_t w = 0; w < words; ++w) row[w] ^= pivot_row[lead][w];
      rhs ^= pivot_rhs[lead];
    }
  }
  if (rank < e) return std::nullopt;

  // Back-substitute from the highest unknown down.
  std::vector<std::uint8_t> sol(e, 0);
  for (std::size_t c = e; c-- > 0;) {
    int v = pivot_rhs[c];
    const auto& r = pivot_row[c];
    for (std::size_t c2 = c + 1; c2 < e; ++c2)
      if ((r[c2 / 64] >> (c2 % 64)) & 1) v ^= sol[c2];
    sol[c] = std::uint8_t(v);
  }
  for (std::size_t t = 0; t < e; ++t) x[erased[t]] = sol[t];
  return x;
}

/// Plain successive cancellation with frozen values (general binary-input
/// channels). Always returns an estimate.
struct ScDecoder {
  const std::vector<char>& is_frozen;
  const std::vector<std::uint8_t>& frozen_val;  // indexed by u position

  std::vector<std::uint8_t> u_hat;

  // returns the decoded x-subvector for this subtree
  std::vector<std::uint8_t> run(std::vector<double> llr, std::size_t ustart) {
    const std::size_t m = llr.size();
    if (m == 1) {
      std::uint8_t b;
      if (is_frozen[ustart])
        b = frozen_val[ustart];
      else
        b = llr[0] >= 0 ? 0 : 1;
      u_hat[ustart] = b;
      return {b};
    }
    const std::size_t h = m / 2;
    std::vector<double> lm(h);
    for (std::size_t i = 0; i < h; ++i) {
      const double t = std::tanh(llr[i] / 2) * std::tanh(llr[h + i] / 2);
      lm[i] = 2 * std::atanh(std::max(-1 + 1e-15, std::min(1 - 1e-15, t)));
    }
    auto v1 = run(std::move(lm), ustart);
    std::vector<double> lp(h);
    for (std::size_t i = 0; i < h; ++i)
      lp[i] = llr[h + i] + (v1[i] ? -llr[i] : llr[i]);
    auto v2 = run(std::move(lp), ustart + h);
    std::vector<std::uint8_t> x(m);
    for (std::size_t i = 0; i < h; ++i) {
      x[i] = v1[i] ^ v2[i];
      x[h + i] = v2[i];
    }
    return x;
  }
};

}  // namespace

std::optional<std::vector<std::uint8_t>> polar_sc_decode(
    std::size_t level, const std::vector<std::vector<std::uint8_t>>& bins,
    const std::vector<std::uint8_t>& y, const channels::ChannelSpec& chan,
    const std::vector<std::vector<std::uint32_t>>& sets) {
  if (level == 0 || level > sets.size())
    throw std::invalid_argument("nested_sc: level out of range");
  if (bins.size() < level)
    throw std::invalid_argument("nested_sc: missing bin levels");
  const std::size_t n = y.size();

  // Gather frozen positions (cumulative set) and their values from the
  // per-level increments.
  std::vector<std::uint32_t> frozen;
  std::vector<std::uint8_t> vals;
  std::vector<char> seen(n, 0);
  for (std::size_t l = 0; l < level; ++l) {
    std::vector<std::uint32_t> inc;
    for (auto i : sets[l])
      if (!seen[i]) {
        inc.push_back(i);
        seen[i] = 1;
      }
    for (std::size_t t = 0; t < inc.size(); ++t) {
      frozen.push_back(inc[t]);
      vals.push_back(std::uint8_t(unpack_bit(bins[l], t)));
    }
  }

  if (chan.kind == channels::Kind::bec) return bec_ml_decode(y, frozen, vals);

  std::vector<char> is_frozen(n, 0);
  std::vector<std::uint8_t> fv(n, 0);
  for (std::size_t t = 0; t < frozen.size(); ++t) {
    is_frozen[frozen[t]] = 1;
    fv[frozen[t]] = vals[t];
  }
  std::vector<double> llr(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p0 = chan.trans(0, y[i]), p1 = chan.trans(1, y[i]);
    llr[i] = std::log(std::max(p0, 1e-300)) - std::log(std::max(p1, 1e-300));
  }
  ScDecoder dec{is_frozen, fv, std::vector<std::uint8_t>(n, 0)};
  auto x = dec.run(std::move(llr), 0);
  return x;
}

// ------------------------------------------------------------- nested code

BinIndices NestedCode::encode(const std::vector<std::uint8_t>& x) const {
  if (backend == Backend::binning) return rb_encode(x, alloc, seed, alphabet);
  return polar_encode(x, sets);
}

std::optional<std::vector<std::uint8_t>> NestedCode::decode(
    std::size_t level, const std::vector<std::vector<std::uint8_t>>& bins,
    const std::vector<std::uint8_t>& y, const channels::ChannelSpec& chan) const {
  if (backend == Backend::binning)
    return rb_decode(level, bins, y, alloc, seed, chan);
  return polar_sc_decode(level, bins, y, chan, sets);
}

NestedCode make_nested_code(const channels::ChannelBank& bank,
                            const RateAllocation& alloc, std::uint64_t seed,
                            std::optional<Backend> forced) {
  NestedCode code;
  code.alloc = alloc;
  code.seed = seed;
  code.alphabet = bank.specs.front().input_size();
  for (const auto& s : bank.specs)
    if (s.input_size() != code.alphabet)
      throw std::invalid_argument("nested_sc: mixed input alphabets");

  const bool polar_ok = is_pow2(alloc.n_src) && code.alphabet == 2 &&
                        is_degraded_chain(bank);
  Backend chosen;
  if (forced) {
    chosen = *forced;
    if (chosen == Backend::polar && !polar_ok)
      throw std::invalid_argument(
          "nested_sc: polar backend needs a power-of-two block, binary input "
          "and a degraded chain");
  } else {
    chosen = polar_ok ? Backend::polar : Backend::binning;
  }
  if (chosen == Backend::binning) {
    double states = std::pow(double(code.alphabet), double(alloc.n_src));
    if (states > double(kBinningMaxStates))
      throw std::invalid_argument(
          "nested_sc: block too long for the binning oracle (reduce n_src or "
          "use the polar backend)");
  }
  code.backend = chosen;
  if (chosen == Backend::polar) {
    std::vector<std::vector<double>> profiles;
    for (const auto& s : bank.specs)
      profiles.push_back(polar_entropy_profile(s, alloc.n_src));
    // Weight-class ordering keeps the exact erasure decoder reliable at
    // desk-scale block lengths.
    code.sets = polar_select_sets(profiles, alloc, SelectRule::weight);
  }
  return code;
}

}  // namespace pirnsi::nested_sc
