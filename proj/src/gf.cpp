#include "pirnsi/gf.hpp"

#include <stdexcept>
#include <string>

namespace pirnsi::gf {

namespace {

// Published reducing polynomials, top bit included. 0x11B (the AES
// polynomial) for b=8; the rest are the usual low-weight choices.
constexpr std::uint32_t kPoly[17] = {
    0,      0,      0x7,    0xB,     0x13,   0x25,   0x43,    0x89,
    0x11B,  0x211,  0x409,  0x805,   0x1053, 0x201B, 0x4443,  0x8003,
    0x1100B};

symbol slow_mul(symbol a, symbol b, std::uint32_t poly, int bits) {
  std::uint64_t acc = 0, aa = a;
  for (int i = 0; i < bits; ++i)
    if ((b >> i) & 1) acc ^= aa << i;
  for (int i = 2 * bits - 2; i >= bits; --i)
    if ((acc >> i) & 1) acc ^= std::uint64_t(poly) << (i - bits);
  return symbol(acc);
}

std::uint32_t element_order(symbol g, std::uint32_t poly, int bits) {
  symbol x = g;
  std::uint32_t ord = 1;
  while (x != 1) {
    x = slow_mul(x, g, poly, bits);
    ++ord;
    if (ord > (std::uint32_t(1) << bits)) return 0;  // not invertible
  }
  return ord;
}

}  // namespace

Field::Field(int bits) : bits_(bits) {
  if (bits < 2 || bits > 16)
    throw std::invalid_argument("gf: field width must be in [2,16], got " +
                                std::to_string(bits));
  poly_ = kPoly[bits];
  const std::uint32_t q = order();
  // Smallest primitive element for the published polynomial (alpha=2 for
  // primitive polynomials, alpha=3 for the AES polynomial).
  alpha_ = 0;
  for (symbol g = 2; g < q; ++g) {
    if (element_order(g, poly_, bits_) == q - 1) {
      alpha_ = g;
      break;
    }
  }
  if (alpha_ == 0) throw std::logic_error("gf: no primitive element found");
  exp_.assign(q - 1, 0);
  log_.assign(q, 0);
  symbol x = 1;
  for (std::uint32_t i = 0; i < q - 1; ++i) {
    exp_[i] = x;
    log_[x] = i;
    x = slow_mul(x, alpha_, poly_, bits_);
  }
}

symbol Field::inv(symbol a) const {
  if (a == 0) throw std::invalid_argument("gf: inverse of zero");
  return exp_[(order() - 1 - log_[a]) % (order() - 1)];
}

FieldPtr field_new(int bits) { return std::make_shared<Field>(bits); }

MdsParity mds_parity(std::size_t p1, std::size_t p2, FieldPtr field) {
  if (!field) throw std::invalid_argument("gf: null field");
  if (p1 == 0 || p2 > p1)
    throw std::invalid_argument("gf: need 0 <= p2 <= p1, p1 >= 1");
  const std::size_t n_code = 2 * p1 - p2;
  // Points alpha^0..alpha^(n_code-1) must be distinct.
  if (n_code > field->order() - 1)
    throw std::invalid_argument(
        "gf: code length " + std::to_string(n_code) +
        " exceeds field capacity; use a wider field (larger b)");

  const std::size_t np = p1 - p2;
  std::vector<symbol> ppts(np), spts(p1);
  for (std::size_t j = 0; j < np; ++j) ppts[j] = field->alpha_pow(j);
  for (std::size_t i = 0; i < p1; ++i) spts[i] = field->alpha_pow(np + i);

  // Barycentric weights w_i = prod_{k != i} (s_i - s_k).
  std::vector<symbol> w(p1, 1);
  for (std::size_t i = 0; i < p1; ++i)
    for (std::size_t k = 0; k < p1; ++k)
      if (k != i) w[i] = field->mul(w[i], field->sub(spts[i], spts[k]));

  MdsParity par;
  par.p1 = p1;
  par.p2 = p2;
  par.field = field;
  par.v.assign(p1 * np, 0);
  for (std::size_t j = 0; j < np; ++j) {
    symbol t = 1;  // prod_k (px_j - s_k)
    for (std::size_t k = 0; k < p1; ++k) t = field->mul(t, field->sub(ppts[j], spts[k]));
    for (std::size_t i = 0; i < p1; ++i) {
      const symbol denom = field->mul(field->sub(ppts[j], spts[i]), w[i]);
      par.v[i * np + j] = field->mul(t, field->inv(denom));
    }
  }
  return par;
}

std::vector<symbol> mds_encode(const MdsParity& par, std::span<const symbol> u) {
  if (u.size() != par.p1)
    throw std::invalid_argument("gf: mds_encode expects " + std::to_string(par.p1) +
                                " symbols, got " + std::to_string(u.size()));
  const std::size_t np = par.p1 - par.p2;
  std::vector<symbol> out(np, 0);
  for (std::size_t i = 0; i < par.p1; ++i) {
    if (u[i] == 0) continue;
    for (std::size_t j = 0; j < np; ++j)
      out[j] = par.field->add(out[j], par.field->mul(par.at(i, j), u[i]));
  }
  return out;
}

std::vector<symbol> mds_recover(
    const MdsParity& par,
    const std::vector<std::pair<std::size_t, symbol>>& known,
    std::span<const symbol> parity) {
  const std::size_t np = par.p1 - par.p2;
  if (parity.size() != np)
    throw std::invalid_argument("gf: parity length mismatch");
  if (known.size() < par.p2)
    throw std::invalid_argument("gf: need at least p2 known symbols");

  std::vector<int> have(par.p1, 0);
  std::vector<symbol> u(par.p1, 0);
  for (auto& [pos, val] : known) {
    if (pos >= par.p1) throw std::invalid_argument("gf: known position out of range");
    if (have[pos] && u[pos] != val)
      throw std::runtime_error("gf: conflicting known symbols (corruption)");
    have[pos] = 1;
    u[pos] = val;
  }
  std::vector<std::size_t> miss;
  for (std::size_t i = 0; i < par.p1; ++i)
    if (!have[i]) miss.push_back(i);
  const std::size_t m = miss.size();
  if (m > np) throw std::invalid_argument("gf: too few knowns to recover");

  // Equations j: sum_{i in miss} V[i][j] x_i = parity_j - sum_known V[i][j] u_i
  const auto& f = *par.field;
  std::vector<std::vector<symbol>> a(np, std::vector<symbol>(m + 1, 0));
  for (std::size_t j = 0; j < np; ++j) {
    symbol rhs = parity[j];
    for (std::size_t i = 0; i < par.p1; ++i)
      if (have[i] && u[i]) rhs = f.add(rhs, f.mul(par.at(i, j), u[i]));
    for (std::size_t t = 0; t < m; ++t) a[j][t] = par.at(miss[t], j);
    a[j][m] = rhs;
  }
  // Gaussian elimination; the MDS property makes the first m rows usable,
  // leftover rows become consistency checks.
  std::size_t row = 0;
  for (std::size_t col = 0; col < m; ++col) {
    std::size_t piv = row;
    while (piv < np && a[piv][col] == 0) ++piv;
    if (piv == np) throw std::runtime_error("gf: singular recovery system (corruption)");
    std::swap(a[piv], a[row]);
    const symbol ipiv = f.inv(a[row][col]);
    for (std::size_t c = col; c <= m; ++c) a[row][c] = f.mul(a[row][c], ipiv);
    for (std::size_t r = 0; r < np; ++r) {
      if (r == row || a[r][col] == 0) continue;
      const symbol factor = a[r][col];
      for (std::size_t c = col; c <= m; ++c)
        a[r][c] = f.add(a[r][c], f.mul(factor, a[row][c]));
    }
    ++row;
  }
  for (std::size_t r = row; r < np; ++r)
    if (a[r][m] != 0)
      throw std::runtime_error("gf: inconsistent recovery inputs (corruption)");
  for (std::size_t t = 0; t < m; ++t) u[miss[t]] = a[t][m];
  return u;
}

}  // namespace pirnsi::gf
