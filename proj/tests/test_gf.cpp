#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "pirnsi/gf.hpp"
#include "pirnsi/rng.hpp"

using namespace pirnsi;
using namespace pirnsi::gf;

namespace {

// Independent multiply: carry-less product then polynomial reduction.
symbol ref_mul(symbol a, symbol b, std::uint32_t poly, int bits) {
  std::uint64_t acc = 0;
  for (int i = 0; i < bits; ++i)
    if ((b >> i) & 1) acc ^= std::uint64_t(a) << i;
  for (int i = 2 * bits - 2; i >= bits; --i)
    if ((acc >> i) & 1) acc ^= std::uint64_t(poly) << (i - bits);
  return symbol(acc);
}

// Minor check: are the given rows of [V | I]^T linearly independent?
bool rows_invertible(const MdsParity& par, const std::vector<std::size_t>& rows) {
  const std::size_t p1 = par.p1, np = par.p1 - par.p2;
  const auto& f = *par.field;
  std::vector<std::vector<symbol>> m;
  for (std::size_t r : rows) {
    std::vector<symbol> row(p1, 0);
    if (r < np) {
      for (std::size_t i = 0; i < p1; ++i) row[i] = par.at(i, r);
    } else {
      row[r - np] = 1;
    }
    m.push_back(std::move(row));
  }
  std::size_t rank = 0;
  for (std::size_t col = 0; col < p1 && rank < m.size(); ++col) {
    std::size_t piv = rank;
    while (piv < m.size() && m[piv][col] == 0) ++piv;
    if (piv == m.size()) continue;
    std::swap(m[piv], m[rank]);
    for (std::size_t r = 0; r < m.size(); ++r) {
      if (r == rank || m[r][col] == 0) continue;
      const symbol c = f.div(m[r][col], m[rank][col]);
      for (std::size_t cc = col; cc < p1; ++cc)
        m[r][cc] = f.add(m[r][cc], f.mul(c, m[rank][cc]));
    }
    ++rank;
  }
  return rank == m.size();
}

void check_all_minors(const MdsParity& par) {
  const std::size_t n_code = 2 * par.p1 - par.p2;
  // enumerate all p1-subsets of [n_code]
  std::vector<std::size_t> idx(par.p1);
  for (std::size_t i = 0; i < par.p1; ++i) idx[i] = i;
  while (true) {
    REQUIRE(rows_invertible(par, idx));
    std::size_t i = par.p1;
    while (i-- > 0) {
      if (idx[i] + (par.p1 - i) < n_code + 0) {
        ++idx[i];
        for (std::size_t j = i + 1; j < par.p1; ++j) idx[j] = idx[j - 1] + 1;
        break;
      }
      if (i == 0) return;
    }
  }
}

}  // namespace

TEST_CASE("field width bounds") {
  CHECK_THROWS_AS(Field(1), std::invalid_argument);
  CHECK_THROWS_AS(Field(17), std::invalid_argument);
  CHECK(Field(8).order() == 256);
  CHECK(Field(8).poly() == 0x11B);
}

TEST_CASE("aes field inverse pair") {
  auto f = field_new(8);
  CHECK(f->mul(0x53, 0xCA) == 0x01);
  CHECK(ref_mul(0x53, 0xCA, 0x11B, 8) == 0x01);
}

TEST_CASE("table multiply matches carry-less reference") {
  for (int b : {2, 3, 4, 8}) {
    auto f = field_new(b);
    Rng rng(42 + b);
    const std::uint32_t q = f->order();
    for (int t = 0; t < 4000; ++t) {
      symbol a = symbol(rng.below(q)), c = symbol(rng.below(q));
      CHECK(f->mul(a, c) == ref_mul(a, c, f->poly(), b));
    }
  }
}

TEST_CASE("field axioms exhaustive b=8") {
  auto f = field_new(8);
  const std::uint32_t q = f->order();
  for (symbol a = 0; a < q; ++a)
    for (symbol b = 0; b < q; ++b)
      REQUIRE(f->mul(a, b) == f->mul(b, a));
  for (symbol a = 1; a < q; ++a) REQUIRE(f->mul(a, f->inv(a)) == 1);
  Rng rng(7);
  for (int t = 0; t < 20000; ++t) {
    symbol a = symbol(rng.below(q)), b = symbol(rng.below(q)), c = symbol(rng.below(q));
    REQUIRE(f->mul(a, f->add(b, c)) == f->add(f->mul(a, b), f->mul(a, c)));
  }
}

TEST_CASE("log antilog tables consistent for all widths") {
  for (int b = 2; b <= 16; ++b) {
    auto f = field_new(b);
    const std::uint32_t q = f->order();
    // alpha^i enumerates all nonzero elements exactly once
    std::vector<char> seen(q, 0);
    symbol x = 1;
    for (std::uint32_t i = 0; i < q - 1; ++i) {
      REQUIRE(!seen[x]);
      seen[x] = 1;
      x = f->mul(x, f->generator());
    }
    CHECK(x == 1);
  }
}

TEST_CASE("mds parity shapes and minors") {
  auto f = field_new(8);
  SUBCASE("3x3 full") {
    auto par = mds_parity(3, 0, f);
    CHECK(par.v.size() == 9);
    check_all_minors(par);
  }
  SUBCASE("degenerate 1x1") {
    auto par = mds_parity(1, 0, f);
    REQUIRE(par.v.size() == 1);
    CHECK(par.v[0] != 0);
  }
  SUBCASE("3x2") {
    auto par = mds_parity(3, 1, f);
    CHECK(par.v.size() == 6);
    check_all_minors(par);
  }
  SUBCASE("random sizes p1<=8") {
    Rng rng(1);
    for (int t = 0; t < 12; ++t) {
      std::size_t p1 = 1 + rng.below(8);
      std::size_t p2 = rng.below(p1);
      check_all_minors(mds_parity(p1, p2, f));
    }
  }
}

TEST_CASE("field too small is rejected") {
  auto f = field_new(2);  // order 4 -> max code length 3
  CHECK_THROWS_AS(mds_parity(4, 0, f), std::invalid_argument);
  CHECK_NOTHROW(mds_parity(16, 0, field_new(8)));
}

TEST_CASE("mds encode") {
  auto f = field_new(8);
  auto par = mds_parity(3, 1, f);
  SUBCASE("zeros") {
    std::vector<symbol> u(3, 0);
    auto p = mds_encode(par, u);
    CHECK(p == std::vector<symbol>(2, 0));
  }
  SUBCASE("matches lagrange interpolation oracle") {
    // parity_j = P(alpha^j) where P interpolates u over the systematic points
    Rng rng(3);
    const std::size_t np = 2;
    for (int t = 0; t < 50; ++t) {
      std::vector<symbol> u(3);
      for (auto& v : u) v = symbol(rng.below(256));
      auto p = mds_encode(par, u);
      for (std::size_t j = 0; j < np; ++j) {
        symbol pt = f->alpha_pow(j), acc = 0;
        for (std::size_t i = 0; i < 3; ++i) {
          symbol li = 1;
          for (std::size_t k = 0; k < 3; ++k) {
            if (k == i) continue;
            li = f->mul(li, f->div(f->add(pt, f->alpha_pow(np + k)),
                                   f->add(f->alpha_pow(np + i), f->alpha_pow(np + k))));
          }
          acc = f->add(acc, f->mul(li, u[i]));
        }
        REQUIRE(p[j] == acc);
      }
    }
  }
  SUBCASE("empty parity when everything is known") {
    auto par2 = mds_parity(3, 3, f);
    std::vector<symbol> u{1, 2, 3};
    CHECK(mds_encode(par2, u).empty());
  }
  SUBCASE("length mismatch") {
    std::vector<symbol> u(4, 0);
    CHECK_THROWS_AS(mds_encode(par, u), std::invalid_argument);
  }
}

TEST_CASE("mds recover") {
  auto f = field_new(8);
  Rng rng(9);
  SUBCASE("p2=0 solves from parity alone") {
    auto par = mds_parity(4, 0, f);
    std::vector<symbol> u(4);
    for (auto& v : u) v = symbol(rng.below(256));
    auto rec = mds_recover(par, {}, mds_encode(par, u));
    CHECK(rec == u);
  }
  SUBCASE("round trip with arbitrary known positions") {
    for (int t = 0; t < 60; ++t) {
      std::size_t p1 = 2 + rng.below(7), p2 = rng.below(p1);
      auto par = mds_parity(p1, p2, f);
      std::vector<symbol> u(p1);
      for (auto& v : u) v = symbol(rng.below(256));
      auto parity = mds_encode(par, u);
      auto perm = rng.permutation(p1);
      std::vector<std::pair<std::size_t, symbol>> known;
      for (std::size_t i = 0; i < p2; ++i) known.push_back({perm[i], u[perm[i]]});
      CHECK(mds_recover(par, known, parity) == u);
    }
  }
  SUBCASE("corrupted parity detected with redundant knowns") {
    auto par = mds_parity(4, 2, f);
    std::vector<symbol> u{10, 20, 30, 40};
    auto parity = mds_encode(par, u);
    parity[0] = f->add(parity[0], 1);
    // supply three knowns: the system is overdetermined and inconsistent
    std::vector<std::pair<std::size_t, symbol>> known{{0, 10}, {1, 20}, {2, 30}};
    CHECK_THROWS_AS(mds_recover(par, known, parity), std::runtime_error);
    // with exactly p2 knowns the square system resolves to a *different* u
    std::vector<std::pair<std::size_t, symbol>> exact{{0, 10}, {1, 20}};
    auto rec = mds_recover(par, exact, parity);
    CHECK(rec != u);
    CHECK(mds_encode(par, rec) == parity);
  }
}
