#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pirnsi/analysis.hpp"
#include "pirnsi/rng.hpp"

using namespace pirnsi;
using namespace pirnsi::analysis;

TEST_CASE("psi inverse") {
  CHECK(psi_inv(Rat(7, 3), 1) == Rat(1));
  CHECK(psi_inv(Rat(1), 5) == Rat(5));
  CHECK(psi_inv(Rat(1, 2), 3) == Rat(7, 4));
  CHECK(psi_inv(Rat(1, 2), 0) == Rat(0));
}

TEST_CASE("toy example capacities") {
  auto in = input_bec(1, 1, 2, {1, 1}, {Rat(1, 5), Rat(3, 5)});
  CHECK(capacity_metric1(in) == Rat(4, 5));
  auto m2 = capacity_metric2(in);
  CHECK(m2.c_star == Rat(3, 5));
  CHECK(m2.r[0] == Rat(2, 5));
  CHECK(m2.r[1] == Rat(4, 5));
}

TEST_CASE("no side information collapse") {
  // D=1, eps=1: psi^-1(T/N, K)
  auto in = input_bec(2, 1, 3, {3}, {Rat(1)});
  CHECK(capacity_metric1(in) == Rat(7, 4));  // 1 + 1/2 + 1/4
  auto in2 = input_bec(4, 2, 5, {5}, {Rat(1)});
  CHECK(capacity_metric1(in2) == psi_inv(Rat(1, 2), 5));
}

TEST_CASE("noiseless side information collapse") {
  // D=2, T=1, eps=(0,1): psi^-1(1/N, K-d1)
  const std::size_t n = 3, d1 = 2, k = 5;
  auto in = input_bec(n, 1, k, {d1, k - d1}, {Rat(0), Rat(1)});
  CHECK(capacity_metric1(in) == psi_inv(Rat(1, n), k - d1));
}

TEST_CASE("storage constraint collapse") {
  // T=1, D=M+1, d_i=1 for i<=M, eps_i = 1-r_i, eps_D=1:
  // sum_i (1-r_i)/N^(K-i) + psi^-1(1/N, K-M)
  const std::size_t n = 2, k = 5, m = 3;
  std::vector<Rat> r{Rat(9, 10), Rat(1, 2), Rat(1, 4)};
  std::vector<Rat> eps;
  std::vector<std::size_t> d;
  for (std::size_t i = 0; i < m; ++i) {
    eps.push_back(1 - r[i]);
    d.push_back(1);
  }
  eps.push_back(Rat(1));
  d.push_back(k - m);
  auto in = input_bec(n, 1, k, d, eps);
  auto npow = [&](std::size_t e) {
    Rat v = 1;
    for (std::size_t i = 0; i < e; ++i) v *= Rat(n);
    return v;
  };
  Rat expect = 0;
  for (std::size_t i = 1; i <= m; ++i)
    expect += (1 - r[i - 1]) / npow(k - i);  // (1-r_i)/N^{K-i}
  expect += psi_inv(Rat(1, n), k - m);
  CHECK(capacity_metric1(in) == expect);
}

TEST_CASE("noiseless regime r(1) is zero") {
  auto in = input_bec(3, 1, 4, {2, 2}, {Rat(0), Rat(1)});
  auto m2 = capacity_metric2(in);
  CHECK(m2.r[0] == Rat(0));
  CHECK(m2.r[1] == psi_inv(Rat(1, 3), 2));
}

TEST_CASE("d equals one collapse") {
  auto in = input_bec(2, 1, 3, {3}, {Rat(1, 3)});
  auto m2 = capacity_metric2(in);
  CHECK(m2.c_star == capacity_metric1(in));
}

TEST_CASE("bsc endpoints exact") {
  auto in = input_bsc(2, 1, 2, {1, 1}, {Rat(0), Rat(1, 2)});
  CHECK(in.h[0] == Rat(0));
  CHECK(in.h[1] == Rat(1));
}

TEST_CASE("unordered entropies rejected") {
  CHECK_THROWS_AS(input_bec(2, 1, 2, {1, 1}, {Rat(3, 5), Rat(1, 5)}),
                  std::invalid_argument);
  CHECK_THROWS_AS(input_bsc(2, 1, 2, {1, 1}, {Rat(2, 5), Rat(1, 5)}),
                  std::invalid_argument);
}

TEST_CASE("remark three sweep") {
  Rng rng(101);
  for (int t = 0; t < 10000; ++t) {
    CapacityInput in;
    in.n_servers = 1 + rng.below(5);
    in.t_colluding = 1 + rng.below(in.n_servers);
    const std::size_t dd = 1 + rng.below(4);
    Rat prev = 0;
    for (std::size_t l = 0; l < dd; ++l) {
      in.d.push_back(1 + rng.below(3));
      prev += Rat(rng.below(100), 99 * (l + 1) + 1);
      in.h.push_back(prev > 1 ? Rat(1) : prev);
    }
    in.k_files = 0;
    for (auto v : in.d) in.k_files += v;
    auto rep = compare_metrics(in);  // throws on any violation
    REQUIRE(rep.gap >= 0);
  }
}

TEST_CASE("equal entropies make every gap zero") {
  auto in = input_bec(3, 2, 4, {2, 2}, {Rat(2, 5), Rat(2, 5)});
  auto rep = compare_metrics(in);
  CHECK(rep.gap == 0);
  for (const auto& s : rep.slack_u) CHECK(s == 0);
}

TEST_CASE("toy gap value") {
  auto in = input_bec(1, 1, 2, {1, 1}, {Rat(1, 5), Rat(3, 5)});
  auto rep = compare_metrics(in);
  CHECK(rep.gap == Rat(1, 5));
}

TEST_CASE("achievability telescoping identity") {
  // Sum over l of (h_l - h_{l-1}) psi^-1(T/N, K - d_[l-1]) equals the
  // capacity formula.
  Rng rng(7);
  for (int t = 0; t < 300; ++t) {
    CapacityInput in;
    in.n_servers = 1 + rng.below(4);
    in.t_colluding = 1 + rng.below(in.n_servers);
    const std::size_t dd = 1 + rng.below(3);
    Rat prev = 0;
    for (std::size_t l = 0; l < dd; ++l) {
      in.d.push_back(1 + rng.below(3));
      prev += Rat(1 + rng.below(50), 200);
      in.h.push_back(prev > 1 ? Rat(1) : prev);
    }
    in.k_files = 0;
    for (auto v : in.d) in.k_files += v;
    const Rat x(in.t_colluding, in.n_servers);
    Rat sum = 0, hprev = 0;
    std::size_t dprev = 0;
    for (std::size_t l = 0; l < dd; ++l) {
      sum += (in.h[l] - hprev) * psi_inv(x, in.k_files - dprev);
      hprev = in.h[l];
      dprev += in.d[l];
    }
    REQUIRE(sum == capacity_metric1(in));
  }
}

TEST_CASE("monotone in entropy and in t") {
  auto base = input_bec(4, 2, 3, {1, 2}, {Rat(1, 4), Rat(1, 2)});
  auto c0 = capacity_metric1(base);
  auto bumped = input_bec(4, 2, 3, {1, 2}, {Rat(1, 4), Rat(3, 4)});
  CHECK(capacity_metric1(bumped) > c0);
  auto more_t = input_bec(4, 3, 3, {1, 2}, {Rat(1, 4), Rat(1, 2)});
  CHECK(capacity_metric1(more_t) > c0);
}

TEST_CASE("theory vs measured attribution") {
  auto in = input_bec(2, 1, 2, {1, 1}, {Rat(1, 5), Rat(3, 5)});
  // Perfect measurements equal the per-level closed form; slack zero.
  std::vector<Rat> net{Rat(1, 5) * Rat(3, 2), Rat(2, 5)};
  auto tab = theory_vs_measured(net, in, Rat(0), 1, 0);
  CHECK(tab.slack_total == 0);
  for (auto& row : tab.rows) CHECK(row.slack == 0);
  CHECK(tab.theory_total == capacity_metric1(in));
  // Metric 2 stopping at level 1.
  auto tab2 = theory_vs_measured({Rat(3, 10)}, in, Rat(0), 2, 1);
  CHECK(tab2.theory_total == r_of_u(in, 1));
  CHECK(tab2.slack_total == 0);
}
