#include "pirnsi/analysis.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pirnsi::analysis {

namespace {

// d_{[i:j]} with 1-based inclusive bounds, 0 when i > j.
std::size_t d_range(const CapacityInput& in, std::size_t i, std::size_t j) {
  std::size_t s = 0;
  for (std::size_t t = i; t <= j && t >= 1; ++t) s += in.d[t - 1];
  return s;
}

Rat pow_rat(const Rat& a, std::size_t e) {
  Rat r = 1;
  for (std::size_t i = 0; i < e; ++i) r *= a;
  return r;
}

}  // namespace

void CapacityInput::validate() const {
  if (n_servers == 0 || t_colluding == 0)
    throw std::invalid_argument("analysis: N and T must be >= 1");
  if (t_colluding > n_servers)
    throw std::invalid_argument("analysis: T must be <= N");
  if (d.empty() || d.size() != h.size())
    throw std::invalid_argument("analysis: d and h must be nonempty and equal length");
  std::size_t sum = 0;
  for (auto v : d) {
    if (v == 0) throw std::invalid_argument("analysis: every d_i must be >= 1");
    sum += v;
  }
  if (sum != k_files)
    throw std::invalid_argument("analysis: sum of d must equal K");
  for (std::size_t i = 0; i + 1 < h.size(); ++i)
    if (h[i] > h[i + 1])
      throw std::invalid_argument("analysis: entropies must be ascending");
  for (const auto& v : h)
    if (v < 0) throw std::invalid_argument("analysis: negative entropy");
}

Rat psi_inv(const Rat& a, std::size_t b) {
  Rat s = 0, term = 1;
  for (std::size_t i = 0; i < b; ++i) {
    s += term;
    term *= a;
  }
  return s;
}

Rat capacity_metric1(const CapacityInput& in) {
  in.validate();
  const Rat x(in.t_colluding, in.n_servers);
  const std::size_t dd = in.levels();
  Rat c = 0;
  for (std::size_t l = 1; l <= dd; ++l)
    c += in.h[l - 1] * pow_rat(x, d_range(in, l + 1, dd)) * psi_inv(x, in.d[l - 1]);
  return c;
}

Rat r_of_u(const CapacityInput& in, std::size_t u) {
  in.validate();
  const std::size_t dd = in.levels();
  if (u < 1 || u > dd) throw std::invalid_argument("analysis: u out of range");
  const Rat x(in.t_colluding, in.n_servers);
  Rat r = 0;
  for (std::size_t l = 1; l < u; ++l)
    r += in.h[l - 1] * pow_rat(x, d_range(in, l + 1, dd)) * psi_inv(x, in.d[l - 1]);
  r += in.h[u - 1] * psi_inv(x, d_range(in, u, dd));
  return r;
}

Metric2Result capacity_metric2(const CapacityInput& in) {
  in.validate();
  const std::size_t dd = in.levels();
  const Rat x(in.t_colluding, in.n_servers);

  Metric2Result out;
  Rat expect = 0;
  for (std::size_t u = 1; u <= dd; ++u) {
    out.r.push_back(r_of_u(in, u));
    expect += Rat(in.d[u - 1], in.k_files) * out.r.back();
  }
  // Independent closed form; the two must agree exactly.
  Rat closed = 0;
  for (std::size_t l = 1; l <= dd; ++l) {
    const std::size_t tail = d_range(in, l + 1, dd);
    closed += in.h[l - 1] *
              (Rat(tail) * pow_rat(x, tail) * psi_inv(x, in.d[l - 1]) +
               Rat(in.d[l - 1]) * psi_inv(x, d_range(in, l, dd)));
  }
  closed /= Rat(in.k_files);
  if (closed != expect)
    throw std::logic_error("analysis: metric-2 closed form disagrees with expectation");
  out.c_star = expect;
  return out;
}

CapacityInput input_bec(std::size_t n, std::size_t t, std::size_t k,
                        std::vector<std::size_t> d, std::vector<Rat> eps) {
  CapacityInput in;
  in.n_servers = n;
  in.t_colluding = t;
  in.k_files = k;
  in.d = std::move(d);
  for (const auto& e : eps) {
    if (e < 0 || e > 1)
      throw std::invalid_argument("analysis: BEC parameter out of [0,1]");
    in.h.push_back(e);
  }
  in.validate();
  return in;
}

CapacityInput input_bsc(std::size_t n, std::size_t t, std::size_t k,
                        std::vector<std::size_t> d, std::vector<Rat> p) {
  CapacityInput in;
  in.n_servers = n;
  in.t_colluding = t;
  in.k_files = k;
  in.d = std::move(d);
  for (const auto& pi : p) {
    if (pi < 0 || pi * 2 > 1)
      throw std::invalid_argument("analysis: BSC parameter out of [0,1/2]");
    if (pi == 0)
      in.h.push_back(Rat(0));
    else if (pi * 2 == 1)
      in.h.push_back(Rat(1));
    else {
      const double pd = rat_to_double(pi);
      in.h.push_back(rat_from_double(-pd * std::log2(pd) -
                                     (1 - pd) * std::log2(1 - pd)));
    }
  }
  in.validate();
  return in;
}

GapReport compare_metrics(const CapacityInput& in) {
  GapReport rep;
  rep.c = capacity_metric1(in);
  auto m2 = capacity_metric2(in);
  rep.c_star = m2.c_star;
  rep.gap = rep.c - rep.c_star;
  if (rep.gap < 0) throw std::logic_error("analysis: C < C*");
  for (std::size_t u = 1; u <= in.levels(); ++u) {
    rep.slack_u.push_back(rep.c - m2.r[u - 1]);
    if (rep.slack_u.back() < 0) throw std::logic_error("analysis: C < R(u)");
  }
  return rep;
}

SlackTable theory_vs_measured(const std::vector<Rat>& measured_net,
                              const CapacityInput& in, const Rat& delta,
                              int metric, std::size_t u) {
  in.validate();
  const std::size_t dd = in.levels();
  const std::size_t last = metric == 2 ? u : dd;
  if (metric == 2 && (u < 1 || u > dd))
    throw std::invalid_argument("analysis: u out of range");
  if (measured_net.size() < last)
    throw std::invalid_argument("analysis: missing per-level measurements");
  const Rat x(in.t_colluding, in.n_servers);

  SlackTable tab;
  tab.measured_total = 0;
  tab.delta_bound = 0;
  // Per-level theory at delta = 0: (h_l - h_{l-1}) * Psi^-1(T/N, K - d_[l-1]).
  Rat hprev = 0;
  std::size_t dprev = 0;
  for (std::size_t l = 1; l <= last; ++l) {
    SlackRow row;
    row.level = l;
    row.measured = measured_net[l - 1];
    row.theory = (in.h[l - 1] - hprev) * psi_inv(x, in.k_files - dprev);
    row.slack = row.measured - row.theory;
    tab.measured_total += row.measured;
    tab.delta_bound += delta * psi_inv(x, in.k_files - dprev);
    tab.rows.push_back(row);
    hprev = in.h[l - 1];
    dprev += in.d[l - 1];
  }
  tab.theory_total = metric == 2 ? r_of_u(in, u) : capacity_metric1(in);
  tab.slack_total = tab.measured_total - tab.theory_total;
  return tab;
}

}  // namespace pirnsi::analysis
