#pragma once

#include <cstddef>
#include <vector>

#include "pirnsi/rational.hpp"

namespace pirnsi::analysis {

/// Everything the download-cost formulas depend on. Entropies may come
/// from channel specs or be supplied directly; they must be ascending.
struct CapacityInput {
  std::size_t n_servers = 1;   // N
  std::size_t t_colluding = 1; // T
  std::size_t k_files = 1;     // K
  std::vector<std::size_t> d;  // files per level, sums to K
  std::vector<Rat> h;          // H(X|Y_l) in bits per level

  std::size_t levels() const { return d.size(); }
  void validate() const;
};

/// 1 + A + A^2 + ... + A^(B-1); exact, with the empty-sum convention.
Rat psi_inv(const Rat& a, std::size_t b);

/// Optimal normalized download cost, side-information statistics of the
/// desired file undisclosed.
Rat capacity_metric1(const CapacityInput& in);

/// Cost of a run that stops after level u (1-based), statistics disclosed.
Rat r_of_u(const CapacityInput& in, std::size_t u);

struct Metric2Result {
  Rat c_star;
  std::vector<Rat> r;  // R(u) for u = 1..D
};

/// Expected cost over U with P[U=u] = d_u/K, plus the per-u table. The
/// closed form and the expectation are computed independently and must
/// agree.
Metric2Result capacity_metric2(const CapacityInput& in);

CapacityInput input_bec(std::size_t n, std::size_t t, std::size_t k,
                        std::vector<std::size_t> d, std::vector<Rat> eps);
CapacityInput input_bsc(std::size_t n, std::size_t t, std::size_t k,
                        std::vector<std::size_t> d, std::vector<Rat> p);

struct GapReport {
  Rat c;
  Rat c_star;
  Rat gap;                  // c - c_star, always >= 0
  std::vector<Rat> slack_u; // c - R(u) per u, each >= 0
};

GapReport compare_metrics(const CapacityInput& in);

/// Theory-vs-measurement decomposition for one retrieval run.
struct SlackRow {
  std::size_t level = 0;      // 1-based
  Rat measured;               // net normalized download for the level
  Rat theory;                 // paper closed form at delta = 0
  Rat slack;                  // measured - theory
};

struct SlackTable {
  std::vector<SlackRow> rows;
  Rat measured_total;
  Rat theory_total;           // C (metric 1) or R(u) (metric 2)
  Rat slack_total;
  Rat delta_bound;            // per-level slack budget from the rate slack
};

/// measured_net[l] = net normalized download attributed to level l+1.
SlackTable theory_vs_measured(const std::vector<Rat>& measured_net,
                              const CapacityInput& in, const Rat& delta,
                              int metric, std::size_t u);

}  // namespace pirnsi::analysis
