#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pirnsi/channels.hpp"
#include "pirnsi/nested_sc.hpp"
#include "pirnsi/pirquery.hpp"
#include "pirnsi/rational.hpp"

namespace pirnsi::protocol {

/// All public protocol parameters.
struct Instance {
  std::size_t n_servers = 2;
  std::size_t t_colluding = 1;
  std::size_t k_files = 2;
  std::vector<std::size_t> d;  // files per level, sums to K
  channels::ChannelBank bank;
  std::size_t n_src = 1024;
  double delta = 0.05;
  int field_bits = 0;  // 0 = auto (8, escalated to 16 when the code needs it)
  std::optional<nested_sc::Backend> backend;
  std::uint64_t seed = 0;

  std::size_t levels() const { return d.size(); }
  void validate() const;
  int resolve_field_bits() const;
};

/// Byte layout of one level's database record. Records carry the level's
/// bin increment plus parity symbols that restore whatever fraction of the
/// lower-level records the query structure cannot hand to every file.
struct RecordLayout {
  std::size_t s_syms = 0;       // 16-bit symbols holding the bin increment
  std::size_t pi_syms = 0;      // parity symbols over the lower records
  std::size_t msg_syms = 0;     // systematic length of the parity code
  std::size_t cell_syms = 0;
  std::size_t cell_bytes = 0;
  std::size_t padded_syms = 0;  // n_pir * cell_syms
  std::size_t content_bits = 0; // 16 * (s_syms + pi_syms)
  std::size_t deliv_cells = 0;  // cells guaranteed to reach untargeted files
};

struct World {
  Instance inst;
  channels::Mapping mapping;
  nested_sc::RateAllocation alloc;
  nested_sc::NestedCode code;
  std::vector<std::vector<std::uint8_t>> files;      // K x n_src
  std::vector<std::vector<std::uint8_t>> side_info;  // K x n_src
  std::vector<RecordLayout> layout;                  // D
  std::vector<pirquery::LevelDatabase> databases;    // D, replicated
  std::size_t n_pir = 0;
  int field_bits = 8;
};

World setup(const Instance& inst);

/// Per-level bit-exact records of one file (used at setup for every file
/// and by the client to re-encode decoded files).
std::vector<std::vector<std::uint8_t>> build_records(
    const std::vector<std::uint8_t>& x, const nested_sc::NestedCode& code,
    const std::vector<RecordLayout>& layout, std::size_t n_pir);

struct RunCost {
  std::size_t level = 0;  // 1-based
  std::size_t run = 0;
  std::size_t knowns = 0;
  std::uint64_t cells = 0;       // grid cells downloaded over all servers
  std::uint64_t gross_bits = 0;  // cells * cell bits
  Rat net_bits;                  // gross minus grid padding
};

struct CostReport {
  int metric = 1;
  std::size_t z = 0;
  std::size_t z_level = 0;         // M(z), 1-based
  std::size_t levels_executed = 0;
  std::vector<RunCost> runs;
  std::vector<Rat> net_per_level;  // normalized, indexed by level-1
  Rat net_normalized;
  Rat gross_normalized;
  std::uint64_t query_bytes = 0;
  std::uint64_t answer_bytes = 0;  // canonical answer frames
  std::string transcript_digest;   // sha256 over plans and answers
};

struct Retrieval {
  std::vector<std::uint8_t> x_hat;
  CostReport report;
};

/// One query-structure run: the level's plan specialization inputs.
struct RunSpec {
  std::size_t level = 0;  // 1-based
  std::size_t run = 0;
  std::size_t target = 0;
  std::vector<std::size_t> knowns;
};

/// The level/run/target schedule a retrieval executes. Audits replay it.
std::vector<RunSpec> run_schedule(const Instance& inst,
                                  const channels::Mapping& mapping,
                                  std::size_t z, int metric);

/// Answer transport: in-process by default, sockets in the net module.
using AnswerFn =
    std::function<pirquery::LevelAnswer(const pirquery::QueryPlan&)>;

Retrieval retrieve_metric1(const World& world, std::size_t z);
Retrieval retrieve_metric2(const World& world, std::size_t z);
Retrieval retrieve_with_transport(const World& world, std::size_t z, int metric,
                                  const AnswerFn& fetch);

struct Measure {
  Rat net_normalized;
  Rat gross_normalized;
  std::vector<Rat> net_per_level;
};

Measure measure(const CostReport& report, const Instance& inst);

/// JSON transcript fixture (instance, seed, z, digests, costs).
std::string transcript_json(const World& world, const CostReport& report);

}  // namespace pirnsi::protocol
