#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "pirnsi/gf.hpp"
#include "pirnsi/rational.hpp"
#include "pirnsi/rng.hpp"

namespace pirnsi::pirquery {

// ------------------------------------------------------------------ counts

struct KsumCounts {
  std::uint64_t types = 0;
  std::uint64_t instances = 0;
};

/// C(K,k) types, (N-T)^(k-1) T^(K-k) instances per type and server.
KsumCounts ksum_counts(std::size_t n, std::size_t t, std::size_t k_files,
                       std::size_t k);

struct PCounts {
  std::uint64_t p1 = 0;
  std::uint64_t p2 = 0;
};

/// p1 = (N^K - T^K)/(N-T), p2 = T^(K-w) (N^w - T^w)/(N-T) with w known
/// files; exact integers, N = T handled by the limit form.
PCounts p_counts(std::size_t n, std::size_t t, std::size_t k_files,
                 std::size_t d_prefix);

// ---------------------------------------------------------------- database

/// One level's virtual database: K records over an N^K-position grid,
/// each position holding cell_bytes bytes of field symbols.
struct LevelDatabase {
  std::size_t level = 0;  // 1-based
  std::size_t n_pir = 0;
  std::size_t cell_bytes = 0;
  std::size_t record_bits = 0;  // content bits (the rest of the grid is padding)
  int field_bits = 8;
  std::vector<std::vector<std::uint8_t>> records;

  std::size_t files() const { return records.size(); }
  std::vector<std::uint8_t> serialize() const;
  static LevelDatabase deserialize(const std::vector<std::uint8_t>& bytes);
};

// ------------------------------------------------------------------- plans

struct SymbolRef {
  std::uint16_t file = 0;
  std::uint32_t pos = 0;
  std::uint8_t coeff = 1;
};

struct Sum {
  std::vector<SymbolRef> terms;  // sorted by file index
};

/// What one server sees: the sum list in canonical structure order plus
/// the removal flag. Serialization is canonical (audits compare it).
struct ServerPlan {
  std::uint16_t level = 0;
  std::uint16_t field_bits = 8;
  std::uint32_t p1 = 0;
  std::uint32_t p2 = 0;
  bool removal = false;
  std::vector<Sum> sums;

  std::vector<std::uint8_t> serialize() const;
  static ServerPlan deserialize(const std::vector<std::uint8_t>& bytes);
};

/// Client-side annotations for decoding one run.
struct QueryPlan {
  std::size_t level = 0;   // 1-based
  std::size_t target = 0;
  std::vector<std::size_t> known_files;
  std::size_t n_servers = 0;
  std::size_t n_files = 0;
  std::size_t n_pir = 0;
  std::vector<ServerPlan> servers;
  // per server, per sum: origin of the reused side sum for target sums
  // that contain undecoded non-target terms ((server, sum index)).
  std::vector<std::vector<std::optional<std::pair<std::uint32_t, std::uint32_t>>>>
      side_origin;
};

/// Sun-Jafar structure specialized for one target with redundancy removal
/// against the known files. T = 1 only.
QueryPlan build_level_queries_T1(std::size_t level, std::size_t target,
                                 const std::vector<std::size_t>& known_files,
                                 std::size_t n_servers, std::size_t n_files,
                                 int field_bits, Rng& rng);

/// Same construction with the per-file position permutations supplied by
/// the caller (audit enumeration / deterministic replay).
QueryPlan build_level_queries_T1_with_perms(
    std::size_t level, std::size_t target,
    const std::vector<std::size_t>& known_files, std::size_t n_servers,
    std::size_t n_files, int field_bits,
    const std::vector<std::vector<std::uint32_t>>& perms);

// ----------------------------------------------------------------- answers

struct LevelAnswer {
  std::size_t level = 0;
  std::size_t cell_bytes = 0;
  int field_bits = 8;
  std::vector<std::vector<std::vector<std::uint8_t>>> per_server;  // [server][cell]

  std::vector<std::uint8_t> serialize_one(std::size_t server) const;
};

/// Evaluate one server's answer: the requested sums, compressed to
/// p1 - p2 parity cells when removal is set.
std::vector<std::vector<std::uint8_t>> answer_one(const ServerPlan& plan,
                                                  const LevelDatabase& db);

/// All servers against replicated databases (in-process convenience).
LevelAnswer answer(const QueryPlan& plan, const LevelDatabase& db);

std::vector<std::vector<std::uint8_t>> parse_answer_frame(
    const std::vector<std::uint8_t>& bytes, std::size_t expect_cells);

// ------------------------------------------------------------------ decode

/// Everything the client learns at one level: per file, the resolved grid
/// cells (position -> cell bytes). The target resolves completely.
struct LevelSegments {
  std::map<std::size_t, std::map<std::uint32_t, std::vector<std::uint8_t>>> cells;
};

/// known_records: full grid records of the known files (for removal).
LevelSegments level_decode(
    const LevelAnswer& answers, const QueryPlan& plan,
    const std::map<std::size_t, std::vector<std::uint8_t>>& known_records);

// -------------------------------------------------------------- cost model

struct LevelCost {
  std::size_t level = 0;  // 1-based
  std::uint64_t p1 = 0;
  std::uint64_t p2 = 0;
  std::uint64_t symbols = 0;  // N (p1 - p2) grid cells downloaded
  Rat norm_bits;              // m_l-weighted, normalized by file bits
};

/// Paper-form per-level costs from the counts alone.
std::vector<LevelCost> structural_cost_model(std::size_t n, std::size_t t,
                                             std::size_t k_files,
                                             const std::vector<std::size_t>& d,
                                             const std::vector<std::size_t>& m,
                                             std::size_t n_src);

}  // namespace pirnsi::pirquery
