#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "pirnsi/pirquery.hpp"

using namespace pirnsi;
using namespace pirnsi::pirquery;

namespace {

// Brute-force k-sum grid: count subsets and instances directly.
std::uint64_t enum_types(std::size_t k_files, std::size_t k) {
  std::uint64_t c = 0;
  for (std::uint32_t mask = 0; mask < (1u << k_files); ++mask)
    c += std::uint32_t(std::popcount(mask)) == k;
  return c;
}

LevelDatabase random_db(std::size_t level, std::size_t k_files, std::size_t n_pir,
                        std::size_t cell_bytes, Rng& rng) {
  LevelDatabase db;
  db.level = level;
  db.n_pir = n_pir;
  db.cell_bytes = cell_bytes;
  db.record_bits = n_pir * cell_bytes * 8;
  db.field_bits = 8;
  for (std::size_t f = 0; f < k_files; ++f) {
    std::vector<std::uint8_t> r(n_pir * cell_bytes);
    for (auto& b : r) b = std::uint8_t(rng.below(256));
    db.records.push_back(std::move(r));
  }
  return db;
}

Rat rat_pow(const Rat& a, std::size_t e) {
  Rat r = 1;
  for (std::size_t i = 0; i < e; ++i) r *= a;
  return r;
}

// Independent evaluator: resolve a sum by direct lookup, no field tables.
std::vector<std::uint8_t> naive_eval(const Sum& s, const LevelDatabase& db) {
  std::vector<std::uint8_t> acc(db.cell_bytes, 0);
  for (const auto& t : s.terms) {
    REQUIRE(t.coeff == 1);
    for (std::size_t b = 0; b < db.cell_bytes; ++b)
      acc[b] ^= db.records[t.file][t.pos * db.cell_bytes + b];
  }
  return acc;
}

}  // namespace

TEST_CASE("ksum counts") {
  SUBCASE("hand values") {
    auto c = ksum_counts(2, 1, 2, 1);
    CHECK(c.types == 2);
    CHECK(c.instances == 1);
    auto c2 = ksum_counts(3, 2, 2, 1);
    CHECK(c2.types == 2);
    CHECK(c2.instances == 2);
    auto c3 = ksum_counts(3, 2, 2, 2);
    CHECK(c3.types == 1);
    CHECK(c3.instances == 1);
  }
  SUBCASE("k equals K") {
    auto c = ksum_counts(4, 2, 3, 3);
    CHECK(c.types == 1);
    CHECK(c.instances == 4);  // (N-T)^(K-1)
  }
  SUBCASE("types match subset enumeration") {
    for (std::size_t k_files = 1; k_files <= 4; ++k_files)
      for (std::size_t k = 1; k <= k_files; ++k)
        CHECK(ksum_counts(3, 1, k_files, k).types == enum_types(k_files, k));
  }
  SUBCASE("domain") {
    CHECK_THROWS_AS(ksum_counts(2, 3, 2, 1), std::invalid_argument);
    CHECK_THROWS_AS(ksum_counts(2, 1, 2, 3), std::invalid_argument);
  }
}

TEST_CASE("p counts") {
  SUBCASE("hand values") {
    auto p = p_counts(2, 1, 2, 0);
    CHECK(p.p1 == 3);
    CHECK(p.p2 == 0);
    auto p2 = p_counts(2, 1, 2, 1);
    CHECK(p2.p1 == 3);
    CHECK(p2.p2 == 1);
    auto p3 = p_counts(3, 2, 2, 0);
    CHECK(p3.p1 == 5);
    CHECK(p3.p2 == 0);
  }
  SUBCASE("count identity over the exhaustive grid") {
    for (std::size_t n = 2; n <= 4; ++n)
      for (std::size_t t = 1; t < n; ++t)
        for (std::size_t k_files = 1; k_files <= 4; ++k_files) {
          std::uint64_t total = 0;
          for (std::size_t k = 1; k <= k_files; ++k) {
            auto c = ksum_counts(n, t, k_files, k);
            total += c.types * c.instances;
          }
          CHECK(total == p_counts(n, t, k_files, 0).p1);
          // removal identity: sums inside the first w files only
          for (std::size_t w = 1; w < k_files; ++w) {
            std::uint64_t known_total = 0;
            for (std::size_t k = 1; k <= w; ++k) {
              // types within the w known files, same instance count
              std::uint64_t types = 1;
              {  // C(w, k)
                types = 0;
                for (std::uint32_t mask = 0; mask < (1u << w); ++mask)
                  types += std::uint32_t(std::popcount(mask)) == k;
              }
              known_total += types * ksum_counts(n, t, k_files, k).instances;
            }
            CHECK(known_total == p_counts(n, t, k_files, w).p2);
          }
        }
  }
  SUBCASE("t equals n limit form") {
    auto p = p_counts(2, 2, 3, 1);
    CHECK(p.p1 == 3 * 4);  // K N^(K-1)
    CHECK(p.p2 == 1 * 4);
    auto p1 = p_counts(1, 1, 2, 1);
    CHECK(p1.p1 == 2);
    CHECK(p1.p2 == 1);
  }
}

TEST_CASE("query build structure") {
  Rng rng(71);
  SUBCASE("single file degenerates to direct download") {
    auto plan = build_level_queries_T1(1, 0, {}, 3, 1, 8, rng);
    CHECK(plan.n_pir == 3);
    for (const auto& sp : plan.servers) {
      REQUIRE(sp.sums.size() == 1);
      CHECK(sp.sums[0].terms.size() == 1);
      CHECK_FALSE(sp.removal);
    }
  }
  SUBCASE("toy level 1 counts") {
    auto plan = build_level_queries_T1(1, 0, {}, 2, 2, 8, rng);
    for (const auto& sp : plan.servers) CHECK(sp.sums.size() == 3);
  }
  SUBCASE("toy level 2 with one known") {
    auto plan = build_level_queries_T1(2, 1, {0}, 2, 2, 8, rng);
    for (const auto& sp : plan.servers) {
      CHECK(sp.sums.size() == 3);
      CHECK(sp.p2 == 1);
      CHECK(sp.removal);
    }
  }
  SUBCASE("counts match the structural model on a grid") {
    for (std::size_t n : {2, 3}) {
      for (std::size_t k_files : {2, 3}) {
        for (std::size_t w = 0; w < k_files; ++w) {
          std::vector<std::size_t> knowns;
          for (std::size_t f = 0; f < w; ++f) knowns.push_back(f);
          auto plan = build_level_queries_T1(1, w, knowns, n, k_files, 8, rng);
          auto pc = p_counts(n, 1, k_files, w);
          for (const auto& sp : plan.servers) {
            CHECK(sp.sums.size() == pc.p1);
            CHECK(sp.p2 == pc.p2);
          }
        }
      }
    }
  }
  SUBCASE("per-file positions are distinct within a server") {
    auto plan = build_level_queries_T1(1, 2, {0}, 3, 4, 8, rng);
    for (const auto& sp : plan.servers) {
      std::map<std::uint16_t, std::set<std::uint32_t>> seen;
      for (const auto& s : sp.sums)
        for (const auto& t : s.terms)
          CHECK(seen[t.file].insert(t.pos).second);
    }
  }
  SUBCASE("bad arguments") {
    CHECK_THROWS_AS(build_level_queries_T1(1, 5, {}, 2, 2, 8, rng),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_level_queries_T1(1, 0, {0}, 2, 2, 8, rng),
                    std::invalid_argument);
  }
}

TEST_CASE("plan serialization round trip") {
  Rng rng(73);
  auto plan = build_level_queries_T1(2, 1, {0}, 2, 3, 8, rng);
  auto bytes = plan.servers[0].serialize();
  auto back = ServerPlan::deserialize(bytes);
  CHECK(back.serialize() == bytes);
  CHECK(back.sums.size() == plan.servers[0].sums.size());
  CHECK(back.removal == plan.servers[0].removal);
}

TEST_CASE("database serialization round trip") {
  Rng rng(74);
  auto db = random_db(1, 2, 4, 6, rng);
  auto bytes = db.serialize();
  auto back = LevelDatabase::deserialize(bytes);
  CHECK(back.records == db.records);
  CHECK(back.cell_bytes == db.cell_bytes);
  CHECK(back.level == db.level);
}

TEST_CASE("answers") {
  Rng rng(75);
  SUBCASE("all zero database") {
    auto db = random_db(1, 2, 4, 4, rng);
    for (auto& r : db.records) std::fill(r.begin(), r.end(), std::uint8_t(0));
    auto plan = build_level_queries_T1(1, 0, {}, 2, 2, 8, rng);
    auto ans = answer(plan, db);
    for (const auto& sv : ans.per_server)
      for (const auto& c : sv)
        for (auto b : c) CHECK(b == 0);
  }
  SUBCASE("single term plan returns the record cell") {
    auto db = random_db(1, 2, 4, 4, rng);
    ServerPlan sp;
    sp.level = 1;
    sp.field_bits = 8;
    sp.p1 = 1;
    sp.p2 = 0;
    sp.sums.push_back(Sum{{SymbolRef{1, 2, 1}}});
    auto cells = answer_one(sp, db);
    REQUIRE(cells.size() == 1);
    CHECK(cells[0] == std::vector<std::uint8_t>(
                          db.records[1].begin() + 2 * db.cell_bytes,
                          db.records[1].begin() + 3 * db.cell_bytes));
  }
  SUBCASE("random database matches the naive evaluator") {
    auto db = random_db(1, 3, 8, 4, rng);
    auto plan = build_level_queries_T1(1, 1, {}, 2, 3, 8, rng);
    auto ans = answer(plan, db);
    for (std::size_t j = 0; j < plan.servers.size(); ++j) {
      REQUIRE_FALSE(plan.servers[j].removal);
      for (std::size_t i = 0; i < plan.servers[j].sums.size(); ++i)
        CHECK(ans.per_server[j][i] == naive_eval(plan.servers[j].sums[i], db));
    }
  }
  SUBCASE("determinism") {
    auto db = random_db(1, 2, 4, 4, rng);
    auto plan = build_level_queries_T1(1, 0, {}, 2, 2, 8, rng);
    CHECK(answer(plan, db).per_server == answer(plan, db).per_server);
  }
  SUBCASE("out of range position") {
    auto db = random_db(1, 2, 4, 4, rng);
    ServerPlan sp;
    sp.level = 1;
    sp.field_bits = 8;
    sp.p1 = 1;
    sp.p2 = 0;
    sp.sums.push_back(Sum{{SymbolRef{0, 9, 1}}});
    CHECK_THROWS_AS(answer_one(sp, db), std::invalid_argument);
  }
}

TEST_CASE("level decode") {
  Rng rng(77);
  SUBCASE("level 1 full solve for the target") {
    auto db = random_db(1, 2, 4, 4, rng);
    auto plan = build_level_queries_T1(1, 0, {}, 2, 2, 8, rng);
    auto ans = answer(plan, db);
    auto seg = level_decode(ans, plan, {});
    REQUIRE(seg.cells.count(0));
    REQUIRE(seg.cells[0].size() == 4);
    for (auto& [pos, cell] : seg.cells[0])
      CHECK(cell == std::vector<std::uint8_t>(
                        db.records[0].begin() + pos * db.cell_bytes,
                        db.records[0].begin() + (pos + 1) * db.cell_bytes));
    // partial coverage of the other file
    CHECK(seg.cells[1].size() == 2);
    for (auto& [pos, cell] : seg.cells[1])
      CHECK(cell == std::vector<std::uint8_t>(
                        db.records[1].begin() + pos * db.cell_bytes,
                        db.records[1].begin() + (pos + 1) * db.cell_bytes));
  }
  SUBCASE("removal round trip across sizes") {
    for (std::size_t n : {2, 3}) {
      for (std::size_t k_files : {2, 3, 4}) {
        for (std::size_t w = 0; w < k_files; ++w) {
          auto db = random_db(2, k_files, 1, 2, rng);
          db.n_pir = 1;
          // rebuild with the right grid
          std::size_t n_pir = 1;
          for (std::size_t i = 0; i < k_files; ++i) n_pir *= n;
          db = random_db(2, k_files, n_pir, 2, rng);
          std::vector<std::size_t> knowns;
          for (std::size_t f = 0; f < w; ++f) knowns.push_back(f);
          auto plan = build_level_queries_T1(2, w, knowns, n, k_files, 8, rng);
          auto ans = answer(plan, db);
          std::map<std::size_t, std::vector<std::uint8_t>> krec;
          for (auto f : knowns) krec[f] = db.records[f];
          auto seg = level_decode(ans, plan, krec);
          REQUIRE(seg.cells[w].size() == n_pir);  // target fully resolved
          for (auto& [pos, cell] : seg.cells[w])
            REQUIRE(cell == std::vector<std::uint8_t>(
                                db.records[w].begin() + pos * db.cell_bytes,
                                db.records[w].begin() + (pos + 1) * db.cell_bytes));
          // every resolved cell of every file is correct
          for (auto& [f, cells] : seg.cells)
            for (auto& [pos, cell] : cells)
              REQUIRE(cell == std::vector<std::uint8_t>(
                                  db.records[f].begin() + pos * db.cell_bytes,
                                  db.records[f].begin() + (pos + 1) * db.cell_bytes));
        }
      }
    }
  }
  SUBCASE("untargeted unknown coverage matches the count formula") {
    // files: 0 known, 1 target, 2 untargeted: expect N * N^w cells of file 2
    auto dbs = random_db(2, 3, 8, 2, rng);
    auto plan = build_level_queries_T1(2, 1, {0}, 2, 3, 8, rng);
    auto ans = answer(plan, dbs);
    auto seg = level_decode(ans, plan, {{0, dbs.records[0]}});
    CHECK(seg.cells[1].size() == 8);
    CHECK(seg.cells[2].size() == 4);  // N^(w+1) = 2^2
  }
  SUBCASE("corrupted raw answer detected via known sums") {
    auto db = random_db(2, 2, 4, 2, rng);
    auto plan = build_level_queries_T1(2, 1, {0}, 2, 2, 8, rng);
    for (auto& sp : plan.servers) sp.removal = false;  // download raw sums
    auto ans = answer(plan, db);
    // find a known-only sum and corrupt it
    bool corrupted = false;
    for (std::size_t i = 0; i < plan.servers[0].sums.size() && !corrupted; ++i) {
      bool all_known = true;
      for (auto& t : plan.servers[0].sums[i].terms) all_known &= t.file == 0;
      if (all_known) {
        ans.per_server[0][i][0] ^= 0x5A;
        corrupted = true;
      }
    }
    REQUIRE(corrupted);
    CHECK_THROWS_AS(level_decode(ans, plan, {{0, db.records[0]}}),
                    std::runtime_error);
  }
}

TEST_CASE("structural cost model") {
  SUBCASE("matches built plans") {
    Rng rng(79);
    auto rows = structural_cost_model(2, 1, 2, {1, 1}, {256, 410}, 1024);
    auto plan1 = build_level_queries_T1(1, 0, {}, 2, 2, 8, rng);
    auto plan2 = build_level_queries_T1(2, 1, {0}, 2, 2, 8, rng);
    CHECK(rows[0].symbols ==
          plan1.servers.size() * plan1.servers[0].sums.size());
    CHECK(rows[1].symbols ==
          plan2.servers.size() *
              (plan2.servers[0].sums.size() - plan2.servers[0].p2));
  }
  SUBCASE("eq 29 identity in rationals") {
    for (std::size_t n : {2, 3, 4}) {
      for (std::size_t t = 1; t < n; ++t) {
        const std::vector<std::size_t> d{1, 2};
        const std::vector<std::size_t> m{100, 200};
        const std::size_t n_src = 1000;
        auto rows = structural_cost_model(n, t, 3, d, m, n_src);
        const Rat x(t, n);
        std::size_t dprev = 0;
        for (std::size_t l = 0; l < d.size(); ++l) {
          Rat rl(m[l], n_src);
          Rat expect = rl * (1 - rat_pow(x, 3 - dprev)) / (1 - x);
          CHECK(rows[l].norm_bits == expect);
          dprev += d[l];
        }
      }
    }
  }
  SUBCASE("t equals n single-server-equivalent limit") {
    auto rows = structural_cost_model(2, 2, 2, {1, 1}, {100, 100}, 1000);
    // N(p1-p2) with p1 = K N^(K-1): level 1 symbols = N*K*N^(K-1) = K*N^K
    CHECK(rows[0].symbols == 2ull * 2 * 2);
    CHECK(rows[0].norm_bits == Rat(100, 1000) * 2);  // K * R_l
  }
}
