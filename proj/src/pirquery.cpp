#include "pirnsi/pirquery.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "pirnsi/serialize.hpp"

namespace pirnsi::pirquery {

namespace {

std::uint64_t checked_pow(std::uint64_t base, std::uint64_t exp) {
  // 0^0 = 1 by the usual convention for the instance-count formulas.
  std::uint64_t r = 1;
  for (std::uint64_t i = 0; i < exp; ++i) {
    if (base != 0 && r > (std::uint64_t(1) << 62) / base)
      throw std::invalid_argument("pirquery: count overflow; parameters too large");
    r *= base;
  }
  return r;
}

std::uint64_t binom(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

void xor_into(std::vector<std::uint8_t>& acc, const std::uint8_t* src,
              std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] ^= src[i];
}

/// acc ^= coeff * cell, symbol-wise over the field.
void mul_acc(std::vector<std::uint8_t>& acc, const std::uint8_t* src,
             std::size_t n, gf::symbol coeff, const gf::Field& f) {
  if (coeff == 1) {
    xor_into(acc, src, n);
    return;
  }
  const std::size_t sym = std::size_t(f.bits()) / 8;
  for (std::size_t i = 0; i < n; i += sym) {
    gf::symbol v = src[i];
    if (sym == 2) v |= gf::symbol(src[i + 1]) << 8;
    v = f.mul(v, coeff);
    acc[i] ^= std::uint8_t(v);
    if (sym == 2) acc[i + 1] ^= std::uint8_t(v >> 8);
  }
}

std::vector<std::uint8_t> eval_sum(const Sum& sum, const LevelDatabase& db,
                                   const gf::Field& f) {
  std::vector<std::uint8_t> acc(db.cell_bytes, 0);
  for (const auto& term : sum.terms) {
    if (term.file >= db.files())
      throw std::invalid_argument("pirquery: file index out of range");
    if (term.pos >= db.n_pir)
      throw std::invalid_argument("pirquery: position out of range");
    mul_acc(acc, db.records[term.file].data() + std::size_t(term.pos) * db.cell_bytes,
            db.cell_bytes, term.coeff, f);
  }
  return acc;
}

}  // namespace

KsumCounts ksum_counts(std::size_t n, std::size_t t, std::size_t k_files,
                       std::size_t k) {
  if (t < 1 || t > n) throw std::invalid_argument("pirquery: need 1 <= T <= N");
  if (k < 1 || k > k_files)
    throw std::invalid_argument("pirquery: need 1 <= k <= K");
  KsumCounts out;
  out.types = binom(k_files, k);
  out.instances = checked_pow(n - t, k - 1) * checked_pow(t, k_files - k);
  return out;
}

PCounts p_counts(std::size_t n, std::size_t t, std::size_t k_files,
                 std::size_t d_prefix) {
  if (t < 1 || t > n) throw std::invalid_argument("pirquery: need 1 <= T <= N");
  if (k_files == 0 || d_prefix >= k_files)
    throw std::invalid_argument("pirquery: d_prefix must be in [0, K)");
  PCounts out;
  if (n == t) {
    // limit of the geometric sums
    out.p1 = std::uint64_t(k_files) * checked_pow(n, k_files - 1);
    out.p2 = std::uint64_t(d_prefix) * checked_pow(n, k_files - 1);
  } else {
    out.p1 = (checked_pow(n, k_files) - checked_pow(t, k_files)) / (n - t);
    out.p2 = checked_pow(t, k_files - d_prefix) *
             (checked_pow(n, d_prefix) - checked_pow(t, d_prefix)) / (n - t);
  }
  return out;
}

// ---------------------------------------------------------------- database

std::vector<std::uint8_t> LevelDatabase::serialize() const {
  ByteWriter w;
  const char magic[9] = "PIRNSI01";
  w.bytes(reinterpret_cast<const std::uint8_t*>(magic), 8);
  w.u16(std::uint16_t(level));
  w.u16(std::uint16_t(field_bits));
  w.u32(std::uint32_t(n_pir));
  w.u32(std::uint32_t(cell_bytes));
  w.u64(record_bits);
  w.u32(std::uint32_t(records.size()));
  for (const auto& r : records) w.bytes(r);
  return w.take();
}

LevelDatabase LevelDatabase::deserialize(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes);
  auto magic = r.bytes(8);
  if (std::string(magic.begin(), magic.end()) != "PIRNSI01")
    throw std::runtime_error("pirquery: bad database magic");
  LevelDatabase db;
  db.level = r.u16();
  db.field_bits = r.u16();
  db.n_pir = r.u32();
  db.cell_bytes = r.u32();
  db.record_bits = r.u64();
  const std::uint32_t k = r.u32();
  for (std::uint32_t i = 0; i < k; ++i)
    db.records.push_back(r.bytes(db.n_pir * db.cell_bytes));
  if (!r.done()) throw std::runtime_error("pirquery: trailing database bytes");
  return db;
}

// ------------------------------------------------------------------- plans

std::vector<std::uint8_t> ServerPlan::serialize() const {
  ByteWriter w;
  w.u16(level);
  w.u16(field_bits);
  w.u32(p1);
  w.u32(p2);
  w.u8(removal ? 1 : 0);
  w.u8(0);
  w.u8(0);
  w.u8(0);
  w.u32(std::uint32_t(sums.size()));
  for (const auto& s : sums) {
    w.u16(std::uint16_t(s.terms.size()));
    for (const auto& term : s.terms) {
      w.u16(term.file);
      w.u32(term.pos);
      w.u8(term.coeff);
    }
  }
  return w.take();
}

ServerPlan ServerPlan::deserialize(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes);
  ServerPlan p;
  p.level = r.u16();
  p.field_bits = r.u16();
  p.p1 = r.u32();
  p.p2 = r.u32();
  p.removal = r.u8() != 0;
  r.u8();
  r.u8();
  r.u8();
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    Sum s;
    const std::uint16_t k = r.u16();
    for (std::uint16_t j = 0; j < k; ++j) {
      SymbolRef t;
      t.file = r.u16();
      t.pos = r.u32();
      t.coeff = r.u8();
      s.terms.push_back(t);
    }
    p.sums.push_back(std::move(s));
  }
  if (!r.done()) throw std::runtime_error("pirquery: trailing plan bytes");
  return p;
}

QueryPlan build_level_queries_T1(std::size_t level, std::size_t target,
                                 const std::vector<std::size_t>& known_files,
                                 std::size_t n_servers, std::size_t n_files,
                                 int field_bits, Rng& rng) {
  const std::size_t n_pir = checked_pow(n_servers, n_files);
  std::vector<std::vector<std::uint32_t>> perms;
  for (std::size_t f = 0; f < n_files; ++f)
    perms.push_back(rng.permutation(n_pir));
  return build_level_queries_T1_with_perms(level, target, known_files,
                                           n_servers, n_files, field_bits, perms);
}

QueryPlan build_level_queries_T1_with_perms(
    std::size_t level, std::size_t target,
    const std::vector<std::size_t>& known_files, std::size_t n_servers,
    std::size_t n_files, int field_bits,
    const std::vector<std::vector<std::uint32_t>>& perms) {
  if (n_servers < 1) throw std::invalid_argument("pirquery: need N >= 1");
  if (n_files < 1 || target >= n_files)
    throw std::invalid_argument("pirquery: bad target/file count");
  std::vector<char> known(n_files, 0);
  for (auto f : known_files) {
    if (f >= n_files || f == target)
      throw std::invalid_argument("pirquery: bad known file set");
    if (known[f]) throw std::invalid_argument("pirquery: duplicate known file");
    known[f] = 1;
  }
  const std::size_t n_pir = checked_pow(n_servers, n_files);
  if (n_pir > (std::size_t(1) << 26))
    throw std::invalid_argument("pirquery: N^K grid too large");
  if (perms.size() != n_files)
    throw std::invalid_argument("pirquery: need one permutation per file");
  const auto pc = p_counts(n_servers, 1, n_files, known_files.size());

  QueryPlan plan;
  plan.level = level;
  plan.target = target;
  plan.known_files = known_files;
  plan.n_servers = n_servers;
  plan.n_files = n_files;
  plan.n_pir = n_pir;
  plan.servers.assign(n_servers, {});
  plan.side_origin.assign(n_servers, {});
  for (auto& sp : plan.servers) {
    sp.level = std::uint16_t(level);
    sp.field_bits = std::uint16_t(field_bits);
    sp.p1 = std::uint32_t(pc.p1);
    sp.p2 = std::uint32_t(pc.p2);
    sp.removal = pc.p2 > 0;
  }

  // Private per-file position permutations; one global fresh counter each.
  std::vector<std::size_t> next(n_files, 0);
  auto fresh = [&](std::size_t f) {
    if (next[f] >= n_pir) throw std::logic_error("pirquery: permutation exhausted");
    return perms[f][next[f]++];
  };

  // Sum indices of each non-target type per server, for side-sum reuse.
  std::vector<std::map<std::uint32_t, std::vector<std::uint32_t>>> type_sums(n_servers);

  // Canonical order: k ascending, types in lexicographic order, servers,
  // then instances.
  std::vector<std::size_t> comb;
  for (std::size_t k = 1; k <= n_files; ++k) {
    comb.assign(k, 0);
    for (std::size_t i = 0; i < k; ++i) comb[i] = i;
    while (true) {
      std::uint32_t mask = 0;
      for (auto f : comb) mask |= std::uint32_t(1) << f;
      const bool has_target = (mask >> target) & 1;
      const std::uint64_t fresh_insts = checked_pow(n_servers - 1, k - 1);

      for (std::size_t j = 0; j < n_servers; ++j) {
        auto& sp = plan.servers[j];
        auto& so = plan.side_origin[j];
        if (!has_target) {
          for (std::uint64_t i = 0; i < fresh_insts; ++i) {
            Sum s;
            for (auto f : comb) s.terms.push_back({std::uint16_t(f), fresh(f), 1});
            type_sums[j][mask].push_back(std::uint32_t(sp.sums.size()));
            sp.sums.push_back(std::move(s));
            so.push_back(std::nullopt);
          }
        } else if (k == 1) {
          Sum s;
          s.terms.push_back({std::uint16_t(target), fresh(target), 1});
          sp.sums.push_back(std::move(s));
          so.push_back(std::nullopt);
        } else {
          const std::uint32_t side_mask = mask & ~(std::uint32_t(1) << target);
          for (std::size_t jo = 0; jo < n_servers; ++jo) {
            if (jo == j) continue;
            for (auto sidx : type_sums[jo][side_mask]) {
              Sum s;
              s.terms = plan.servers[jo].sums[sidx].terms;
              SymbolRef tt{std::uint16_t(target), fresh(target), 1};
              auto it = std::lower_bound(
                  s.terms.begin(), s.terms.end(), tt,
                  [](const SymbolRef& a, const SymbolRef& b) { return a.file < b.file; });
              s.terms.insert(it, tt);
              sp.sums.push_back(std::move(s));
              so.push_back(std::make_pair(std::uint32_t(jo), sidx));
            }
          }
        }
      }
      // next k-combination
      std::size_t i = k;
      bool done = true;
      while (i-- > 0) {
        if (comb[i] + (k - i) < n_files) {
          ++comb[i];
          for (std::size_t q = i + 1; q < k; ++q) comb[q] = comb[q - 1] + 1;
          done = false;
          break;
        }
      }
      if (done) break;
    }
  }

  // Structural invariants: counts must match the closed forms.
  for (std::size_t j = 0; j < n_servers; ++j) {
    if (plan.servers[j].sums.size() != pc.p1)
      throw std::logic_error("pirquery: p1 structure mismatch");
    std::uint64_t known_only = 0;
    for (const auto& s : plan.servers[j].sums) {
      bool all_known = true;
      for (const auto& t : s.terms) all_known &= known[t.file] != 0;
      known_only += all_known;
    }
    if (known_only != pc.p2)
      throw std::logic_error("pirquery: p2 structure mismatch");
  }
  if (next[target] != n_pir)
    throw std::logic_error("pirquery: target coverage mismatch");
  return plan;
}

// ----------------------------------------------------------------- answers

std::vector<std::vector<std::uint8_t>> answer_one(const ServerPlan& plan,
                                                  const LevelDatabase& db) {
  if (plan.level != db.level)
    throw std::invalid_argument("pirquery: plan/database level mismatch");
  if (plan.field_bits != db.field_bits)
    throw std::invalid_argument("pirquery: field mismatch");
  auto field = gf::field_new(db.field_bits);
  std::vector<std::vector<std::uint8_t>> cells;
  cells.reserve(plan.sums.size());
  for (const auto& s : plan.sums) cells.push_back(eval_sum(s, db, *field));
  if (!plan.removal) return cells;

  const auto par = gf::mds_parity(plan.p1, plan.p2, field);
  const std::size_t np = plan.p1 - plan.p2;
  const std::size_t sym = std::size_t(db.field_bits) / 8;
  std::vector<std::vector<std::uint8_t>> out(np,
                                             std::vector<std::uint8_t>(db.cell_bytes, 0));
  for (std::size_t i = 0; i < plan.p1; ++i)
    for (std::size_t j = 0; j < np; ++j) {
      const gf::symbol c = par.at(i, j);
      if (c == 0) continue;
      for (std::size_t b = 0; b < db.cell_bytes; b += sym) {
        gf::symbol v = cells[i][b];
        if (sym == 2) v |= gf::symbol(cells[i][b + 1]) << 8;
        v = field->mul(v, c);
        out[j][b] ^= std::uint8_t(v);
        if (sym == 2) out[j][b + 1] ^= std::uint8_t(v >> 8);
      }
    }
  return out;
}

LevelAnswer answer(const QueryPlan& plan, const LevelDatabase& db) {
  LevelAnswer a;
  a.level = plan.level;
  a.cell_bytes = db.cell_bytes;
  a.field_bits = db.field_bits;
  for (const auto& sp : plan.servers) a.per_server.push_back(answer_one(sp, db));
  return a;
}

std::vector<std::uint8_t> LevelAnswer::serialize_one(std::size_t server) const {
  ByteWriter w;
  w.u16(std::uint16_t(level));
  w.u16(std::uint16_t(field_bits));
  w.u32(std::uint32_t(per_server[server].size()));
  w.u32(std::uint32_t(cell_bytes));
  w.u32(0);
  for (const auto& c : per_server[server]) w.bytes(c);
  return w.take();
}

std::vector<std::vector<std::uint8_t>> parse_answer_frame(
    const std::vector<std::uint8_t>& bytes, std::size_t expect_cells) {
  ByteReader r(bytes);
  r.u16();
  r.u16();
  const std::uint32_t cells = r.u32();
  const std::uint32_t cb = r.u32();
  r.u32();
  if (cells != expect_cells)
    throw std::runtime_error("pirquery: unexpected answer cell count");
  std::vector<std::vector<std::uint8_t>> out;
  for (std::uint32_t i = 0; i < cells; ++i) out.push_back(r.bytes(cb));
  if (!r.done()) throw std::runtime_error("pirquery: trailing answer bytes");
  return out;
}

// ------------------------------------------------------------------ decode

LevelSegments level_decode(
    const LevelAnswer& answers, const QueryPlan& plan,
    const std::map<std::size_t, std::vector<std::uint8_t>>& known_records) {
  const std::size_t cell_bytes = answers.cell_bytes;
  auto field = gf::field_new(plan.servers.empty() ? 8 : plan.servers[0].field_bits);
  std::vector<char> known(plan.n_files, 0);
  for (auto f : plan.known_files) {
    known[f] = 1;
    auto it = known_records.find(f);
    if (it == known_records.end() ||
        it->second.size() != plan.n_pir * cell_bytes)
      throw std::invalid_argument("pirquery: missing or misshaped known record");
  }

  auto known_cell = [&](const SymbolRef& t) {
    const auto& rec = known_records.at(t.file);
    std::vector<std::uint8_t> c(rec.begin() + std::size_t(t.pos) * cell_bytes,
                                rec.begin() + std::size_t(t.pos + 1) * cell_bytes);
    return c;
  };
  auto eval_known_sum = [&](const Sum& s) {
    std::vector<std::uint8_t> acc(cell_bytes, 0);
    for (const auto& t : s.terms) {
      auto c = known_cell(t);
      mul_acc(acc, c.data(), cell_bytes, t.coeff, *field);
    }
    return acc;
  };

  // Recover the full sum-value list per server.
  std::vector<std::vector<std::vector<std::uint8_t>>> u(plan.n_servers);
  for (std::size_t j = 0; j < plan.n_servers; ++j) {
    const auto& sp = plan.servers[j];
    const auto& got = answers.per_server[j];
    if (!sp.removal) {
      if (got.size() != sp.p1)
        throw std::runtime_error("pirquery: answer count mismatch");
      u[j] = got;
      // Raw downloads of fully-known sums double as a tamper check.
      for (std::size_t i = 0; i < sp.sums.size(); ++i) {
        bool all_known = !sp.sums[i].terms.empty();
        for (const auto& t : sp.sums[i].terms) all_known &= known[t.file] != 0;
        if (all_known && u[j][i] != eval_known_sum(sp.sums[i]))
          throw std::runtime_error("pirquery: inconsistent answers (corruption)");
      }
      continue;
    }
    if (got.size() != sp.p1 - sp.p2)
      throw std::runtime_error("pirquery: answer count mismatch");
    std::vector<std::pair<std::size_t, std::vector<std::uint8_t>>> knowns;
    for (std::size_t i = 0; i < sp.sums.size(); ++i) {
      bool all_known = !sp.sums[i].terms.empty();
      for (const auto& t : sp.sums[i].terms) all_known &= known[t.file] != 0;
      if (all_known) knowns.push_back({i, eval_known_sum(sp.sums[i])});
    }
    if (knowns.size() != sp.p2)
      throw std::runtime_error("pirquery: known-sum count mismatch");
    const auto par = gf::mds_parity(sp.p1, sp.p2, field);
    const std::size_t sym = std::size_t(field->bits()) / 8;
    u[j].assign(sp.p1, std::vector<std::uint8_t>(cell_bytes, 0));
    std::vector<std::pair<std::size_t, gf::symbol>> kv(knowns.size());
    std::vector<gf::symbol> parity(sp.p1 - sp.p2);
    for (std::size_t b = 0; b < cell_bytes; b += sym) {
      for (std::size_t t = 0; t < knowns.size(); ++t) {
        gf::symbol v = knowns[t].second[b];
        if (sym == 2) v |= gf::symbol(knowns[t].second[b + 1]) << 8;
        kv[t] = {knowns[t].first, v};
      }
      for (std::size_t i = 0; i < parity.size(); ++i) {
        gf::symbol v = got[i][b];
        if (sym == 2) v |= gf::symbol(got[i][b + 1]) << 8;
        parity[i] = v;
      }
      auto rec = gf::mds_recover(par, kv, parity);
      for (std::size_t i = 0; i < sp.p1; ++i) {
        u[j][i][b] = std::uint8_t(rec[i]);
        if (sym == 2) u[j][i][b + 1] = std::uint8_t(rec[i] >> 8);
      }
    }
  }

  // Resolve cells.
  LevelSegments seg;
  auto resolve = [&](std::size_t file, std::uint32_t pos,
                     std::vector<std::uint8_t> cell) {
    auto& slot = seg.cells[file][pos];
    if (!slot.empty() && slot != cell)
      throw std::runtime_error("pirquery: conflicting resolutions (corruption)");
    slot = std::move(cell);
  };
  for (std::size_t j = 0; j < plan.n_servers; ++j) {
    const auto& sp = plan.servers[j];
    for (std::size_t i = 0; i < sp.sums.size(); ++i) {
      const auto& s = sp.sums[i];
      std::size_t unknowns = 0;
      const SymbolRef* lone = nullptr;
      bool has_target = false;
      for (const auto& t : s.terms) {
        if (!known[t.file]) {
          ++unknowns;
          lone = &t;
          if (t.file == plan.target) has_target = true;
        }
      }
      if (unknowns == 0) continue;
      if (unknowns == 1) {
        // subtract the known terms
        std::vector<std::uint8_t> cell = u[j][i];
        for (const auto& t : s.terms) {
          if (!known[t.file]) continue;
          auto c = known_cell(t);
          mul_acc(cell, c.data(), cell_bytes, t.coeff, *field);
        }
        if (lone->coeff != 1) {
          const std::size_t sym = std::size_t(field->bits()) / 8;
          const gf::symbol ic = field->inv(lone->coeff);
          for (std::size_t b = 0; b < cell_bytes; b += sym) {
            gf::symbol v = cell[b];
            if (sym == 2) v |= gf::symbol(cell[b + 1]) << 8;
            v = field->mul(v, ic);
            cell[b] = std::uint8_t(v);
            if (sym == 2) cell[b + 1] = std::uint8_t(v >> 8);
          }
        }
        resolve(lone->file, lone->pos, std::move(cell));
        continue;
      }
      if (has_target && plan.side_origin[j][i]) {
        // target term = sum - reused side sum (value recovered at its origin)
        const auto [jo, sidx] = *plan.side_origin[j][i];
        std::vector<std::uint8_t> cell = u[j][i];
        xor_into(cell, u[jo][sidx].data(), cell_bytes);
        for (const auto& t : s.terms)
          if (t.file == plan.target) {
            resolve(t.file, t.pos, std::move(cell));
            break;
          }
      }
    }
  }
  return seg;
}

// -------------------------------------------------------------- cost model

std::vector<LevelCost> structural_cost_model(std::size_t n, std::size_t t,
                                             std::size_t k_files,
                                             const std::vector<std::size_t>& d,
                                             const std::vector<std::size_t>& m,
                                             std::size_t n_src) {
  if (d.size() != m.size())
    throw std::invalid_argument("pirquery: d and m must align");
  std::vector<LevelCost> rows;
  const std::uint64_t grid = checked_pow(n, k_files);
  std::size_t dprev = 0;
  for (std::size_t l = 0; l < d.size(); ++l) {
    const auto pc = p_counts(n, t, k_files, dprev);
    LevelCost row;
    row.level = l + 1;
    row.p1 = pc.p1;
    row.p2 = pc.p2;
    row.symbols = std::uint64_t(n) * (pc.p1 - pc.p2);
    row.norm_bits = Rat(std::uint64_t(m[l]) * row.symbols) /
                    (Rat(grid) * Rat(std::uint64_t(n_src)));
    rows.push_back(row);
    dprev += d[l];
  }
  return rows;
}

}  // namespace pirnsi::pirquery
