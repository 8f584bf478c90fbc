#include "pirnsi/protocol.hpp"

#include <json.hpp>

#include <algorithm>
#include <stdexcept>

#include "pirnsi/serialize.hpp"

namespace pirnsi::protocol {

namespace {

std::uint64_t upow(std::uint64_t b, std::uint64_t e) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 0; i < e; ++i) {
    if (b && r > (std::uint64_t(1) << 62) / b)
      throw std::invalid_argument("protocol: parameter overflow");
    r *= b;
  }
  return r;
}

constexpr int kRsFieldBits = 16;  // record parity symbols

/// v-stream bytes (big-endian bit packing) zero-extended to whole symbols.
std::vector<std::uint8_t> pad_stream(const std::vector<std::uint8_t>& bits,
                                     std::size_t syms) {
  std::vector<std::uint8_t> out(bits);
  out.resize(2 * syms, 0);
  return out;
}

gf::symbol sym_at(const std::vector<std::uint8_t>& bytes, std::size_t i) {
  return gf::symbol(bytes[2 * i]) | gf::symbol(bytes[2 * i + 1]) << 8;
}

void sym_store(std::vector<std::uint8_t>& bytes, std::size_t i, gf::symbol v) {
  bytes[2 * i] = std::uint8_t(v);
  bytes[2 * i + 1] = std::uint8_t(v >> 8);
}

}  // namespace

void Instance::validate() const {
  if (n_servers < 1 || t_colluding < 1 || t_colluding > n_servers)
    throw std::invalid_argument("protocol: need 1 <= T <= N");
  if (bank.levels() == 0 || bank.levels() != d.size())
    throw std::invalid_argument("protocol: channel bank and d-vector must align");
  std::size_t sum = 0;
  for (auto v : d) {
    if (v == 0) throw std::invalid_argument("protocol: every d_i must be >= 1");
    sum += v;
  }
  if (sum != k_files) throw std::invalid_argument("protocol: sum d_i != K");
  if (d.size() > k_files) throw std::invalid_argument("protocol: D must be <= K");
  if (n_src < 1) throw std::invalid_argument("protocol: n_src must be >= 1");
  if (delta < 0) throw std::invalid_argument("protocol: delta must be >= 0");
  for (const auto& s : bank.specs)
    if (s.input_size() != 2)
      throw std::invalid_argument("protocol: retrieval needs binary-input channels");
  if (field_bits != 0 && field_bits != 8 && field_bits != 16)
    throw std::invalid_argument("protocol: field_bits must be 0, 8 or 16");
}

int Instance::resolve_field_bits() const {
  if (field_bits != 0) return field_bits;
  const auto pc = pirquery::p_counts(n_servers, t_colluding, k_files, 0);
  return (2 * pc.p1 > 255) ? 16 : 8;
}

std::vector<std::vector<std::uint8_t>> build_records(
    const std::vector<std::uint8_t>& x, const nested_sc::NestedCode& code,
    const std::vector<RecordLayout>& layout, std::size_t n_pir) {
  auto bins = code.encode(x);
  auto f16 = gf::field_new(kRsFieldBits);
  std::vector<std::vector<std::uint8_t>> records;
  std::vector<gf::symbol> message;  // grows level by level
  for (std::size_t l = 0; l < layout.size(); ++l) {
    const auto& lay = layout[l];
    auto v = pad_stream(bins.level_bits[l], lay.s_syms);
    for (std::size_t i = 0; i < lay.s_syms; ++i) message.push_back(sym_at(v, i));

    std::vector<gf::symbol> parity;
    if (lay.pi_syms > 0) {
      auto par = gf::mds_parity(lay.msg_syms, lay.msg_syms - lay.pi_syms, f16);
      parity = gf::mds_encode(par, std::span<const gf::symbol>(message.data(),
                                                               lay.msg_syms));
    }
    std::vector<std::uint8_t> rec(n_pir * lay.cell_bytes, 0);
    for (std::size_t i = 0; i < lay.s_syms; ++i) sym_store(rec, i, sym_at(v, i));
    for (std::size_t i = 0; i < lay.pi_syms; ++i)
      sym_store(rec, lay.s_syms + i, parity[i]);
    records.push_back(std::move(rec));
    // the padded record (content + grid padding) joins the covered prefix
    for (std::size_t i = lay.s_syms; i < lay.padded_syms; ++i)
      message.push_back(i < lay.s_syms + lay.pi_syms ? parity[i - lay.s_syms]
                                                     : gf::symbol(0));
  }
  return records;
}

World setup(const Instance& inst) {
  inst.validate();
  if (inst.t_colluding != 1)
    throw std::invalid_argument(
        "protocol: full retrieval is implemented for T=1; use the structural "
        "cost model for T>1");
  World w;
  w.inst = inst;
  w.field_bits = inst.resolve_field_bits();
  w.n_pir = upow(inst.n_servers, inst.k_files);
  if (w.n_pir > (std::size_t(1) << 22))
    throw std::invalid_argument("protocol: N^K grid too large for the harness");

  Rng master(inst.seed);
  Rng rng_files = master.fork(0xF11E5);
  Rng rng_map = master.fork(0x3A9);
  Rng rng_side = master.fork(0x51DE);
  Rng rng_code = master.fork(0xC0DE);

  w.alloc = nested_sc::allocate_rates(inst.bank, inst.delta, inst.n_src);
  w.code = nested_sc::make_nested_code(inst.bank, w.alloc, rng_code.next_u64(),
                                       inst.backend);
  w.mapping = channels::sample_mapping(inst.d, rng_map);

  for (std::size_t k = 0; k < inst.k_files; ++k) {
    std::vector<std::uint8_t> x(inst.n_src);
    for (auto& b : x) b = std::uint8_t(rng_files.below(2));
    w.files.push_back(std::move(x));
  }
  for (std::size_t k = 0; k < inst.k_files; ++k)
    w.side_info.push_back(channels::sample(
        inst.bank.specs[w.mapping.level_of[k]], w.files[k], rng_side));

  // Record layout: bin increment plus parity restoring the undelivered
  // share of the lower-level records.
  std::size_t dcum = 0;
  std::size_t msg_prefix = 0;   // padded symbols of all lower records
  std::size_t shortfall = 0;    // symbols of lower records not guaranteed
  for (std::size_t l = 0; l < inst.levels(); ++l) {
    dcum += inst.d[l];
    RecordLayout lay;
    lay.s_syms = (w.alloc.m[l] + 15) / 16;
    lay.pi_syms = shortfall;
    lay.msg_syms = msg_prefix + lay.s_syms;
    if (lay.msg_syms + lay.pi_syms > (std::size_t(1) << kRsFieldBits) - 1)
      throw std::invalid_argument(
          "protocol: record parity code exceeds the field; lower n_src");
    const std::size_t content = lay.s_syms + lay.pi_syms;
    lay.cell_syms = (content + w.n_pir - 1) / w.n_pir;
    lay.cell_bytes = 2 * lay.cell_syms;
    lay.padded_syms = w.n_pir * lay.cell_syms;
    lay.content_bits = 16 * content;
    // Every later-level file sees at least N^(d_[1:l]) cells of this record
    // (the resolvable sums of the level's most-informed run, T = 1).
    const std::uint64_t guarantee =
        std::min<std::uint64_t>(w.n_pir, upow(inst.n_servers, dcum));
    lay.deliv_cells = std::size_t(guarantee);
    shortfall += lay.padded_syms - lay.deliv_cells * lay.cell_syms;
    msg_prefix += lay.padded_syms;
    w.layout.push_back(lay);
  }

  for (std::size_t l = 0; l < inst.levels(); ++l) {
    pirquery::LevelDatabase db;
    db.level = l + 1;
    db.n_pir = w.n_pir;
    db.cell_bytes = w.layout[l].cell_bytes;
    db.record_bits = w.layout[l].content_bits;
    db.field_bits = w.field_bits;
    db.records.assign(inst.k_files, {});
    w.databases.push_back(std::move(db));
  }
  for (std::size_t k = 0; k < inst.k_files; ++k) {
    auto recs = build_records(w.files[k], w.code, w.layout, w.n_pir);
    for (std::size_t l = 0; l < inst.levels(); ++l)
      w.databases[l].records[k] = std::move(recs[l]);
  }
  return w;
}

namespace {

struct RunPlan {
  std::size_t level = 0;  // 1-based
  std::size_t run = 0;
  pirquery::QueryPlan plan;
};

std::vector<std::size_t> files_of_level(const World& w, std::size_t level1) {
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < w.inst.k_files; ++f)
    if (w.mapping.level_of[f] + 1 == level1) out.push_back(f);
  return out;
}

/// Recover the full covered prefix for `file` at `level1` from the cells
/// resolved so far; returns the per-level bin streams 1..level1.
std::optional<std::vector<std::vector<std::uint8_t>>> recover_bins(
    const World& w, std::size_t file, std::size_t level1,
    const std::vector<std::map<std::uint32_t, std::vector<std::uint8_t>>>& cells) {
  const auto& lay = w.layout[level1 - 1];
  auto f16 = gf::field_new(kRsFieldBits);

  // Known coordinates of the level's parity code.
  std::vector<std::pair<std::size_t, gf::symbol>> known;
  std::vector<char> have(lay.msg_syms, 0);
  auto add = [&](std::size_t idx, gf::symbol v) {
    if (idx < lay.msg_syms && !have[idx]) {
      have[idx] = 1;
      known.push_back({idx, v});
    }
  };
  std::size_t base = 0;
  for (std::size_t i = 0; i + 1 < level1; ++i) {
    const auto& li = w.layout[i];
    for (const auto& [pos, cell] : cells[i])
      for (std::size_t s = 0; s < li.cell_syms; ++s)
        add(base + pos * li.cell_syms + s, sym_at(cell, s));
    // grid padding symbols are structurally zero
    for (std::size_t s = li.s_syms + li.pi_syms; s < li.padded_syms; ++s)
      add(base + s, 0);
    base += li.padded_syms;
  }
  // own level: the run resolved the whole record
  std::vector<gf::symbol> parity(lay.pi_syms, 0);
  {
    auto it_all = cells[level1 - 1];
    if (it_all.size() != w.n_pir) return std::nullopt;
    std::vector<gf::symbol> rec(lay.padded_syms, 0);
    for (const auto& [pos, cell] : it_all)
      for (std::size_t s = 0; s < lay.cell_syms; ++s)
        rec[pos * lay.cell_syms + s] = sym_at(cell, s);
    for (std::size_t s = 0; s < lay.s_syms; ++s) add(base + s, rec[s]);
    for (std::size_t s = 0; s < lay.pi_syms; ++s) parity[s] = rec[lay.s_syms + s];
  }

  std::vector<gf::symbol> message(lay.msg_syms, 0);
  if (known.size() < lay.msg_syms - lay.pi_syms) return std::nullopt;
  if (lay.pi_syms == 0) {
    if (known.size() < lay.msg_syms) return std::nullopt;
    for (auto& [idx, v] : known) message[idx] = v;
  } else {
    auto par = gf::mds_parity(lay.msg_syms, lay.msg_syms - lay.pi_syms, f16);
    auto rec = gf::mds_recover(par, known, parity);
    message = std::move(rec);
  }

  // Slice the message back into bin streams.
  std::vector<std::vector<std::uint8_t>> bins;
  std::size_t off = 0;
  for (std::size_t l = 0; l < level1; ++l) {
    const auto& li = w.layout[l];
    std::vector<std::uint8_t> bits((w.alloc.m[l] + 7) / 8, 0);
    for (std::size_t s = 0; s < li.s_syms; ++s) {
      const gf::symbol v = message[off + s];
      if (2 * s < bits.size()) bits[2 * s] = std::uint8_t(v);
      if (2 * s + 1 < bits.size()) bits[2 * s + 1] = std::uint8_t(v >> 8);
    }
    // clear any padding bits beyond m[l]
    if (!bits.empty() && w.alloc.m[l] % 8)
      bits.back() &= std::uint8_t(0xFF << (8 - w.alloc.m[l] % 8));
    bins.push_back(std::move(bits));
    off += li.padded_syms;  // lower levels contribute padded records
    if (l + 1 == level1) break;
  }
  return bins;
}

}  // namespace

Retrieval retrieve_with_transport(const World& w, std::size_t z, int metric,
                                  const AnswerFn& fetch) {
  const auto& inst = w.inst;
  if (z >= inst.k_files) throw std::invalid_argument("protocol: z out of range");
  if (metric != 1 && metric != 2)
    throw std::invalid_argument("protocol: metric must be 1 or 2");
  const std::size_t u_level = w.mapping.level_of[z] + 1;
  if (metric == 1 && inst.bank.cond_entropy[0] <= 1e-12 && u_level == 1)
    throw std::invalid_argument(
        "protocol: with noiseless first-level side information, metric 1 "
        "draws Z outside level 1");
  const std::size_t last = metric == 2 ? u_level : inst.levels();

  // Build every run up front; decoding starts after all answers are in.
  Rng master(inst.seed);
  Rng plans_master = master.fork(0x9A11);
  std::vector<RunPlan> runs;
  for (std::size_t l = 1; l <= last; ++l) {
    auto level_files = files_of_level(w, l);
    const bool single = l == last;
    const std::size_t rho = single ? 1 : level_files.size();
    std::vector<std::size_t> knowns;
    for (std::size_t i = 1; i < l; ++i)
      for (auto f : files_of_level(w, i)) knowns.push_back(f);
    for (std::size_t r = 0; r < rho; ++r) {
      std::size_t target;
      if (single)
        target = (u_level == l) ? z : level_files.at(0);
      else
        target = level_files.at(r);
      Rng run_rng = plans_master.fork(l * 1024 + r);
      RunPlan rp;
      rp.level = l;
      rp.run = r;
      rp.plan = pirquery::build_level_queries_T1(
          l, target, knowns, inst.n_servers, inst.k_files, w.field_bits, run_rng);
      runs.push_back(std::move(rp));
      if (!single) knowns.push_back(level_files[r]);
    }
  }

  // Collect answers and account costs.
  CostReport rep;
  rep.metric = metric;
  rep.z = z;
  rep.z_level = u_level;
  rep.levels_executed = last;
  rep.net_per_level.assign(last, Rat(0));
  std::vector<std::uint8_t> digest_feed;
  std::vector<pirquery::LevelAnswer> answers;
  for (const auto& rp : runs) {
    for (const auto& sp : rp.plan.servers) {
      auto b = sp.serialize();
      rep.query_bytes += b.size();
      digest_feed.insert(digest_feed.end(), b.begin(), b.end());
    }
    auto ans = fetch(rp.plan);
    const auto& lay = w.layout[rp.level - 1];
    RunCost rc;
    rc.level = rp.level;
    rc.run = rp.run;
    rc.knowns = rp.plan.known_files.size();
    for (std::size_t j = 0; j < ans.per_server.size(); ++j) {
      rc.cells += ans.per_server[j].size();
      auto b = ans.serialize_one(j);
      rep.answer_bytes += b.size();
      digest_feed.insert(digest_feed.end(), b.begin(), b.end());
    }
    rc.gross_bits = rc.cells * lay.cell_bytes * 8;
    rc.net_bits = Rat(rc.cells) * Rat(lay.content_bits, w.n_pir);
    rep.net_per_level[rp.level - 1] += rc.net_bits / Rat(inst.n_src);
    rep.runs.push_back(rc);
    answers.push_back(std::move(ans));
  }
  rep.net_normalized = 0;
  rep.gross_normalized = 0;
  for (const auto& rc : rep.runs) {
    rep.net_normalized += rc.net_bits / Rat(inst.n_src);
    rep.gross_normalized += Rat(rc.gross_bits, inst.n_src);
  }
  rep.transcript_digest = sha256_hex(digest_feed);

  // Decode level by level, feeding recovered files forward.
  std::vector<std::optional<std::vector<std::uint8_t>>> decoded(inst.k_files);
  std::vector<std::vector<std::vector<std::uint8_t>>> file_records(inst.k_files);
  // resolved cells per file per level
  std::vector<std::vector<std::map<std::uint32_t, std::vector<std::uint8_t>>>>
      resolved(inst.k_files);
  for (auto& r : resolved) r.resize(last);

  for (std::size_t idx = 0; idx < runs.size(); ++idx) {
    const auto& rp = runs[idx];
    std::map<std::size_t, std::vector<std::uint8_t>> known_records;
    for (auto f : rp.plan.known_files) {
      if (!decoded[f])
        throw std::runtime_error("protocol: level " + std::to_string(rp.level) +
                                 " depends on undecoded file " + std::to_string(f));
      known_records[f] = file_records[f][rp.level - 1];
    }
    auto seg = pirquery::level_decode(answers[idx], rp.plan, known_records);
    for (auto& [f, cmap] : seg.cells)
      for (auto& [pos, cell] : cmap) {
        auto& slot = resolved[f][rp.level - 1][pos];
        if (!slot.empty() && slot != cell)
          throw std::runtime_error("protocol: conflicting cells (corruption)");
        slot = cell;
      }

    const std::size_t target = rp.plan.target;
    if (decoded[target]) continue;
    auto bins = recover_bins(w, target, rp.level, resolved[target]);
    if (!bins)
      throw std::runtime_error("protocol: level " + std::to_string(rp.level) +
                               " could not recover bins for file " +
                               std::to_string(target));
    auto x_hat = w.code.decode(rp.level, *bins, w.side_info[target],
                               inst.bank.specs[rp.level - 1]);
    if (!x_hat)
      throw std::runtime_error("protocol: decode failure at level " +
                               std::to_string(rp.level) + ", file " +
                               std::to_string(target));
    // consistency: the estimate must reproduce the bins and match y
    auto re = w.code.encode(*x_hat);
    for (std::size_t l = 0; l < rp.level; ++l)
      if (re.level_bits[l] != (*bins)[l])
        throw std::runtime_error("protocol: re-encode mismatch at level " +
                                 std::to_string(rp.level) + ", file " +
                                 std::to_string(target));
    for (std::size_t i = 0; i < inst.n_src; ++i)
      if (inst.bank.specs[w.mapping.level_of[target]].trans(
              (*x_hat)[i], w.side_info[target][i]) <= 0)
        throw std::runtime_error("protocol: estimate contradicts side information");
    decoded[target] = std::move(*x_hat);
    file_records[target] = build_records(*decoded[target], w.code, w.layout, w.n_pir);
  }

  if (!decoded[z])
    throw std::runtime_error("protocol: desired file was never decoded");
  Retrieval out;
  out.x_hat = *decoded[z];
  out.report = std::move(rep);
  return out;
}

Retrieval retrieve_metric1(const World& w, std::size_t z) {
  return retrieve_with_transport(w, z, 1, [&](const pirquery::QueryPlan& p) {
    return pirquery::answer(p, w.databases[p.level - 1]);
  });
}

Retrieval retrieve_metric2(const World& w, std::size_t z) {
  return retrieve_with_transport(w, z, 2, [&](const pirquery::QueryPlan& p) {
    return pirquery::answer(p, w.databases[p.level - 1]);
  });
}

Measure measure(const CostReport& report, const Instance& inst) {
  (void)inst;
  Measure m;
  m.net_normalized = report.net_normalized;
  m.gross_normalized = report.gross_normalized;
  m.net_per_level = report.net_per_level;
  if (m.gross_normalized < m.net_normalized)
    throw std::logic_error("protocol: gross below net");
  return m;
}

std::string transcript_json(const World& w, const CostReport& rep) {
  nlohmann::json j;
  j["instance"] = {
      {"n", w.inst.n_servers},       {"t", w.inst.t_colluding},
      {"k", w.inst.k_files},         {"d", w.inst.d},
      {"n_src", w.inst.n_src},       {"delta", w.inst.delta},
      {"field_bits", w.field_bits},  {"seed", w.inst.seed},
  };
  std::vector<std::string> chans;
  for (const auto& s : w.inst.bank.specs) chans.push_back(s.describe());
  j["instance"]["channels"] = chans;
  j["metric"] = rep.metric;
  j["z"] = rep.z;
  j["z_level"] = rep.z_level;
  j["levels_executed"] = rep.levels_executed;
  j["digest"] = rep.transcript_digest;
  j["query_bytes"] = rep.query_bytes;
  j["answer_bytes"] = rep.answer_bytes;
  j["net_normalized"] = rat_to_double(rep.net_normalized);
  j["gross_normalized"] = rat_to_double(rep.gross_normalized);
  std::vector<double> per_level;
  for (const auto& r : rep.net_per_level) per_level.push_back(rat_to_double(r));
  j["net_per_level"] = per_level;
  return j.dump(2);
}

}  // namespace pirnsi::protocol
