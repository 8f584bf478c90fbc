#include "pirnsi/channels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace pirnsi::channels {

namespace {

double h2(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1 - p) * std::log2(1 - p);
}

void validate(const ChannelSpec& s) {
  if (s.kind == Kind::bec) {
    if (s.param < 0 || s.param > 1)
      throw std::invalid_argument("channels: BEC parameter must be in [0,1]");
  } else if (s.kind == Kind::bsc) {
    if (s.param < 0 || s.param * 2 > 1)
      throw std::invalid_argument("channels: BSC parameter must be in [0,1/2]");
  } else {
    if (s.matrix.empty() || s.matrix[0].empty())
      throw std::invalid_argument("channels: empty DMC matrix");
    const std::size_t cols = s.matrix[0].size();
    for (const auto& row : s.matrix) {
      if (row.size() != cols)
        throw std::invalid_argument("channels: ragged DMC matrix");
      double sum = 0;
      for (double v : row) {
        if (v < 0) throw std::invalid_argument("channels: negative DMC entry");
        sum += v;
      }
      if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("channels: DMC row does not sum to 1");
    }
  }
}

/// Exact phase-1 simplex feasibility for {Ax = b, x >= 0} (Bland's rule).
bool lp_feasible(std::vector<std::vector<Rat>> a, std::vector<Rat> b) {
  const std::size_t m = a.size();
  const std::size_t n = m ? a[0].size() : 0;
  for (std::size_t i = 0; i < m; ++i)
    if (b[i] < 0) {
      for (auto& v : a[i]) v = -v;
      b[i] = -b[i];
    }
  // Tableau with artificial basis; columns: n structural + m artificial + rhs.
  const std::size_t cols = n + m + 1;
  std::vector<std::vector<Rat>> t(m + 1, std::vector<Rat>(cols, 0));
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) t[i][j] = a[i][j];
    t[i][n + i] = 1;
    t[i][cols - 1] = b[i];
    basis[i] = n + i;
  }
  // Objective row: minimize sum of artificials -> reduced costs.
  for (std::size_t j = 0; j < cols; ++j) {
    Rat s = 0;
    for (std::size_t i = 0; i < m; ++i) s += t[i][j];
    t[m][j] = -s;
  }
  for (std::size_t i = 0; i < m; ++i) t[m][n + i] = 0;

  while (true) {
    std::size_t enter = cols;  // Bland: smallest index with negative cost
    for (std::size_t j = 0; j + 1 < cols; ++j)
      if (t[m][j] < 0) {
        enter = j;
        break;
      }
    if (enter == cols) break;
    std::size_t leave = m;
    Rat best = 0;
    for (std::size_t i = 0; i < m; ++i) {
      if (t[i][enter] <= 0) continue;
      Rat ratio = t[i][cols - 1] / t[i][enter];
      if (leave == m || ratio < best ||
          (ratio == best && basis[i] < basis[leave])) {
        best = ratio;
        leave = i;
      }
    }
    if (leave == m) break;  // unbounded; cannot happen in phase 1
    const Rat piv = t[leave][enter];
    for (auto& v : t[leave]) v /= piv;
    for (std::size_t i = 0; i <= m; ++i) {
      if (i == leave) continue;
      const Rat f = t[i][enter];
      if (f == 0) continue;
      for (std::size_t j = 0; j < cols; ++j) t[i][j] -= f * t[leave][j];
    }
    basis[leave] = enter;
  }
  return -t[m][cols - 1] == 0;
}

Rat trans_exact(const ChannelSpec& s, std::size_t x, std::size_t y) {
  if (s.kind == Kind::bec) {
    if (y == kErasure) return s.param;
    return y == x ? 1 - s.param : Rat(0);
  }
  if (s.kind == Kind::bsc) return y == x ? 1 - s.param : s.param;
  return rat_from_double(s.matrix[x][y]);
}

}  // namespace

double ChannelSpec::trans(std::size_t x, std::size_t y) const {
  if (kind == Kind::dmc) return matrix[x][y];
  return rat_to_double(trans_exact(*this, x, y));
}

bool ChannelSpec::same_law(const ChannelSpec& other) const {
  if (input_size() != other.input_size() || output_size() != other.output_size())
    return false;
  for (std::size_t x = 0; x < input_size(); ++x)
    for (std::size_t y = 0; y < output_size(); ++y)
      if (trans_exact(*this, x, y) != trans_exact(other, x, y)) return false;
  return true;
}

std::string ChannelSpec::describe() const {
  std::ostringstream os;
  if (kind == Kind::bec)
    os << "bec:" << rat_to_double(param);
  else if (kind == Kind::bsc)
    os << "bsc:" << rat_to_double(param);
  else
    os << "dmc:" << matrix.size() << "x" << output_size();
  return os.str();
}

ChannelSpec parse_channel_spec(const std::string& text) {
  auto colon = text.find(':');
  if (colon == std::string::npos)
    throw std::invalid_argument("channels: expected kind:value, got '" + text + "'");
  const std::string kind = text.substr(0, colon), val = text.substr(colon + 1);
  ChannelSpec s;
  if (kind == "bec") {
    s.kind = Kind::bec;
    s.param = rat_from_decimal(val);
  } else if (kind == "bsc") {
    s.kind = Kind::bsc;
    s.param = rat_from_decimal(val);
  } else if (kind == "dmc") {
    s.kind = Kind::dmc;
    std::ifstream in(val);
    if (!in) throw std::invalid_argument("channels: cannot open matrix file " + val);
    std::string line;
    while (std::getline(in, line)) {
      std::istringstream ls(line);
      std::vector<double> row;
      double v;
      while (ls >> v) row.push_back(v);
      if (!row.empty()) s.matrix.push_back(std::move(row));
    }
  } else {
    throw std::invalid_argument("channels: unknown channel kind '" + kind + "'");
  }
  validate(s);
  return s;
}

double conditional_entropy(const ChannelSpec& spec) {
  validate(spec);
  if (spec.kind == Kind::bec) return rat_to_double(spec.param);
  if (spec.kind == Kind::bsc) return h2(rat_to_double(spec.param));
  const std::size_t nx = spec.input_size(), ny = spec.output_size();
  double h = 0;
  for (std::size_t y = 0; y < ny; ++y) {
    double py = 0;
    for (std::size_t x = 0; x < nx; ++x) py += spec.matrix[x][y] / double(nx);
    if (py <= 0) continue;
    for (std::size_t x = 0; x < nx; ++x) {
      const double pxy = spec.matrix[x][y] / double(nx);
      if (pxy <= 0) continue;
      h -= pxy * std::log2(pxy / py);
    }
  }
  return h;
}

Rat conditional_entropy_exact(const ChannelSpec& spec) {
  if (spec.kind == Kind::bec) return spec.param;
  if (spec.kind == Kind::bsc) {
    if (spec.param == 0) return Rat(0);
    if (spec.param * 2 == 1) return Rat(1);
  }
  return rat_from_double(conditional_entropy(spec));
}

std::vector<std::uint8_t> sample(const ChannelSpec& spec,
                                 const std::vector<std::uint8_t>& x, Rng& rng) {
  validate(spec);
  const std::size_t nx = spec.input_size();
  std::vector<std::uint8_t> y(x.size());
  const double p = rat_to_double(spec.param);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] >= nx)
      throw std::invalid_argument("channels: input symbol outside alphabet");
    if (spec.kind == Kind::bec) {
      y[i] = rng.bernoulli(p) ? kErasure : x[i];
    } else if (spec.kind == Kind::bsc) {
      y[i] = rng.bernoulli(p) ? x[i] ^ 1 : x[i];
    } else {
      double u = rng.uniform(), acc = 0;
      std::size_t pick = spec.output_size() - 1;
      for (std::size_t j = 0; j < spec.output_size(); ++j) {
        acc += spec.matrix[x[i]][j];
        if (u < acc) {
          pick = j;
          break;
        }
      }
      y[i] = std::uint8_t(pick);
    }
  }
  return y;
}

ChannelBank order_and_validate(std::vector<ChannelSpec> specs) {
  if (specs.empty()) throw std::invalid_argument("channels: no channels given");
  for (auto& s : specs) validate(s);
  for (std::size_t i = 0; i < specs.size(); ++i)
    for (std::size_t j = i + 1; j < specs.size(); ++j)
      if (specs[i].same_law(specs[j]))
        throw std::invalid_argument("channels: test channels must be distinct");

  std::vector<std::size_t> idx(specs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<double> h(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) h[i] = conditional_entropy(specs[i]);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return h[a] < h[b]; });

  ChannelBank bank;
  for (std::size_t i : idx) {
    bank.specs.push_back(specs[i]);
    bank.cond_entropy.push_back(h[i]);
    bank.original_index.push_back(i);
  }
  for (std::size_t i = 0; i + 1 < bank.specs.size(); ++i)
    if (std::abs(bank.cond_entropy[i] - bank.cond_entropy[i + 1]) <= 1e-12)
      bank.tie_flag = true;
  return bank;
}

bool is_degraded_pair(const ChannelSpec& better, const ChannelSpec& worse) {
  const std::size_t nx = better.input_size();
  if (nx != worse.input_size())
    throw std::invalid_argument("channels: input alphabets differ");
  const std::size_t ni = better.output_size(), nj = worse.output_size();
  // Unknowns: t[yi][yj], row-major. Constraints: channel equality and
  // row-stochasticity of T.
  const std::size_t nvars = ni * nj;
  std::vector<std::vector<Rat>> a;
  std::vector<Rat> b;
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t yj = 0; yj < nj; ++yj) {
      std::vector<Rat> row(nvars, 0);
      for (std::size_t yi = 0; yi < ni; ++yi)
        row[yi * nj + yj] = trans_exact(better, x, yi);
      a.push_back(std::move(row));
      b.push_back(trans_exact(worse, x, yj));
    }
  for (std::size_t yi = 0; yi < ni; ++yi) {
    std::vector<Rat> row(nvars, 0);
    for (std::size_t yj = 0; yj < nj; ++yj) row[yi * nj + yj] = 1;
    a.push_back(std::move(row));
    b.push_back(1);
  }
  return lp_feasible(std::move(a), std::move(b));
}

bool is_degraded_chain(const ChannelBank& bank) {
  for (std::size_t i = 0; i < bank.levels(); ++i)
    for (std::size_t j = i + 1; j < bank.levels(); ++j)
      if (!is_degraded_pair(bank.specs[i], bank.specs[j])) return false;
  return true;
}

std::vector<std::size_t> Mapping::counts(std::size_t d_levels) const {
  std::vector<std::size_t> c(d_levels, 0);
  for (auto lv : level_of) {
    if (lv >= d_levels) throw std::invalid_argument("channels: level out of range");
    ++c[lv];
  }
  return c;
}

Mapping sample_mapping(const std::vector<std::size_t>& d, Rng& rng) {
  if (d.empty()) throw std::invalid_argument("channels: empty level counts");
  Mapping m;
  for (std::size_t lv = 0; lv < d.size(); ++lv) {
    if (d[lv] == 0)
      throw std::invalid_argument("channels: every level needs d_i >= 1");
    for (std::size_t c = 0; c < d[lv]; ++c) m.level_of.push_back(std::uint8_t(lv));
  }
  rng.shuffle(m.level_of);
  return m;
}

}  // namespace pirnsi::channels
