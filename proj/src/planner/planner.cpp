#include "ujoin/planner/planner.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <cmath>
#include <limits>

#include "ujoin/errors.hpp"
#include "ujoin/generator/generator.hpp"
#include "ujoin/storage/page.hpp"

namespace ujoin {

RelationStats collect_stats(const Relation& rel, const Relation* partner, bool has_index) {
  RelationStats st;
  st.has_index = has_index;
  st.pages = rel.data_pages();

  std::vector<Bounds> mine;
  mine.reserve(rel.tuple_count());
  std::uint64_t alts = 0;
  std::uint64_t uncertain = 0;
  std::uint64_t bytes = 0;
  std::uint32_t max_card = 0;
  auto cur = rel.scan();
  while (cur.next()) {
    const auto& t = cur.tuple();
    const auto card = static_cast<std::uint32_t>(t.alts.size());
    alts += card;
    uncertain += card > 1 ? 1 : 0;
    max_card = std::max(max_card, card);
    bytes += cur.record().size();
    mine.push_back(t.bounds());
  }
  st.n = mine.size();
  if (st.n == 0) {
    st.avg_overlap = 0.0;
    st.flat_rows = 0.0;
    return st;
  }
  const auto n = static_cast<double>(st.n);
  st.avg_card = static_cast<double>(alts) / n;
  st.max_card = max_card;
  st.pct_uncertain = static_cast<double>(uncertain) / n;
  st.flat_rows = static_cast<double>(alts);
  st.avg_record_bytes = static_cast<double>(bytes) / n;
  if (partner != nullptr && partner != &rel) {
    const auto theirs = relation_bounds(*partner);
    st.avg_overlap = measure_spreading(mine, theirs);
  } else {
    st.avg_overlap = measure_spreading(mine, mine);
  }
  return st;
}

Calibration Calibration::defaults() {
  // Order-of-magnitude figures for an in-memory pool on a current desktop; replaced by
  // `ujoin calibrate`.
  Calibration c;
  c.at(JoinAlgorithm::NestedLoop) = {0.01, 2.0e-5, 0.0};
  c.at(JoinAlgorithm::Base) = {0.01, 1.5e-5, 0.0};
  c.at(JoinAlgorithm::Sort) = {0.01, 1.0e-4, 4.0e-4};
  c.at(JoinAlgorithm::Tuple1) = {0.01, 1.0e-4, 6.0e-4};
  c.at(JoinAlgorithm::Tuple2) = {0.01, 1.0e-4, 9.0e-4};
  c.at(JoinAlgorithm::Index) = {0.01, 3.0e-4, 5.0e-4};
  return c;
}

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Calibration Calibration::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read calibration file " + path.string());
  Calibration c = defaults();
  c.calibrated = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("expected key=value in " + path.string(), lineno);
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "profile") {
      c.profile = val;
      continue;
    }
    if (key == "calibrated") {
      c.calibrated = (val == "1" || val == "true");
      continue;
    }
    const auto dot = key.find('.');
    std::optional<JoinAlgorithm> algo;
    if (dot != std::string::npos) algo = parse_algorithm(key.substr(0, dot));
    if (!algo) {
      c.extra[key] = val;
      continue;
    }
    const std::string term = key.substr(dot + 1);
    double v = 0;
    try {
      std::size_t used = 0;
      v = std::stod(val, &used);
      if (used != val.size()) throw std::invalid_argument(val);
    } catch (const std::exception&) {
      throw ParseError("bad number for " + key, lineno);
    }
    if (v < 0 || !std::isfinite(v)) throw ParseError(key + " must be a non-negative number", lineno);
    auto& co = c.at(*algo);
    if (term == "io") {
      co.io = v;
    } else if (term == "cmp") {
      co.cmp = v;
    } else if (term == "row") {
      co.row = v;
    } else {
      c.extra[key] = val;
    }
  }
  return c;
}

void Calibration::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write calibration file " + path.string());
  out << "# ujoin cost calibration\n"
      << "# <algo>.io, <algo>.cmp, <algo>.row: milliseconds per estimated page I/O,\n"
      << "# comparison and processed row.\n";
  out << "profile=" << profile << "\n";
  out << "calibrated=" << (calibrated ? 1 : 0) << "\n";
  out.precision(6);
  out << std::scientific;
  for (JoinAlgorithm a : kAllAlgorithms) {
    const auto& co = at(a);
    const auto name = std::string(algorithm_name(a));
    out << name << ".io=" << co.io << "\n";
    out << name << ".cmp=" << co.cmp << "\n";
    out << name << ".row=" << co.row << "\n";
  }
  for (const auto& [k, v] : extra) out << k << "=" << v << "\n";
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

namespace {

struct Shape {
  double n1, n2, pg1, pg2, f1, f2, rec1, rec2, ov, results, frac;
};

double per_page(const PlannerEnv& env, double row_bytes) {
  const double usable = static_cast<double>(env.page_size - SlottedPage::kHeaderSize);
  return std::max(1.0, std::floor(usable / (row_bytes + SlottedPage::kSlotSize)));
}

double pages_for(const PlannerEnv& env, double rows, double row_bytes) {
  return rows <= 0 ? 0.0 : std::ceil(rows / per_page(env, row_bytes));
}

/// Read and write traffic of sorting `pages` of input: one pass when it fits in memory,
/// otherwise run formation plus merge rounds.
double sort_ios(const PlannerEnv& env, double pages) {
  const double mem = static_cast<double>(env.mem_pages);
  if (pages <= mem) return pages;
  const double runs = std::ceil(pages / mem);
  const double fan = std::max(
      2.0, std::min(mem - 1, static_cast<double>(env.pool_pages) / 4.0));
  const double merges = std::ceil(std::log(runs) / std::log(fan));
  return pages + 2.0 * pages * merges;
}

/// Pages a temporary of `pages` costs in write-back and re-read once the pool overflows.
double spill_ios(const PlannerEnv& env, double pages, double resident) {
  const double pool = static_cast<double>(env.pool_pages);
  if (pages + resident <= pool) return 0.0;
  return 2.0 * std::min(pages, pages + resident - pool);
}

Shape make_shape(const RelationStats& s1, const RelationStats& s2, std::uint64_t k,
                 const PlannerEnv& env) {
  Shape sh{};
  sh.n1 = static_cast<double>(s1.n);
  sh.n2 = static_cast<double>(s2.n);
  sh.rec1 = s1.avg_record_bytes > 0 ? s1.avg_record_bytes : 16.0 + 8.0 * s1.avg_card;
  sh.rec2 = s2.avg_record_bytes > 0 ? s2.avg_record_bytes : 16.0 + 8.0 * s2.avg_card;
  sh.pg1 = s1.pages > 0 ? static_cast<double>(s1.pages) : pages_for(env, sh.n1, sh.rec1);
  sh.pg2 = s2.pages > 0 ? static_cast<double>(s2.pages) : pages_for(env, sh.n2, sh.rec2);
  sh.f1 = s1.flat_rows > 0 ? s1.flat_rows : sh.n1 * s1.avg_card;
  sh.f2 = s2.flat_rows > 0 ? s2.flat_rows : sh.n2 * s2.avg_card;
  sh.ov = std::max(1.0, s1.avg_overlap);
  // Without value statistics every outer tuple is assumed to find about one partner.
  sh.results = std::max(1.0, sh.n1);
  sh.frac = k == kAllResults ? 1.0 : std::min(1.0, static_cast<double>(k) / sh.results);
  return sh;
}

struct Work {
  double ios, cmp, rows;
};

Work work_of(JoinAlgorithm algo, const Shape& s, const PlannerEnv& env) {
  const double pool = static_cast<double>(env.pool_pages);
  const double mem = static_cast<double>(env.mem_pages);
  switch (algo) {
    case JoinAlgorithm::NestedLoop: {
      // Every outer tuple rescans the inner relation; the rescans hit the pool only when the
      // inner relation stays resident.
      const double outer = s.frac * s.n1;
      const double rescans = s.pg2 + 1 <= pool ? s.pg2 : outer * s.pg2;
      return {s.frac * s.pg1 + rescans, outer * s.n2, 0.0};
    }
    case JoinAlgorithm::Base: {
      const double blocks = std::max(1.0, std::ceil(s.pg1 / mem));
      const double touched = std::max(1.0, std::ceil(s.frac * blocks));
      const double block_pages = std::min(s.pg1, mem);
      const double inner = s.pg2 + block_pages <= pool ? s.pg2 : touched * s.pg2;
      return {std::min(s.pg1, touched * block_pages) + inner, s.frac * s.n1 * s.n2, 0.0};
    }
    case JoinAlgorithm::Sort: {
      // Both inputs are sorted completely before the first result; the merge then fetches
      // the overlapping inner window of each outer tuple.
      const double spool = spill_ios(env, s.pg2, s.pg1);
      const double ios = sort_ios(env, s.pg1) + sort_ios(env, s.pg2) + s.frac * spool;
      return {ios, s.frac * s.n1 * (s.ov + 1.0), s.n1 + s.n2};
    }
    case JoinAlgorithm::Tuple1:
    case JoinAlgorithm::Tuple2: {
      const bool full = algo == JoinAlgorithm::Tuple2;
      const double w1 = full ? 8.0 + s.rec1 : 16.0;
      const double w2 = full ? 8.0 + s.rec2 : 16.0;
      const double flat = pages_for(env, s.f1, w1) + pages_for(env, s.f2, w2);
      const double base = s.pg1 + s.pg2;
      double ios = base + spill_ios(env, flat, base);
      // Grace passes when the build side does not fit the hash-table budget.
      const double build = pages_for(env, s.f2, w2);
      if (build > mem) ios += 2.0 * flat;
      const double pair_bytes = full ? 24.0 + s.rec1 + s.rec2 : 16.0;
      const double pairs = s.results * std::max(1.0, (s.f1 / std::max(1.0, s.n1)));
      const double pair_pages = pages_for(env, pairs, pair_bytes);
      ios += spill_ios(env, pair_pages, base + flat);
      double rows = s.f1 + s.f2 + pairs;
      if (!full) {
        // Recovery joins reread both relations and load every tuple into a lookup table.
        ios += base;
        if (base > mem) ios += 2.0 * base;
        rows += s.n1 + s.n2;
      }
      return {ios, s.f1 + pairs, rows};
    }
    case JoinAlgorithm::Index: {
      const double outer = s.frac * s.n1;
      const double fetches = outer * (1.0 + s.ov);
      const double idx_pages = pages_for(env, s.n2, 40.0);
      const double resident = s.pg2 + idx_pages + s.frac * s.pg1;
      double random;
      if (resident <= pool) {
        random = std::min(fetches, s.pg2 + idx_pages);
      } else {
        random = fetches * (1.0 - pool / resident);
        random = std::max(random, std::min(fetches, pool));
      }
      const double probe = outer * std::max(1.0, std::log2(std::max(2.0, s.n2)));
      return {std::ceil(s.frac * s.pg1) + random, outer * s.ov, probe};
    }
  }
  return {0, 0, 0};
}

}  // namespace

CostEstimate estimate(JoinAlgorithm algo, const RelationStats& s1, const RelationStats& s2,
                      std::uint64_t k, const Calibration& cal, const PlannerEnv& env) {
  CostEstimate e;
  e.algorithm = algo;
  e.calibrated = cal.calibrated;
  if (s1.n == 0 || s2.n == 0 || k == 0) return e;
  const Shape sh = make_shape(s1, s2, k, env);
  const Work w = work_of(algo, sh, env);
  const auto& co = cal.at(algo);
  e.est_page_ios = w.ios;
  e.est_comparisons = w.cmp;
  e.est_rows = w.rows;
  e.est_ms = co.io * w.ios + co.cmp * w.cmp + co.row * w.rows;
  return e;
}

JoinAlgorithm choose_algorithm(const RelationStats& s1, const RelationStats& s2, std::uint64_t k,
                               const Calibration& cal, const PlannerEnv& env) {
  static constexpr std::array<JoinAlgorithm, 6> kPreference = {
      JoinAlgorithm::Index,  JoinAlgorithm::Sort, JoinAlgorithm::Tuple1,
      JoinAlgorithm::Tuple2, JoinAlgorithm::Base, JoinAlgorithm::NestedLoop};
  JoinAlgorithm best = JoinAlgorithm::NestedLoop;
  double best_ms = std::numeric_limits<double>::infinity();
  for (JoinAlgorithm a : kPreference) {
    if (a == JoinAlgorithm::Index && !s2.has_index) continue;
    if (a == JoinAlgorithm::NestedLoop) break;  // Base dominates it; only a fallback.
    const double ms = estimate(a, s1, s2, k, cal, env).est_ms;
    if (ms < best_ms) {  // strict: earlier entries win ties
      best_ms = ms;
      best = a;
    }
  }
  return best;
}

namespace {

/// Weighted least squares over a subset of the three work terms; false when singular.
bool solve_subset(const std::vector<std::array<double, 3>>& x, const std::vector<double>& y,
                  unsigned mask, std::array<double, 3>& out) {
  std::vector<int> cols;
  for (int j = 0; j < 3; ++j) {
    if (mask & (1u << j)) cols.push_back(j);
  }
  const std::size_t m = cols.size();
  double a[3][4] = {};
  for (std::size_t i = 0; i < x.size(); ++i) {
    // Relative error: divide each equation by the measured time.
    const double w = 1.0 / (y[i] * y[i]);
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t c = 0; c < m; ++c) a[r][c] += w * x[i][cols[r]] * x[i][cols[c]];
      a[r][m] += w * x[i][cols[r]] * y[i];
    }
  }
  for (std::size_t p = 0; p < m; ++p) {
    std::size_t piv = p;
    for (std::size_t r = p + 1; r < m; ++r) {
      if (std::abs(a[r][p]) > std::abs(a[piv][p])) piv = r;
    }
    if (std::abs(a[piv][p]) < 1e-300) return false;
    for (std::size_t c = 0; c <= m; ++c) std::swap(a[p][c], a[piv][c]);
    for (std::size_t r = 0; r < m; ++r) {
      if (r == p) continue;
      const double f = a[r][p] / a[p][p];
      for (std::size_t c = p; c <= m; ++c) a[r][c] -= f * a[p][c];
    }
  }
  out = {0, 0, 0};
  for (std::size_t r = 0; r < m; ++r) {
    const double v = a[r][m] / a[r][r];
    if (!(v >= 0) || !std::isfinite(v)) return false;
    out[cols[r]] = v;
  }
  return true;
}

double relative_sse(const std::vector<std::array<double, 3>>& x, const std::vector<double>& y,
                    const std::array<double, 3>& c) {
  double sse = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double pred = c[0] * x[i][0] + c[1] * x[i][1] + c[2] * x[i][2];
    const double r = (pred - y[i]) / y[i];
    sse += r * r;
  }
  return sse;
}

}  // namespace

Calibration fit_calibration(const std::vector<CalibrationSample>& samples,
                            const Calibration& start, const PlannerEnv& env) {
  Calibration out = start;
  bool any = false;
  for (JoinAlgorithm algo : kAllAlgorithms) {
    std::vector<std::array<double, 3>> x;
    std::vector<double> y;
    for (const auto& s : samples) {
      if (s.algorithm != algo) continue;
      const Shape sh = make_shape(s.s1, s.s2, s.k, env);
      const Work w = work_of(algo, sh, env);
      x.push_back({w.ios, w.cmp, w.rows});
      y.push_back(std::max(s.elapsed_ms, 1e-3));
    }
    if (x.empty()) continue;
    // Non-negative least squares by enumerating the active sets of the three terms.
    std::array<double, 3> best{};
    double best_err = std::numeric_limits<double>::infinity();
    for (unsigned mask = 1; mask < 8; ++mask) {
      std::array<double, 3> c{};
      if (!solve_subset(x, y, mask, c)) continue;
      const double err = relative_sse(x, y, c);
      if (err < best_err) {
        best_err = err;
        best = c;
      }
    }
    if (!std::isfinite(best_err)) continue;
    // Keep every term alive at a small floor so that the forms never lose a dependency that
    // the grid happened not to exercise.
    const auto& d = Calibration::defaults().at(algo);
    auto& co = out.at(algo);
    co.io = std::max(best[0], 0.01 * d.io);
    co.cmp = std::max(best[1], 0.01 * d.cmp);
    co.row = std::max(best[2], 0.01 * d.row);
    any = true;
  }
  if (any) out.calibrated = true;
  return out;
}

}  // namespace ujoin
