#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "ujoin/bench/bench.hpp"
#include "ujoin/errors.hpp"

namespace ujoin {

namespace {

constexpr std::array<std::string_view, 6> kFamilyNames = {
    "cardinality", "top_k", "spreading", "tuple_cardinality", "percentage", "query_trace"};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string k_text(std::uint64_t k) { return k == kAllResults ? "all" : std::to_string(k); }

template <class T>
T parse_number(std::string_view text, const std::string& what) {
  T v{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end || text.empty()) {
    throw SpecError("bad value '" + std::string(text) + "' for " + what);
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

/// "1,2,5" or "1..20" (integers only for ranges).
template <class T>
std::vector<T> parse_values(std::string_view text, const std::string& key) {
  std::vector<T> out;
  if (const auto dots = text.find(".."); dots != std::string_view::npos) {
    const auto lo = parse_number<std::int64_t>(text.substr(0, dots), key);
    const auto hi = parse_number<std::int64_t>(text.substr(dots + 2), key);
    if (hi < lo) throw SpecError("empty range for " + key);
    for (auto v = lo; v <= hi; ++v) out.push_back(static_cast<T>(v));
    return out;
  }
  for (auto part : split(text, ',')) out.push_back(parse_number<T>(part, key));
  return out;
}

}  // namespace

std::string_view family_name(Family f) noexcept { return kFamilyNames[static_cast<int>(f)]; }

std::optional<Family> parse_family(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kFamilyNames.size(); ++i) {
    if (kFamilyNames[i] == name) return static_cast<Family>(i);
  }
  return std::nullopt;
}

ExperimentSpec ExperimentSpec::defaults(Family f) {
  using A = JoinAlgorithm;
  ExperimentSpec e;
  e.family = f;
  switch (f) {
    case Family::Cardinality:
      e.n = {1000, 2000, 5000, 10000};
      e.algorithms = {kAllAlgorithms.begin(), kAllAlgorithms.end()};
      break;
    case Family::TopK:
      e.n = {100'000};
      e.k = {100};
      e.algorithms = {kAllAlgorithms.begin(), kAllAlgorithms.end()};
      break;
    case Family::Spreading:
      e.n = {100'000};
      e.s = {1, 2, 4, 7, 11, 13, 17, 19};
      e.algorithms = {A::Sort, A::Tuple1, A::Tuple2};
      break;
    case Family::TupleCardinality:
      e.n = {100'000};
      e.c = {2, 3, 5, 7, 10};
      e.algorithms = {A::Sort, A::Tuple1, A::Tuple2};
      break;
    case Family::Percentage:
      e.n = {100'000};
      e.p = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
      e.algorithms = {A::Sort, A::Tuple1, A::Tuple2};
      break;
    case Family::QueryTrace:
      e.algorithms = {kAllAlgorithms.begin(), kAllAlgorithms.end()};
      e.trace = true;
      break;
  }
  return e;
}

void ExperimentSpec::validate() const {
  if (repetitions < 1) throw SpecError("repetitions must be >= 1");
  if (algorithms.empty()) throw SpecError("no algorithms selected");
  if (n.empty() || c.empty() || p.empty() || s.empty() || k.empty()) {
    throw SpecError("every grid axis needs at least one value");
  }
  if (trace_every == 0) throw SpecError("trace_every must be >= 1");
  if (family == Family::QueryTrace) {
    authors.validate();
    return;
  }
  for (auto nn : n) {
    for (auto cc : c) {
      for (auto pp : p) {
        for (auto ss : s) {
          // Spreading is moved to the next coprime value at run time, so check that one.
          GenSpec g{nn, cc, pp, cc > 1 ? next_coprime(ss, cc) : ss, seed, payload_bytes};
          g.validate();
        }
      }
    }
  }
  for (auto kk : k) {
    if (kk == 0) throw SpecError("k must be >= 1 or all");
  }
}

void ExperimentSpec::set_grid(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw SpecError("grid assignment needs key=values: " + std::string(assignment));
  }
  const std::string key(assignment.substr(0, eq));
  const auto values = assignment.substr(eq + 1);
  if (key == "n") {
    n = parse_values<std::uint64_t>(values, key);
  } else if (key == "c") {
    c = parse_values<std::uint32_t>(values, key);
  } else if (key == "p") {
    p = parse_values<double>(values, key);
  } else if (key == "s") {
    s = parse_values<std::int64_t>(values, key);
  } else if (key == "k") {
    k.clear();
    for (auto part : split(values, ',')) {
      k.push_back(part == "all" ? kAllResults : parse_number<std::uint64_t>(part, key));
    }
  } else if (key == "authors") {
    authors.authors = parse_number<std::uint64_t>(values, key);
  } else if (key == "institutions") {
    authors.institutions = parse_number<std::uint64_t>(values, key);
  } else {
    throw SpecError("unknown grid key '" + key + "'");
  }
}

std::string format_row(const BenchRow& r) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.3f", r.elapsed_ms);
  std::string out;
  out += family_name(r.family);
  out += ',';
  out += algorithm_name(r.algorithm);
  out += ',' + std::to_string(r.n) + ',' + std::to_string(r.c) + ',' + num(r.p) + ',' +
         std::to_string(r.s) + ',' + k_text(r.k) + ',' + std::to_string(r.rep) + ',' + buf +
         ',' + std::to_string(r.comparisons) + ',' + std::to_string(r.page_reads) + ',' +
         std::to_string(r.page_writes) + ',' + std::to_string(r.result_count);
  return out;
}

BenchRow parse_row(std::string_view text, std::size_t line) {
  if (!text.empty() && text.back() == '\r') text.remove_suffix(1);
  const auto f = split(text, ',');
  if (f.size() != 13) {
    throw SchemaError("expected 13 fields, found " + std::to_string(f.size()), line);
  }
  BenchRow r;
  try {
    auto fam = parse_family(f[0]);
    if (!fam) throw SpecError("unknown family '" + std::string(f[0]) + "'");
    auto algo = parse_algorithm(f[1]);
    if (!algo) throw SpecError("unknown algorithm '" + std::string(f[1]) + "'");
    r.family = *fam;
    r.algorithm = *algo;
    r.n = parse_number<std::uint64_t>(f[2], "n");
    r.c = parse_number<std::uint32_t>(f[3], "c");
    r.p = parse_number<double>(f[4], "p");
    r.s = parse_number<std::int64_t>(f[5], "s");
    r.k = f[6] == "all" ? kAllResults : parse_number<std::uint64_t>(f[6], "k");
    r.rep = parse_number<int>(f[7], "rep");
    r.elapsed_ms = parse_number<double>(f[8], "elapsed_ms");
    r.comparisons = parse_number<std::uint64_t>(f[9], "comparisons");
    r.page_reads = parse_number<std::uint64_t>(f[10], "page_reads");
    r.page_writes = parse_number<std::uint64_t>(f[11], "page_writes");
    r.result_count = parse_number<std::uint64_t>(f[12], "result_count");
  } catch (const SpecError& e) {
    throw SchemaError(e.what(), line);
  }
  return r;
}

JoinRun measure_join(BufferPool& pool, SpillSpace& spill, JoinAlgorithm algo,
                     const Relation& outer, const Relation& inner, const IntervalIndex* index,
                     const RunOptions& opt) {
  if (opt.cold) {
    pool.evict_all();
    pool.reset_counters();
  }
  ExecContext ctx(pool, spill, opt.mem_pages);
  PullOptions pull;
  pull.k = opt.k;
  pull.keep_results = false;
  pull.trace = opt.trace;
  pull.trace_every = opt.trace_every;
  return first_k(make_join(algo, ctx, outer, inner, index), ctx, pull).run;
}

namespace {

struct Point {
  std::uint64_t n;
  std::uint32_t c;
  double p;
  std::int64_t s;
};

std::string run_key(const BenchRow& r) {
  return std::string(family_name(r.family)) + "|" + std::string(algorithm_name(r.algorithm)) +
         "|" + std::to_string(r.n) + "|" + std::to_string(r.c) + "|" + num(r.p) + "|" +
         std::to_string(r.s) + "|" + k_text(r.k) + "|" + std::to_string(r.rep);
}

std::string config_line(const ExperimentSpec& spec) {
  std::ostringstream o;
  o << "# config family=" << family_name(spec.family) << " seed=" << spec.seed
    << " payload=" << spec.payload_bytes << " page=" << spec.page_size
    << " pool=" << spec.pool_pages << " mem=" << spec.mem_pages
    << " cold=" << (spec.cold_cache ? 1 : 0);
  if (spec.family == Family::QueryTrace) {
    o << " authors=" << spec.authors.hash();
  }
  return o.str();
}

void write_trace(const std::filesystem::path& path, const JoinRun& run) {
  std::ofstream out(path, std::ios::trunc);
  out << "elapsed_ms,emitted,comparisons\n";
  char buf[64];
  for (const auto& tp : run.trace) {
    std::snprintf(buf, sizeof buf, "%.3f", tp.elapsed_ms);
    out << buf << ',' << tp.emitted << ',' << tp.comparisons << '\n';
  }
  if (!out) throw std::runtime_error("cannot write trace " + path.string());
}

}  // namespace

BenchSummary run_experiment(const ExperimentSpec& spec, const std::filesystem::path& out_dir,
                            std::ostream* log) {
  spec.validate();
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const fs::path data_dir = spec.data_dir.empty() ? out_dir / "data" : spec.data_dir;
  fs::create_directories(data_dir);
  const fs::path trace_dir = out_dir / "traces";
  const bool tracing = spec.trace || spec.family == Family::QueryTrace;
  if (tracing) fs::create_directories(trace_dir);

  const fs::path csv_path = out_dir / "results.csv";
  const fs::path manifest_path = out_dir / "manifest.txt";
  const fs::path index_csv = out_dir / "index_build.csv";
  const std::string config = config_line(spec);

  // A manifest with the same configuration resumes; anything else starts over.
  std::set<std::string> done;
  bool resume = false;
  if (std::ifstream in(manifest_path); in) {
    std::string line;
    if (std::getline(in, line) && line == config) {
      resume = true;
      while (std::getline(in, line)) {
        if (!line.empty()) done.insert(line);
      }
    }
  }
  if (!resume || !fs::exists(csv_path)) {
    done.clear();
    std::ofstream(manifest_path, std::ios::trunc) << config << '\n';
    std::ofstream(csv_path, std::ios::trunc) << kResultHeader << '\n';
  }
  std::ofstream csv(csv_path, std::ios::app);
  std::ofstream manifest(manifest_path, std::ios::app);
  if (!csv || !manifest) throw std::runtime_error("cannot write to " + out_dir.string());

  BenchSummary summary;
  BufferPool pool(spec.pool_pages, spec.page_size);
  SpillSpace spill;
  const bool wants_index =
      std::find(spec.algorithms.begin(), spec.algorithms.end(), JoinAlgorithm::Index) !=
      spec.algorithms.end();

  std::vector<Point> points;
  if (spec.family == Family::QueryTrace) {
    points.push_back({spec.authors.authors, 1 + spec.authors.extra, 100.0, 0});
  } else {
    for (auto nn : spec.n) {
      for (auto cc : spec.c) {
        for (auto pp : spec.p) {
          for (auto ss : spec.s) {
            std::int64_t s_adj = ss;
            if (cc > 1 && std::gcd(ss, static_cast<std::int64_t>(cc)) != 1) {
              s_adj = next_coprime(ss, cc);
              summary.adjustments.push_back("s=" + std::to_string(ss) + " -> " +
                                            std::to_string(s_adj) + " for c=" +
                                            std::to_string(cc));
              if (log) *log << "note: " << summary.adjustments.back() << '\n';
            }
            Point pt{nn, cc, pp, s_adj};
            const bool dup = std::any_of(points.begin(), points.end(), [&](const Point& q) {
              return q.n == pt.n && q.c == pt.c && q.p == pt.p && q.s == pt.s;
            });
            if (!dup) points.push_back(pt);
          }
        }
      }
    }
  }

  for (const Point& pt : points) {
    // Skip loading the data when every run of the point is already recorded.
    std::vector<BenchRow> todo;
    for (JoinAlgorithm algo : spec.algorithms) {
      for (auto kk : spec.k) {
        for (int rep = 0; rep < spec.repetitions; ++rep) {
          BenchRow r;
          r.family = spec.family;
          r.algorithm = algo;
          r.n = pt.n;
          r.c = pt.c;
          r.p = pt.p;
          r.s = pt.s;
          r.k = spec.family == Family::QueryTrace ? kAllResults : kk;
          r.rep = rep;
          if (done.count(run_key(r)) != 0) {
            ++summary.resumed;
            continue;
          }
          if (std::none_of(todo.begin(), todo.end(),
                           [&](const BenchRow& t) { return run_key(t) == run_key(r); })) {
            todo.push_back(r);
          }
        }
      }
    }
    if (todo.empty()) continue;

    std::optional<DatasetPair> ds;
    std::string tag;
    if (spec.family == Family::QueryTrace) {
      AuthorSpec a = spec.authors;
      a.payload_bytes = spec.payload_bytes;
      ds = generate_authors(pool, a, data_dir);
      tag = "authors";
    } else {
      const GenSpec g{pt.n, pt.c, pt.p, pt.s, spec.seed, spec.payload_bytes};
      ds = open_generated(pool, g, data_dir);
      if (!ds) {
        if (log) *log << "generating " << g.describe() << '\n';
        ds = generate(pool, g, data_dir);
      }
      tag = "n" + std::to_string(pt.n) + "-c" + std::to_string(pt.c) + "-p" + num(pt.p) + "-s" +
            std::to_string(pt.s);
    }

    std::optional<IntervalIndex> index;
    if (wants_index) {
      const fs::path idx_path =
          data_dir / (ds->r2.path().stem().string() + ".idx");
      if (fs::exists(idx_path)) {
        try {
          index = IntervalIndex::open(pool, idx_path, ds->r2);
        } catch (const Error&) {
          index.reset();
        }
      }
      if (!index) {
        pool.evict_all();
        pool.reset_counters();
        const auto t0 = std::chrono::steady_clock::now();
        index = IntervalIndex::build(pool, ds->r2, idx_path);
        pool.flush_all();
        const double ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        const IoCounters io = pool.counters();
        const bool fresh = !fs::exists(index_csv) || fs::file_size(index_csv) == 0;
        std::ofstream ic(index_csv, std::ios::app);
        if (fresh) ic << "family,n,c,p,s,elapsed_ms,page_reads,page_writes,entries\n";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", ms);
        ic << family_name(spec.family) << ',' << pt.n << ',' << pt.c << ',' << num(pt.p) << ','
           << pt.s << ',' << buf << ',' << io.page_reads << ',' << io.page_writes << ','
           << index->size() << '\n';
      }
    }

    for (BenchRow r : todo) {
      RunOptions opt;
      opt.k = r.k;
      opt.cold = spec.cold_cache;
      opt.trace = tracing;
      opt.trace_every = spec.trace_every;
      opt.mem_pages = spec.mem_pages;
      if (!spec.cold_cache) pool.reset_counters();
      const JoinRun run = measure_join(pool, spill, r.algorithm, ds->r1, ds->r2,
                                       index ? &*index : nullptr, opt);
      r.elapsed_ms = run.elapsed_ms;
      r.comparisons = run.comparisons;
      r.page_reads = run.page_reads;
      r.page_writes = run.page_writes;
      r.result_count = run.result_count;

      const std::uint64_t expected =
          r.k == kAllResults ? ds->intended_results : std::min(r.k, ds->intended_results);
      if (r.result_count != expected) {
        summary.mismatches.push_back(run_key(r) + ": " + std::to_string(r.result_count) +
                                     " results, expected " + std::to_string(expected));
        if (log) *log << "MISMATCH " << summary.mismatches.back() << '\n';
      }
      if (tracing) {
        write_trace(trace_dir / (std::string(family_name(r.family)) + "-" +
                                 std::string(algorithm_name(r.algorithm)) + "-" + tag + "-k" +
                                 k_text(r.k) + "-r" + std::to_string(r.rep) + ".csv"),
                    run);
      }
      csv << format_row(r) << '\n';
      csv.flush();
      manifest << run_key(r) << '\n';
      manifest.flush();
      if (!csv || !manifest) throw std::runtime_error("write failed in " + out_dir.string());
      if (log) *log << format_row(r) << '\n';
      summary.rows.push_back(r);
    }
  }
  return summary;
}

}  // namespace ujoin
