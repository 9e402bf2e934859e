#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>

#include "ujoin/bench/bench.hpp"
#include "ujoin/errors.hpp"

namespace ujoin {

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct Series {
  std::vector<double> time;
  std::vector<double> reads;
  std::vector<double> writes;
  std::vector<double> cmp;
};

using Key = std::pair<std::string, double>;  // algo, x

/// Median per (algo, x) over the rows of one family.
std::map<Key, Series> collect(const std::vector<BenchRow>& rows, Family fam,
                              double (*x)(const BenchRow&)) {
  std::map<Key, Series> out;
  for (const auto& r : rows) {
    if (r.family != fam) continue;
    auto& s = out[{std::string(algorithm_name(r.algorithm)), x(r)}];
    s.time.push_back(r.elapsed_ms);
    s.reads.push_back(static_cast<double>(r.page_reads));
    s.writes.push_back(static_cast<double>(r.page_writes));
    s.cmp.push_back(static_cast<double>(r.comparisons));
  }
  return out;
}

void write_xy(const std::filesystem::path& path, const std::string& xname,
              const std::map<Key, Series>& data, bool io) {
  std::ofstream out(path, std::ios::trunc);
  if (io) {
    out << "algo," << xname << ",page_reads,page_writes\n";
  } else {
    out << "algo," << xname << ",elapsed_ms,comparisons\n";
  }
  for (const auto& [key, s] : data) {
    out << key.first << ',' << fmt(key.second) << ',';
    if (io) {
      out << fmt(median(s.reads)) << ',' << fmt(median(s.writes)) << '\n';
    } else {
      out << fmt(median(s.time)) << ',' << fmt(median(s.cmp)) << '\n';
    }
  }
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

std::vector<std::filesystem::path> emit_plot_data(const std::filesystem::path& results_csv,
                                                  const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  std::ifstream in(results_csv);
  if (!in) throw std::runtime_error("cannot read " + results_csv.string());
  std::vector<BenchRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      if (line != kResultHeader) throw SchemaError("unexpected header", 1);
      continue;
    }
    if (line.empty()) continue;
    rows.push_back(parse_row(line, lineno));
  }

  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  auto xy = [&](const char* name, const char* xname, Family fam, double (*x)(const BenchRow&),
                bool io) {
    const fs::path p = out_dir / name;
    write_xy(p, xname, collect(rows, fam, x), io);
    written.push_back(p);
  };
  auto by_n = [](const BenchRow& r) { return static_cast<double>(r.n); };
  auto by_s = [](const BenchRow& r) { return static_cast<double>(r.s); };
  auto by_c = [](const BenchRow& r) { return static_cast<double>(r.c); };
  auto by_p = [](const BenchRow& r) { return r.p; };
  xy("time_vs_n.csv", "n", Family::Cardinality, by_n, false);
  xy("io_vs_n.csv", "n", Family::Cardinality, by_n, true);
  xy("time_vs_s.csv", "s", Family::Spreading, by_s, false);
  xy("io_vs_s.csv", "s", Family::Spreading, by_s, true);
  xy("time_vs_c.csv", "c", Family::TupleCardinality, by_c, false);
  xy("io_vs_c.csv", "c", Family::TupleCardinality, by_c, true);
  xy("time_vs_p.csv", "p", Family::Percentage, by_p, false);

  {
    std::map<std::tuple<std::string, std::uint64_t, std::uint64_t>, Series> topk;
    for (const auto& r : rows) {
      if (r.family != Family::TopK) continue;
      auto& s = topk[{std::string(algorithm_name(r.algorithm)), r.n, r.k}];
      s.time.push_back(r.elapsed_ms);
      s.reads.push_back(static_cast<double>(r.page_reads));
      s.writes.push_back(static_cast<double>(r.page_writes));
      s.cmp.push_back(static_cast<double>(r.comparisons));
    }
    const fs::path p = out_dir / "topk.csv";
    std::ofstream out(p, std::ios::trunc);
    out << "algo,n,k,elapsed_ms,page_reads,page_writes,comparisons\n";
    for (const auto& [key, s] : topk) {
      const auto k = std::get<2>(key);
      out << std::get<0>(key) << ',' << std::get<1>(key) << ','
          << (k == kAllResults ? std::string("all") : std::to_string(k)) << ','
          << fmt(median(s.time)) << ',' << fmt(median(s.reads)) << ',' << fmt(median(s.writes))
          << ',' << fmt(median(s.cmp)) << '\n';
    }
    written.push_back(p);
  }

  {
    // Step series: each sample holds its emitted count until the next sample.
    const fs::path p = out_dir / "trace.csv";
    std::ofstream out(p, std::ios::trunc);
    out << "run,algo,elapsed_ms,emitted\n";
    const fs::path trace_dir = results_csv.parent_path() / "traces";
    std::vector<fs::path> files;
    if (fs::is_directory(trace_dir)) {
      for (const auto& e : fs::directory_iterator(trace_dir)) {
        if (e.path().extension() == ".csv") files.push_back(e.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      const std::string run = f.stem().string();
      // <family>-<algo>-...
      std::string algo;
      if (const auto a = run.find('-'); a != std::string::npos) {
        algo = run.substr(a + 1, run.find('-', a + 1) - a - 1);
      }
      std::ifstream tin(f);
      std::string tl;
      std::size_t tno = 0;
      std::string prev_emitted;
      while (std::getline(tin, tl)) {
        ++tno;
        if (tno == 1) {
          if (tl.rfind("elapsed_ms,emitted", 0) != 0) {
            throw SchemaError("unexpected trace header in " + f.filename().string(), 1);
          }
          continue;
        }
        if (tl.empty()) continue;
        const auto c1 = tl.find(',');
        const auto c2 = tl.find(',', c1 == std::string::npos ? c1 : c1 + 1);
        if (c1 == std::string::npos) {
          throw SchemaError("malformed trace row in " + f.filename().string(), tno);
        }
        const std::string t = tl.substr(0, c1);
        const std::string emitted = tl.substr(c1 + 1, c2 == std::string::npos ? c2 : c2 - c1 - 1);
        if (!prev_emitted.empty()) out << run << ',' << algo << ',' << t << ',' << prev_emitted << '\n';
        out << run << ',' << algo << ',' << t << ',' << emitted << '\n';
        prev_emitted = emitted;
      }
    }
    written.push_back(p);
  }
  return written;
}

}  // namespace ujoin
