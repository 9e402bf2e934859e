#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "ujoin/bench/bench.hpp"
#include "ujoin/errors.hpp"
#include "ujoin/generator/generator.hpp"
#include "ujoin/joins/interval_index.hpp"
#include "ujoin/joins/join.hpp"
#include "ujoin/planner/planner.hpp"

namespace fs = std::filesystem;
using namespace ujoin;

namespace {

std::uint64_t parse_k(const std::string& text) {
  if (text.empty() || text == "all") return kAllResults;
  const auto k = std::stoull(text);
  if (k == 0) throw SpecError("--k must be >= 1 or all");
  return k;
}

std::vector<JoinAlgorithm> parse_algorithms(const std::string& list) {
  std::vector<JoinAlgorithm> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const auto comma = list.find(',', start);
    const auto name = list.substr(start, comma == std::string::npos ? comma : comma - start);
    auto a = parse_algorithm(name);
    if (!a) throw SpecError("unknown algorithm '" + name + "'");
    out.push_back(*a);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

void print_stats(const std::string& label, const RelationStats& s) {
  std::printf("%s: n=%llu avg_card=%.4f max_card=%u pct_uncertain=%.4f avg_overlap=%.4f "
              "flat_rows=%.0f pages=%llu has_index=%d\n",
              label.c_str(), static_cast<unsigned long long>(s.n), s.avg_card, s.max_card,
              s.pct_uncertain, s.avg_overlap, s.flat_rows,
              static_cast<unsigned long long>(s.pages), s.has_index ? 1 : 0);
}

Calibration load_calibration(const std::string& path) {
  if (!path.empty()) return Calibration::load(path);
  if (fs::exists(UJOIN_DEFAULT_CALIBRATION)) return Calibration::load(UJOIN_DEFAULT_CALIBRATION);
  return Calibration::defaults();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ujoin: joins over relations with uncertain (multi-valued) join attributes"};
  app.require_subcommand(1);

  // gen
  GenSpec gspec;
  std::string gen_out = ".";
  bool gen_authors = false;
  AuthorSpec aspec;
  auto* gen = app.add_subcommand("gen", "generate a synthetic relation pair");
  gen->add_option("--n", gspec.n, "tuples per relation");
  gen->add_option("--c", gspec.c, "alternatives of an uncertain tuple");
  gen->add_option("--p", gspec.p, "percentage of uncertain tuples (0..100)");
  gen->add_option("--s", gspec.s, "spreading stretch factor");
  gen->add_option("--seed", gspec.seed);
  gen->add_option("--payload", gspec.payload_bytes, "payload bytes per tuple");
  gen->add_option("--out", gen_out, "output directory");
  gen->add_flag("--authors", gen_authors, "author/institution workload instead");
  gen->add_option("--num-authors", aspec.authors);
  gen->add_option("--institutions", aspec.institutions);

  // join
  std::string algo_name = "auto", left, right, index_path, trace_path, cal_path;
  std::string k_text = "all";
  bool cold = false;
  std::size_t mem_pages = 16384, pool_pages = 4096;
  std::size_t print_n = 0;
  auto* join = app.add_subcommand("join", "join two relation files");
  join->add_option("--algo", algo_name, "nl|base|sort|tuple1|tuple2|index|auto");
  join->add_option("--left", left, "outer relation")->required();
  join->add_option("--right", right, "inner relation")->required();
  join->add_option("--k", k_text, "results to fetch (default all)");
  join->add_flag("--cold", cold, "start from an empty buffer pool");
  join->add_option("--mem-pages", mem_pages, "operator memory in pages");
  join->add_option("--pool-pages", pool_pages, "buffer pool frames");
  join->add_option("--index", index_path, "interval index on the inner relation");
  join->add_option("--trace", trace_path, "write (elapsed_ms,emitted,comparisons) samples");
  join->add_option("--calibration", cal_path, "planner calibration file");
  join->add_option("--print", print_n, "print the first N result pairs");

  // stats
  std::string stats_rel, stats_partner;
  auto* stats = app.add_subcommand("stats", "relation statistics used by the planner");
  stats->add_option("--rel", stats_rel)->required();
  stats->add_option("--partner", stats_partner, "join partner for the overlap statistic");

  // bench
  std::string family_text, bench_out = "bench-out", algos_text;
  std::vector<std::string> grid;
  int reps = 1;
  bool warm = false, plot_after = false;
  std::uint64_t bench_seed = 1;
  auto* bench = app.add_subcommand("bench", "run an experiment family");
  bench->add_option("--family", family_text,
                    "cardinality|top_k|spreading|tuple_cardinality|percentage|query_trace")
      ->required();
  bench->add_option("--grid", grid, "axis override, e.g. n=1000,10000 or s=1..20");
  bench->add_option("--algos", algos_text, "comma-separated subset");
  bench->add_option("--reps", reps);
  bench->add_option("--seed", bench_seed);
  bench->add_option("--mem-pages", mem_pages);
  bench->add_option("--pool-pages", pool_pages);
  bench->add_flag("--warm", warm, "keep the pool between runs");
  bench->add_flag("--plot", plot_after, "emit plot data into <out>/plot");
  bench->add_option("--out", bench_out);

  // calibrate
  std::string cal_out, cal_work = "calibration-work", profile = "default";
  CalibrationPlan plan;
  auto* cal = app.add_subcommand("calibrate", "fit the planner constants on a bench grid");
  cal->add_option("--out", cal_out)->required();
  cal->add_option("--work", cal_work, "dataset directory");
  cal->add_option("--profile", profile, "machine profile name");
  cal->add_option("--reps", plan.repetitions);

  // load
  std::string csv_in, load_out;
  CsvOptions csv_opt;
  auto* load = app.add_subcommand("load", "build a relation from CSV");
  load->add_option("--csv", csv_in)->required();
  load->add_option("--out", load_out)->required();
  load->add_flag("--header", csv_opt.header);
  load->add_flag("--sequential-xid", csv_opt.sequential_xid);
  load->add_option("--decimals", csv_opt.decimal_places);

  // plot
  std::string plot_csv, plot_out = "plot";
  auto* plot = app.add_subcommand("plot", "reshape bench CSV into per-figure files");
  plot->add_option("--csv", plot_csv)->required();
  plot->add_option("--out", plot_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      fs::create_directories(gen_out);
      BufferPool pool(1024);
      DatasetPair ds = gen_authors ? generate_authors(pool, aspec, gen_out)
                                   : generate(pool, gspec, gen_out);
      std::cout << ds.r1.path().string() << "\n" << ds.r2.path().string() << "\n";
      std::cout << "intended_results=" << ds.intended_results << "\n";
      return 0;
    }

    if (*join) {
      BufferPool pool(pool_pages);
      SpillSpace spill;
      Relation r1 = Relation::open(pool, left);
      Relation r2 = Relation::open(pool, right);
      const std::uint64_t k = parse_k(k_text);

      std::optional<IntervalIndex> index;
      const fs::path idx = index_path.empty() ? fs::path(right).replace_extension(".idx")
                                              : fs::path(index_path);
      if (fs::exists(idx)) index = IntervalIndex::open(pool, idx, r2);

      JoinAlgorithm algo;
      if (algo_name == "auto") {
        const Calibration c = load_calibration(cal_path);
        const RelationStats s1 = collect_stats(r1, &r2);
        const RelationStats s2 = collect_stats(r2, &r1, index.has_value());
        PlannerEnv env{pool.page_size(), pool_pages, mem_pages};
        algo = choose_algorithm(s1, s2, k, c, env);
        std::cerr << "auto: chose " << algorithm_name(algo)
                  << (c.calibrated ? "" : " (uncalibrated constants)") << "\n";
      } else {
        auto a = parse_algorithm(algo_name);
        if (!a) throw SpecError("unknown algorithm '" + algo_name + "'");
        algo = *a;
      }
      if (algo == JoinAlgorithm::Index && !index) {
        std::cerr << "building index " << idx << "\n";
        index = IntervalIndex::build(pool, r2, idx);
        pool.flush_all();
      }
      if (cold) {
        pool.evict_all();
      }
      pool.reset_counters();
      ExecContext ctx(pool, spill, mem_pages);
      PullOptions opt;
      opt.k = k;
      opt.keep_results = print_n > 0;
      opt.trace = !trace_path.empty();
      PullResult res =
          first_k(make_join(algo, ctx, r1, r2, index ? &*index : nullptr), ctx, opt);
      for (std::size_t i = 0; i < std::min(print_n, res.results.size()); ++i) {
        std::cout << res.results[i].xid1 << "," << res.results[i].xid2 << "\n";
      }
      const JoinRun& run = res.run;
      std::printf("algo=%s results=%llu elapsed_ms=%.3f comparisons=%llu page_reads=%llu "
                  "page_writes=%llu\n",
                  std::string(algorithm_name(algo)).c_str(),
                  static_cast<unsigned long long>(run.result_count), run.elapsed_ms,
                  static_cast<unsigned long long>(run.comparisons),
                  static_cast<unsigned long long>(run.page_reads),
                  static_cast<unsigned long long>(run.page_writes));
      if (!trace_path.empty()) {
        std::ofstream out(trace_path);
        out << "elapsed_ms,emitted,comparisons\n";
        for (const auto& tp : run.trace) {
          out << tp.elapsed_ms << "," << tp.emitted << "," << tp.comparisons << "\n";
        }
      }
      return 0;
    }

    if (*stats) {
      BufferPool pool(1024);
      Relation rel = Relation::open(pool, stats_rel);
      std::optional<Relation> partner;
      if (!stats_partner.empty()) partner = Relation::open(pool, stats_partner);
      const bool has_index = fs::exists(fs::path(stats_rel).replace_extension(".idx"));
      print_stats(rel.name(), collect_stats(rel, partner ? &*partner : nullptr, has_index));
      return 0;
    }

    if (*bench) {
      auto fam = parse_family(family_text);
      if (!fam) throw SpecError("unknown family '" + family_text + "'");
      ExperimentSpec spec = ExperimentSpec::defaults(*fam);
      for (const auto& g : grid) spec.set_grid(g);
      if (!algos_text.empty()) spec.algorithms = parse_algorithms(algos_text);
      spec.repetitions = reps;
      spec.seed = bench_seed;
      spec.cold_cache = !warm;
      spec.mem_pages = mem_pages;
      spec.pool_pages = pool_pages;
      const BenchSummary sum = run_experiment(spec, bench_out, &std::cerr);
      std::cerr << sum.rows.size() << " runs, " << sum.resumed << " resumed from manifest\n";
      if (plot_after) emit_plot_data(fs::path(bench_out) / "results.csv", fs::path(bench_out) / "plot");
      if (!sum.mismatches.empty()) {
        std::cerr << sum.mismatches.size() << " result-count mismatches\n";
        return 1;
      }
      return 0;
    }

    if (*cal) {
      plan.profile = profile;
      plan.pool_pages = pool_pages;
      plan.mem_pages = mem_pages;
      const Calibration c = calibrate(plan, cal_work, &std::cerr);
      c.save(cal_out);
      std::cerr << "wrote " << cal_out << "\n";
      return 0;
    }

    if (*load) {
      BufferPool pool(1024);
      if (csv_opt.name.empty()) csv_opt.name = fs::path(load_out).stem().string();
      CsvLoad res = load_csv(pool, csv_in, load_out, csv_opt);
      for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << res.relation.tuple_count() << " tuples -> " << load_out << "\n";
      return 0;
    }

    if (*plot) {
      for (const auto& p : emit_plot_data(plot_csv, plot_out)) std::cout << p.string() << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
