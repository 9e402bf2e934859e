#include <algorithm>
#include <numeric>
#include <ostream>

#include "ujoin/bench/bench.hpp"

namespace ujoin {

Calibration calibrate(const CalibrationPlan& plan, const std::filesystem::path& work_dir,
                      std::ostream* log) {
  namespace fs = std::filesystem;
  fs::create_directories(work_dir);
  BufferPool pool(plan.pool_pages, plan.page_size);
  SpillSpace spill;
  PlannerEnv env{plan.page_size, plan.pool_pages, plan.mem_pages};
  std::vector<CalibrationSample> samples;

  auto measure = [&](JoinAlgorithm algo, const DatasetPair& ds, const IntervalIndex* idx,
                     const RelationStats& s1, const RelationStats& s2, std::uint64_t k) {
    RunOptions opt;
    opt.k = k;
    opt.mem_pages = plan.mem_pages;
    double best = 0;
    for (int rep = 0; rep < plan.repetitions; ++rep) {
      const JoinRun run = measure_join(pool, spill, algo, ds.r1, ds.r2, idx, opt);
      best = rep == 0 ? run.elapsed_ms : std::min(best, run.elapsed_ms);
    }
    samples.push_back({algo, s1, s2, k, best});
    if (log) {
      *log << algorithm_name(algo) << " n=" << s1.n << " card=" << s1.avg_card
           << " overlap=" << s1.avg_overlap << " k="
           << (k == kAllResults ? std::string("all") : std::to_string(k)) << ": " << best
           << " ms\n";
    }
  };

  std::vector<GenSpec> specs;
  for (auto n : plan.n) {
    for (auto c : plan.c) {
      for (auto s : plan.s) {
        const std::int64_t adj = c > 1 ? next_coprime(s, c) : 1;  // spread is moot when certain
        GenSpec g{n, c, 100.0, adj, plan.seed};
        const bool dup = std::any_of(specs.begin(), specs.end(),
                                     [&](const GenSpec& o) { return o.hash() == g.hash(); });
        if (!dup) specs.push_back(g);
      }
    }
  }
  for (const GenSpec& g : specs) {
    std::optional<DatasetPair> ds = open_generated(pool, g, work_dir);
    if (!ds) ds = generate(pool, g, work_dir);
    IntervalIndex idx = IntervalIndex::build(pool, ds->r2, work_dir / (ds->r2.path().stem().string() + ".idx"));
    const RelationStats s1 = collect_stats(ds->r1, &ds->r2);
    const RelationStats s2 = collect_stats(ds->r2, &ds->r1, true);
    for (JoinAlgorithm a : {JoinAlgorithm::Sort, JoinAlgorithm::Tuple1, JoinAlgorithm::Tuple2,
                            JoinAlgorithm::Index}) {
      measure(a, *ds, &idx, s1, s2, kAllResults);
    }
    if (g.n == plan.topk_n) {
      for (JoinAlgorithm a : kAllAlgorithms) measure(a, *ds, &idx, s1, s2, 100);
    }
  }
  Calibration cal = fit_calibration(samples, Calibration::defaults(), env);
  cal.profile = plan.profile;
  cal.extra["grid.n"] = std::accumulate(
      std::next(plan.n.begin()), plan.n.end(), std::to_string(plan.n.front()),
      [](std::string a, std::uint64_t b) { return a + "," + std::to_string(b); });
  cal.extra["grid.samples"] = std::to_string(samples.size());
  cal.extra["env.pool_pages"] = std::to_string(plan.pool_pages);
  cal.extra["env.mem_pages"] = std::to_string(plan.mem_pages);
  if (log) {
    for (const auto& smp : samples) {
      const double pred = estimate(smp.algorithm, smp.s1, smp.s2, smp.k, cal, env).est_ms;
      *log << "fit " << algorithm_name(smp.algorithm) << " n=" << smp.s1.n
           << " card=" << smp.s1.avg_card << " ov=" << smp.s1.avg_overlap << " k="
           << (smp.k == kAllResults ? std::string("all") : std::to_string(smp.k))
           << " measured=" << smp.elapsed_ms << " predicted=" << pred << '\n';
    }
  }
  return cal;
}

}  // namespace ujoin
