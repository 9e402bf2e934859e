#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "test_util.hpp"
#include "ujoin/errors.hpp"
#include "ujoin/generator/generator.hpp"
#include "ujoin/planner/planner.hpp"

namespace ujoin {
namespace {

using testing::TempDir;

RelationStats synthetic(std::uint64_t n, double card, double pct, double overlap,
                        bool index = false) {
  RelationStats s;
  s.n = n;
  s.avg_card = card;
  s.max_card = static_cast<std::uint32_t>(std::ceil(card));
  s.pct_uncertain = pct;
  s.avg_overlap = overlap;
  s.flat_rows = static_cast<double>(n) * card;
  s.has_index = index;
  s.avg_record_bytes = 26.0 + 1.0 * card;
  s.pages = static_cast<std::uint64_t>(std::ceil(n * (s.avg_record_bytes + 4) / 8184.0));
  return s;
}

std::vector<Calibration> calibrations() {
  std::vector<Calibration> out{Calibration::defaults()};
  const std::filesystem::path shipped = UJOIN_SOURCE_DIR "/config/calibration.cfg";
  if (std::filesystem::exists(shipped)) out.push_back(Calibration::load(shipped));
  return out;
}

TEST(Stats, WorkingExample) {
  TempDir dir;
  BufferPool pool(64);
  Relation rel = testing::write_relation(pool, dir / "w.rel", testing::working_example());
  const RelationStats s = collect_stats(rel);
  EXPECT_EQ(s.n, 6u);
  EXPECT_DOUBLE_EQ(s.avg_card, 19.0 / 6.0);
  EXPECT_EQ(s.max_card, 4u);
  EXPECT_DOUBLE_EQ(s.pct_uncertain, 1.0);
  EXPECT_DOUBLE_EQ(s.flat_rows, 19.0);
  EXPECT_FALSE(s.has_index);
  EXPECT_EQ(s.pages, rel.data_pages());

  // Self-overlap by brute force over the ranges.
  const auto tuples = testing::working_example();
  double total = 0;
  for (const auto& a : tuples) {
    for (const auto& b : tuples) total += ranges_overlap(bounds(a.val), bounds(b.val)) ? 1 : 0;
  }
  EXPECT_DOUBLE_EQ(s.avg_overlap, total / 6.0);
}

TEST(Stats, AllCertain) {
  TempDir dir;
  BufferPool pool(64);
  std::vector<UTuple> t;
  for (Xid i = 0; i < 50; ++i) t.push_back({i, UncertainValue{static_cast<Value>(i * 3)}, "p"});
  Relation rel = testing::write_relation(pool, dir / "c.rel", t);
  const RelationStats s = collect_stats(rel);
  EXPECT_DOUBLE_EQ(s.avg_card, 1.0);
  EXPECT_EQ(s.max_card, 1u);
  EXPECT_DOUBLE_EQ(s.pct_uncertain, 0.0);
  EXPECT_DOUBLE_EQ(s.avg_overlap, 1.0);
}

TEST(Stats, GeneratedHalfUncertain) {
  TempDir dir;
  BufferPool pool(256);
  const GenSpec spec{1000, 3, 50, 1, 11};
  DatasetPair d = generate(pool, spec, dir.path());
  const RelationStats s = collect_stats(d.r1, &d.r2);

  std::uint64_t uncertain = 0;
  for (const UTuple& t : generate_tuples(spec)) uncertain += t.val.cardinality() > 1 ? 1 : 0;
  EXPECT_DOUBLE_EQ(s.pct_uncertain, static_cast<double>(uncertain) / 1000.0);
  EXPECT_NEAR(s.pct_uncertain, 0.5, 4 * std::sqrt(0.25 / 1000));
  EXPECT_DOUBLE_EQ(s.flat_rows, 1000.0 + 2.0 * static_cast<double>(uncertain));
  EXPECT_DOUBLE_EQ(s.avg_overlap, 1.0);
}

TEST(Stats, InvariantsOnRandomRelations) {
  TempDir dir;
  BufferPool pool(128);
  std::mt19937_64 rng(5);
  for (int round = 0; round < 20; ++round) {
    const auto t1 = testing::random_tuples(rng, 1 + rng() % 150, 1 + rng() % 6, 400);
    const auto t2 = testing::random_tuples(rng, 1 + rng() % 150, 1 + rng() % 6, 400);
    Relation r1 = testing::write_relation(pool, dir / ("a" + std::to_string(round)), t1);
    Relation r2 = testing::write_relation(pool, dir / ("b" + std::to_string(round)), t2);
    const RelationStats s = collect_stats(r1, &r2);
    EXPECT_GE(s.avg_card, 1.0);
    EXPECT_LE(s.avg_card, s.max_card);
    EXPECT_GE(s.pct_uncertain, 0.0);
    EXPECT_LE(s.pct_uncertain, 1.0);
    double total = 0;
    for (const auto& a : t1) {
      for (const auto& b : t2) total += ranges_overlap(bounds(a.val), bounds(b.val)) ? 1 : 0;
    }
    EXPECT_DOUBLE_EQ(s.avg_overlap, total / static_cast<double>(t1.size()));
    // Self-join statistics always see at least the tuple itself.
    EXPECT_GE(collect_stats(r1).avg_overlap, 1.0);
  }
}

TEST(Estimate, NonNegativeAndFlagged) {
  const auto s = synthetic(100000, 3, 1, 5);
  for (const auto& cal : calibrations()) {
    for (JoinAlgorithm a : kAllAlgorithms) {
      for (std::uint64_t k : {std::uint64_t{100}, kAllResults}) {
        const CostEstimate e = estimate(a, s, s, k, cal);
        EXPECT_EQ(e.algorithm, a);
        EXPECT_GE(e.est_page_ios, 0);
        EXPECT_GE(e.est_comparisons, 0);
        EXPECT_GE(e.est_ms, 0);
        EXPECT_EQ(e.calibrated, cal.calibrated);
      }
    }
  }
  EXPECT_FALSE(estimate(JoinAlgorithm::Sort, s, s, kAllResults).calibrated);
}

TEST(Estimate, IndexCheapestForTopK) {
  for (const auto& cal : calibrations()) {
    for (std::uint64_t n : {10'000u, 100'000u, 1'000'000u}) {
      for (double ov : {1.0, 7.0, 25.0}) {
        const auto s1 = synthetic(n, 3, 1, ov);
        const auto s2 = synthetic(n, 3, 1, ov, true);
        const double idx = estimate(JoinAlgorithm::Index, s1, s2, 100, cal).est_ms;
        for (JoinAlgorithm a : kAllAlgorithms) {
          if (a == JoinAlgorithm::Index) continue;
          EXPECT_LT(idx, estimate(a, s1, s2, 100, cal).est_ms)
              << algorithm_name(a) << " n=" << n << " ov=" << ov;
        }
        EXPECT_EQ(choose_algorithm(s1, s2, 100, cal), JoinAlgorithm::Index);
      }
    }
  }
}

TEST(Estimate, SortNoWorseThanTupleWithoutSpreading) {
  for (const auto& cal : calibrations()) {
    for (double card : {2.0, 3.0, 5.0}) {
      const auto s = synthetic(100000, card, 1, 1.0);
      const double sort = estimate(JoinAlgorithm::Sort, s, s, kAllResults, cal).est_ms;
      EXPECT_LE(sort, estimate(JoinAlgorithm::Tuple1, s, s, kAllResults, cal).est_ms);
      EXPECT_LE(sort, estimate(JoinAlgorithm::Tuple2, s, s, kAllResults, cal).est_ms);
    }
  }
}

TEST(Estimate, TupleBeatsSortUnderHugeSpreading) {
  for (const auto& cal : calibrations()) {
    const auto s = synthetic(100000, 3, 1, 100000 / 10.0);
    const double sort = estimate(JoinAlgorithm::Sort, s, s, kAllResults, cal).est_ms;
    EXPECT_LT(estimate(JoinAlgorithm::Tuple1, s, s, kAllResults, cal).est_ms, sort);
    EXPECT_LT(estimate(JoinAlgorithm::Tuple2, s, s, kAllResults, cal).est_ms, sort);
    const auto pick = choose_algorithm(s, s, kAllResults, cal);
    EXPECT_TRUE(pick == JoinAlgorithm::Tuple1 || pick == JoinAlgorithm::Tuple2);
  }
}

TEST(Choose, CertainInputsPickSort) {
  for (const auto& cal : calibrations()) {
    for (std::uint64_t n : {1000u, 100000u, 1000000u}) {
      const auto s = synthetic(n, 1, 0, 1);
      EXPECT_EQ(choose_algorithm(s, s, kAllResults, cal), JoinAlgorithm::Sort) << n;
    }
  }
}

TEST(Choose, IndexNeedsAnIndex) {
  const auto s = synthetic(100000, 3, 1, 3);
  for (std::uint64_t k : {std::uint64_t{1}, std::uint64_t{100}, kAllResults}) {
    EXPECT_NE(choose_algorithm(s, s, k), JoinAlgorithm::Index);
  }
}

TEST(Choose, NeverNestedLoop) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 500; ++i) {
    const auto s1 = synthetic(1 + rng() % 2'000'000, 1 + (rng() % 90) / 10.0, 1,
                              1 + static_cast<double>(rng() % 5000), rng() % 2 == 0);
    const auto s2 = synthetic(1 + rng() % 2'000'000, 1 + (rng() % 90) / 10.0, 1,
                              1 + static_cast<double>(rng() % 5000), rng() % 2 == 0);
    const std::uint64_t k = rng() % 2 == 0 ? kAllResults : 1 + rng() % 1000;
    EXPECT_NE(choose_algorithm(s1, s2, k), JoinAlgorithm::NestedLoop);
  }
}

TEST(Choose, PureFunction) {
  const auto s1 = synthetic(54321, 2.5, 0.7, 4.2);
  const auto s2 = synthetic(12345, 3.5, 0.9, 1.3, true);
  for (const auto& cal : calibrations()) {
    const auto first = choose_algorithm(s1, s2, 77, cal);
    for (int i = 0; i < 10; ++i) EXPECT_EQ(choose_algorithm(s1, s2, 77, cal), first);
    const auto e1 = estimate(JoinAlgorithm::Sort, s1, s2, kAllResults, cal);
    const auto e2 = estimate(JoinAlgorithm::Sort, s1, s2, kAllResults, cal);
    EXPECT_EQ(e1.est_ms, e2.est_ms);
  }
}

// Scaling both sides by the same factor keeps the Sort/Tuple decision while every input and
// temporary stays in the same regime (here: resident in the pool, sorts in memory).
TEST(Choose, ScalingKeepsSortVersusTuple) {
  PlannerEnv env;
  env.pool_pages = 1u << 20;
  env.mem_pages = 1u << 20;
  for (const auto& cal : calibrations()) {
    for (double card : {1.0, 2.0, 3.0, 5.0, 10.0}) {
      for (double ov : {1.0, 3.0, 9.0, 30.0, 300.0}) {
        auto decide = [&](std::uint64_t n) {
          const auto s = synthetic(n, card, card > 1 ? 1 : 0, ov);
          const double sort = estimate(JoinAlgorithm::Sort, s, s, kAllResults, cal, env).est_ms;
          const double tup = std::min(
              estimate(JoinAlgorithm::Tuple1, s, s, kAllResults, cal, env).est_ms,
              estimate(JoinAlgorithm::Tuple2, s, s, kAllResults, cal, env).est_ms);
          return sort <= tup;
        };
        const bool base = decide(10'000);
        for (std::uint64_t n : {20'000u, 50'000u, 100'000u, 400'000u}) {
          EXPECT_EQ(decide(n), base) << "card=" << card << " ov=" << ov << " n=" << n;
        }
      }
    }
  }
}

TEST(Calibration, RoundTrip) {
  TempDir dir;
  Calibration c = Calibration::defaults();
  c.profile = "test-box";
  c.calibrated = true;
  c.at(JoinAlgorithm::Sort) = {0.5, 1.25e-6, 3e-7};
  c.extra["note"] = "kept";
  c.save(dir / "cal.cfg");
  const Calibration back = Calibration::load(dir / "cal.cfg");
  EXPECT_EQ(back.profile, "test-box");
  EXPECT_TRUE(back.calibrated);
  for (JoinAlgorithm a : kAllAlgorithms) {
    EXPECT_DOUBLE_EQ(back.at(a).io, c.at(a).io);
    EXPECT_DOUBLE_EQ(back.at(a).cmp, c.at(a).cmp);
    EXPECT_DOUBLE_EQ(back.at(a).row, c.at(a).row);
  }
  EXPECT_EQ(back.extra.at("note"), "kept");
}

TEST(Calibration, Malformed) {
  TempDir dir;
  {
    std::ofstream out(dir / "bad.cfg");
    out << "# comment\nprofile=x\n\nsort.io=abc\n";
  }
  try {
    Calibration::load(dir / "bad.cfg");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4);
  }
  {
    std::ofstream out(dir / "neg.cfg");
    out << "tuple1.cmp=-1\n";
  }
  EXPECT_THROW(Calibration::load(dir / "neg.cfg"), ParseError);
  {
    std::ofstream out(dir / "noeq.cfg");
    out << "sort.io 1\n";
  }
  EXPECT_THROW(Calibration::load(dir / "noeq.cfg"), ParseError);
  EXPECT_THROW(Calibration::load(dir / "missing.cfg"), std::runtime_error);
  {
    std::ofstream out(dir / "partial.cfg");
    out << "sort.io=2\n";
  }
  EXPECT_FALSE(Calibration::load(dir / "partial.cfg").calibrated);
}

TEST(Calibration, FitRecoversKnownCoefficients) {
  // Samples timed by a known linear law must fit back to that law.
  Calibration truth = Calibration::defaults();
  truth.at(JoinAlgorithm::Sort) = {0.02, 3e-4, 7e-4};
  truth.at(JoinAlgorithm::Tuple1) = {0.0, 2e-4, 1e-3};
  std::vector<CalibrationSample> samples;
  for (std::uint64_t n : {10'000u, 40'000u, 100'000u}) {
    for (double card : {2.0, 3.0, 7.0}) {
      for (double ov : {1.0, 5.0, 13.0}) {
        const auto s = synthetic(n, card, 1, ov);
        for (JoinAlgorithm a : {JoinAlgorithm::Sort, JoinAlgorithm::Tuple1}) {
          samples.push_back({a, s, s, kAllResults, estimate(a, s, s, kAllResults, truth).est_ms});
        }
      }
    }
  }
  const Calibration fit = fit_calibration(samples);
  EXPECT_TRUE(fit.calibrated);
  for (const auto& smp : samples) {
    const double pred = estimate(smp.algorithm, smp.s1, smp.s2, smp.k, fit).est_ms;
    EXPECT_NEAR(pred / smp.elapsed_ms, 1.0, 0.02);
  }
  // Untouched algorithms keep their starting coefficients.
  EXPECT_EQ(fit.at(JoinAlgorithm::Index).cmp, Calibration::defaults().at(JoinAlgorithm::Index).cmp);
}

}  // namespace
}  // namespace ujoin
