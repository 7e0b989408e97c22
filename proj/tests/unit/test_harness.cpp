#include <doctest.h>

#include <atomic>
#include <cmath>
#include <set>
#include <stdexcept>

#include "impactpath/error.hpp"
#include "impactpath/harness.hpp"

using namespace impactpath;

namespace {

struct Setup {
  SphericalGrid grid = build_grid(8, 16, 8, 1.0, 1000.0);
  ModelParams params;
  EruptionSpec eruption;
  std::vector<QoiSpec> registry = registry_canonical();
  ExperimentPlan plan;

  Setup() {
    params.n_steps = 60;
    eruption.day = 2.0;
    plan.masses_tg = {5.0, 20.0};
    plan.experiments = {{"A", 0.5, 1.0}, {"B", 0.5, 2.0}};
    plan.n_members = 3;
    plan.baseline_members = 4;
    plan.seed = 99;
  }
};

}  // namespace

TEST_CASE("default experiments and plan validation") {
  const auto ex = default_experiments();
  REQUIRE(ex.size() == 4);
  CHECK(ex[0] == ExperimentSpec{"Ex1", 0.5, 0.75});
  CHECK(ex[3] == ExperimentSpec{"Ex4", 0.5, 2.0});
  ExperimentPlan p;
  CHECK_NOTHROW(p.validate());
  CHECK(p.masses_tg == std::vector<double>{5.0, 10.0, 20.0});
  p.n_members = 1;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = ExperimentPlan{};
  p.experiments.push_back(p.experiments.front());
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = ExperimentPlan{};
  p.masses_tg = {};
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = ExperimentPlan{};
  p.experiments[0].t_lower = 3.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("member seeds") {
  std::set<std::uint64_t> seen;
  for (std::size_t i = 0; i < 50; ++i) {
    const auto s = member_seed(1, kEruptionSeedTag, i);
    CHECK(s.member_index == i);
    CHECK(seen.insert(s.seed).second);
    CHECK(s == member_seed(1, kEruptionSeedTag, i));
    CHECK(s.seed != member_seed(1, kBaselineSeedTag, i).seed);
    CHECK(s.seed != member_seed(2, kEruptionSeedTag, i).seed);
  }
}

TEST_CASE("tracker hook sequencing") {
  Setup s;
  TrackerHook hook(s.grid, s.registry, base_dag_canonical());
  const Surrogate model(s.grid, s.params, s.eruption);
  auto st = model.initialize({1, 0});
  st.step = 1;
  CHECK_THROWS_AS(hook(st), ConfigError);
  st.step = 0;
  hook(st);
  CHECK(hook.steps_observed() == 1);
  CHECK_THROWS_AS(hook.add_channel("late", {}), ConfigError);
  CHECK_THROWS_AS(hook.accumulate_baseline(10), ConfigError);

  auto reversed = s.registry;
  std::swap(reversed[0], reversed[1]);
  CHECK_THROWS_AS(TrackerHook(s.grid, reversed, base_dag_canonical()), ConfigError);

  TrackerHook dup(s.grid, s.registry, base_dag_canonical());
  const std::vector<BoundsTest> tests(16, BoundsTest::absolute(0.0, 1.0));
  dup.add_channel("x", tests);
  CHECK_THROWS_AS(dup.add_channel("x", tests), ConfigError);
}

TEST_CASE("baseline ensemble matches a direct two-pass computation and is thread-count invariant") {
  Setup s;
  HarnessOptions one;
  one.threads = 1;
  HarnessOptions many;
  many.threads = 3;
  const auto a = run_baseline_ensemble(s.plan, s.params, s.eruption, s.grid, s.registry, one);
  const auto b = run_baseline_ensemble(s.plan, s.params, s.eruption, s.grid, s.registry, many);
  REQUIRE(a.size() == 16);
  for (std::size_t l = 0; l < 16; ++l) {
    CHECK(a[l].qoi_id() == s.registry[l].id);
    for (std::size_t m = 0; m <= s.params.n_steps; ++m) {
      CHECK(a[l].count(m) == 4);
      CHECK(a[l].mean(m) == b[l].mean(m));
      CHECK(a[l].m2(m) == b[l].m2(m));
    }
  }

  // Oracle: rerun each member by hand, record T(e), and take the two-pass moments.
  EruptionSpec quiet = s.eruption;
  quiet.mass_tg = 0.0;
  const Surrogate model(s.grid, s.params, quiet);
  const QoiEvaluator ev(s.grid, s.registry);
  std::vector<std::vector<double>> values(s.params.n_steps + 1);
  std::vector<double> out(16);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto seed = member_seed(s.plan.seed, kBaselineSeedTag, i);
    auto st = model.initialize(seed);
    VariabilityStream stream(seed);
    ev.evaluate(st, out);
    values[0].push_back(out[12]);
    for (std::size_t m = 1; m <= s.params.n_steps; ++m) {
      model.advance(st, stream);
      ev.evaluate(st, out);
      values[m].push_back(out[12]);
    }
  }
  for (std::size_t m = 0; m <= s.params.n_steps; ++m) {
    const auto r = mean_and_se(values[m]);
    CHECK(a[12].mean(m) == doctest::Approx(r.mean).epsilon(1e-13));
    CHECK(a[12].sigma(m) == doctest::Approx(r.se * 2.0).epsilon(1e-8));  // se * sqrt(4)
  }
  // Tracers are identically zero without an eruption.
  CHECK(a[0].mean(30) == 0.0);
  CHECK(a[0].m2(30) == 0.0);

  const auto set = make_baseline_set(a);
  CHECK(set.n_members == 4);
  CHECK(set.find("T(t)")->qoi_id == "T(t)");
  CHECK(set.find("nope") == nullptr);
}

TEST_CASE("experiment grid") {
  Setup s;
  HarnessOptions base_opts;
  base_opts.threads = 1;
  const auto baselines = make_baseline_set(
      run_baseline_ensemble(s.plan, s.params, s.eruption, s.grid, s.registry, base_opts));

  HarnessOptions one;
  one.threads = 1;
  one.keep_members = true;
  one.record_series = true;
  HarnessOptions many = one;
  many.threads = 4;
  const auto r1 = run_experiment_grid(s.plan, s.params, s.eruption, s.grid, s.registry, baselines, {}, one);
  const auto r2 = run_experiment_grid(s.plan, s.params, s.eruption, s.grid, s.registry, baselines, {}, many);

  REQUIRE(r1.rows.size() == 2 * 2 * 16);
  CHECK(r1.rows[0].experiment == "A");
  CHECK(r1.rows[0].mass_tg == 5.0);
  CHECK(r1.rows[0].summary.qoi_id == "SO2(e)");
  CHECK(r1.rows[16].mass_tg == 20.0);
  CHECK(r1.rows[32].experiment == "B");
  for (std::size_t n = 0; n < r1.rows.size(); ++n) {
    CHECK(r1.rows[n].summary.mean_first == r2.rows[n].summary.mean_first);
    CHECK(r1.rows[n].summary.mean_total == r2.rows[n].summary.mean_total);
    CHECK(r1.rows[n].summary.n_members == 3);
  }

  REQUIRE(r1.members.size() == 6);
  for (std::size_t n = 0; n < 6; ++n) {
    const auto& mr = r1.members[n];
    CHECK(mr.mass_tg == s.plan.masses_tg[n / 3]);
    CHECK(mr.seed == member_seed(s.plan.seed, kEruptionSeedTag, n % 3));
    CHECK(mr.channels.size() == 2);
    CHECK(mr.series.size() == 16);
    CHECK(mr.series[0].values.size() == s.params.n_steps + 1);
    CHECK(mr.channel("A").pathway == r2.members[n].channel("A").pathway);
    CHECK_THROWS_AS(mr.channel("C"), ConfigError);

    // Online tracking equals offline evaluation of the recorded series.
    const auto tests = canonical_tests(s.registry, {}, 1.0 * 0.5, 1.0, baselines.series);
    CHECK(compute_pathway(base_dag_canonical(), mr.series, tests) == mr.channel("A").pathway);
    CHECK(mr.channel("A").pathway.n_rows() == s.params.n_steps + 1);
  }

  // Tracer tests do not depend on the experiment; only T rows may differ.
  for (std::size_t n = 0; n < 32; ++n) {
    if (r1.rows[n].summary.qoi_id.rfind("T(", 0) == 0) continue;
    CHECK(r1.rows[n].summary.mean_first == r1.rows[n + 32].summary.mean_first);
  }
}

TEST_CASE("zero-mass members never activate tracer QOIs") {
  Setup s;
  s.plan.masses_tg = {0.0};
  HarnessOptions opts;
  opts.threads = 1;
  const auto baselines = make_baseline_set(
      run_baseline_ensemble(s.plan, s.params, s.eruption, s.grid, s.registry, opts));
  const auto r = run_experiment_grid(s.plan, s.params, s.eruption, s.grid, s.registry, baselines, {}, opts);
  const double never = s.params.run_length_days();
  for (const auto& row : r.rows) {
    if (row.summary.qoi_id.rfind("T(", 0) == 0) continue;
    CHECK(row.summary.mean_first == never);
    CHECK(row.summary.se_first == 0.0);
    CHECK(row.summary.mean_total == 0.0);
  }
}

TEST_CASE("a failing member reports its seed and step") {
  Setup s;
  auto degenerate = std::make_shared<BaselineSeries>();
  degenerate->qoi_id = "T(e)";
  degenerate->mu.assign(s.params.n_steps + 1, 210.0);
  degenerate->sigma.assign(s.params.n_steps + 1, 0.0);
  std::vector<std::string> ids{"T(e)"};
  std::vector<QoiSpec> reg{s.registry[12]};
  TrackerHook hook(s.grid, reg, BaseDag(ids, {}));
  hook.add_channel("x", {BoundsTest::zscore(0.5, 1.0, degenerate)});
  const RunSeed seed{1234, 7};
  try {
    run_member(s.params, s.eruption, s.grid, seed, hook);
    FAIL("expected RunFailure");
  } catch (const RunFailure& e) {
    CHECK(e.seed() == 1234);
    CHECK(e.member_index() == 7);
    CHECK(e.step() == 1);
    CHECK(std::string(e.what()).find("degenerate baseline") != std::string::npos);
  }
}

TEST_CASE("replicated registry") {
  const auto r = replicated_registry(35);
  REQUIRE(r.size() == 35);
  std::set<std::string> ids;
  for (const auto& q : r) {
    CHECK(q.is_3d());
    ids.insert(q.id);
  }
  CHECK(ids.size() == 35);
  CHECK(r[0].id == "SO2(e)#0");
  CHECK(r[12].field == r[0].field);
  CHECK(r[12].id == "SO2(e)#12");
  CHECK(replicated_registry(0).empty());
}

TEST_CASE("bench overhead rows") {
  Setup s;
  const std::vector<std::size_t> counts{0, 7, 35};
  const auto rows = bench_overhead(counts, s.params, s.eruption, s.grid, 2, 10);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].ratio == 1.0);
  for (const auto& r : rows) {
    CHECK(r.baseline_s_per_step > 0.0);
    CHECK(r.tracked_s_per_step >= r.baseline_s_per_step);
    CHECK(r.ratio >= 1.0);
  }
  CHECK_THROWS_AS(bench_overhead(counts, s.params, s.eruption, s.grid, 0, 10), ConfigError);
}

TEST_CASE("parallel_for runs every index once and rethrows the lowest failure") {
  std::vector<std::atomic<int>> hits(100);
  parallel_for(100, 4, [&](std::size_t i) { hits[i]++; });
  for (const auto& h : hits) CHECK(h.load() == 1);

  try {
    parallel_for(50, 3, [](std::size_t i) {
      if (i == 17 || i == 40) throw std::runtime_error("fail " + std::to_string(i));
    });
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "fail 17");
  }
  parallel_for(0, 4, [](std::size_t) { FAIL("no work expected"); });
}
