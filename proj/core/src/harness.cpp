#include "impactpath/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <thread>

#include "impactpath/error.hpp"
#include "impactpath/seed.hpp"

namespace impactpath {

std::vector<ExperimentSpec> default_experiments() {
  return {{"Ex1", 0.5, 0.75}, {"Ex2", 0.5, 1.0}, {"Ex3", 0.5, 1.5}, {"Ex4", 0.5, 2.0}};
}

void ExperimentPlan::validate() const {
  if (masses_tg.empty()) throw ConfigError("plan: no eruption masses");
  for (double m : masses_tg) {
    if (!std::isfinite(m) || m < 0.0) throw ConfigError("plan: eruption mass must be >= 0");
  }
  if (experiments.empty()) throw ConfigError("plan: no experiments");
  for (std::size_t n = 0; n < experiments.size(); ++n) {
    const auto& e = experiments[n];
    if (e.label.empty()) throw ConfigError("plan: experiment with empty label");
    if (!(e.t_lower <= e.t_upper) || !(e.t_upper > 0.0)) {
      throw ConfigError("plan: experiment " + e.label + " needs T_l <= T_u and T_u > 0");
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (experiments[k].label == e.label) throw ConfigError("plan: duplicate experiment " + e.label);
    }
  }
  if (n_members < 2) throw ConfigError("plan: n_members must be >= 2");
  if (baseline_members < 2) throw ConfigError("plan: baseline_members must be >= 2");
}

RunSeed member_seed(std::uint64_t plan_seed, std::string_view tag, std::size_t member_index) {
  return {derive_member_seed(plan_seed, tag, member_index), member_index};
}

std::shared_ptr<const BaselineSeries> BaselineSet::find(const std::string& qoi_id) const {
  for (const auto& s : series) {
    if (s && s->qoi_id == qoi_id) return s;
  }
  return nullptr;
}

BaselineSet make_baseline_set(const std::vector<BaselineStats>& stats) {
  BaselineSet out;
  for (const auto& s : stats) {
    auto series = std::make_shared<BaselineSeries>(finalize(s));
    if (out.series.empty()) {
      out.n_members = series->n_members;
    } else if (series->n_members != out.n_members) {
      throw DataError("baseline accumulators disagree on member count");
    }
    out.series.push_back(std::move(series));
  }
  return out;
}

TrackerHook::TrackerHook(const SphericalGrid& grid, std::vector<QoiSpec> registry, BaseDag base,
                         ReductionMode mode)
    : evaluator_(grid, std::move(registry), mode), base_(std::move(base)) {
  const auto& specs = evaluator_.registry();
  if (specs.size() != base_.r()) {
    throw ConfigError("registry has " + std::to_string(specs.size()) + " QOIs, base DAG has " +
                      std::to_string(base_.r()) + " vertices");
  }
  for (std::size_t l = 0; l < specs.size(); ++l) {
    if (specs[l].id != base_.vertices()[l]) {
      throw ConfigError("registry entry " + specs[l].id + " does not match base DAG vertex " +
                        base_.vertices()[l]);
    }
  }
  values_.assign(specs.size(), 0.0);
}

void TrackerHook::add_channel(std::string label, std::vector<BoundsTest> tests) {
  if (next_step_ != 0) throw ConfigError("channels must be added before the first step");
  for (const auto& c : channels_) {
    if (c.label == label) throw ConfigError("duplicate tracker channel " + label);
  }
  channels_.push_back({std::move(label), PathwayTracker(base_, std::move(tests))});
}

void TrackerHook::accumulate_baseline(std::size_t n_rows) {
  if (next_step_ != 0) throw ConfigError("baseline accumulation must start before the first step");
  baseline_.clear();
  for (const auto& spec : evaluator_.registry()) baseline_.emplace_back(spec.id, n_rows);
}

void TrackerHook::reserve(std::size_t n_rows) {
  if (record_) {
    series_.resize(size());
    for (std::size_t l = 0; l < size(); ++l) {
      series_[l].qoi_id = evaluator_.registry()[l].id;
      series_[l].values.reserve(n_rows);
    }
  }
  for (auto& c : channels_) c.tracker.reserve(n_rows);
}

void TrackerHook::operator()(const ModelState& state) {
  if (state.step != next_step_) {
    throw ConfigError("hook expected step " + std::to_string(next_step_) + ", got " +
                      std::to_string(state.step));
  }
  evaluator_.evaluate(state, values_);
  if (record_) {
    if (series_.size() != values_.size()) {
      series_.resize(values_.size());
      for (std::size_t l = 0; l < size(); ++l) series_[l].qoi_id = evaluator_.registry()[l].id;
    }
    for (std::size_t l = 0; l < values_.size(); ++l) series_[l].values.push_back(values_[l]);
  }
  for (std::size_t l = 0; l < baseline_.size(); ++l) baseline_update(baseline_[l], state.step, values_[l]);
  for (auto& c : channels_) c.tracker.observe(state.step, values_);
  ++next_step_;
}

const ChannelResult& MemberResult::channel(const std::string& label) const {
  for (const auto& c : channels) {
    if (c.label == label) return c;
  }
  throw ConfigError("member result has no channel " + label);
}

MemberResult run_member(const ModelParams& params, const EruptionSpec& eruption,
                        const SphericalGrid& grid, const RunSeed& seed, TrackerHook& hook) {
  std::size_t step_reached = 0;
  try {
    const Surrogate model(grid, params, eruption);
    ModelState state = model.initialize(seed);
    VariabilityStream stream(seed);
    hook.reserve(params.n_steps + 1);
    hook(state);
    for (std::size_t m = 1; m <= params.n_steps; ++m) {
      step_reached = m;
      model.advance(state, stream);
      hook(state);
    }
  } catch (const RunFailure&) {
    throw;
  } catch (const std::exception& e) {
    throw RunFailure("member " + std::to_string(seed.member_index) + " (seed " +
                         std::to_string(seed.seed) + ", mass " + std::to_string(eruption.mass_tg) +
                         " Tg) failed at step " + std::to_string(step_reached) + ": " + e.what(),
                     seed.seed, seed.member_index, step_reached);
  }

  MemberResult out;
  out.seed = seed;
  out.mass_tg = eruption.mass_tg;
  out.series = hook.series();
  const double never = params.run_length_days();
  for (const auto& c : hook.channels()) {
    ChannelResult r{c.label, c.tracker.pathway(), {}};
    const auto& vertices = r.pathway.base().vertices();
    for (std::size_t l = 0; l < vertices.size(); ++l) {
      const auto column = r.pathway.column(l);
      r.summaries.push_back({vertices[l], seed.member_index,
                             first_activation(column, params.dt_days, never),
                             total_active(column, params.dt_days)});
    }
    out.channels.push_back(std::move(r));
  }
  return out;
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& task) {
  if (threads == 0) threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<BaselineStats> run_baseline_ensemble(const ExperimentPlan& plan,
                                                 const ModelParams& params,
                                                 const EruptionSpec& eruption,
                                                 const SphericalGrid& grid,
                                                 const std::vector<QoiSpec>& registry,
                                                 const HarnessOptions& options) {
  plan.validate();
  EruptionSpec quiet = eruption;
  quiet.mass_tg = 0.0;

  std::vector<std::string> ids;
  for (const auto& spec : registry) ids.push_back(spec.id);
  const BaseDag base(ids, {});

  std::vector<std::vector<BaselineStats>> per_member(plan.baseline_members);
  parallel_for(plan.baseline_members, options.threads, [&](std::size_t i) {
    TrackerHook hook(grid, registry, base, options.mode);
    hook.accumulate_baseline(params.n_steps + 1);
    run_member(params, quiet, grid, member_seed(plan.seed, kBaselineSeedTag, i), hook);
    per_member[i] = hook.baseline_stats();
  });

  std::vector<BaselineStats> merged = std::move(per_member.front());
  for (std::size_t i = 1; i < per_member.size(); ++i) {
    for (std::size_t l = 0; l < merged.size(); ++l) {
      merged[l] = baseline_merge(merged[l], per_member[i][l]);
    }
  }
  return merged;
}

ExperimentResult run_experiment_grid(const ExperimentPlan& plan, const ModelParams& params,
                                     const EruptionSpec& eruption, const SphericalGrid& grid,
                                     const std::vector<QoiSpec>& registry,
                                     const BaselineSet& baselines,
                                     const TracerThresholds& thresholds,
                                     const HarnessOptions& options) {
  plan.validate();
  std::vector<std::string> ids;
  for (const auto& spec : registry) ids.push_back(spec.id);
  const BaseDag canonical = base_dag_canonical();
  const BaseDag base = ids == canonical.vertices() ? canonical : BaseDag(ids, {});

  std::vector<std::vector<BoundsTest>> tests;
  for (const auto& e : plan.experiments) {
    tests.push_back(canonical_tests(registry, thresholds, e.t_lower, e.t_upper, baselines.series));
  }

  const std::size_t n_mass = plan.masses_tg.size();
  const std::size_t n_runs = n_mass * plan.n_members;
  std::vector<MemberResult> results(n_runs);
  parallel_for(n_runs, options.threads, [&](std::size_t run) {
    const std::size_t mass_index = run / plan.n_members;
    const std::size_t member = run % plan.n_members;
    EruptionSpec e = eruption;
    e.mass_tg = plan.masses_tg[mass_index];

    TrackerHook hook(grid, registry, base, options.mode);
    hook.record_series(options.record_series);
    for (std::size_t x = 0; x < plan.experiments.size(); ++x) {
      hook.add_channel(plan.experiments[x].label, tests[x]);
    }
    results[run] = run_member(params, e, grid, member_seed(plan.seed, kEruptionSeedTag, member), hook);
  });

  ExperimentResult out;
  for (std::size_t x = 0; x < plan.experiments.size(); ++x) {
    const auto& label = plan.experiments[x].label;
    for (std::size_t mi = 0; mi < n_mass; ++mi) {
      for (std::size_t l = 0; l < registry.size(); ++l) {
        std::vector<ActivationSummary> members;
        for (std::size_t i = 0; i < plan.n_members; ++i) {
          members.push_back(results[mi * plan.n_members + i].channels[x].summaries[l]);
        }
        out.rows.push_back({label, plan.masses_tg[mi], ensemble_summarize(members)});
      }
    }
  }
  if (options.keep_members) out.members = std::move(results);
  return out;
}

std::vector<QoiSpec> replicated_registry(std::size_t count, LevelRange levels) {
  std::vector<QoiSpec> templates;
  for (auto& spec : registry_canonical(levels)) {
    if (spec.is_3d()) templates.push_back(std::move(spec));
  }
  std::vector<QoiSpec> out;
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    QoiSpec spec = templates[n % templates.size()];
    spec.id += "#" + std::to_string(n);
    out.push_back(std::move(spec));
  }
  return out;
}

namespace {

struct StepTiming {
  double model_s = 0.0;
  double hook_s = 0.0;
};

/// Times model steps and hook calls separately within one run, so drift in the
/// model cost cancels out of the overhead ratio.
StepTiming time_steps(const Surrogate& model, const RunSeed& seed, std::size_t steps,
                      TrackerHook* hook) {
  using clock = std::chrono::steady_clock;
  ModelState state = model.initialize(seed);
  VariabilityStream stream(seed);
  if (hook) {
    hook->reserve(steps + 1);
    (*hook)(state);
  }
  clock::duration model_t{0};
  clock::duration hook_t{0};
  for (std::size_t m = 0; m < steps; ++m) {
    const auto t0 = clock::now();
    model.advance(state, stream);
    const auto t1 = clock::now();
    model_t += t1 - t0;
    if (hook) {
      (*hook)(state);
      hook_t += clock::now() - t1;
    }
  }
  const double n = static_cast<double>(steps);
  return {std::chrono::duration<double>(model_t).count() / n,
          std::chrono::duration<double>(hook_t).count() / n};
}

}  // namespace

std::vector<BenchRow> bench_overhead(std::span<const std::size_t> counts,
                                     const ModelParams& params, const EruptionSpec& eruption,
                                     const SphericalGrid& grid, std::size_t repetitions,
                                     std::size_t steps) {
  if (repetitions == 0) throw ConfigError("bench: repetitions must be >= 1");
  if (steps == 0) throw ConfigError("bench: steps must be >= 1");
  const Surrogate model(grid, params, eruption);
  const RunSeed seed{0, 0};

  struct Setup {
    std::vector<QoiSpec> registry;
    BaseDag base;
    std::vector<BoundsTest> tests;
  };
  std::vector<Setup> setups;
  for (std::size_t count : counts) {
    Setup s;
    s.registry = replicated_registry(count);
    std::vector<std::string> ids;
    for (const auto& spec : s.registry) ids.push_back(spec.id);
    s.base = BaseDag(ids, {});
    s.tests.assign(count, BoundsTest::absolute(4.0e-10, 8.0e-10));
    setups.push_back(std::move(s));
  }

  std::vector<double> model_sum(counts.size(), 0.0);
  std::vector<double> hook_sum(counts.size(), 0.0);
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    for (std::size_t c = 0; c < counts.size(); ++c) {
      if (counts[c] == 0) {
        model_sum[c] += time_steps(model, seed, steps, nullptr).model_s;
        continue;
      }
      TrackerHook hook(grid, setups[c].registry, setups[c].base);
      hook.add_channel("bench", setups[c].tests);
      const auto t = time_steps(model, seed, steps, &hook);
      model_sum[c] += t.model_s;
      hook_sum[c] += t.hook_s;
    }
  }

  std::vector<BenchRow> rows;
  const double reps = static_cast<double>(repetitions);
  for (std::size_t c = 0; c < counts.size(); ++c) {
    BenchRow row;
    row.qoi_count = counts[c];
    row.baseline_s_per_step = model_sum[c] / reps;
    row.tracked_s_per_step = (model_sum[c] + hook_sum[c]) / reps;
    row.ratio = counts[c] == 0 ? 1.0 : row.tracked_s_per_step / row.baseline_s_per_step;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace impactpath
