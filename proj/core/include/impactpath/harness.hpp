#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "impactpath/pathway.hpp"
#include "impactpath/qoi.hpp"
#include "impactpath/stats.hpp"
#include "impactpath/surrogate.hpp"

namespace impactpath {

struct ExperimentSpec {
  std::string label;
  double t_lower = 0.5;
  double t_upper = 1.0;

  bool operator==(const ExperimentSpec&) const = default;
};

/// Ex1..Ex4: T_l = 0.5 and T_u = 0.75, 1.0, 1.5, 2.0.
std::vector<ExperimentSpec> default_experiments();

struct ExperimentPlan {
  std::vector<double> masses_tg{5.0, 10.0, 20.0};
  std::vector<ExperimentSpec> experiments = default_experiments();
  std::size_t n_members = 10;
  std::size_t baseline_members = 10;
  std::uint64_t seed = 20240417;

  void validate() const;  // throws ConfigError
};

inline constexpr std::string_view kBaselineSeedTag = "baseline";
inline constexpr std::string_view kEruptionSeedTag = "eruption";

/// Member i of an ensemble draws its initial perturbation and noise from this seed.
/// Eruption members do not depend on mass or experiment: member i of every
/// mass shares its weather, and experiments are evaluated on the same run.
RunSeed member_seed(std::uint64_t plan_seed, std::string_view tag, std::size_t member_index);

/// Finalized baselines, one per registry entry, in registry order.
struct BaselineSet {
  std::size_t n_members = 0;
  std::vector<std::shared_ptr<const BaselineSeries>> series;

  std::shared_ptr<const BaselineSeries> find(const std::string& qoi_id) const;
};

BaselineSet make_baseline_set(const std::vector<BaselineStats>& stats);

/// Per-step observer wired into the surrogate loop.
///
/// Evaluates the registry once per step and feeds the values to every
/// channel's tracker, to an optional series recorder and to optional baseline
/// accumulators. Holds no model fields.
class TrackerHook {
 public:
  struct Channel {
    std::string label;
    PathwayTracker tracker;
  };

  /// Registry ids must equal base.vertices() in order.
  TrackerHook(const SphericalGrid& grid, std::vector<QoiSpec> registry, BaseDag base,
              ReductionMode mode = ReductionMode::Mean);

  void add_channel(std::string label, std::vector<BoundsTest> tests);
  void record_series(bool enabled) { record_ = enabled; }
  void accumulate_baseline(std::size_t n_rows);
  void reserve(std::size_t n_rows);

  /// Called with the initial state (step 0) and after every model step.
  void operator()(const ModelState& state);

  std::size_t size() const noexcept { return evaluator_.size(); }
  const std::vector<QoiSpec>& registry() const noexcept { return evaluator_.registry(); }
  const BaseDag& base() const noexcept { return base_; }
  std::size_t steps_observed() const noexcept { return next_step_; }
  std::span<const double> last_values() const noexcept { return values_; }
  const std::vector<QoiSeries>& series() const noexcept { return series_; }
  const std::vector<Channel>& channels() const noexcept { return channels_; }
  const std::vector<BaselineStats>& baseline_stats() const noexcept { return baseline_; }

 private:
  QoiEvaluator evaluator_;
  BaseDag base_;
  std::vector<double> values_;
  bool record_ = false;
  std::vector<QoiSeries> series_;
  std::vector<Channel> channels_;
  std::vector<BaselineStats> baseline_;
  std::size_t next_step_ = 0;
};

struct ChannelResult {
  std::string label;
  PathwayDag pathway;
  std::vector<ActivationSummary> summaries;  // vertex order
};

struct MemberResult {
  RunSeed seed;
  double mass_tg = 0.0;
  std::vector<QoiSeries> series;  // empty unless the hook recorded them
  std::vector<ChannelResult> channels;

  const ChannelResult& channel(const std::string& label) const;  // throws ConfigError
};

/// Steps the surrogate M times, calling `hook` on steps 0..M. Any failure is
/// rethrown as RunFailure naming the seed and the step reached.
MemberResult run_member(const ModelParams& params, const EruptionSpec& eruption,
                        const SphericalGrid& grid, const RunSeed& seed, TrackerHook& hook);

struct HarnessOptions {
  std::size_t threads = 0;  // 0: hardware concurrency
  bool keep_members = false;
  bool record_series = false;
  ReductionMode mode = ReductionMode::Mean;
};

/// Eruption-free ensemble; accumulators merged in member order.
std::vector<BaselineStats> run_baseline_ensemble(const ExperimentPlan& plan,
                                                 const ModelParams& params,
                                                 const EruptionSpec& eruption,
                                                 const SphericalGrid& grid,
                                                 const std::vector<QoiSpec>& registry,
                                                 const HarnessOptions& options = {});

struct SummaryRow {
  std::string experiment;
  double mass_tg = 0.0;
  EnsembleSummary summary;
};

struct ExperimentResult {
  std::vector<SummaryRow> rows;        // experiment-major, then mass, then registry order
  std::vector<MemberResult> members;   // mass-major, then member; only with keep_members
};

/// For each mass, runs plan.n_members members and evaluates every experiment as
/// its own tracker channel on the same run. Tracer QOIs use absolute tests,
/// T QOIs z-score tests against `baselines`.
ExperimentResult run_experiment_grid(const ExperimentPlan& plan, const ModelParams& params,
                                     const EruptionSpec& eruption, const SphericalGrid& grid,
                                     const std::vector<QoiSpec>& registry,
                                     const BaselineSet& baselines,
                                     const TracerThresholds& thresholds = {},
                                     const HarnessOptions& options = {});

/// `count` copies of the 3D canonical zonal-mean-of-vertical-reduction specs, cycling
/// through fields and zones, with unique ids.
std::vector<QoiSpec> replicated_registry(std::size_t count, LevelRange levels = {25.0, 75.0});

struct BenchRow {
  std::size_t qoi_count = 0;
  double baseline_s_per_step = 0.0;
  double tracked_s_per_step = 0.0;
  double ratio = 1.0;
};

/// Per-step wall time of the model alone (baseline) and of model plus hook
/// (tracked), both measured inside the same tracked run and averaged over
/// repetitions. A count of 0 is the disabled hook and reports ratio 1.
std::vector<BenchRow> bench_overhead(std::span<const std::size_t> counts,
                                     const ModelParams& params, const EruptionSpec& eruption,
                                     const SphericalGrid& grid, std::size_t repetitions,
                                     std::size_t steps);

/// Runs `task(i)` for i in [0, n) on up to `threads` workers. The exception from
/// the lowest failing index is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& task);

}  // namespace impactpath
