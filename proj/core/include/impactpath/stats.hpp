#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace impactpath {

/// Streaming per-step mean/variance of one QOI across an eruption-free ensemble.
///
/// One accumulator per QOI; each member feeds it step by step (Welford), and
/// accumulators filled by different workers are combined with baseline_merge.
class BaselineStats {
 public:
  BaselineStats() = default;
  BaselineStats(std::string qoi_id, std::size_t n_steps);

  const std::string& qoi_id() const noexcept { return qoi_id_; }
  std::size_t n_steps() const noexcept { return n_.size(); }

  std::size_t count(std::size_t m) const { return n_.at(m); }
  double mean(std::size_t m) const { return mean_.at(m); }
  /// Sum of squared deviations from the mean.
  double m2(std::size_t m) const { return m2_.at(m); }
  /// Sample standard deviation (divisor n - 1); throws DataError if n < 2.
  double sigma(std::size_t m) const;

  friend void baseline_update(BaselineStats& stats, std::size_t m, double value);
  friend BaselineStats baseline_merge(const BaselineStats& a, const BaselineStats& b);

 private:
  std::string qoi_id_;
  std::vector<std::size_t> n_;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

/// Welford update; throws DataError on non-finite input and BoundsError on bad m.
void baseline_update(BaselineStats& stats, std::size_t m, double value);

/// Chan et al. pairwise combination. An accumulator with zero count at a step
/// is the identity there. Throws ConfigError on mismatched ids or step ranges.
BaselineStats baseline_merge(const BaselineStats& a, const BaselineStats& b);

/// Finalized mu_m / sigma_m of one QOI, as consumed by z-score tests.
struct BaselineSeries {
  std::string qoi_id;
  std::size_t n_members = 0;
  std::vector<double> mu;
  std::vector<double> sigma;
};

/// Throws DataError unless every step has n >= 2 and equal counts.
BaselineSeries finalize(const BaselineStats& stats);

/// Activation-time statistics of one QOI in one member run, in days.
struct ActivationSummary {
  std::string qoi_id;
  std::size_t member_index = 0;
  double first_active = 0.0;
  double total_active = 0.0;
};

struct EnsembleSummary {
  std::string qoi_id;
  std::size_t n_members = 0;
  double mean_first = 0.0;
  double se_first = 0.0;
  double mean_total = 0.0;
  double se_total = 0.0;
};

/// Day of the first active step; `never_active_day` if the QOI never activates.
double first_activation(const std::vector<bool>& activation, double dt_days,
                        double never_active_day = 1200.0);

/// dt times the number of active steps.
double total_active(const std::vector<bool>& activation, double dt_days);

/// Means and standard errors (sample std / sqrt(n)). Needs >= 2 members of one QOI.
EnsembleSummary ensemble_summarize(std::span<const ActivationSummary> members);

/// Sample mean and standard error of a list; se = 0 for fewer than 2 values.
struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};
MeanSe mean_and_se(std::span<const double> values);

}  // namespace impactpath
