#include "impactpath/stats.hpp"

#include <cmath>

#include "impactpath/error.hpp"

namespace impactpath {

BaselineStats::BaselineStats(std::string qoi_id, std::size_t n_steps)
    : qoi_id_(std::move(qoi_id)), n_(n_steps, 0), mean_(n_steps, 0.0), m2_(n_steps, 0.0) {}

double BaselineStats::sigma(std::size_t m) const {
  const std::size_t n = count(m);
  if (n < 2) {
    throw DataError("baseline " + qoi_id_ + ": standard deviation undefined with " +
                    std::to_string(n) + " sample(s) at step " + std::to_string(m));
  }
  return std::sqrt(m2_[m] / static_cast<double>(n - 1));
}

void baseline_update(BaselineStats& stats, std::size_t m, double value) {
  if (!std::isfinite(value)) {
    throw DataError("baseline " + stats.qoi_id_ + ": non-finite value at step " + std::to_string(m));
  }
  if (m >= stats.n_.size()) {
    throw BoundsError("baseline " + stats.qoi_id_ + ": step " + std::to_string(m) +
                      " outside accumulator range");
  }
  const double n = static_cast<double>(++stats.n_[m]);
  const double delta = value - stats.mean_[m];
  stats.mean_[m] += delta / n;
  stats.m2_[m] += delta * (value - stats.mean_[m]);
}

BaselineStats baseline_merge(const BaselineStats& a, const BaselineStats& b) {
  if (a.qoi_id_ != b.qoi_id_) {
    throw ConfigError("baseline merge: mismatched QOI ids " + a.qoi_id_ + " / " + b.qoi_id_);
  }
  if (a.n_.size() != b.n_.size()) {
    throw ConfigError("baseline merge: mismatched step ranges for " + a.qoi_id_);
  }
  BaselineStats out(a.qoi_id_, a.n_.size());
  for (std::size_t m = 0; m < a.n_.size(); ++m) {
    const std::size_t na = a.n_[m];
    const std::size_t nb = b.n_[m];
    if (nb == 0) {
      out.n_[m] = na;
      out.mean_[m] = a.mean_[m];
      out.m2_[m] = a.m2_[m];
      continue;
    }
    if (na == 0) {
      out.n_[m] = nb;
      out.mean_[m] = b.mean_[m];
      out.m2_[m] = b.m2_[m];
      continue;
    }
    const double fa = static_cast<double>(na);
    const double fb = static_cast<double>(nb);
    const double n = fa + fb;
    const double delta = b.mean_[m] - a.mean_[m];
    out.n_[m] = na + nb;
    out.mean_[m] = (fa * a.mean_[m] + fb * b.mean_[m]) / n;
    out.m2_[m] = a.m2_[m] + b.m2_[m] + delta * delta * fa * fb / n;
  }
  return out;
}

BaselineSeries finalize(const BaselineStats& stats) {
  BaselineSeries out;
  out.qoi_id = stats.qoi_id();
  out.mu.resize(stats.n_steps());
  out.sigma.resize(stats.n_steps());
  for (std::size_t m = 0; m < stats.n_steps(); ++m) {
    if (m > 0 && stats.count(m) != stats.count(0)) {
      throw DataError("baseline " + stats.qoi_id() + ": unequal member counts across steps");
    }
    out.mu[m] = stats.mean(m);
    out.sigma[m] = stats.sigma(m);
  }
  out.n_members = stats.n_steps() > 0 ? stats.count(0) : 0;
  return out;
}

double first_activation(const std::vector<bool>& activation, double dt_days,
                        double never_active_day) {
  for (std::size_t m = 0; m < activation.size(); ++m) {
    if (activation[m]) return static_cast<double>(m) * dt_days;
  }
  return never_active_day;
}

double total_active(const std::vector<bool>& activation, double dt_days) {
  std::size_t count = 0;
  for (bool a : activation) count += a ? 1 : 0;
  return static_cast<double>(count) * dt_days;
}

MeanSe mean_and_se(std::span<const double> values) {
  MeanSe out;
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  const double n = static_cast<double>(values.size());
  out.mean = sum / n;
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return out;
}

EnsembleSummary ensemble_summarize(std::span<const ActivationSummary> members) {
  if (members.size() < 2) {
    throw ConfigError("ensemble summary needs at least 2 members, got " +
                      std::to_string(members.size()));
  }
  std::vector<double> firsts;
  std::vector<double> totals;
  for (const auto& s : members) {
    if (s.qoi_id != members.front().qoi_id) {
      throw ConfigError("ensemble summary mixes QOIs " + members.front().qoi_id + " and " + s.qoi_id);
    }
    firsts.push_back(s.first_active);
    totals.push_back(s.total_active);
  }
  const auto first = mean_and_se(firsts);
  const auto total = mean_and_se(totals);
  return {members.front().qoi_id, members.size(), first.mean, first.se, total.mean, total.se};
}

}  // namespace impactpath
