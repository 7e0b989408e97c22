#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace impactpath {

/// Invalid grid, parameters, registry, plan or configuration file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model field or reduction produced NaN/Inf.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::size_t step)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// A z-score test hit a baseline standard deviation of zero.
class DegenerateBaselineError : public std::runtime_error {
 public:
  DegenerateBaselineError(std::string qoi_id, std::size_t step)
      : std::runtime_error("degenerate baseline for " + qoi_id + ": sigma <= 0 at step " +
                           std::to_string(step)),
        qoi_id_(std::move(qoi_id)),
        step_(step) {}

  const std::string& qoi_id() const noexcept { return qoi_id_; }
  std::size_t step() const noexcept { return step_; }

 private:
  std::string qoi_id_;
  std::size_t step_;
};

/// Non-finite or otherwise unusable input handed to the statistics layer.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Index (step, day) outside the recorded range.
class BoundsError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// A member run failed; names the member seed and the step reached.
class RunFailure : public std::runtime_error {
 public:
  RunFailure(const std::string& what, std::uint64_t seed, std::size_t member_index, std::size_t step)
      : std::runtime_error(what), seed_(seed), member_index_(member_index), step_(step) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t member_index() const noexcept { return member_index_; }
  std::size_t step() const noexcept { return step_; }

 private:
  std::uint64_t seed_;
  std::size_t member_index_;
  std::size_t step_;
};

}  // namespace impactpath
