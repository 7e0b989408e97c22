#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "impactpath/field.hpp"
#include "impactpath/grid.hpp"
#include "impactpath/surrogate.hpp"

namespace impactpath {

enum class FieldKind { SO2, SUL, AOD, T };

std::string field_name(FieldKind f);
FieldKind field_from_name(const std::string& name);  // throws ConfigError

/// Normalized (mean-valued) reductions by default; Integral keeps raw weighted sums.
enum class ReductionMode { Mean, Integral };

struct QoiSpec {
  std::string id;  // e.g. "SO2(e)"
  FieldKind field = FieldKind::SO2;
  ZoneSpec zone;
  std::optional<LevelRange> level_range;  // required for 3D fields, absent for AOD

  bool is_3d() const noexcept { return field != FieldKind::AOD; }
};

/// "<FIELD>(<zone>)".
std::string make_qoi_id(FieldKind field, Zone zone);

/// Throws ConfigError if the spec is malformed or selects no cells/levels on `grid`.
void validate(const QoiSpec& spec, const SphericalGrid& grid);
/// Also checks id uniqueness.
void validate_registry(std::span<const QoiSpec> registry, const SphericalGrid& grid);

struct QoiSample {
  std::string qoi_id;
  std::size_t step = 0;
  double time_days = 0.0;
  double value = 0.0;
};

/// Dense per-step values of one QOI, indexed by m = 0..M.
struct QoiSeries {
  std::string qoi_id;
  std::vector<double> values;
};

/// {SO2, SUL, AOD, T} x {e, s, t, p}, field-major. 3D fields use `levels`.
std::vector<QoiSpec> registry_canonical(LevelRange levels = {25.0, 75.0});

/// Pressure-weighted vertical reduction over the masked levels.
Field2D vertical_reduce(const Field3D& field, const SphericalGrid& grid, const LevelRange& range,
                        ReductionMode mode = ReductionMode::Mean);

/// Area-weighted reduction over the zone.
double zonal_reduce(const Field2D& field, const SphericalGrid& grid, const ZoneSpec& zone,
                    ReductionMode mode = ReductionMode::Mean);

/// Composes the two reductions (zonal only for AOD).
QoiSample evaluate(const QoiSpec& spec, const ModelState& state, const SphericalGrid& grid,
                   ReductionMode mode = ReductionMode::Mean);

/// Streaming evaluator for a whole registry.
///
/// Masks and weights are resolved once; `evaluate` walks only the zone's rows
/// and the masked levels and performs no heap allocation.
class QoiEvaluator {
 public:
  QoiEvaluator(const SphericalGrid& grid, std::vector<QoiSpec> registry,
               ReductionMode mode = ReductionMode::Mean);

  std::size_t size() const noexcept { return specs_.size(); }
  const std::vector<QoiSpec>& registry() const noexcept { return specs_; }
  ReductionMode mode() const noexcept { return mode_; }

  /// Writes one value per registry entry into `out` (size() elements).
  void evaluate(const ModelState& state, std::span<double> out) const;

 private:
  struct Plan {
    FieldKind field;
    std::size_t row_begin;
    std::size_t row_end;
    std::vector<double> row_weight;    // per row in [row_begin, row_end)
    double weight_norm;                // 1/sum(w) (Mean) or 1 (Integral)
    std::vector<std::size_t> levels;
    std::vector<double> level_weight;  // dp_k, normalized in Mean mode
  };

  std::vector<QoiSpec> specs_;
  std::vector<Plan> plans_;
  std::size_t nlon_ = 0;
  std::size_t nlev_ = 0;
  ReductionMode mode_;
};

}  // namespace impactpath
