#include "impactpath/qoi.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "impactpath/error.hpp"

namespace impactpath {

namespace {

std::vector<std::size_t> masked_levels(const SphericalGrid& grid, const LevelRange& range) {
  const auto mask = level_mask(grid, range);
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < mask.size(); ++k) {
    if (mask[k]) out.push_back(k);
  }
  if (out.empty()) {
    throw ConfigError("level range [" + std::to_string(range.p_lo) + ", " +
                      std::to_string(range.p_hi) + "] hPa selects no model level");
  }
  return out;
}

const Field3D& field3d(const ModelState& s, FieldKind f) {
  switch (f) {
    case FieldKind::SO2: return s.so2;
    case FieldKind::SUL: return s.so4;
    case FieldKind::T: return s.temperature;
    case FieldKind::AOD: break;
  }
  throw ConfigError("AOD is a 2D field");
}

}  // namespace

std::string field_name(FieldKind f) {
  switch (f) {
    case FieldKind::SO2: return "SO2";
    case FieldKind::SUL: return "SUL";
    case FieldKind::AOD: return "AOD";
    case FieldKind::T: return "T";
  }
  return "?";
}

FieldKind field_from_name(const std::string& name) {
  if (name == "SO2") return FieldKind::SO2;
  if (name == "SUL") return FieldKind::SUL;
  if (name == "AOD") return FieldKind::AOD;
  if (name == "T") return FieldKind::T;
  throw ConfigError("unknown QOI field '" + name + "' (expected SO2, SUL, AOD or T)");
}

std::string make_qoi_id(FieldKind field, Zone zone) {
  return field_name(field) + "(" + zone_char(zone) + ")";
}

void validate(const QoiSpec& spec, const SphericalGrid& grid) {
  if (spec.id.empty()) throw ConfigError("QOI spec with empty id");
  if (spec.is_3d() && !spec.level_range) {
    throw ConfigError("QOI " + spec.id + ": 3D field requires a level range");
  }
  if (!spec.is_3d() && spec.level_range) {
    throw ConfigError("QOI " + spec.id + ": AOD is 2D and takes no level range");
  }
  if (spec.level_range) masked_levels(grid, *spec.level_range);

  bool any = false;
  for (std::size_t i = 0; i < grid.nlat() && !any; ++i) any = spec.zone.contains(grid.lat_center(i));
  if (!any) throw ConfigError("QOI " + spec.id + ": zone contains no grid cell");
}

void validate_registry(std::span<const QoiSpec> registry, const SphericalGrid& grid) {
  std::set<std::string> seen;
  for (const auto& spec : registry) {
    validate(spec, grid);
    if (!seen.insert(spec.id).second) throw ConfigError("duplicate QOI id " + spec.id);
  }
}

std::vector<QoiSpec> registry_canonical(LevelRange levels) {
  std::vector<QoiSpec> out;
  out.reserve(16);
  for (FieldKind f : {FieldKind::SO2, FieldKind::SUL, FieldKind::AOD, FieldKind::T}) {
    for (const auto& zone : canonical_zones()) {
      QoiSpec spec;
      spec.id = make_qoi_id(f, zone.label);
      spec.field = f;
      spec.zone = zone;
      if (f != FieldKind::AOD) spec.level_range = levels;
      out.push_back(std::move(spec));
    }
  }
  return out;
}

Field2D vertical_reduce(const Field3D& field, const SphericalGrid& grid, const LevelRange& range,
                        ReductionMode mode) {
  const auto levels = masked_levels(grid, range);
  const auto dp = grid.layer_thickness();
  double total_dp = 0.0;
  for (std::size_t k : levels) total_dp += dp[k];
  const double norm = mode == ReductionMode::Mean ? 1.0 / total_dp : 1.0;

  Field2D out(grid);
  for (std::size_t i = 0; i < grid.nlat(); ++i) {
    for (std::size_t j = 0; j < grid.nlon(); ++j) {
      double acc = 0.0;
      for (std::size_t k : levels) acc += field(i, j, k) * dp[k];
      out(i, j) = acc * norm;
    }
  }
  return out;
}

double zonal_reduce(const Field2D& field, const SphericalGrid& grid, const ZoneSpec& zone,
                    ReductionMode mode) {
  const auto w = zone_weights(grid, zone);
  double acc = 0.0;
  double total = 0.0;
  for (std::size_t n = 0; n < w.size(); ++n) {
    acc += w[n] * field.data[n];
    total += w[n];
  }
  if (total <= 0.0) throw ConfigError("zonal reduction over an empty zone");
  return mode == ReductionMode::Mean ? acc / total : acc;
}

QoiSample evaluate(const QoiSpec& spec, const ModelState& state, const SphericalGrid& grid,
                   ReductionMode mode) {
  validate(spec, grid);
  double value = 0.0;
  if (spec.field == FieldKind::AOD) {
    value = zonal_reduce(state.aod, grid, spec.zone, mode);
  } else {
    const auto column = vertical_reduce(field3d(state, spec.field), grid, *spec.level_range, mode);
    value = zonal_reduce(column, grid, spec.zone, mode);
  }
  if (!std::isfinite(value)) {
    throw NumericalError("non-finite value for QOI " + spec.id, state.step);
  }
  return {spec.id, state.step, state.time_days, value};
}

QoiEvaluator::QoiEvaluator(const SphericalGrid& grid, std::vector<QoiSpec> registry,
                           ReductionMode mode)
    : specs_(std::move(registry)), nlon_(grid.nlon()), nlev_(grid.nlev()), mode_(mode) {
  validate_registry(specs_, grid);
  plans_.reserve(specs_.size());
  for (const auto& spec : specs_) {
    Plan plan;
    plan.field = spec.field;
    plan.row_begin = grid.nlat();
    plan.row_end = 0;
    for (std::size_t i = 0; i < grid.nlat(); ++i) {
      if (!spec.zone.contains(grid.lat_center(i))) continue;
      plan.row_begin = std::min(plan.row_begin, i);
      plan.row_end = i + 1;
    }
    double total = 0.0;
    for (std::size_t i = plan.row_begin; i < plan.row_end; ++i) {
      plan.row_weight.push_back(grid.row_weight(i));
      total += grid.row_weight(i) * static_cast<double>(grid.nlon());
    }
    plan.weight_norm = mode == ReductionMode::Mean ? 1.0 / total : 1.0;

    if (spec.level_range) {
      plan.levels = masked_levels(grid, *spec.level_range);
      double total_dp = 0.0;
      for (std::size_t k : plan.levels) total_dp += grid.layer_thickness()[k];
      for (std::size_t k : plan.levels) {
        const double dp = grid.layer_thickness()[k];
        plan.level_weight.push_back(mode == ReductionMode::Mean ? dp / total_dp : dp);
      }
    }
    plans_.push_back(std::move(plan));
  }
}

void QoiEvaluator::evaluate(const ModelState& state, std::span<double> out) const {
  if (out.size() != plans_.size()) throw ConfigError("QOI output span has the wrong size");
  for (std::size_t q = 0; q < plans_.size(); ++q) {
    const Plan& plan = plans_[q];
    double acc = 0.0;
    if (plan.field == FieldKind::AOD) {
      const double* aod = state.aod.data.data();
      for (std::size_t i = plan.row_begin; i < plan.row_end; ++i) {
        const double* row = aod + i * nlon_;
        double row_sum = 0.0;
        for (std::size_t j = 0; j < nlon_; ++j) row_sum += row[j];
        acc += plan.row_weight[i - plan.row_begin] * row_sum;
      }
    } else {
      const double* data = field3d(state, plan.field).data.data();
      const std::size_t nlev_used = plan.levels.size();
      for (std::size_t i = plan.row_begin; i < plan.row_end; ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < nlon_; ++j) {
          const double* col = data + (i * nlon_ + j) * nlev_;
          double v = 0.0;
          for (std::size_t n = 0; n < nlev_used; ++n) v += col[plan.levels[n]] * plan.level_weight[n];
          row_sum += v;
        }
        acc += plan.row_weight[i - plan.row_begin] * row_sum;
      }
    }
    const double value = acc * plan.weight_norm;
    if (!std::isfinite(value)) {
      throw NumericalError("non-finite value for QOI " + specs_[q].id, state.step);
    }
    out[q] = value;
  }
}

}  // namespace impactpath
