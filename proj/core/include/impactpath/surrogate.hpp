#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "impactpath/field.hpp"
#include "impactpath/grid.hpp"

namespace impactpath {

/// Air mass per hPa of pressure thickness over the whole sphere (kg/hPa):
/// 4 pi R^2 * 100 Pa/hPa / g with R = 6.371e6 m and g = 9.80665 m/s^2.
inline constexpr double kAirMassPerHpa = 5.201210116704362e15;
inline constexpr double kKgPerTg = 1.0e9;

/// Forward-model parameters (the model's alpha). Timescales in days.
struct ModelParams {
  double dt_days = 0.25;
  std::size_t n_steps = 4800;
  double tau_chem_days = 30.0;   // SO2 -> SO4 e-folding; +inf disables chemistry
  double tau_decay_days = 360.0; // SO4 removal e-folding; +inf disables removal
  double v_transport_deg_per_day = 0.1;  // poleward, stratospheric levels only
  double u_zonal_deg_per_day = 10.0;     // eastward, stratospheric levels only
  double k_aod = 5.1e4;          // AOD per (kg/kg * hPa) of column sulfate
  double k_heat = 8.0;           // K/day per unit AOD, stratospheric levels
  double tau_relax_days = 5.0;
  double t_eq_k = 210.0;
  double noise_amp_k = 0.05;
  double noise_memory = 0.8;     // AR(1) coefficient per step, in [0, 1)
  double p_tropopause_hpa = 100.0;  // levels with mid-pressure <= this are stratospheric

  void validate() const;
  double run_length_days() const noexcept { return dt_days * static_cast<double>(n_steps); }
};

struct EruptionSpec {
  double mass_tg = 10.0;  // Tg of SO2; 0 is the eruption-free case
  double day = 90.0;
  double lat_deg = 15.0;
  double lon_deg = 120.0;
  LevelRange injection_levels{25.0, 75.0};

  void validate() const;
};

/// (seed, member_index) fully determines a run's pseudo-random streams.
struct RunSeed {
  std::uint64_t seed = 0;
  std::size_t member_index = 0;

  bool operator==(const RunSeed&) const = default;
};

/// Model state u_m.
struct ModelState {
  Field3D so2;          // kg/kg
  Field3D so4;          // kg/kg
  Field3D temperature;  // K
  Field2D aod;          // dimensionless
  std::size_t step = 0;
  double time_days = 0.0;

  bool operator==(const ModelState&) const = default;
};

/// Band-shared AR(1) internal-variability process driving temperature.
///
/// Bands are the four QOI zones plus their southern mirrors (7 bands), so
/// every cell of a band sees the same anomaly at a given step.
class VariabilityStream {
 public:
  static constexpr std::size_t kBands = 7;

  explicit VariabilityStream(const RunSeed& seed);

  /// eta <- memory * eta + amplitude * N(0, 1), per band.
  void advance(double memory, double amplitude);
  std::span<const double> anomalies() const noexcept { return eta_; }

  static std::size_t band_of(double lat_deg) noexcept;

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::vector<double> eta_ = std::vector<double>(kBands, 0.0);
};

/// Mixing-ratio increment that deposits `mass_tg` uniformly over the selected
/// cells x levels, using kAirMassPerHpa * area_weight * dp as the cell air mass.
double convert_mass_to_mixing_ratio(double mass_tg, const SphericalGrid& grid,
                                    std::span<const std::pair<std::size_t, std::size_t>> cells,
                                    std::span<const std::size_t> levels);

/// Global so2 + so4 mass in Tg.
double total_sulfur_mass_tg(const ModelState& state, const SphericalGrid& grid);
double total_mass_tg(const Field3D& mixing_ratio, const SphericalGrid& grid);

/// Precomputed single-run stepping operator for fixed (grid, params, eruption).
class Surrogate {
 public:
  Surrogate(SphericalGrid grid, ModelParams params, EruptionSpec eruption);

  const SphericalGrid& grid() const noexcept { return grid_; }
  const ModelParams& params() const noexcept { return params_; }
  const EruptionSpec& eruption() const noexcept { return eruption_; }

  /// Zero tracers; temperature t_eq plus a uniform perturbation of amplitude 0.01 * noise_amp.
  ModelState initialize(const RunSeed& seed) const;

  /// Advances u_m -> u_{m+1} in place. Throws NumericalError on non-finite fields.
  void advance(ModelState& state, VariabilityStream& stream) const;

  /// Mixing ratio deposited into each injection cell-level.
  double injection_increment() const noexcept { return injection_increment_; }
  std::size_t injection_row() const noexcept { return inj_row_; }
  std::size_t injection_column() const noexcept { return inj_col_; }

 private:
  void inject(ModelState& s) const;
  void chemistry(ModelState& s) const;
  void transport(Field3D& q) const;
  void diagnose_aod(ModelState& s) const;
  void relax_temperature(ModelState& s, const VariabilityStream& stream) const;
  void check_finite(const ModelState& s) const;

  SphericalGrid grid_;
  ModelParams params_;
  EruptionSpec eruption_;

  std::vector<std::size_t> strat_levels_;
  std::vector<bool> is_strat_;
  std::vector<std::size_t> inj_levels_;
  std::size_t inj_row_ = 0;
  std::size_t inj_col_ = 0;
  double injection_increment_ = 0.0;

  double so2_keep_ = 1.0;   // exp(-dt/tau_chem)
  double so4_keep_ = 1.0;   // exp(-dt/tau_decay)
  std::vector<double> meridional_fraction_;  // fraction of row mass leaving poleward per step
  std::vector<int> meridional_dir_;          // +1 north, -1 south
  double zonal_fraction_ = 0.0;
  std::vector<std::size_t> band_of_row_;
};

/// Free-function forms of the operator.
ModelState initialize(const ModelParams& params, const SphericalGrid& grid, const RunSeed& seed);
ModelState step(ModelState state, const ModelParams& params, const EruptionSpec& eruption,
                const SphericalGrid& grid, VariabilityStream& stream);

/// Grid shape for a preset.
struct GridParams {
  std::size_t nlat = 32;
  std::size_t nlon = 64;
  std::size_t nlev = 16;
  double p_top_hpa = 1.0;
  double p_surface_hpa = 1000.0;

  SphericalGrid build() const { return build_grid(nlat, nlon, nlev, p_top_hpa, p_surface_hpa); }
};

struct SurrogatePreset {
  std::string id;
  GridParams grid;
  ModelParams params;
  EruptionSpec eruption;
};

/// Frozen calibrated defaults ("hswv-surrogate-v1").
SurrogatePreset hswv_surrogate_v1();
SurrogatePreset preset_by_id(const std::string& id);  // throws ConfigError

}  // namespace impactpath
