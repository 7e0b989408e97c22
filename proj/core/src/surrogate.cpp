#include "impactpath/surrogate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "impactpath/error.hpp"
#include "impactpath/seed.hpp"

namespace impactpath {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Southern mirrors of the QOI zones plus the zones themselves.
constexpr std::array<double, VariabilityStream::kBands - 1> kBandEdges = {-66.5, -35.0, -23.5,
                                                                          23.5,  35.0,  66.5};

constexpr std::uint64_t kInitStream = 0x696e6974;   // "init"
constexpr std::uint64_t kNoiseStream = 0x6e6f6973;  // "nois"

bool positive_timescale(double tau) { return tau > 0.0 && !std::isnan(tau); }

}  // namespace

void ModelParams::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("model parameters: " + what); };
  if (!(dt_days > 0.0) || !std::isfinite(dt_days)) fail("dt_days must be > 0");
  if (n_steps == 0) fail("n_steps must be >= 1");
  if (!positive_timescale(tau_chem_days)) fail("tau_chem_days must be > 0");
  if (!positive_timescale(tau_decay_days)) fail("tau_decay_days must be > 0");
  if (!positive_timescale(tau_relax_days) || !std::isfinite(tau_relax_days)) {
    fail("tau_relax_days must be finite and > 0");
  }
  if (!(v_transport_deg_per_day >= 0.0) || !std::isfinite(v_transport_deg_per_day)) {
    fail("v_transport_deg_per_day must be finite and >= 0");
  }
  if (!std::isfinite(u_zonal_deg_per_day)) fail("u_zonal_deg_per_day must be finite");
  if (!(k_aod >= 0.0) || !std::isfinite(k_aod)) fail("k_aod must be finite and >= 0");
  if (!std::isfinite(k_heat)) fail("k_heat must be finite");
  if (!(t_eq_k > 0.0) || !std::isfinite(t_eq_k)) fail("t_eq_k must be > 0");
  if (!(noise_amp_k >= 0.0) || !std::isfinite(noise_amp_k)) fail("noise_amp_k must be >= 0");
  if (!(noise_memory >= 0.0 && noise_memory < 1.0)) fail("noise_memory must lie in [0, 1)");
  if (!(p_tropopause_hpa > 0.0)) fail("p_tropopause_hpa must be > 0");
}

void EruptionSpec::validate() const {
  if (!(mass_tg >= 0.0) || !std::isfinite(mass_tg)) {
    throw ConfigError("eruption: mass_tg must be finite and >= 0");
  }
  if (!std::isfinite(day)) throw ConfigError("eruption: day must be finite");
  if (!(lat_deg >= -90.0 && lat_deg <= 90.0)) throw ConfigError("eruption: lat_deg out of range");
  if (!std::isfinite(lon_deg)) throw ConfigError("eruption: lon_deg must be finite");
  injection_levels.validate();
}

VariabilityStream::VariabilityStream(const RunSeed& seed)
    : rng_(mix_seed(seed.seed, seed.member_index, kNoiseStream)) {}

void VariabilityStream::advance(double memory, double amplitude) {
  for (double& eta : eta_) {
    eta = memory * eta + amplitude * normal_(rng_);
  }
}

std::size_t VariabilityStream::band_of(double lat_deg) noexcept {
  return static_cast<std::size_t>(
      std::upper_bound(kBandEdges.begin(), kBandEdges.end(), lat_deg) - kBandEdges.begin());
}

double convert_mass_to_mixing_ratio(double mass_tg, const SphericalGrid& grid,
                                    std::span<const std::pair<std::size_t, std::size_t>> cells,
                                    std::span<const std::size_t> levels) {
  if (cells.empty() || levels.empty()) {
    throw ConfigError("mass conversion: empty cell or level selection");
  }
  double area = 0.0;
  for (const auto& [i, j] : cells) area += grid.area_weight(i, j);
  double dp = 0.0;
  for (std::size_t k : levels) dp += grid.layer_thickness()[k];
  const double air_mass_kg = kAirMassPerHpa * area * dp;
  return mass_tg * kKgPerTg / air_mass_kg;
}

double total_mass_tg(const Field3D& q, const SphericalGrid& grid) {
  const auto dp = grid.layer_thickness();
  double total = 0.0;
  for (std::size_t i = 0; i < grid.nlat(); ++i) {
    for (std::size_t j = 0; j < grid.nlon(); ++j) {
      const auto col = q.column(i, j);
      double column = 0.0;
      for (std::size_t k = 0; k < col.size(); ++k) column += col[k] * dp[k];
      total += column * grid.area_weight(i, j);
    }
  }
  return total * kAirMassPerHpa / kKgPerTg;
}

double total_sulfur_mass_tg(const ModelState& state, const SphericalGrid& grid) {
  return total_mass_tg(state.so2, grid) + total_mass_tg(state.so4, grid);
}

Surrogate::Surrogate(SphericalGrid grid, ModelParams params, EruptionSpec eruption)
    : grid_(std::move(grid)), params_(params), eruption_(eruption) {
  params_.validate();
  eruption_.validate();

  is_strat_.assign(grid_.nlev(), false);
  for (std::size_t k = 0; k < grid_.nlev(); ++k) {
    if (grid_.mid_pressure(k) <= params_.p_tropopause_hpa) {
      is_strat_[k] = true;
      strat_levels_.push_back(k);
    }
  }

  const auto mask = level_mask(grid_, eruption_.injection_levels);
  for (std::size_t k = 0; k < mask.size(); ++k) {
    if (mask[k]) inj_levels_.push_back(k);
  }
  if (inj_levels_.empty()) {
    throw ConfigError("eruption: injection level range selects no model level");
  }
  inj_row_ = grid_.row_of(eruption_.lat_deg);
  inj_col_ = grid_.column_of(eruption_.lon_deg);
  const std::pair<std::size_t, std::size_t> cell{inj_row_, inj_col_};
  injection_increment_ =
      convert_mass_to_mixing_ratio(eruption_.mass_tg, grid_, {&cell, 1}, inj_levels_);

  const double dt = params_.dt_days;
  so2_keep_ = std::exp(-dt / params_.tau_chem_days);
  so4_keep_ = std::exp(-dt / params_.tau_decay_days);

  // Flux-form upwind on the sphere: the fraction of a row's mass crossing its
  // poleward edge is v dt cos(lat_edge) / (sin(lat_n) - sin(lat_s)). The edge
  // at either pole has cos = 0, so the polar caps are closed.
  const auto edges = grid_.lat_edges();
  const double v_rad = params_.v_transport_deg_per_day * kDegToRad * dt;
  meridional_fraction_.assign(grid_.nlat(), 0.0);
  meridional_dir_.assign(grid_.nlat(), 0);
  for (std::size_t i = 0; i < grid_.nlat(); ++i) {
    const bool north = i >= inj_row_;
    const double edge = north ? edges[i + 1] : edges[i];
    const bool pole = (north && i + 1 == grid_.nlat()) || (!north && i == 0);
    const double band = std::sin(edges[i + 1] * kDegToRad) - std::sin(edges[i] * kDegToRad);
    meridional_dir_[i] = north ? 1 : -1;
    meridional_fraction_[i] = pole ? 0.0 : v_rad * std::cos(edge * kDegToRad) / band;
    if (meridional_fraction_[i] > 1.0) {
      throw ConfigError("meridional transport Courant fraction exceeds 1; reduce dt or v_transport");
    }
  }

  const double dlon = 360.0 / static_cast<double>(grid_.nlon());
  zonal_fraction_ = params_.u_zonal_deg_per_day * dt / dlon;
  if (std::abs(zonal_fraction_) > 1.0) {
    throw ConfigError("zonal transport Courant number exceeds 1; reduce dt or u_zonal");
  }

  band_of_row_.resize(grid_.nlat());
  for (std::size_t i = 0; i < grid_.nlat(); ++i) {
    band_of_row_[i] = VariabilityStream::band_of(grid_.lat_center(i));
  }
}

ModelState Surrogate::initialize(const RunSeed& seed) const {
  return impactpath::initialize(params_, grid_, seed);
}

void Surrogate::inject(ModelState& s) const {
  const double t = s.time_days;
  if (!(t <= eruption_.day && eruption_.day < t + params_.dt_days)) return;
  for (std::size_t k : inj_levels_) {
    s.so2(inj_row_, inj_col_, k) += injection_increment_;
  }
}

void Surrogate::chemistry(ModelState& s) const {
  auto& so2 = s.so2.data;
  auto& so4 = s.so4.data;
  const double convert = 1.0 - so2_keep_;
  for (std::size_t n = 0; n < so2.size(); ++n) {
    const double d = so2[n] * convert;
    so2[n] -= d;
    so4[n] = (so4[n] + d) * so4_keep_;
  }
}

void Surrogate::transport(Field3D& q) const {
  const std::size_t nlat = grid_.nlat();
  const std::size_t nlon = grid_.nlon();

  for (std::size_t k : strat_levels_) {
    // Meridional: gather outgoing mass first so each row is upwinded from the old state.
    std::vector<double> out(nlat * nlon, 0.0);
    for (std::size_t i = 0; i < nlat; ++i) {
      const double f = meridional_fraction_[i];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < nlon; ++j) out[i * nlon + j] = q(i, j, k) * f;
    }
    for (std::size_t i = 0; i < nlat; ++i) {
      if (meridional_fraction_[i] == 0.0) continue;
      const std::size_t dst = meridional_dir_[i] > 0 ? i + 1 : i - 1;
      const double ratio = grid_.row_weight(i) / grid_.row_weight(dst);
      for (std::size_t j = 0; j < nlon; ++j) {
        const double leaving = out[i * nlon + j];
        q(i, j, k) -= leaving;
        q(dst, j, k) += leaving * ratio;
      }
    }

    // Zonal: periodic upwind, equal cell areas within a row.
    if (zonal_fraction_ != 0.0 && nlon > 1) {
      const double c = std::abs(zonal_fraction_);
      const bool east = zonal_fraction_ > 0.0;
      std::vector<double> row(nlon);
      for (std::size_t i = 0; i < nlat; ++i) {
        for (std::size_t j = 0; j < nlon; ++j) row[j] = q(i, j, k);
        for (std::size_t j = 0; j < nlon; ++j) {
          const std::size_t up = east ? (j + nlon - 1) % nlon : (j + 1) % nlon;
          q(i, j, k) = row[j] - c * row[j] + c * row[up];
        }
      }
    }
  }
}

void Surrogate::diagnose_aod(ModelState& s) const {
  const auto dp = grid_.layer_thickness();
  for (std::size_t i = 0; i < grid_.nlat(); ++i) {
    for (std::size_t j = 0; j < grid_.nlon(); ++j) {
      const auto col = s.so4.column(i, j);
      double burden = 0.0;
      for (std::size_t k = 0; k < col.size(); ++k) burden += col[k] * dp[k];
      s.aod(i, j) = params_.k_aod * burden;
    }
  }
}

void Surrogate::relax_temperature(ModelState& s, const VariabilityStream& stream) const {
  const double dt = params_.dt_days;
  const double inv_relax = 1.0 / params_.tau_relax_days;
  const auto eta = stream.anomalies();
  const std::size_t nlev = grid_.nlev();
  for (std::size_t i = 0; i < grid_.nlat(); ++i) {
    const double noise = eta[band_of_row_[i]];
    for (std::size_t j = 0; j < grid_.nlon(); ++j) {
      const double heating = params_.k_heat * s.aod(i, j);
      for (std::size_t k = 0; k < nlev; ++k) {
        double& t = s.temperature(i, j, k);
        const double forcing = is_strat_[k] ? heating : 0.0;
        t += dt * (forcing - (t - params_.t_eq_k) * inv_relax) + noise;
      }
    }
  }
}

void Surrogate::check_finite(const ModelState& s) const {
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!finite(s.so2.data)) throw NumericalError("non-finite SO2 field", s.step);
  if (!finite(s.so4.data)) throw NumericalError("non-finite SO4 field", s.step);
  if (!finite(s.aod.data)) throw NumericalError("non-finite AOD field", s.step);
  if (!finite(s.temperature.data)) throw NumericalError("non-finite temperature field", s.step);
}

void Surrogate::advance(ModelState& s, VariabilityStream& stream) const {
  inject(s);
  chemistry(s);
  transport(s.so2);
  transport(s.so4);
  diagnose_aod(s);
  stream.advance(params_.noise_memory, params_.noise_amp_k * std::sqrt(params_.dt_days));
  relax_temperature(s, stream);

  s.step += 1;
  s.time_days = static_cast<double>(s.step) * params_.dt_days;
  check_finite(s);
}

ModelState initialize(const ModelParams& params, const SphericalGrid& grid, const RunSeed& seed) {
  params.validate();
  ModelState s;
  s.so2 = Field3D(grid);
  s.so4 = Field3D(grid);
  s.aod = Field2D(grid);
  s.temperature = Field3D(grid, params.t_eq_k);

  const double amp = 0.01 * params.noise_amp_k;
  if (amp > 0.0) {
    std::mt19937_64 rng(mix_seed(seed.seed, seed.member_index, kInitStream));
    std::uniform_real_distribution<double> u(-amp, amp);
    for (double& t : s.temperature.data) t += u(rng);
  }
  return s;
}

ModelState step(ModelState state, const ModelParams& params, const EruptionSpec& eruption,
                const SphericalGrid& grid, VariabilityStream& stream) {
  Surrogate(grid, params, eruption).advance(state, stream);
  return state;
}

SurrogatePreset hswv_surrogate_v1() {
  SurrogatePreset p;
  p.id = "hswv-surrogate-v1";
  return p;
}

SurrogatePreset preset_by_id(const std::string& id) {
  if (id == "hswv-surrogate-v1") return hswv_surrogate_v1();
  throw ConfigError("unknown surrogate preset '" + id + "'");
}

}  // namespace impactpath
