#include "impactpath/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "impactpath/error.hpp"

namespace impactpath {

namespace {

double sin_deg(double deg) { return std::sin(deg * std::numbers::pi / 180.0); }

}  // namespace

char zone_char(Zone z) {
  switch (z) {
    case Zone::e: return 'e';
    case Zone::s: return 's';
    case Zone::t: return 't';
    case Zone::p: return 'p';
  }
  return '?';
}

Zone zone_from_char(char c) {
  switch (c) {
    case 'e': return Zone::e;
    case 's': return Zone::s;
    case 't': return Zone::t;
    case 'p': return Zone::p;
    default: break;
  }
  throw ConfigError(std::string("unknown zone label '") + c + "' (expected one of e, s, t, p)");
}

bool ZoneSpec::contains(double lat) const noexcept {
  if (lat >= lat_min && lat < lat_max) return true;
  return lat_max >= 90.0 && lat == 90.0;
}

ZoneSpec canonical_zone(Zone z) {
  switch (z) {
    case Zone::e: return {Zone::e, -23.5, 23.5};
    case Zone::s: return {Zone::s, 23.5, 35.0};
    case Zone::t: return {Zone::t, 35.0, 66.5};
    case Zone::p: return {Zone::p, 66.5, 90.0};
  }
  return {};
}

std::array<ZoneSpec, 4> canonical_zones() {
  return {canonical_zone(Zone::e), canonical_zone(Zone::s), canonical_zone(Zone::t),
          canonical_zone(Zone::p)};
}

void LevelRange::validate() const {
  if (!(p_lo > 0.0) || !(p_lo < p_hi)) {
    throw ConfigError("invalid level range [" + std::to_string(p_lo) + ", " +
                      std::to_string(p_hi) + "] hPa: need 0 < p_lo < p_hi");
  }
}

std::size_t SphericalGrid::row_of(double lat) const {
  if (!(lat >= -90.0 && lat <= 90.0)) throw ConfigError("latitude out of [-90, 90]");
  auto it = std::upper_bound(lat_edges_.begin(), lat_edges_.end(), lat);
  auto row = static_cast<std::size_t>(std::distance(lat_edges_.begin(), it));
  return std::clamp<std::size_t>(row, 1, nlat_) - 1;
}

std::size_t SphericalGrid::column_of(double lon) const {
  double wrapped = std::fmod(lon, 360.0);
  if (wrapped < 0.0) wrapped += 360.0;
  auto it = std::upper_bound(lon_edges_.begin(), lon_edges_.end(), wrapped);
  auto col = static_cast<std::size_t>(std::distance(lon_edges_.begin(), it));
  return std::clamp<std::size_t>(col, 1, nlon_) - 1;
}

SphericalGrid build_grid(std::size_t nlat, std::size_t nlon, std::size_t nlev, double p_top,
                         double p_surface) {
  if (nlat < 2) throw ConfigError("grid: nlat must be >= 2, got " + std::to_string(nlat));
  if (nlon < 1) throw ConfigError("grid: nlon must be >= 1, got " + std::to_string(nlon));
  if (nlev < 4) throw ConfigError("grid: nlev must be >= 4, got " + std::to_string(nlev));
  if (!(p_top > 0.0) || !(p_top < p_surface) || !std::isfinite(p_surface)) {
    throw ConfigError("grid: need 0 < p_top < p_surface");
  }

  const double dp = (p_surface - p_top) / static_cast<double>(nlev);
  std::vector<double> p_interface(nlev + 1);
  for (std::size_t k = 0; k <= nlev; ++k) p_interface[k] = p_top + dp * static_cast<double>(k);
  p_interface[nlev] = p_surface;
  return build_grid(nlat, nlon, p_interface);
}

SphericalGrid build_grid(std::size_t nlat, std::size_t nlon, std::span<const double> p_interface) {
  if (nlat < 2) throw ConfigError("grid: nlat must be >= 2, got " + std::to_string(nlat));
  if (nlon < 1) throw ConfigError("grid: nlon must be >= 1, got " + std::to_string(nlon));
  if (p_interface.size() < 2) throw ConfigError("grid: need at least one pressure layer");
  if (!(p_interface[0] > 0.0)) throw ConfigError("grid: top interface pressure must be > 0");
  for (std::size_t k = 0; k + 1 < p_interface.size(); ++k) {
    if (!(p_interface[k] < p_interface[k + 1]) || !std::isfinite(p_interface[k + 1])) {
      throw ConfigError("grid: pressure interfaces must be finite and strictly increasing");
    }
  }

  SphericalGrid g;
  g.nlat_ = nlat;
  g.nlon_ = nlon;
  g.nlev_ = p_interface.size() - 1;

  g.lat_edges_.resize(nlat + 1);
  for (std::size_t i = 0; i <= nlat; ++i) {
    g.lat_edges_[i] = -90.0 + 180.0 * static_cast<double>(i) / static_cast<double>(nlat);
  }
  g.lon_edges_.resize(nlon + 1);
  for (std::size_t j = 0; j <= nlon; ++j) {
    g.lon_edges_[j] = 360.0 * static_cast<double>(j) / static_cast<double>(nlon);
  }

  // Exact spherical band area (sin difference) split evenly over longitude.
  g.area_.resize(nlat * nlon);
  for (std::size_t i = 0; i < nlat; ++i) {
    const double band = 0.5 * (sin_deg(g.lat_edges_[i + 1]) - sin_deg(g.lat_edges_[i]));
    const double w = band / static_cast<double>(nlon);
    std::fill_n(g.area_.begin() + static_cast<std::ptrdiff_t>(i * nlon), nlon, w);
  }

  g.p_interface_.assign(p_interface.begin(), p_interface.end());
  g.dp_.resize(g.nlev_);
  for (std::size_t k = 0; k < g.nlev_; ++k) g.dp_[k] = g.p_interface_[k + 1] - g.p_interface_[k];
  return g;
}

std::vector<double> zone_weights(const SphericalGrid& grid, const ZoneSpec& zone) {
  if (!(zone.lat_min >= -90.0 && zone.lat_max <= 90.0 && zone.lat_min < zone.lat_max)) {
    throw ConfigError("zone bounds must satisfy -90 <= lat_min < lat_max <= 90");
  }
  std::vector<double> w(grid.ncells(), 0.0);
  for (std::size_t i = 0; i < grid.nlat(); ++i) {
    if (!zone.contains(grid.lat_center(i))) continue;
    for (std::size_t j = 0; j < grid.nlon(); ++j) {
      w[grid.cell_index(i, j)] = grid.area_weight(i, j);
    }
  }
  return w;
}

std::vector<bool> level_mask(const SphericalGrid& grid, const LevelRange& range) {
  range.validate();
  std::vector<bool> mask(grid.nlev());
  for (std::size_t k = 0; k < grid.nlev(); ++k) {
    const double p = grid.mid_pressure(k);
    mask[k] = p >= range.p_lo && p <= range.p_hi;
  }
  return mask;
}

}  // namespace impactpath
