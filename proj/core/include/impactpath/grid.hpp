#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace impactpath {

/// Latitude bands used for QOI reduction. Northern hemisphere plus the equatorial band.
enum class Zone { e, s, t, p };

char zone_char(Zone z);
Zone zone_from_char(char c);  // throws ConfigError

struct ZoneSpec {
  Zone label = Zone::e;
  double lat_min = -23.5;  // degrees
  double lat_max = 23.5;

  /// Half-open [lat_min, lat_max); a band ending at 90 is closed there.
  bool contains(double lat) const noexcept;
};

ZoneSpec canonical_zone(Zone z);
std::array<ZoneSpec, 4> canonical_zones();

/// Pressure interval in hPa.
struct LevelRange {
  double p_lo = 25.0;
  double p_hi = 75.0;

  void validate() const;  // 0 < p_lo < p_hi
  bool operator==(const LevelRange&) const = default;
};

/// Regular latitude/longitude grid with uniform pressure layers.
///
/// Cell (i, j) is latitude row i (south to north) and longitude column j.
/// Area weights are exact spherical cell areas normalized so the full sphere
/// sums to 1. Layer k spans [p_interface[k], p_interface[k+1]], top down.
/// Immutable after construction.
class SphericalGrid {
 public:
  std::size_t nlat() const noexcept { return nlat_; }
  std::size_t nlon() const noexcept { return nlon_; }
  std::size_t nlev() const noexcept { return nlev_; }
  std::size_t ncells() const noexcept { return nlat_ * nlon_; }

  std::span<const double> lat_edges() const noexcept { return lat_edges_; }
  std::span<const double> lon_edges() const noexcept { return lon_edges_; }
  std::span<const double> p_interface() const noexcept { return p_interface_; }
  std::span<const double> layer_thickness() const noexcept { return dp_; }

  /// Per-cell weights, row-major over (i, j).
  std::span<const double> area_weights() const noexcept { return area_; }
  double area_weight(std::size_t i, std::size_t j) const noexcept { return area_[i * nlon_ + j]; }
  /// All cells in a latitude row share the same weight.
  double row_weight(std::size_t i) const noexcept { return area_[i * nlon_]; }

  double lat_center(std::size_t i) const noexcept { return 0.5 * (lat_edges_[i] + lat_edges_[i + 1]); }
  double lon_center(std::size_t j) const noexcept { return 0.5 * (lon_edges_[j] + lon_edges_[j + 1]); }
  double mid_pressure(std::size_t k) const noexcept {
    return 0.5 * (p_interface_[k] + p_interface_[k + 1]);
  }

  std::size_t cell_index(std::size_t i, std::size_t j) const noexcept { return i * nlon_ + j; }

  /// Row containing latitude `lat`; a latitude on an interior edge belongs to the northern row.
  std::size_t row_of(double lat) const;
  std::size_t column_of(double lon) const;

  friend SphericalGrid build_grid(std::size_t, std::size_t, std::size_t, double, double);
  friend SphericalGrid build_grid(std::size_t, std::size_t, std::span<const double>);

 private:
  SphericalGrid() = default;

  std::size_t nlat_ = 0;
  std::size_t nlon_ = 0;
  std::size_t nlev_ = 0;
  std::vector<double> lat_edges_;
  std::vector<double> lon_edges_;
  std::vector<double> area_;
  std::vector<double> p_interface_;
  std::vector<double> dp_;
};

/// Uniform lat/lon spacing and uniform layer thickness between p_top and p_surface.
/// Requires nlat >= 2, nlon >= 1, nlev >= 4 and 0 < p_top < p_surface.
SphericalGrid build_grid(std::size_t nlat, std::size_t nlon, std::size_t nlev, double p_top,
                         double p_surface);

/// Same horizontal layout with explicit, strictly increasing pressure interfaces
/// (top down, at least 2 entries, first > 0).
SphericalGrid build_grid(std::size_t nlat, std::size_t nlon, std::span<const double> p_interface);

/// area_weight for cells whose center latitude lies in the zone, 0 elsewhere.
std::vector<double> zone_weights(const SphericalGrid& grid, const ZoneSpec& zone);

/// Layer k is included iff its mid-level pressure lies in [p_lo, p_hi].
/// An empty mask is legal here; QOI validation rejects it.
std::vector<bool> level_mask(const SphericalGrid& grid, const LevelRange& range);

}  // namespace impactpath
