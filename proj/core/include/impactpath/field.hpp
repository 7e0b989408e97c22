#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "impactpath/grid.hpp"

namespace impactpath {

/// Cell-centered 3D field, level index fastest: data[(i * nlon + j) * nlev + k].
struct Field3D {
  std::size_t nlat = 0;
  std::size_t nlon = 0;
  std::size_t nlev = 0;
  std::vector<double> data;

  Field3D() = default;
  Field3D(std::size_t nlat_, std::size_t nlon_, std::size_t nlev_, double fill = 0.0)
      : nlat(nlat_), nlon(nlon_), nlev(nlev_), data(nlat_ * nlon_ * nlev_, fill) {}
  explicit Field3D(const SphericalGrid& g, double fill = 0.0)
      : Field3D(g.nlat(), g.nlon(), g.nlev(), fill) {}

  double& operator()(std::size_t i, std::size_t j, std::size_t k) noexcept {
    return data[(i * nlon + j) * nlev + k];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return data[(i * nlon + j) * nlev + k];
  }
  /// The nlev values of one column.
  std::span<const double> column(std::size_t i, std::size_t j) const noexcept {
    return {data.data() + (i * nlon + j) * nlev, nlev};
  }

  bool operator==(const Field3D&) const = default;
};

/// Cell-centered 2D field, row-major over (i, j).
struct Field2D {
  std::size_t nlat = 0;
  std::size_t nlon = 0;
  std::vector<double> data;

  Field2D() = default;
  Field2D(std::size_t nlat_, std::size_t nlon_, double fill = 0.0)
      : nlat(nlat_), nlon(nlon_), data(nlat_ * nlon_, fill) {}
  explicit Field2D(const SphericalGrid& g, double fill = 0.0) : Field2D(g.nlat(), g.nlon(), fill) {}

  double& operator()(std::size_t i, std::size_t j) noexcept { return data[i * nlon + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data[i * nlon + j]; }

  bool operator==(const Field2D&) const = default;
};

}  // namespace impactpath
