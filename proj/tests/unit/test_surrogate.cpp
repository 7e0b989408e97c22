#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "impactpath/error.hpp"
#include "impactpath/surrogate.hpp"

using namespace impactpath;

namespace {

SphericalGrid small_grid() { return build_grid(8, 16, 8, 1.0, 1000.0); }

ModelParams short_params() {
  ModelParams p;
  p.n_steps = 40;
  return p;
}

EruptionSpec early_eruption(double mass) {
  EruptionSpec e;
  e.mass_tg = mass;
  e.day = 1.0;
  return e;
}

ModelState run(const Surrogate& s, const RunSeed& seed, std::size_t steps) {
  auto state = s.initialize(seed);
  VariabilityStream stream(seed);
  for (std::size_t m = 0; m < steps; ++m) s.advance(state, stream);
  return state;
}

}  // namespace

TEST_CASE("air mass constant") {
  const double r = 6.371e6;
  const double g = 9.80665;
  CHECK(kAirMassPerHpa == doctest::Approx(4.0 * std::numbers::pi * r * r * 100.0 / g).epsilon(1e-14));
}

TEST_CASE("preset lookup") {
  const auto p = preset_by_id("hswv-surrogate-v1");
  CHECK(p.grid.nlat == 32);
  CHECK(p.grid.nlon == 64);
  CHECK(p.grid.nlev == 16);
  CHECK(p.params.dt_days == 0.25);
  CHECK(p.params.n_steps == 4800);
  CHECK(p.eruption.day == 90.0);
  CHECK_THROWS_AS(preset_by_id("nope"), ConfigError);
}

TEST_CASE("parameter validation") {
  ModelParams p;
  p.dt_days = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = ModelParams{};
  p.noise_memory = 1.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = ModelParams{};
  p.tau_chem_days = std::numeric_limits<double>::infinity();
  CHECK_NOTHROW(p.validate());
  p.tau_chem_days = -1.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);

  EruptionSpec e;
  e.mass_tg = -1.0;
  CHECK_THROWS_AS(e.validate(), ConfigError);
  e = EruptionSpec{};
  e.injection_levels = {940.0, 990.0};  // no layer mid-pressure on the small grid
  CHECK_THROWS_AS(Surrogate(small_grid(), short_params(), e), ConfigError);
}

TEST_CASE("initialization: zero tracers and a bounded, seeded perturbation") {
  const Surrogate s(small_grid(), short_params(), early_eruption(10.0));
  const auto a = s.initialize({7, 0});
  const auto b = s.initialize({7, 0});
  const auto c = s.initialize({7, 1});
  CHECK(a == b);
  CHECK(a.temperature != c.temperature);
  const double amp = 0.01 * s.params().noise_amp_k;
  for (double t : a.temperature.data) CHECK(std::abs(t - s.params().t_eq_k) <= amp);
  for (double q : a.so2.data) CHECK(q == 0.0);
  for (double q : a.so4.data) CHECK(q == 0.0);
  CHECK(a.step == 0);
}

TEST_CASE("determinism: identical seeds give bitwise identical trajectories") {
  const Surrogate s(small_grid(), short_params(), early_eruption(10.0));
  CHECK(run(s, {42, 3}, 30) == run(s, {42, 3}, 30));
  CHECK(run(s, {42, 3}, 30).temperature != run(s, {42, 4}, 30).temperature);
}

TEST_CASE("free function step matches the operator") {
  const auto grid = small_grid();
  const auto params = short_params();
  const auto eruption = early_eruption(10.0);
  const Surrogate s(grid, params, eruption);
  auto a = s.initialize({1, 0});
  auto b = initialize(params, grid, {1, 0});
  VariabilityStream sa({1, 0});
  VariabilityStream sb({1, 0});
  for (int m = 0; m < 8; ++m) {
    s.advance(a, sa);
    b = step(b, params, eruption, grid, sb);
  }
  CHECK(a == b);
  CHECK(b.step == 8);
  CHECK(b.time_days == 2.0);
}

TEST_CASE("zero mass keeps tracers at zero") {
  const Surrogate s(small_grid(), short_params(), early_eruption(0.0));
  const auto st = run(s, {1, 0}, 20);
  for (double q : st.so2.data) CHECK(q == 0.0);
  for (double q : st.so4.data) CHECK(q == 0.0);
  for (double q : st.aod.data) CHECK(q == 0.0);
}

TEST_CASE("injection happens during the step containing the eruption day") {
  auto params = short_params();
  const auto eruption = early_eruption(10.0);  // day 1.0 -> step 4 at dt 0.25
  const Surrogate s(small_grid(), params, eruption);
  auto st = s.initialize({1, 0});
  VariabilityStream stream({1, 0});
  for (int m = 0; m < 4; ++m) s.advance(st, stream);
  CHECK(total_sulfur_mass_tg(st, s.grid()) == 0.0);
  s.advance(st, stream);
  const double k2 = std::exp(-params.dt_days / params.tau_chem_days);
  CHECK(total_mass_tg(st.so2, s.grid()) == doctest::Approx(10.0 * k2).epsilon(1e-12));
}

TEST_CASE("no chemistry and no transport leaves the injected SO2 in place") {
  auto params = short_params();
  params.tau_chem_days = std::numeric_limits<double>::infinity();
  params.v_transport_deg_per_day = 0.0;
  params.u_zonal_deg_per_day = 0.0;
  const Surrogate s(small_grid(), params, early_eruption(10.0));
  const auto st = run(s, {1, 0}, 20);
  const auto& g = s.grid();
  for (std::size_t i = 0; i < g.nlat(); ++i) {
    for (std::size_t j = 0; j < g.nlon(); ++j) {
      for (std::size_t k = 0; k < g.nlev(); ++k) {
        const bool src = i == s.injection_row() && j == s.injection_column() && k == 0;
        CHECK(st.so2(i, j, k) == (src ? s.injection_increment() : 0.0));
      }
    }
  }
  for (double q : st.so4.data) CHECK(q == 0.0);
}

TEST_CASE("global budget follows the two-box recursion, with and without transport") {
  for (double v : {0.0, 0.1, 2.0}) {
    auto params = short_params();
    params.v_transport_deg_per_day = v;
    params.tau_chem_days = 3.0;
    params.tau_decay_days = 10.0;
    const double mass = 7.0;
    const Surrogate s(small_grid(), params, early_eruption(mass));
    auto st = s.initialize({2, 0});
    VariabilityStream stream({2, 0});
    for (int m = 0; m < 4; ++m) s.advance(st, stream);

    const double k2 = std::exp(-params.dt_days / params.tau_chem_days);
    const double k4 = std::exp(-params.dt_days / params.tau_decay_days);
    double s2 = mass;
    double s4 = 0.0;
    for (int n = 1; n <= 30; ++n) {
      s.advance(st, stream);
      s4 = (s4 + s2 * (1.0 - k2)) * k4;
      s2 = mass * std::pow(k2, n);
      CHECK(total_mass_tg(st.so2, s.grid()) == doctest::Approx(s2).epsilon(1e-10));
      CHECK(total_mass_tg(st.so4, s.grid()) == doctest::Approx(s4).epsilon(1e-10));
    }
  }
}

TEST_CASE("without removal sulfur mass is conserved") {
  auto params = short_params();
  params.tau_decay_days = std::numeric_limits<double>::infinity();
  params.v_transport_deg_per_day = 2.0;
  const Surrogate s(small_grid(), params, early_eruption(12.5));
  const auto st = run(s, {3, 0}, 40);
  CHECK(total_sulfur_mass_tg(st, s.grid()) == doctest::Approx(12.5).epsilon(1e-12));
}

TEST_CASE("tracers stay non-negative and transport reaches neighbouring rows") {
  auto params = short_params();
  params.v_transport_deg_per_day = 2.0;
  const Surrogate s(small_grid(), params, early_eruption(10.0));
  const auto st = run(s, {4, 0}, 40);
  for (double q : st.so2.data) CHECK(q >= 0.0);
  for (double q : st.so4.data) CHECK(q >= 0.0);
  for (double a : st.aod.data) CHECK(a >= 0.0);
  const std::size_t r = s.injection_row();
  double north = 0.0;
  for (std::size_t j = 0; j < s.grid().nlon(); ++j) north += st.so4(r + 1, j, 0);
  CHECK(north > 0.0);
}

TEST_CASE("aod is k_aod times the pressure-weighted sulfate column") {
  const Surrogate s(small_grid(), short_params(), early_eruption(10.0));
  const auto st = run(s, {5, 0}, 30);
  const auto dp = s.grid().layer_thickness();
  for (std::size_t i = 0; i < s.grid().nlat(); ++i) {
    for (std::size_t j = 0; j < s.grid().nlon(); ++j) {
      double b = 0.0;
      for (std::size_t k = 0; k < s.grid().nlev(); ++k) b += st.so4(i, j, k) * dp[k];
      CHECK(st.aod(i, j) == doctest::Approx(s.params().k_aod * b).epsilon(1e-14));
    }
  }
}

TEST_CASE("mass conversion round-trips and is linear") {
  const auto g = small_grid();
  const std::vector<std::pair<std::size_t, std::size_t>> cells{{4, 3}, {4, 4}, {5, 3}};
  const std::vector<std::size_t> levels{0, 1};
  const double q = convert_mass_to_mixing_ratio(3.0, g, cells, levels);
  double area = 0.0;
  for (auto [i, j] : cells) area += g.area_weight(i, j);
  const double dp = g.layer_thickness()[0] + g.layer_thickness()[1];
  CHECK(q * kAirMassPerHpa * area * dp / kKgPerTg == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(convert_mass_to_mixing_ratio(6.0, g, cells, levels) == doctest::Approx(2.0 * q).epsilon(1e-15));

  Field3D f(g);
  for (auto [i, j] : cells)
    for (std::size_t k : levels) f(i, j, k) = q;
  CHECK(total_mass_tg(f, g) == doctest::Approx(3.0).epsilon(1e-13));

  CHECK_THROWS_AS(convert_mass_to_mixing_ratio(1.0, g, {}, levels), ConfigError);
}

TEST_CASE("larger eruptions warm the stratosphere more") {
  auto params = short_params();
  params.noise_amp_k = 0.0;
  const auto g = small_grid();
  const Surrogate lo(g, params, early_eruption(5.0));
  const Surrogate hi(g, params, early_eruption(20.0));
  const auto a = run(lo, {6, 0}, 40);
  const auto b = run(hi, {6, 0}, 40);
  bool strictly = false;
  for (std::size_t n = 0; n < a.temperature.data.size(); ++n) {
    CHECK(b.temperature.data[n] >= a.temperature.data[n]);
    strictly = strictly || b.temperature.data[n] > a.temperature.data[n];
  }
  CHECK(strictly);
}

TEST_CASE("internal variability: members differ in temperature") {
  auto params = short_params();
  const Surrogate s(small_grid(), params, early_eruption(0.0));
  const auto a = run(s, {9, 0}, 20);
  const auto b = run(s, {9, 1}, 20);
  double diff = 0.0;
  for (std::size_t n = 0; n < a.temperature.data.size(); ++n) {
    diff = std::max(diff, std::abs(a.temperature.data[n] - b.temperature.data[n]));
  }
  CHECK(diff > 1e-4);
}

TEST_CASE("variability stream: stationary AR(1) variance") {
  VariabilityStream v({11, 0});
  const double phi = 0.8;
  const double amp = 0.3;
  const std::size_t burn = 200;
  const std::size_t n = 200000;
  std::vector<double> s2(VariabilityStream::kBands, 0.0);
  for (std::size_t m = 0; m < burn; ++m) v.advance(phi, amp);
  for (std::size_t m = 0; m < n; ++m) {
    v.advance(phi, amp);
    for (std::size_t b = 0; b < s2.size(); ++b) s2[b] += v.anomalies()[b] * v.anomalies()[b];
  }
  const double expect = amp * amp / (1.0 - phi * phi);
  for (double x : s2) CHECK(x / static_cast<double>(n) == doctest::Approx(expect).epsilon(0.05));
}

TEST_CASE("variability bands") {
  CHECK(VariabilityStream::band_of(-90.0) == 0);
  CHECK(VariabilityStream::band_of(-50.0) == 1);
  CHECK(VariabilityStream::band_of(-23.5) == 3);
  CHECK(VariabilityStream::band_of(0.0) == 3);
  CHECK(VariabilityStream::band_of(23.5) == 4);
  CHECK(VariabilityStream::band_of(40.0) == 5);
  CHECK(VariabilityStream::band_of(90.0) == 6);
}

TEST_CASE("non-finite fields raise NumericalError with the step") {
  const Surrogate s(small_grid(), short_params(), early_eruption(10.0));
  auto st = s.initialize({1, 0});
  VariabilityStream stream({1, 0});
  s.advance(st, stream);
  s.advance(st, stream);
  st.temperature.data[5] = std::numeric_limits<double>::quiet_NaN();
  try {
    s.advance(st, stream);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(e.step() == 3);
  }
}

TEST_CASE("Courant limits are configuration errors") {
  auto params = short_params();
  params.u_zonal_deg_per_day = 1000.0;
  CHECK_THROWS_AS(Surrogate(small_grid(), params, early_eruption(1.0)), ConfigError);
  params = short_params();
  params.v_transport_deg_per_day = 500.0;
  CHECK_THROWS_AS(Surrogate(small_grid(), params, early_eruption(1.0)), ConfigError);
}
