#include "impactpath/io/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "impactpath/error.hpp"
#include "impactpath/seed.hpp"

namespace impactpath {

namespace {

using json = nlohmann::json;

class Reader {
 public:
  explicit Reader(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
    throw ConfigError(origin_ + ": " + path + ": " + msg);
  }

  void only_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) const {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& [key, value] : obj.items()) {
      if (!allowed.count(key)) fail(path.empty() ? key : path + "." + key, "unknown key");
    }
  }

  double number(const json& j, const std::string& path) const {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
  }

  /// null means "disabled" (+inf) for optional timescales.
  double timescale(const json& j, const std::string& path) const {
    if (j.is_null()) return std::numeric_limits<double>::infinity();
    return number(j, path);
  }

  std::size_t count(const json& j, const std::string& path) const {
    if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<long long>() < 0)) {
      fail(path, "expected a non-negative integer");
    }
    return j.get<std::size_t>();
  }

  std::uint64_t seed(const json& j, const std::string& path) const {
    if (!j.is_number_unsigned()) fail(path, "expected a non-negative 64-bit integer");
    return j.get<std::uint64_t>();
  }

  std::string string(const json& j, const std::string& path) const {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
  }

  std::pair<double, double> pair(const json& j, const std::string& path) const {
    if (!j.is_array() || j.size() != 2) fail(path, "expected a two-element array");
    return {number(j[0], path + "[0]"), number(j[1], path + "[1]")};
  }

  LevelRange levels(const json& j, const std::string& path) const {
    const auto [lo, hi] = pair(j, path);
    LevelRange r{lo, hi};
    try {
      r.validate();
    } catch (const ConfigError& e) {
      fail(path, e.what());
    }
    return r;
  }

  AbsoluteBounds bounds(const json& j, const std::string& path) const {
    const auto [lo, hi] = pair(j, path);
    if (!(lo < hi)) fail(path, "lower bound must be below upper bound");
    return {lo, hi};
  }

  template <typename T, typename F>
  std::vector<T> list(const json& j, const std::string& path, F&& item) const {
    if (!j.is_array()) fail(path, "expected an array");
    std::vector<T> out;
    for (std::size_t n = 0; n < j.size(); ++n) out.push_back(item(j[n], path + "[" + std::to_string(n) + "]"));
    return out;
  }

 private:
  std::string origin_;
};

std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t n = 0; n < byte && n < text.size(); ++n) {
    if (text[n] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

void read_grid(const Reader& r, const json& j, GridParams& g) {
  r.only_keys(j, "grid", {"nlat", "nlon", "nlev", "p_top_hpa", "p_surface_hpa"});
  if (j.contains("nlat")) g.nlat = r.count(j["nlat"], "grid.nlat");
  if (j.contains("nlon")) g.nlon = r.count(j["nlon"], "grid.nlon");
  if (j.contains("nlev")) g.nlev = r.count(j["nlev"], "grid.nlev");
  if (j.contains("p_top_hpa")) g.p_top_hpa = r.number(j["p_top_hpa"], "grid.p_top_hpa");
  if (j.contains("p_surface_hpa")) g.p_surface_hpa = r.number(j["p_surface_hpa"], "grid.p_surface_hpa");
}

void read_model(const Reader& r, const json& j, ModelParams& p) {
  r.only_keys(j, "model",
              {"dt_days", "n_steps", "tau_chem_days", "tau_decay_days", "v_transport_deg_per_day",
               "u_zonal_deg_per_day", "k_aod", "k_heat", "tau_relax_days", "t_eq_k", "noise_amp_k",
               "noise_memory", "p_tropopause_hpa"});
  auto num = [&](const char* key, double& out) {
    if (j.contains(key)) out = r.number(j[key], std::string("model.") + key);
  };
  num("dt_days", p.dt_days);
  if (j.contains("n_steps")) p.n_steps = r.count(j["n_steps"], "model.n_steps");
  if (j.contains("tau_chem_days")) p.tau_chem_days = r.timescale(j["tau_chem_days"], "model.tau_chem_days");
  if (j.contains("tau_decay_days")) {
    p.tau_decay_days = r.timescale(j["tau_decay_days"], "model.tau_decay_days");
  }
  num("v_transport_deg_per_day", p.v_transport_deg_per_day);
  num("u_zonal_deg_per_day", p.u_zonal_deg_per_day);
  num("k_aod", p.k_aod);
  num("k_heat", p.k_heat);
  num("tau_relax_days", p.tau_relax_days);
  num("t_eq_k", p.t_eq_k);
  num("noise_amp_k", p.noise_amp_k);
  num("noise_memory", p.noise_memory);
  num("p_tropopause_hpa", p.p_tropopause_hpa);
  try {
    p.validate();
  } catch (const ConfigError& e) {
    r.fail("model", e.what());
  }
}

void read_eruption(const Reader& r, const json& j, EruptionSpec& e) {
  r.only_keys(j, "eruption", {"mass_tg", "day", "lat_deg", "lon_deg", "injection_levels_hpa"});
  if (j.contains("mass_tg")) e.mass_tg = r.number(j["mass_tg"], "eruption.mass_tg");
  if (j.contains("day")) e.day = r.number(j["day"], "eruption.day");
  if (j.contains("lat_deg")) e.lat_deg = r.number(j["lat_deg"], "eruption.lat_deg");
  if (j.contains("lon_deg")) e.lon_deg = r.number(j["lon_deg"], "eruption.lon_deg");
  if (j.contains("injection_levels_hpa")) {
    e.injection_levels = r.levels(j["injection_levels_hpa"], "eruption.injection_levels_hpa");
  }
  try {
    e.validate();
  } catch (const ConfigError& err) {
    r.fail("eruption", err.what());
  }
}

QoiSpec read_qoi_spec(const Reader& r, const json& j, const std::string& path, LevelRange defaults) {
  r.only_keys(j, path, {"id", "field", "zone", "lat_min", "lat_max", "level_range_hpa"});
  if (!j.contains("field")) r.fail(path + ".field", "missing");
  if (!j.contains("zone")) r.fail(path + ".zone", "missing");
  QoiSpec spec;
  try {
    spec.field = field_from_name(r.string(j["field"], path + ".field"));
  } catch (const ConfigError& e) {
    r.fail(path + ".field", e.what());
  }
  const std::string zone = r.string(j["zone"], path + ".zone");
  if (zone.size() != 1) r.fail(path + ".zone", "expected one of e, s, t, p");
  try {
    spec.zone = canonical_zone(zone_from_char(zone[0]));
  } catch (const ConfigError& e) {
    r.fail(path + ".zone", e.what());
  }
  if (j.contains("lat_min")) spec.zone.lat_min = r.number(j["lat_min"], path + ".lat_min");
  if (j.contains("lat_max")) spec.zone.lat_max = r.number(j["lat_max"], path + ".lat_max");
  if (!(spec.zone.lat_min < spec.zone.lat_max)) r.fail(path, "lat_min must be below lat_max");
  if (spec.is_3d()) {
    spec.level_range = j.contains("level_range_hpa")
                           ? r.levels(j["level_range_hpa"], path + ".level_range_hpa")
                           : defaults;
  } else if (j.contains("level_range_hpa")) {
    r.fail(path + ".level_range_hpa", "AOD is 2D and takes no level range");
  }
  spec.id = j.contains("id") ? r.string(j["id"], path + ".id") : make_qoi_id(spec.field, spec.zone.label);
  return spec;
}

void read_qoi(const Reader& r, const json& j, RunConfig& c) {
  r.only_keys(j, "qoi", {"level_range_hpa", "reduction", "registry"});
  if (j.contains("level_range_hpa")) c.qoi_levels = r.levels(j["level_range_hpa"], "qoi.level_range_hpa");
  if (j.contains("reduction")) {
    const auto mode = r.string(j["reduction"], "qoi.reduction");
    if (mode == "mean") {
      c.reduction = ReductionMode::Mean;
    } else if (mode == "integral") {
      c.reduction = ReductionMode::Integral;
    } else {
      r.fail("qoi.reduction", "expected \"mean\" or \"integral\"");
    }
  }
  if (j.contains("registry")) {
    c.registry = r.list<QoiSpec>(j["registry"], "qoi.registry", [&](const json& item, const std::string& p) {
      return read_qoi_spec(r, item, p, c.qoi_levels);
    });
    if (c.registry.empty()) r.fail("qoi.registry", "must not be empty");
  }
}

void read_thresholds(const Reader& r, const json& j, TracerThresholds& t) {
  r.only_keys(j, "thresholds", {"so2", "sul", "aod"});
  if (j.contains("so2")) t.so2 = r.bounds(j["so2"], "thresholds.so2");
  if (j.contains("sul")) t.sul = r.bounds(j["sul"], "thresholds.sul");
  if (j.contains("aod")) t.aod = r.bounds(j["aod"], "thresholds.aod");
}

void read_plan(const Reader& r, const json& j, ExperimentPlan& p) {
  r.only_keys(j, "plan", {"masses_tg", "experiments", "members", "baseline_members", "seed"});
  if (j.contains("masses_tg")) {
    p.masses_tg = r.list<double>(j["masses_tg"], "plan.masses_tg",
                                 [&](const json& x, const std::string& path) { return r.number(x, path); });
  }
  if (j.contains("experiments")) {
    p.experiments = r.list<ExperimentSpec>(
        j["experiments"], "plan.experiments", [&](const json& x, const std::string& path) {
          r.only_keys(x, path, {"label", "t_lower", "t_upper"});
          for (const char* key : {"label", "t_lower", "t_upper"}) {
            if (!x.contains(key)) r.fail(path + "." + key, "missing");
          }
          ExperimentSpec e{r.string(x["label"], path + ".label"), r.number(x["t_lower"], path + ".t_lower"),
                           r.number(x["t_upper"], path + ".t_upper")};
          if (!(e.t_lower <= e.t_upper)) r.fail(path + ".t_upper", "must be >= t_lower");
          if (!(e.t_upper > 0.0)) r.fail(path + ".t_upper", "must be > 0");
          return e;
        });
  }
  if (j.contains("members")) p.n_members = r.count(j["members"], "plan.members");
  if (j.contains("baseline_members")) p.baseline_members = r.count(j["baseline_members"], "plan.baseline_members");
  if (j.contains("seed")) p.seed = r.seed(j["seed"], "plan.seed");
  try {
    p.validate();
  } catch (const ConfigError& e) {
    r.fail("plan", e.what());
  }
}

void read_output(const Reader& r, const json& j, OutputConfig& o) {
  r.only_keys(j, "output", {"directory", "dot_days", "dot_members"});
  if (j.contains("directory")) o.directory = r.string(j["directory"], "output.directory");
  if (j.contains("dot_days")) {
    o.dot_days = r.list<double>(j["dot_days"], "output.dot_days",
                                [&](const json& x, const std::string& path) { return r.number(x, path); });
  }
  if (j.contains("dot_members")) {
    o.dot_members = r.list<std::size_t>(j["dot_members"], "output.dot_members",
                                        [&](const json& x, const std::string& path) { return r.count(x, path); });
  }
}

void read_bench(const Reader& r, const json& j, BenchConfig& b) {
  r.only_keys(j, "bench", {"counts", "repetitions", "steps"});
  if (j.contains("counts")) {
    b.counts = r.list<std::size_t>(j["counts"], "bench.counts",
                                   [&](const json& x, const std::string& path) { return r.count(x, path); });
  }
  if (j.contains("repetitions")) b.repetitions = r.count(j["repetitions"], "bench.repetitions");
  if (j.contains("steps")) b.steps = r.count(j["steps"], "bench.steps");
  if (b.repetitions == 0) r.fail("bench.repetitions", "must be >= 1");
  if (b.steps == 0) r.fail("bench.steps", "must be >= 1");
}

json timescale_json(double v) { return std::isinf(v) ? json(nullptr) : json(v); }

json levels_json(const LevelRange& l) { return json::array({l.p_lo, l.p_hi}); }

}  // namespace

std::vector<QoiSpec> RunConfig::resolved_registry() const {
  return registry.empty() ? registry_canonical(qoi_levels) : registry;
}

void RunConfig::validate() const {
  params.validate();
  eruption.validate();
  plan.validate();
  const auto g = grid.build();
  validate_registry(resolved_registry(), g);
  if (eruption.day < 0.0 || eruption.day > params.run_length_days()) {
    throw ConfigError("eruption.day lies outside the run");
  }
  for (double d : output.dot_days) {
    if (!(d >= 0.0 && d <= params.run_length_days())) {
      throw ConfigError("output.dot_days: day " + std::to_string(d) + " outside the run");
    }
  }
  // Constructing the model checks injection levels and Courant limits.
  Surrogate(g, params, eruption);
}

RunConfig default_config(const std::string& preset_id) {
  const auto preset = preset_by_id(preset_id);
  RunConfig c;
  c.preset_id = preset.id;
  c.grid = preset.grid;
  c.params = preset.params;
  c.eruption = preset.eruption;
  return c;
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": JSON syntax error at " + line_col(text, e.byte) + ": " + e.what());
  }
  const Reader r(origin);
  r.only_keys(j, "", {"preset", "grid", "model", "eruption", "qoi", "thresholds", "plan", "output", "bench"});

  RunConfig c;
  try {
    c = default_config(j.contains("preset") ? r.string(j["preset"], "preset") : "hswv-surrogate-v1");
  } catch (const ConfigError& e) {
    r.fail("preset", e.what());
  }
  if (j.contains("grid")) read_grid(r, j["grid"], c.grid);
  if (j.contains("model")) read_model(r, j["model"], c.params);
  if (j.contains("eruption")) read_eruption(r, j["eruption"], c.eruption);
  if (j.contains("qoi")) read_qoi(r, j["qoi"], c);
  if (j.contains("thresholds")) read_thresholds(r, j["thresholds"], c.thresholds);
  if (j.contains("plan")) read_plan(r, j["plan"], c.plan);
  if (j.contains("output")) read_output(r, j["output"], c.output);
  if (j.contains("bench")) read_bench(r, j["bench"], c.bench);
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string config_canonical_json(const RunConfig& c) {
  json j;
  j["preset"] = c.preset_id;
  j["grid"] = {{"nlat", c.grid.nlat},
               {"nlon", c.grid.nlon},
               {"nlev", c.grid.nlev},
               {"p_top_hpa", c.grid.p_top_hpa},
               {"p_surface_hpa", c.grid.p_surface_hpa}};
  const auto& p = c.params;
  j["model"] = {{"dt_days", p.dt_days},
                {"n_steps", p.n_steps},
                {"tau_chem_days", timescale_json(p.tau_chem_days)},
                {"tau_decay_days", timescale_json(p.tau_decay_days)},
                {"v_transport_deg_per_day", p.v_transport_deg_per_day},
                {"u_zonal_deg_per_day", p.u_zonal_deg_per_day},
                {"k_aod", p.k_aod},
                {"k_heat", p.k_heat},
                {"tau_relax_days", p.tau_relax_days},
                {"t_eq_k", p.t_eq_k},
                {"noise_amp_k", p.noise_amp_k},
                {"noise_memory", p.noise_memory},
                {"p_tropopause_hpa", p.p_tropopause_hpa}};
  j["eruption"] = {{"mass_tg", c.eruption.mass_tg},
                   {"day", c.eruption.day},
                   {"lat_deg", c.eruption.lat_deg},
                   {"lon_deg", c.eruption.lon_deg},
                   {"injection_levels_hpa", levels_json(c.eruption.injection_levels)}};
  json registry = json::array();
  for (const auto& spec : c.resolved_registry()) {
    json s = {{"id", spec.id},
              {"field", field_name(spec.field)},
              {"zone", std::string(1, zone_char(spec.zone.label))},
              {"lat_min", spec.zone.lat_min},
              {"lat_max", spec.zone.lat_max}};
    if (spec.level_range) s["level_range_hpa"] = levels_json(*spec.level_range);
    registry.push_back(std::move(s));
  }
  j["qoi"] = {{"level_range_hpa", levels_json(c.qoi_levels)},
              {"reduction", c.reduction == ReductionMode::Mean ? "mean" : "integral"},
              {"registry", registry}};
  j["thresholds"] = {{"so2", {c.thresholds.so2.lower, c.thresholds.so2.upper}},
                     {"sul", {c.thresholds.sul.lower, c.thresholds.sul.upper}},
                     {"aod", {c.thresholds.aod.lower, c.thresholds.aod.upper}}};
  json experiments = json::array();
  for (const auto& e : c.plan.experiments) {
    experiments.push_back({{"label", e.label}, {"t_lower", e.t_lower}, {"t_upper", e.t_upper}});
  }
  j["plan"] = {{"masses_tg", c.plan.masses_tg},
               {"experiments", experiments},
               {"members", c.plan.n_members},
               {"baseline_members", c.plan.baseline_members},
               {"seed", c.plan.seed}};
  // Output location and bench settings do not affect results and stay out of the digest.
  return j.dump();
}

std::string config_digest(const RunConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(config_canonical_json(config))));
  return buf;
}

}  // namespace impactpath
