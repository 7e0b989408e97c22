// impactpath: run surrogate eruption experiments and export pathway artifacts.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration error.
// Log verbosity comes from IMPACTPATH_LOG (trace, debug, info, warn, error, off).

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "impactpath/error.hpp"
#include "impactpath/harness.hpp"
#include "impactpath/io/config.hpp"
#include "impactpath/io/export.hpp"

namespace fs = std::filesystem;
using namespace impactpath;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

using FileList = std::vector<std::pair<fs::path, std::string>>;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("impactpath");
  logger->set_pattern("[%H:%M:%S] [%^%l%$] %v");
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("IMPACTPATH_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::info);
}

std::string mass_tag(double mass) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%gTg", mass);
  return buf;
}

std::string day_tag(double day) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "day%g", day);
  return buf;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

RunManifest make_manifest(const RunConfig& cfg, const std::string& command) {
  RunManifest m;
  m.tool_version = kToolVersion;
  m.command = command;
  m.config_digest = config_digest(cfg);
  m.preset_id = cfg.preset_id;
  m.plan_seed = cfg.plan.seed;
  m.conventions = standard_conventions(cfg.params.run_length_days());
  m.created_utc = utc_timestamp();
  return m;
}

void add_manifest(FileList& files, RunManifest manifest, const fs::path& out_dir) {
  for (const auto& [path, content] : files) {
    manifest.files.push_back(fs::relative(path, out_dir).generic_string());
  }
  files.emplace_back(out_dir / "manifest.json", manifest_to_json(manifest));
}

BaselineSet obtain_baselines(const RunConfig& cfg, const SphericalGrid& grid,
                             const std::vector<QoiSpec>& registry, const std::string& baseline_path,
                             std::size_t threads, RunManifest& manifest) {
  if (!baseline_path.empty()) {
    spdlog::info("loading baselines from {}", baseline_path);
    auto set = baseline_from_json(read_file(baseline_path));
    for (const auto& spec : registry) {
      if (spec.field == FieldKind::T && !set.find(spec.id)) {
        throw ConfigError("baseline file " + baseline_path + " has no series for " + spec.id);
      }
      if (const auto s = set.find(spec.id); s && s->mu.size() != cfg.params.n_steps + 1) {
        throw ConfigError("baseline file " + baseline_path + " does not match the run length");
      }
    }
    return set;
  }
  spdlog::info("running {} eruption-free baseline members", cfg.plan.baseline_members);
  HarnessOptions opt;
  opt.threads = threads;
  opt.mode = cfg.reduction;
  const auto stats = run_baseline_ensemble(cfg.plan, cfg.params, cfg.eruption, grid, registry, opt);
  for (std::size_t i = 0; i < cfg.plan.baseline_members; ++i) {
    manifest.member_seeds.emplace_back("baseline/" + std::to_string(i),
                                       member_seed(cfg.plan.seed, kBaselineSeedTag, i).seed);
  }
  return make_baseline_set(stats);
}

PathwayDocument make_document(const RunConfig& cfg, const MemberResult& member,
                              const ChannelResult& channel) {
  PathwayDocument doc;
  doc.experiment = channel.label;
  doc.mass_tg = member.mass_tg;
  doc.seed = member.seed;
  doc.dt_days = cfg.params.dt_days;
  doc.n_steps = cfg.params.n_steps;
  doc.never_active_day = cfg.params.run_length_days();
  doc.config_digest = config_digest(cfg);
  doc.manifest = "manifest.json";
  doc.pathway = channel.pathway;
  return doc;
}

const ExperimentSpec& find_experiment(const RunConfig& cfg, const std::string& label) {
  for (const auto& e : cfg.plan.experiments) {
    if (e.label == label) return e;
  }
  throw ConfigError("experiment " + label + " is not defined in the plan");
}

struct SimulateArgs {
  std::string config;
  std::optional<double> mass;
  std::optional<std::uint64_t> seed;
  std::size_t member = 0;
  std::string experiment = "Ex2";
  std::string baseline;
  std::string out;
  std::size_t threads = 0;
};

int cmd_simulate(const SimulateArgs& a) {
  RunConfig cfg = load_config(a.config);
  if (a.mass) cfg.eruption.mass_tg = *a.mass;
  if (a.seed) cfg.plan.seed = *a.seed;
  cfg.validate();
  const fs::path out_dir = a.out.empty() ? fs::path(cfg.output.directory) : fs::path(a.out);
  const auto& exp = find_experiment(cfg, a.experiment);

  const auto grid = cfg.grid.build();
  const auto registry = cfg.resolved_registry();
  auto manifest = make_manifest(cfg, "simulate");
  const auto baselines = obtain_baselines(cfg, grid, registry, a.baseline, a.threads, manifest);

  const auto seed = member_seed(cfg.plan.seed, kEruptionSeedTag, a.member);
  manifest.member_seeds.emplace_back("eruption/" + std::to_string(a.member), seed.seed);
  spdlog::info("simulating {} member {} ({} steps)", mass_tag(cfg.eruption.mass_tg), a.member,
               cfg.params.n_steps);

  const auto ids = [&] {
    std::vector<std::string> v;
    for (const auto& s : registry) v.push_back(s.id);
    return v;
  }();
  const BaseDag canonical = base_dag_canonical();
  TrackerHook hook(grid, registry, ids == canonical.vertices() ? canonical : BaseDag(ids, {}),
                   cfg.reduction);
  hook.record_series(true);
  hook.add_channel(exp.label, canonical_tests(registry, cfg.thresholds, exp.t_lower, exp.t_upper,
                                              baselines.series));
  const auto result = run_member(cfg.params, cfg.eruption, grid, seed, hook);

  FileList files;
  files.emplace_back(out_dir / "series.csv", series_csv(result.series, cfg.params.dt_days));
  files.emplace_back(out_dir / "pathway.json",
                     pathway_to_json(make_document(cfg, result, result.channels.front())));
  add_manifest(files, manifest, out_dir);
  write_files_atomically(files);
  spdlog::info("wrote {} files to {}", files.size(), out_dir.string());
  return kExitOk;
}

int cmd_baseline(const std::string& config, const std::string& out, std::size_t threads) {
  const RunConfig cfg = load_config(config);
  const fs::path out_dir = out.empty() ? fs::path(cfg.output.directory) : fs::path(out);
  const auto grid = cfg.grid.build();
  const auto registry = cfg.resolved_registry();
  auto manifest = make_manifest(cfg, "baseline");
  const auto set = obtain_baselines(cfg, grid, registry, "", threads, manifest);

  FileList files;
  files.emplace_back(out_dir / "baseline.json",
                     baseline_to_json(set, cfg.params.dt_days, config_digest(cfg)));
  add_manifest(files, manifest, out_dir);
  write_files_atomically(files);
  spdlog::info("wrote baselines for {} QOIs to {}", set.series.size(), out_dir.string());
  return kExitOk;
}

struct ExperimentArgs {
  std::string config;
  std::string experiments;
  std::string baseline;
  std::string out;
  std::size_t threads = 0;
};

int cmd_experiment(const ExperimentArgs& a) {
  RunConfig cfg = load_config(a.config);
  if (!a.experiments.empty()) {
    std::vector<ExperimentSpec> chosen;
    for (const auto& label : split_list(a.experiments)) chosen.push_back(find_experiment(cfg, label));
    cfg.plan.experiments = chosen;
    cfg.validate();
  }
  const fs::path out_dir = a.out.empty() ? fs::path(cfg.output.directory) : fs::path(a.out);
  const auto grid = cfg.grid.build();
  const auto registry = cfg.resolved_registry();
  auto manifest = make_manifest(cfg, "experiment");
  const auto baselines = obtain_baselines(cfg, grid, registry, a.baseline, a.threads, manifest);

  spdlog::info("running {} masses x {} members ({} experiments per run)", cfg.plan.masses_tg.size(),
               cfg.plan.n_members, cfg.plan.experiments.size());
  HarnessOptions opt;
  opt.threads = a.threads;
  opt.keep_members = true;
  opt.mode = cfg.reduction;
  const auto result = run_experiment_grid(cfg.plan, cfg.params, cfg.eruption, grid, registry,
                                          baselines, cfg.thresholds, opt);
  for (std::size_t i = 0; i < cfg.plan.n_members; ++i) {
    manifest.member_seeds.emplace_back("eruption/" + std::to_string(i),
                                       member_seed(cfg.plan.seed, kEruptionSeedTag, i).seed);
  }

  FileList files;
  files.emplace_back(out_dir / "summary.csv", summary_csv(result.rows));
  files.emplace_back(out_dir / "activation.csv", member_activation_csv(result.members));
  if (a.baseline.empty()) {
    files.emplace_back(out_dir / "baseline.json",
                       baseline_to_json(baselines, cfg.params.dt_days, config_digest(cfg)));
  }
  for (const auto& member : result.members) {
    const auto idx = member.seed.member_index;
    char name[32];
    std::snprintf(name, sizeof name, "member%02zu", idx);
    for (const auto& channel : member.channels) {
      const fs::path dir = out_dir / "members" / mass_tag(member.mass_tg) / channel.label;
      files.emplace_back(dir / (std::string(name) + ".pathway.json"),
                         pathway_to_json(make_document(cfg, member, channel)));
      if (std::find(cfg.output.dot_members.begin(), cfg.output.dot_members.end(), idx) ==
          cfg.output.dot_members.end()) {
        continue;
      }
      for (double day : cfg.output.dot_days) {
        const auto m = day_to_step(day, cfg.params.dt_days, cfg.params.n_steps);
        files.emplace_back(dir / (std::string(name) + "." + day_tag(day) + ".dot"),
                           pathway_to_dot(channel.pathway, m, day));
      }
    }
  }
  add_manifest(files, manifest, out_dir);
  write_files_atomically(files);
  std::cout << summary_csv(result.rows);
  spdlog::info("wrote {} summary rows and {} files to {}", result.rows.size(), files.size(),
               out_dir.string());
  return kExitOk;
}

int cmd_export_dot(const std::string& pathway_path, double day, bool active_only,
                   const std::string& out) {
  const auto doc = pathway_from_json(read_file(pathway_path));
  const auto m = day_to_step(day, doc.dt_days, doc.n_steps);
  const auto dot = pathway_to_dot(doc.pathway, m, day, active_only);
  if (out.empty()) {
    std::cout << dot;
  } else {
    write_files_atomically({{fs::path(out), dot}});
  }
  return kExitOk;
}

int cmd_bench(const std::string& config, const std::string& counts, std::optional<std::size_t> reps,
              std::optional<std::size_t> steps, const std::string& out) {
  RunConfig cfg = load_config(config);
  if (!counts.empty()) {
    cfg.bench.counts.clear();
    for (const auto& c : split_list(counts)) {
      try {
        std::size_t used = 0;
        const long long v = std::stoll(c, &used);
        if (used != c.size() || v < 0) throw std::invalid_argument(c);
        cfg.bench.counts.push_back(static_cast<std::size_t>(v));
      } catch (const std::exception&) {
        throw ConfigError("--counts: '" + c + "' is not a non-negative integer");
      }
    }
  }
  if (reps) cfg.bench.repetitions = *reps;
  if (steps) cfg.bench.steps = *steps;
  const auto grid = cfg.grid.build();
  spdlog::info("benchmarking {} counts, {} repetitions of {} steps", cfg.bench.counts.size(),
               cfg.bench.repetitions, cfg.bench.steps);
  const auto rows = bench_overhead(cfg.bench.counts, cfg.params, cfg.eruption, grid,
                                   cfg.bench.repetitions, cfg.bench.steps);
  const auto csv = bench_csv(rows);
  std::cout << csv;
  if (!out.empty()) write_files_atomically({{fs::path(out), csv}});
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  CLI::App app{"Source-impact pathway analysis on a surrogate volcanic eruption model"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker threads (0: all cores)");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run one member; write series, pathway and manifest");
  simulate->add_option("config", sim.config, "Experiment config (JSON)")->required();
  simulate->add_option("--mass", sim.mass, "Eruption mass in Tg");
  simulate->add_option("--seed", sim.seed, "Plan seed");
  simulate->add_option("--member", sim.member, "Member index");
  simulate->add_option("--experiment", sim.experiment, "Threshold experiment label");
  simulate->add_option("--baseline", sim.baseline, "Baseline JSON from 'baseline' (default: compute)");
  simulate->add_option("--out", sim.out, "Output directory");

  std::string base_config, base_out;
  auto* baseline = app.add_subcommand("baseline", "Run the eruption-free ensemble; write baseline.json");
  baseline->add_option("config", base_config, "Experiment config (JSON)")->required();
  baseline->add_option("--out", base_out, "Output directory");

  ExperimentArgs ex;
  auto* experiment = app.add_subcommand("experiment", "Run the mass x threshold grid; write summary CSV");
  experiment->add_option("config", ex.config, "Experiment config (JSON)")->required();
  experiment->add_option("--experiments", ex.experiments, "Comma-separated experiment labels");
  experiment->add_option("--baseline", ex.baseline, "Baseline JSON (default: compute)");
  experiment->add_option("--out", ex.out, "Output directory");

  std::string dot_path, dot_out;
  double dot_day = 0.0;
  bool active_only = false;
  auto* export_dot = app.add_subcommand("export-dot", "Render one day of a pathway JSON as DOT");
  export_dot->add_option("pathway", dot_path, "Pathway JSON")->required();
  export_dot->add_option("--day", dot_day, "Simulation day")->required();
  export_dot->add_flag("--active-only", active_only, "Omit inactive base edges");
  export_dot->add_option("--out", dot_out, "Output file (default: stdout)");

  std::string bench_config, bench_counts, bench_out;
  std::optional<std::size_t> bench_reps, bench_steps;
  auto* bench = app.add_subcommand("bench", "Time the tracker hook against QOI count");
  bench->add_option("config", bench_config, "Experiment config (JSON)")->required();
  bench->add_option("--counts", bench_counts, "Comma-separated QOI counts");
  bench->add_option("--repetitions", bench_reps, "Repetitions per count");
  bench->add_option("--steps", bench_steps, "Model steps per timing");
  bench->add_option("--out", bench_out, "CSV output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    sim.threads = threads;
    ex.threads = threads;
    if (*simulate) return cmd_simulate(sim);
    if (*baseline) return cmd_baseline(base_config, base_out, threads);
    if (*experiment) return cmd_experiment(ex);
    if (*export_dot) return cmd_export_dot(dot_path, dot_day, active_only, dot_out);
    if (*bench) return cmd_bench(bench_config, bench_counts, bench_reps, bench_steps, bench_out);
  } catch (const ConfigError& e) {
    spdlog::error("configuration error: {}", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitRuntime;
  }
  return kExitRuntime;
}
