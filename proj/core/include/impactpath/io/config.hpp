#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "impactpath/harness.hpp"
#include "impactpath/pathway.hpp"
#include "impactpath/qoi.hpp"
#include "impactpath/surrogate.hpp"

namespace impactpath {

inline constexpr const char* kToolVersion = "1.0.0";

struct OutputConfig {
  std::string directory = "out";
  std::vector<double> dot_days{60.0, 120.0, 400.0};
  std::vector<std::size_t> dot_members{0};
};

struct BenchConfig {
  std::vector<std::size_t> counts{7, 35, 175, 875};
  std::size_t repetitions = 3;
  std::size_t steps = 200;
};

/// Everything an experiment run needs, after preset defaults and overrides.
struct RunConfig {
  std::string preset_id = "hswv-surrogate-v1";
  GridParams grid;
  ModelParams params;
  EruptionSpec eruption;
  LevelRange qoi_levels;
  ReductionMode reduction = ReductionMode::Mean;
  std::vector<QoiSpec> registry;  // empty: canonical 16-QOI registry on qoi_levels
  TracerThresholds thresholds;
  ExperimentPlan plan;
  OutputConfig output;
  BenchConfig bench;

  std::vector<QoiSpec> resolved_registry() const;
  /// Cross-section checks that need the grid. Throws ConfigError.
  void validate() const;
};

/// Defaults of a named preset, with no overrides.
RunConfig default_config(const std::string& preset_id = "hswv-surrogate-v1");

/// Parses a JSON config. Syntax errors report line and column; semantic errors
/// name the offending field path (e.g. "plan.experiments[1].t_upper").
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");

/// Reads and parses `path`; a missing or unreadable file is a ConfigError naming it.
RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON form of a fully-resolved config (sorted keys, no whitespace).
std::string config_canonical_json(const RunConfig& config);

/// 16 hex digits of FNV-1a over the canonical JSON.
std::string config_digest(const RunConfig& config);

}  // namespace impactpath
