#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "impactpath/harness.hpp"
#include "impactpath/pathway.hpp"
#include "impactpath/qoi.hpp"
#include "impactpath/stats.hpp"

namespace impactpath {

inline constexpr const char* kPathwayFormat = "impactpath.pathway";
inline constexpr int kPathwayFormatVersion = 1;

/// One member's activation record plus the metadata needed to interpret it.
struct PathwayDocument {
  std::string experiment;  // tracker channel label
  double mass_tg = 0.0;
  RunSeed seed;
  double dt_days = 0.25;
  std::size_t n_steps = 0;
  double never_active_day = 1200.0;
  std::string config_digest;
  std::string manifest;  // file name of the run manifest
  PathwayDag pathway;

  bool operator==(const PathwayDocument&) const = default;
};

/// Activation rows are stored as one "0"/"1" string per step, in vertex order.
std::string pathway_to_json(const PathwayDocument& doc);
PathwayDocument pathway_from_json(const std::string& text);  // throws DataError

std::string baseline_to_json(const BaselineSet& baselines, double dt_days,
                             const std::string& config_digest);
BaselineSet baseline_from_json(const std::string& text);  // throws DataError

/// Columns: step, time_days, then one column per series in the given order.
std::string series_csv(const std::vector<QoiSeries>& series, double dt_days);

/// Columns: experiment, mass_tg, qoi_id, n_members, mean_first, se_first, mean_total, se_total.
std::string summary_csv(const std::vector<SummaryRow>& rows);

/// Columns: qoi_count, baseline_s_per_step, tracked_s_per_step, ratio.
std::string bench_csv(const std::vector<BenchRow>& rows);

/// Columns: experiment, mass_tg, member, seed, qoi_id, first_active, total_active.
std::string member_activation_csv(const std::vector<MemberResult>& members);

/// Step nearest to `day`; throws BoundsError outside [0, n_steps * dt].
std::size_t day_to_step(double day, double dt_days, std::size_t n_steps);

/// Snapshot of step m as a Graphviz digraph. All base vertices appear, active
/// ones filled orange and inactive ones gray; E_m edges are solid and the other
/// base edges dashed gray unless `active_only`.
std::string pathway_to_dot(const PathwayDag& pathway, std::size_t m, double day,
                           bool active_only = false);

struct RunManifest {
  std::string tool_version;
  std::string command;
  std::string config_digest;
  std::string preset_id;
  std::uint64_t plan_seed = 0;
  std::vector<std::pair<std::string, std::uint64_t>> member_seeds;  // name -> seed
  std::map<std::string, std::string> conventions;
  std::vector<std::string> files;
  std::string created_utc;
};

/// Conventions every manifest records (never-active day, divisors, tie-breaks).
std::map<std::string, std::string> standard_conventions(double never_active_day);
std::string manifest_to_json(const RunManifest& manifest);
std::string utc_timestamp();

/// Formats a double with 17 significant digits.
std::string format_double(double v);

/// Writes every file to a temporary sibling first and renames them only after
/// all writes succeed. Parent directories are created.
void write_files_atomically(const std::vector<std::pair<std::filesystem::path, std::string>>& files);

std::string read_file(const std::filesystem::path& path);  // throws DataError

}  // namespace impactpath
