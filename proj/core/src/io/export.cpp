#include "impactpath/io/export.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "impactpath/error.hpp"

namespace impactpath {

namespace {

using json = nlohmann::json;

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

/// Text between the last '(' and ')' of an id, or the id itself.
std::string group_key(const std::string& id) {
  const auto open = id.rfind('(');
  const auto close = id.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open) return id;
  return id.substr(open + 1, close - open - 1);
}

template <typename T>
T need(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw DataError(std::string("missing key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw DataError(std::string("bad value for '") + key + "': " + e.what());
  }
}

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("malformed ") + what + " JSON: " + e.what());
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string pathway_to_json(const PathwayDocument& doc) {
  const auto& base = doc.pathway.base();
  json edges = json::array();
  for (const auto& [a, b] : base.edge_names()) edges.push_back({a, b});

  json rows = json::array();
  for (std::size_t m = 0; m < doc.pathway.n_rows(); ++m) {
    std::string bits;
    for (bool b : doc.pathway.row(m)) bits += b ? '1' : '0';
    rows.push_back(std::move(bits));
  }

  json j;
  j["format"] = kPathwayFormat;
  j["version"] = kPathwayFormatVersion;
  j["manifest"] = doc.manifest;
  j["metadata"] = {{"experiment", doc.experiment},
                   {"mass_tg", doc.mass_tg},
                   {"member", doc.seed.member_index},
                   {"seed", doc.seed.seed},
                   {"dt_days", doc.dt_days},
                   {"n_steps", doc.n_steps},
                   {"never_active_day", doc.never_active_day},
                   {"config_digest", doc.config_digest}};
  j["base"] = {{"vertices", base.vertices()}, {"edges", edges}};
  j["activation"] = rows;
  return j.dump(1) + "\n";
}

PathwayDocument pathway_from_json(const std::string& text) {
  const json j = parse_json(text, "pathway");
  if (need<std::string>(j, "format") != kPathwayFormat) throw DataError("not a pathway document");
  if (need<int>(j, "version") != kPathwayFormatVersion) throw DataError("unsupported pathway version");

  PathwayDocument doc;
  doc.manifest = need<std::string>(j, "manifest");
  const json& meta = j.at("metadata");
  doc.experiment = need<std::string>(meta, "experiment");
  doc.mass_tg = need<double>(meta, "mass_tg");
  doc.seed.member_index = need<std::size_t>(meta, "member");
  doc.seed.seed = need<std::uint64_t>(meta, "seed");
  doc.dt_days = need<double>(meta, "dt_days");
  doc.n_steps = need<std::size_t>(meta, "n_steps");
  doc.never_active_day = need<double>(meta, "never_active_day");
  doc.config_digest = need<std::string>(meta, "config_digest");

  if (!j.contains("base")) throw DataError("missing key 'base'");
  const auto vertices = need<std::vector<std::string>>(j.at("base"), "vertices");
  const auto edges = need<std::vector<std::pair<std::string, std::string>>>(j.at("base"), "edges");
  BaseDag base;
  try {
    base = BaseDag(vertices, edges);
  } catch (const ConfigError& e) {
    throw DataError(std::string("invalid base DAG: ") + e.what());
  }

  doc.pathway = PathwayDag(std::move(base));
  const auto rows = need<std::vector<std::string>>(j, "activation");
  if (rows.size() != doc.n_steps + 1) {
    throw DataError("activation has " + std::to_string(rows.size()) + " rows, expected " +
                    std::to_string(doc.n_steps + 1));
  }
  doc.pathway.reserve(rows.size());
  std::vector<bool> taus(vertices.size());
  for (std::size_t m = 0; m < rows.size(); ++m) {
    const auto& row = rows[m];
    if (row.size() != vertices.size()) throw DataError("activation row " + std::to_string(m) + " has wrong width");
    for (std::size_t l = 0; l < row.size(); ++l) {
      if (row[l] != '0' && row[l] != '1') throw DataError("activation row " + std::to_string(m) + " is not binary");
      taus[l] = row[l] == '1';
    }
    doc.pathway.append_row(taus);
  }
  return doc;
}

std::string baseline_to_json(const BaselineSet& baselines, double dt_days,
                             const std::string& config_digest) {
  json series = json::array();
  for (const auto& s : baselines.series) {
    series.push_back({{"qoi_id", s->qoi_id}, {"mu", s->mu}, {"sigma", s->sigma}});
  }
  json j = {{"format", "impactpath.baseline"},
            {"version", 1},
            {"n_members", baselines.n_members},
            {"dt_days", dt_days},
            {"config_digest", config_digest},
            {"series", series}};
  return j.dump(1) + "\n";
}

BaselineSet baseline_from_json(const std::string& text) {
  const json j = parse_json(text, "baseline");
  if (need<std::string>(j, "format") != "impactpath.baseline") throw DataError("not a baseline document");
  BaselineSet out;
  out.n_members = need<std::size_t>(j, "n_members");
  if (!j.contains("series") || !j.at("series").is_array()) throw DataError("missing baseline series");
  for (const auto& item : j.at("series")) {
    auto s = std::make_shared<BaselineSeries>();
    s->qoi_id = need<std::string>(item, "qoi_id");
    s->n_members = out.n_members;
    s->mu = need<std::vector<double>>(item, "mu");
    s->sigma = need<std::vector<double>>(item, "sigma");
    if (s->mu.size() != s->sigma.size()) throw DataError("baseline " + s->qoi_id + ": mu/sigma length mismatch");
    out.series.push_back(std::move(s));
  }
  return out;
}

std::string series_csv(const std::vector<QoiSeries>& series, double dt_days) {
  std::string out = "step,time_days";
  std::size_t rows = series.empty() ? 0 : series.front().values.size();
  for (const auto& s : series) {
    if (s.values.size() != rows) throw DataError("series " + s.qoi_id + " has a different length");
    out += "," + s.qoi_id;
  }
  out += "\n";
  for (std::size_t m = 0; m < rows; ++m) {
    out += std::to_string(m) + "," + format_double(static_cast<double>(m) * dt_days);
    for (const auto& s : series) out += "," + format_double(s.values[m]);
    out += "\n";
  }
  return out;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out = "experiment,mass_tg,qoi_id,n_members,mean_first,se_first,mean_total,se_total\n";
  for (const auto& r : rows) {
    const auto& s = r.summary;
    out += r.experiment + "," + format_double(r.mass_tg) + "," + s.qoi_id + "," +
           std::to_string(s.n_members) + "," + format_double(s.mean_first) + "," +
           format_double(s.se_first) + "," + format_double(s.mean_total) + "," +
           format_double(s.se_total) + "\n";
  }
  return out;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out = "qoi_count,baseline_s_per_step,tracked_s_per_step,ratio\n";
  for (const auto& r : rows) {
    out += std::to_string(r.qoi_count) + "," + format_double(r.baseline_s_per_step) + "," +
           format_double(r.tracked_s_per_step) + "," + format_double(r.ratio) + "\n";
  }
  return out;
}

std::string member_activation_csv(const std::vector<MemberResult>& members) {
  std::string out = "experiment,mass_tg,member,seed,qoi_id,first_active,total_active\n";
  for (const auto& m : members) {
    for (const auto& c : m.channels) {
      for (const auto& s : c.summaries) {
        out += c.label + "," + format_double(m.mass_tg) + "," + std::to_string(m.seed.member_index) +
               "," + std::to_string(m.seed.seed) + "," + s.qoi_id + "," +
               format_double(s.first_active) + "," + format_double(s.total_active) + "\n";
      }
    }
  }
  return out;
}

std::size_t day_to_step(double day, double dt_days, std::size_t n_steps) {
  const double last = dt_days * static_cast<double>(n_steps);
  if (!(day >= 0.0 && day <= last)) {
    throw BoundsError("day " + format_double(day) + " outside run of " + format_double(last) + " days");
  }
  const auto m = static_cast<std::size_t>(std::llround(day / dt_days));
  return std::min(m, n_steps);
}

std::string pathway_to_dot(const PathwayDag& pathway, std::size_t m, double day, bool active_only) {
  const auto snap = pathway.materialize(m);
  const auto& base = pathway.base();
  const auto& vertices = base.vertices();
  std::vector<bool> active(vertices.size(), false);
  for (std::size_t v : snap.vertices) active[v] = true;

  char label[96];
  std::snprintf(label, sizeof label, "step %zu, day %g", m, day);

  std::ostringstream out;
  out << "digraph pathway {\n";
  out << "  graph [rankdir=LR, labelloc=t, label=" << quoted(label) << "];\n";
  out << "  node [shape=box, style=filled, fontname=\"Helvetica\"];\n";
  for (std::size_t l = 0; l < vertices.size(); ++l) {
    out << "  " << quoted(vertices[l]) << " [fillcolor=" << (active[l] ? "orange" : "gray") << "];\n";
  }

  std::vector<std::string> groups;
  for (const auto& v : vertices) {
    const auto key = group_key(v);
    if (std::find(groups.begin(), groups.end(), key) == groups.end()) groups.push_back(key);
  }
  if (groups.size() < vertices.size()) {
    for (const auto& g : groups) {
      out << "  { rank=same;";
      for (const auto& v : vertices) {
        if (group_key(v) == g) out << " " << quoted(v) << ";";
      }
      out << " }\n";
    }
  }

  for (const auto& [a, b] : base.edges()) {
    const bool solid = active[a] && active[b];
    if (!solid && active_only) continue;
    out << "  " << quoted(vertices[a]) << " -> " << quoted(vertices[b]);
    out << (solid ? " [style=solid, color=black];\n" : " [style=dashed, color=gray];\n");
  }
  out << "}\n";
  return out.str();
}

std::map<std::string, std::string> standard_conventions(double never_active_day) {
  return {{"never_active_day", format_double(never_active_day)},
          {"first_activation", "day of the first step with tau = 1"},
          {"total_active", "dt times the number of steps with tau = 1"},
          {"sigma_divisor", "n-1"},
          {"standard_error", "sample std / sqrt(n)"},
          {"tie_break", "lower/T_l branch first, then upper/T_u, else hold"},
          {"initial_tau", "0 before step 0; z-score tests return 0 at step 0"},
          {"qoi_reduction", "dp-weighted vertical mean, area-weighted zonal mean"},
          {"zone_membership", "cell center latitude, half-open bands"},
          {"level_membership", "layer mid-pressure within the closed range"},
          {"member_seed", "mix(plan seed, fnv1a(tag), member index); tag baseline or eruption"}};
}

std::string manifest_to_json(const RunManifest& m) {
  json seeds = json::object();
  for (const auto& [name, seed] : m.member_seeds) seeds[name] = seed;
  json j = {{"tool_version", m.tool_version},
            {"command", m.command},
            {"config_digest", m.config_digest},
            {"preset", m.preset_id},
            {"plan_seed", m.plan_seed},
            {"member_seeds", seeds},
            {"conventions", m.conventions},
            {"files", m.files},
            {"created_utc", m.created_utc}};
  return j.dump(1) + "\n";
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_files_atomically(const std::vector<std::pair<std::filesystem::path, std::string>>& files) {
  namespace fs = std::filesystem;
  std::vector<fs::path> temps;
  auto cleanup = [&] {
    std::error_code ec;
    for (const auto& t : temps) fs::remove(t, ec);
  };
  try {
    for (const auto& [path, content] : files) {
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      fs::path tmp = path;
      tmp += ".partial";
      temps.push_back(tmp);
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << content;
      out.close();
      if (!out) throw DataError("failed to write " + tmp.string());
    }
    for (std::size_t n = 0; n < files.size(); ++n) fs::rename(temps[n], files[n].first);
  } catch (const fs::filesystem_error& e) {
    cleanup();
    throw DataError(e.what());
  } catch (...) {
    cleanup();
    throw;
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace impactpath
