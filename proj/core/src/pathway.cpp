#include "impactpath/pathway.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

#include "impactpath/error.hpp"

namespace impactpath {

BaseDag::BaseDag(std::vector<std::string> vertices,
                 const std::vector<std::pair<std::string, std::string>>& edges)
    : vertices_(std::move(vertices)) {
  std::set<std::string> seen;
  for (const auto& v : vertices_) {
    if (v.empty()) throw ConfigError("base DAG vertex with empty id");
    if (!seen.insert(v).second) throw ConfigError("duplicate base DAG vertex " + v);
  }
  std::set<Edge> edge_set;
  for (const auto& [from, to] : edges) {
    const auto a = index_of(from);
    const auto b = index_of(to);
    if (!a) throw ConfigError("base DAG edge references unknown vertex " + from);
    if (!b) throw ConfigError("base DAG edge references unknown vertex " + to);
    if (*a == *b) throw ConfigError("base DAG self-loop on " + from);
    if (!edge_set.insert({*a, *b}).second) {
      throw ConfigError("duplicate base DAG edge " + from + " -> " + to);
    }
    edges_.emplace_back(*a, *b);
  }

  const std::size_t n = vertices_.size();
  std::vector<std::size_t> indegree(n, 0);
  std::vector<std::vector<std::size_t>> out(n);
  for (const auto& [a, b] : edges_) {
    out[a].push_back(b);
    ++indegree[b];
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t v = 0; v < n; ++v) {
    if (indegree[v] == 0) ready.push(v);
  }
  while (!ready.empty()) {
    const std::size_t v = ready.top();
    ready.pop();
    topo_.push_back(v);
    for (std::size_t w : out[v]) {
      if (--indegree[w] == 0) ready.push(w);
    }
  }
  if (topo_.size() != n) throw ConfigError("base DAG contains a cycle");
}

std::vector<std::pair<std::string, std::string>> BaseDag::edge_names() const {
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(edges_.size());
  for (const auto& [a, b] : edges_) out.emplace_back(vertices_[a], vertices_[b]);
  return out;
}

std::optional<std::size_t> BaseDag::index_of(const std::string& id) const {
  const auto it = std::find(vertices_.begin(), vertices_.end(), id);
  if (it == vertices_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - vertices_.begin());
}

bool BaseDag::has_edge(const std::string& from, const std::string& to) const {
  const auto a = index_of(from);
  const auto b = index_of(to);
  if (!a || !b) return false;
  return std::find(edges_.begin(), edges_.end(), Edge{*a, *b}) != edges_.end();
}

BaseDag base_dag_canonical() {
  const std::vector<FieldKind> fields{FieldKind::SO2, FieldKind::SUL, FieldKind::AOD, FieldKind::T};
  const std::vector<Zone> zones{Zone::e, Zone::s, Zone::t, Zone::p};

  std::vector<std::string> vertices;
  for (FieldKind f : fields) {
    for (Zone z : zones) vertices.push_back(make_qoi_id(f, z));
  }
  std::vector<std::pair<std::string, std::string>> edges;
  for (Zone z : zones) {
    for (std::size_t n = 0; n + 1 < fields.size(); ++n) {
      edges.emplace_back(make_qoi_id(fields[n], z), make_qoi_id(fields[n + 1], z));
    }
  }
  for (FieldKind f : fields) {
    for (std::size_t n = 0; n + 1 < zones.size(); ++n) {
      edges.emplace_back(make_qoi_id(f, zones[n]), make_qoi_id(f, zones[n + 1]));
    }
  }
  return BaseDag(std::move(vertices), edges);
}

BoundsTest BoundsTest::absolute(double lower, double upper) {
  BoundsTest t{AbsoluteBounds{lower, upper}};
  t.validate();
  return t;
}

BoundsTest BoundsTest::zscore(double t_lower, double t_upper,
                              std::shared_ptr<const BaselineSeries> baseline) {
  BoundsTest t{ZScoreBounds{t_lower, t_upper, std::move(baseline)}};
  t.validate();
  return t;
}

void BoundsTest::validate() const {
  if (const auto* a = std::get_if<AbsoluteBounds>(&kind)) {
    if (!std::isfinite(a->lower) || !std::isfinite(a->upper) || !(a->lower < a->upper)) {
      throw ConfigError("absolute bounds test needs finite lower < upper");
    }
    return;
  }
  const auto& z = std::get<ZScoreBounds>(kind);
  if (!std::isfinite(z.t_lower) || !std::isfinite(z.t_upper) || !(z.t_lower <= z.t_upper) ||
      !(z.t_upper > 0.0)) {
    throw ConfigError("z-score bounds test needs T_l <= T_u and T_u > 0");
  }
  if (!z.baseline) throw ConfigError("z-score bounds test without a baseline");
  if (z.baseline->mu.size() != z.baseline->sigma.size()) {
    throw ConfigError("baseline " + z.baseline->qoi_id + " has mismatched mu/sigma lengths");
  }
}

double zscore(double value, double mu, double sigma, const std::string& qoi_id, std::size_t step) {
  if (!(sigma > 0.0)) throw DegenerateBaselineError(qoi_id, step);
  return (value - mu) / sigma;
}

bool eval_bounds_test(const BoundsTest& test, TestState& state, double value, std::size_t m) {
  bool tau = false;
  if (const auto* a = std::get_if<AbsoluteBounds>(&test.kind)) {
    if (value <= a->lower) {
      tau = false;
    } else if (value >= a->upper) {
      tau = true;
    } else {
      tau = state.previous_tau;
    }
  } else {
    const auto& zb = std::get<ZScoreBounds>(test.kind);
    if (m == 0) {
      tau = false;
    } else {
      const auto& base = *zb.baseline;
      if (m >= base.mu.size()) {
        throw BoundsError("baseline " + base.qoi_id + " has no entry for step " + std::to_string(m));
      }
      const double z = zscore(value, base.mu[m], base.sigma[m], state.qoi_id, m);
      if (z <= zb.t_lower) {
        tau = false;
      } else if (z >= zb.t_upper) {
        tau = true;
      } else {
        tau = state.previous_tau;
      }
    }
  }
  state.previous_tau = tau;
  return tau;
}

DagSnapshot pathway_step(const BaseDag& base, const std::vector<bool>& taus) {
  if (taus.size() != base.r()) {
    throw ConfigError("activation vector has " + std::to_string(taus.size()) +
                      " entries, base DAG has " + std::to_string(base.r()) + " vertices");
  }
  DagSnapshot out;
  for (std::size_t l = 0; l < taus.size(); ++l) {
    if (taus[l]) out.vertices.push_back(l);
  }
  for (const auto& e : base.edges()) {
    if (taus[e.first] && taus[e.second]) out.edges.push_back(e);
  }
  return out;
}

PathwayDag::PathwayDag(BaseDag base) : base_(std::move(base)) {}

bool PathwayDag::active(std::size_t m, std::size_t l) const {
  if (m >= rows_ || l >= base_.r()) {
    throw BoundsError("activation index (" + std::to_string(m) + ", " + std::to_string(l) +
                      ") outside " + std::to_string(rows_) + " x " + std::to_string(base_.r()));
  }
  return bits_[m * base_.r() + l];
}

std::vector<bool> PathwayDag::row(std::size_t m) const {
  if (m >= rows_) {
    throw BoundsError("step " + std::to_string(m) + " outside pathway of " +
                      std::to_string(rows_) + " steps");
  }
  const std::size_t r = base_.r();
  return std::vector<bool>(bits_.begin() + static_cast<std::ptrdiff_t>(m * r),
                           bits_.begin() + static_cast<std::ptrdiff_t>((m + 1) * r));
}

std::vector<bool> PathwayDag::column(std::size_t l) const {
  if (l >= base_.r()) throw BoundsError("vertex index " + std::to_string(l) + " out of range");
  std::vector<bool> out(rows_);
  for (std::size_t m = 0; m < rows_; ++m) out[m] = bits_[m * base_.r() + l];
  return out;
}

void PathwayDag::append_row(const std::vector<bool>& taus) {
  if (taus.size() != base_.r()) {
    throw ConfigError("activation row has " + std::to_string(taus.size()) + " entries, expected " +
                      std::to_string(base_.r()));
  }
  bits_.insert(bits_.end(), taus.begin(), taus.end());
  ++rows_;
}

DagSnapshot PathwayDag::materialize(std::size_t m) const { return pathway_step(base_, row(m)); }

PathwayTracker::PathwayTracker(BaseDag base, std::vector<BoundsTest> tests)
    : tests_(std::move(tests)), taus_(base.r(), false), pathway_(std::move(base)) {
  const auto& vertices = pathway_.base().vertices();
  if (tests_.size() != vertices.size()) {
    throw ConfigError("tracker has " + std::to_string(tests_.size()) + " tests for " +
                      std::to_string(vertices.size()) + " vertices");
  }
  states_.reserve(vertices.size());
  for (std::size_t l = 0; l < vertices.size(); ++l) {
    tests_[l].validate();
    states_.push_back({vertices[l], false});
  }
}

void PathwayTracker::observe(std::size_t m, std::span<const double> values) {
  if (m != pathway_.n_rows()) {
    throw ConfigError("tracker expected step " + std::to_string(pathway_.n_rows()) + ", got " +
                      std::to_string(m));
  }
  if (values.size() != tests_.size()) throw ConfigError("tracker observed the wrong number of QOIs");
  for (std::size_t l = 0; l < tests_.size(); ++l) {
    taus_[l] = eval_bounds_test(tests_[l], states_[l], values[l], m);
  }
  pathway_.append_row(taus_);
}

PathwayDag compute_pathway(const BaseDag& base, std::span<const QoiSeries> series,
                           std::span<const BoundsTest> tests) {
  std::vector<const QoiSeries*> ordered(base.r(), nullptr);
  for (const auto& s : series) {
    const auto l = base.index_of(s.qoi_id);
    if (!l) throw ConfigError("series " + s.qoi_id + " is not a base DAG vertex");
    if (ordered[*l]) throw ConfigError("duplicate series for " + s.qoi_id);
    ordered[*l] = &s;
  }
  std::size_t n_rows = 0;
  for (std::size_t l = 0; l < ordered.size(); ++l) {
    if (!ordered[l]) throw ConfigError("no series for vertex " + base.vertices()[l]);
    if (l == 0) n_rows = ordered[l]->values.size();
    if (ordered[l]->values.size() != n_rows) {
      throw ConfigError("series " + ordered[l]->qoi_id + " has a different length");
    }
  }

  PathwayTracker tracker(base, std::vector<BoundsTest>(tests.begin(), tests.end()));
  tracker.reserve(n_rows);
  std::vector<double> values(base.r());
  for (std::size_t m = 0; m < n_rows; ++m) {
    for (std::size_t l = 0; l < base.r(); ++l) values[l] = ordered[l]->values[m];
    tracker.observe(m, values);
  }
  return tracker.pathway();
}

std::vector<BoundsTest> canonical_tests(
    std::span<const QoiSpec> registry, const TracerThresholds& thresholds, double t_lower,
    double t_upper, const std::vector<std::shared_ptr<const BaselineSeries>>& baselines) {
  std::vector<BoundsTest> out;
  out.reserve(registry.size());
  for (const auto& spec : registry) {
    switch (spec.field) {
      case FieldKind::SO2:
        out.push_back(BoundsTest::absolute(thresholds.so2.lower, thresholds.so2.upper));
        break;
      case FieldKind::SUL:
        out.push_back(BoundsTest::absolute(thresholds.sul.lower, thresholds.sul.upper));
        break;
      case FieldKind::AOD:
        out.push_back(BoundsTest::absolute(thresholds.aod.lower, thresholds.aod.upper));
        break;
      case FieldKind::T: {
        const auto it = std::find_if(baselines.begin(), baselines.end(),
                                     [&](const auto& b) { return b && b->qoi_id == spec.id; });
        if (it == baselines.end()) throw ConfigError("no baseline for z-score QOI " + spec.id);
        out.push_back(BoundsTest::zscore(t_lower, t_upper, *it));
        break;
      }
    }
  }
  return out;
}

}  // namespace impactpath
