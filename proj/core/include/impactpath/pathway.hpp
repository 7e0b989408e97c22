#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "impactpath/qoi.hpp"
#include "impactpath/stats.hpp"

namespace impactpath {

/// Static hypothesis graph over QOI ids.
///
/// Edges are stored as vertex-index pairs in insertion order. Construction
/// rejects duplicates, self-loops, unknown endpoints and cycles.
class BaseDag {
 public:
  using Edge = std::pair<std::size_t, std::size_t>;

  BaseDag() = default;
  BaseDag(std::vector<std::string> vertices,
          const std::vector<std::pair<std::string, std::string>>& edges);

  std::size_t r() const noexcept { return vertices_.size(); }
  std::size_t s() const noexcept { return edges_.size(); }

  const std::vector<std::string>& vertices() const noexcept { return vertices_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::vector<std::pair<std::string, std::string>> edge_names() const;

  std::optional<std::size_t> index_of(const std::string& id) const;
  bool has_edge(const std::string& from, const std::string& to) const;

  /// Kahn order, ties broken by vertex index.
  const std::vector<std::size_t>& topological_order() const noexcept { return topo_; }

  bool operator==(const BaseDag& o) const { return vertices_ == o.vertices_ && edges_ == o.edges_; }

 private:
  std::vector<std::string> vertices_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> topo_;
};

/// Chemistry chains SO2(x)->SUL(x)->AOD(x)->T(x) per zone and poleward chains
/// Q(e)->Q(s)->Q(t)->Q(p) per field. Vertex order matches registry_canonical().
BaseDag base_dag_canonical();

struct AbsoluteBounds {
  double lower = 0.0;
  double upper = 0.0;
};

struct ZScoreBounds {
  double t_lower = 0.5;
  double t_upper = 1.0;
  std::shared_ptr<const BaselineSeries> baseline;
};

struct BoundsTest {
  std::variant<AbsoluteBounds, ZScoreBounds> kind;

  static BoundsTest absolute(double lower, double upper);
  static BoundsTest zscore(double t_lower, double t_upper,
                           std::shared_ptr<const BaselineSeries> baseline);

  bool is_zscore() const noexcept { return std::holds_alternative<ZScoreBounds>(kind); }
  /// lower < upper; T_l <= T_u, T_u > 0 and a baseline present. Throws ConfigError.
  void validate() const;
};

struct TestState {
  std::string qoi_id;
  bool previous_tau = false;
};

/// (value - mu) / sigma; throws DegenerateBaselineError if sigma <= 0.
double zscore(double value, double mu, double sigma, const std::string& qoi_id = "",
              std::size_t step = 0);

/// Hysteresis classification of the raw QOI value at step m; updates state.
///
/// Absolute: value <= lower -> 0, value >= upper -> 1, otherwise hold.
/// Z-score: m == 0 -> 0, z <= T_l -> 0, z >= T_u -> 1, otherwise hold, with
/// z taken against the baseline at step m. The 0 branch is checked first.
bool eval_bounds_test(const BoundsTest& test, TestState& state, double value, std::size_t m);

/// Active vertices and the base edges between them, as indices into the base.
struct DagSnapshot {
  std::vector<std::size_t> vertices;
  std::vector<BaseDag::Edge> edges;

  bool empty() const noexcept { return vertices.empty(); }
  bool operator==(const DagSnapshot&) const = default;
};

DagSnapshot pathway_step(const BaseDag& base, const std::vector<bool>& taus);

/// Activation matrix of shape (M+1) x r, one bit per (step, vertex).
class PathwayDag {
 public:
  PathwayDag() = default;
  explicit PathwayDag(BaseDag base);

  const BaseDag& base() const noexcept { return base_; }
  std::size_t n_rows() const noexcept { return rows_; }

  bool active(std::size_t m, std::size_t l) const;
  std::vector<bool> row(std::size_t m) const;
  std::vector<bool> column(std::size_t l) const;

  void reserve(std::size_t rows) { bits_.reserve(rows * base_.r()); }
  void append_row(const std::vector<bool>& taus);

  /// Throws BoundsError if m >= n_rows().
  DagSnapshot materialize(std::size_t m) const;

  bool operator==(const PathwayDag& o) const {
    return base_ == o.base_ && rows_ == o.rows_ && bits_ == o.bits_;
  }

 private:
  BaseDag base_;
  std::size_t rows_ = 0;
  std::vector<bool> bits_;
};

/// Incremental form of compute_pathway, driven once per model step.
class PathwayTracker {
 public:
  /// tests[l] classifies base.vertices()[l].
  PathwayTracker(BaseDag base, std::vector<BoundsTest> tests);

  /// `values[l]` is the QOI value of vertex l at step m; steps must arrive in order from 0.
  void observe(std::size_t m, std::span<const double> values);

  void reserve(std::size_t rows) { pathway_.reserve(rows); }
  const PathwayDag& pathway() const noexcept { return pathway_; }
  const std::vector<TestState>& states() const noexcept { return states_; }
  const std::vector<BoundsTest>& tests() const noexcept { return tests_; }

 private:
  std::vector<BoundsTest> tests_;
  std::vector<TestState> states_;
  std::vector<bool> taus_;
  PathwayDag pathway_;
};

/// Offline evaluation over stored series. Series are matched to vertices by id
/// and must all have the same length; tests are in vertex order.
PathwayDag compute_pathway(const BaseDag& base, std::span<const QoiSeries> series,
                           std::span<const BoundsTest> tests);

/// Fixed absolute bounds for tracer QOIs.
struct TracerThresholds {
  AbsoluteBounds so2{4.0e-10, 8.0e-10};
  AbsoluteBounds sul{4.0e-10, 8.0e-10};
  AbsoluteBounds aod{0.0075, 0.015};
};

/// Absolute tests on SO2/SUL/AOD and z-score tests on T, one per registry entry.
/// `baseline_for` must return the baseline of every T QOI.
std::vector<BoundsTest> canonical_tests(
    std::span<const QoiSpec> registry, const TracerThresholds& thresholds, double t_lower,
    double t_upper,
    const std::vector<std::shared_ptr<const BaselineSeries>>& baselines);

}  // namespace impactpath
