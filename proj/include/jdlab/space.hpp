#ifndef JDLAB_SPACE_HPP
#define JDLAB_SPACE_HPP

// Discrete metric measure spaces: points with positive measure, a metric
// (coordinate based or shortest-path), an optional integer-valued graph
// distance, balls, volumes and shells.

#include <algorithm>
#include <cassert>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "common.hpp"

namespace jdlab {

/// Distance read off stored coordinates.
///   euclidean: |x - y|_2 over all `dim` coordinates.
///   stack_l1:  |p(x) - p(y)|_2 + |q(x) - q(y)|, where the last coordinate is
///              the layer index q and the first dim-1 coordinates are p.
struct CoordinateMetric {
  enum class Kind : std::uint8_t { euclidean = 0, stack_l1 = 1 };

  Kind kind = Kind::euclidean;
  std::size_t dim = 1;
  std::vector<double> coords;  // row-major, size() * dim

  std::size_t size() const { return dim == 0 ? 0 : coords.size() / dim; }

  std::span<const double> point(PointId x) const {
    return {coords.data() + static_cast<std::size_t>(x) * dim, dim};
  }

  double distance(PointId a, PointId b) const {
    const double* pa = coords.data() + static_cast<std::size_t>(a) * dim;
    const double* pb = coords.data() + static_cast<std::size_t>(b) * dim;
    const std::size_t euclid_dim = kind == Kind::stack_l1 ? dim - 1 : dim;
    double s = 0.0;
    for (std::size_t k = 0; k < euclid_dim; ++k) {
      const double t = pa[k] - pb[k];
      s += t * t;
    }
    double d = std::sqrt(s);
    if (kind == Kind::stack_l1) d += std::abs(pa[dim - 1] - pb[dim - 1]);
    return d;
  }
};

/// Undirected adjacency with positive edge lengths, stored as CSR.
struct WeightedAdjacency {
  std::vector<std::size_t> offsets{0};
  std::vector<PointId> targets;
  std::vector<double> lengths;

  std::size_t size() const { return offsets.size() - 1; }

  static WeightedAdjacency from_edges(
      std::size_t n, const std::vector<std::tuple<PointId, PointId, double>>& edges) {
    std::vector<std::vector<std::pair<PointId, double>>> rows(n);
    for (const auto& [a, b, len] : edges) {
      require(a < n && b < n, "edge endpoint out of range");
      require(len > 0.0, "edge lengths must be positive");
      rows[a].emplace_back(b, len);
      rows[b].emplace_back(a, len);
    }
    WeightedAdjacency adj;
    adj.offsets.reserve(n + 1);
    for (auto& row : rows) {
      std::sort(row.begin(), row.end());
      for (const auto& [t, len] : row) {
        adj.targets.push_back(t);
        adj.lengths.push_back(len);
      }
      adj.offsets.push_back(adj.targets.size());
    }
    return adj;
  }
};

/// Single-source shortest paths (Dijkstra). Unreachable points get +inf.
inline std::vector<double> dijkstra(const WeightedAdjacency& adj, PointId source) {
  std::vector<double> dist(adj.size(), kInf);
  using Item = std::pair<double, PointId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[source] = 0.0;
  heap.emplace(0.0, source);
  while (!heap.empty()) {
    const auto [d, x] = heap.top();
    heap.pop();
    if (d > dist[x]) continue;
    for (std::size_t e = adj.offsets[x]; e < adj.offsets[x + 1]; ++e) {
      const PointId y = adj.targets[e];
      const double nd = d + adj.lengths[e];
      if (nd < dist[y]) {
        dist[y] = nd;
        heap.emplace(nd, y);
      }
    }
  }
  return dist;
}

/// Shortest-path metric over a weighted adjacency. The all-pairs table is
/// built eagerly when the point count is at most `cache_threshold`;
/// otherwise every query runs a single-source search.
class GraphMetric {
 public:
  static constexpr std::size_t kDefaultCacheThreshold = 5000;

  GraphMetric() = default;
  explicit GraphMetric(WeightedAdjacency adj,
                       std::size_t cache_threshold = kDefaultCacheThreshold)
      : adj_(std::make_shared<const WeightedAdjacency>(std::move(adj))),
        cache_threshold_(cache_threshold) {
    const std::size_t n = adj_->size();
    if (n <= cache_threshold_) {
      auto table = std::make_shared<std::vector<double>>();
      table->reserve(n * n);
      for (std::size_t x = 0; x < n; ++x) {
        auto row = dijkstra(*adj_, static_cast<PointId>(x));
        table->insert(table->end(), row.begin(), row.end());
      }
      apsp_ = std::move(table);
    }
  }

  std::size_t size() const { return adj_ ? adj_->size() : 0; }
  const WeightedAdjacency& adjacency() const { return *adj_; }
  std::size_t cache_threshold() const { return cache_threshold_; }
  bool cached() const { return apsp_ != nullptr; }

  double distance(PointId a, PointId b) const {
    if (apsp_) return (*apsp_)[static_cast<std::size_t>(a) * size() + b];
    return dijkstra(*adj_, a)[b];
  }

  std::vector<double> distances_from(PointId a) const {
    if (apsp_) {
      const auto first = apsp_->begin() + static_cast<std::ptrdiff_t>(a * size());
      return {first, first + static_cast<std::ptrdiff_t>(size())};
    }
    return dijkstra(*adj_, a);
  }

 private:
  std::shared_ptr<const WeightedAdjacency> adj_;
  std::shared_ptr<const std::vector<double>> apsp_;
  std::size_t cache_threshold_ = kDefaultCacheThreshold;
};

using Metric = std::variant<CoordinateMetric, GraphMetric>;

/// Point subsets where the local part (X^(c)) and the jump part (X^(j)) live.
struct Supports {
  std::vector<bool> local;
  std::vector<bool> jump;
};

/// Finite truncation of a metric measure space.
///
/// Immutable once a builder has finished with it; the setters exist only for
/// the construction phase.
class DiscreteMMSpace {
 public:
  DiscreteMMSpace() = default;
  DiscreteMMSpace(std::vector<double> measure, Metric metric)
      : measure_(std::move(measure)), metric_(std::move(metric)) {
    const std::size_t n = measure_.size();
    require(n > 0, "space must contain at least one point");
    for (double m : measure_)
      require(m > 0.0 && std::isfinite(m), "measure must be positive and finite at every point");
    std::visit([&](const auto& mt) { require(mt.size() == n, "metric size does not match measure size"); },
               metric_);
    boundary_.assign(n, false);
    supports_.local.assign(n, false);
    supports_.jump.assign(n, false);
  }

  std::size_t size() const { return measure_.size(); }
  double measure(PointId x) const { return measure_[x]; }
  const std::vector<double>& measures() const { return measure_; }
  double total_measure() const {
    double s = 0.0;
    for (double m : measure_) s += m;
    return s;
  }

  const Metric& metric() const { return metric_; }

  double distance(PointId a, PointId b) const {
    return std::visit([&](const auto& mt) { return mt.distance(a, b); }, metric_);
  }

  std::vector<double> distances_from(PointId a) const {
    if (const auto* gm = std::get_if<GraphMetric>(&metric_)) return gm->distances_from(a);
    const auto& cm = std::get<CoordinateMetric>(metric_);
    std::vector<double> out(size());
    for (std::size_t y = 0; y < size(); ++y) out[y] = cm.distance(a, static_cast<PointId>(y));
    return out;
  }

  /// Coordinates of x when the metric is coordinate based, empty otherwise.
  std::span<const double> coords(PointId x) const {
    if (const auto* cm = std::get_if<CoordinateMetric>(&metric_)) return cm->point(x);
    return {};
  }

  bool has_graph_distance() const { return graph_distance_.has_value(); }
  const std::optional<GraphMetric>& graph_metric() const { return graph_distance_; }
  double graph_distance(PointId a, PointId b) const {
    return checked_graph().distance(a, b);
  }
  std::vector<double> graph_distances_from(PointId a) const {
    return checked_graph().distances_from(a);
  }

  PointId origin() const { return origin_; }
  double truncation_radius() const { return truncation_radius_; }
  const std::vector<bool>& boundary() const { return boundary_; }
  const Supports& supports() const { return supports_; }
  const std::vector<bool>& local_support() const { return supports_.local; }
  const std::vector<bool>& jump_support() const { return supports_.jump; }

  // -- construction phase ---------------------------------------------------
  void set_graph_distance(GraphMetric g) {
    require(g.size() == size(), "graph distance size mismatch");
    graph_distance_ = std::move(g);
  }
  void set_origin(PointId o) {
    require(o < size(), "origin out of range");
    origin_ = o;
  }
  void set_truncation_radius(double r) { truncation_radius_ = r; }
  void set_boundary(std::vector<bool> b) {
    require(b.size() == size(), "boundary mask size mismatch");
    boundary_ = std::move(b);
  }
  void set_supports(Supports s) {
    require(s.local.size() == size() && s.jump.size() == size(), "support mask size mismatch");
    supports_ = std::move(s);
  }

  void check_point(PointId x) const {
    if (x >= size())
      throw UserError("point id " + std::to_string(x) + " out of range (space has " +
                      std::to_string(size()) + " points)");
  }

  /// Largest radius r such that the closed ball B(x0, r) stays off the
  /// truncation boundary. +inf when the space has no boundary points.
  double max_usable_radius(PointId x0) const {
    check_point(x0);
    if (std::none_of(boundary_.begin(), boundary_.end(), [](bool b) { return b; })) return kInf;
    const auto dist = distances_from(x0);
    double best = kInf;
    for (std::size_t y = 0; y < size(); ++y)
      if (boundary_[y]) best = std::min(best, dist[y]);
    return best;
  }

 private:
  const GraphMetric& checked_graph() const {
    if (!graph_distance_)
      throw UnsupportedOperation("space carries no graph distance (rho); operation unsupported");
    return *graph_distance_;
  }

  std::vector<double> measure_;
  Metric metric_;
  std::optional<GraphMetric> graph_distance_;
  std::vector<bool> boundary_;
  Supports supports_;
  PointId origin_ = 0;
  double truncation_radius_ = kInf;
};

/// d(x, .) for a fixed x. Uncached graph metrics run one search up front
/// instead of one per query.
class DistanceRow {
 public:
  DistanceRow(const DiscreteMMSpace& space, PointId x) : space_(space), x_(x) {
    if (const auto* gm = std::get_if<GraphMetric>(&space.metric()); gm && !gm->cached())
      row_ = gm->distances_from(x);
  }
  double operator()(PointId y) const { return row_.empty() ? space_.distance(x_, y) : row_[y]; }

 private:
  const DiscreteMMSpace& space_;
  PointId x_;
  std::vector<double> row_;
};

// ---------------------------------------------------------------------------
// Balls and volumes

/// Slack applied to closed-ball membership tests, relative to max(1, r).
inline constexpr double kBallSlack = 1e-9;

inline bool within(double d, double r) { return d <= r + kBallSlack * std::max(1.0, r); }

struct Ball {
  std::vector<PointId> points;
  double volume = 0.0;
};

/// Closed ball {y : d(x0, y) <= r} and its measure.
inline Ball metric_ball(const DiscreteMMSpace& space, PointId x0, double r) {
  space.check_point(x0);
  require(r >= 0.0, "metric_ball: radius must be nonnegative");
  Ball ball;
  const auto dist = space.distances_from(x0);
  for (std::size_t y = 0; y < space.size(); ++y) {
    if (within(dist[y], r)) {
      ball.points.push_back(static_cast<PointId>(y));
      ball.volume += space.measure(static_cast<PointId>(y));
    }
  }
  return ball;
}

/// Distances from a fixed centre sorted once, so that V(x0, r) restricted to
/// any point mask is a binary search.
class VolumeProfile {
 public:
  VolumeProfile(const DiscreteMMSpace& space, PointId x0, const std::vector<bool>* mask = nullptr) {
    space.check_point(x0);
    const auto dist = space.distances_from(x0);
    std::vector<std::pair<double, double>> items;
    items.reserve(space.size());
    for (std::size_t y = 0; y < space.size(); ++y) {
      if (mask && !(*mask)[y]) continue;
      items.emplace_back(dist[y], space.measure(static_cast<PointId>(y)));
    }
    std::sort(items.begin(), items.end());
    dist_.reserve(items.size());
    cumulative_.reserve(items.size());
    double acc = 0.0;
    for (const auto& [d, m] : items) {
      acc += m;
      dist_.push_back(d);
      cumulative_.push_back(acc);
    }
  }

  /// Measure of the closed ball of radius r (restricted to the mask).
  double volume(double r) const {
    const double lim = r + kBallSlack * std::max(1.0, r);
    const auto it = std::upper_bound(dist_.begin(), dist_.end(), lim);
    if (it == dist_.begin()) return 0.0;
    return cumulative_[static_cast<std::size_t>(it - dist_.begin()) - 1];
  }

 private:
  std::vector<double> dist_;
  std::vector<double> cumulative_;
};

/// m(S_rho(x0, n)) with S_rho(x0, n) = {n-1 < rho(x0, .) <= n}.
inline double shell_volume(const DiscreteMMSpace& space, PointId x0, int n) {
  space.check_point(x0);
  require(n >= 1, "shell_volume: n must be a positive integer");
  const auto rho = space.graph_distances_from(x0);
  double v = 0.0;
  for (std::size_t y = 0; y < space.size(); ++y)
    if (!within(rho[y], n - 1.0) && within(rho[y], n)) v += space.measure(static_cast<PointId>(y));
  return v;
}

/// All shell volumes n = 1..n_max from one graph-distance sweep.
inline std::vector<double> shell_volumes(const DiscreteMMSpace& space, PointId x0, int n_max) {
  space.check_point(x0);
  const auto rho = space.graph_distances_from(x0);
  std::vector<double> shells(static_cast<std::size_t>(std::max(n_max, 0)) + 1, 0.0);
  for (std::size_t y = 0; y < space.size(); ++y) {
    if (!std::isfinite(rho[y])) continue;
    const double c = std::ceil(rho[y] - kBallSlack * std::max(1.0, rho[y]));
    const auto n = static_cast<long>(std::max(0.0, c));
    if (n <= n_max) shells[static_cast<std::size_t>(n)] += space.measure(static_cast<PointId>(y));
  }
  return shells;  // shells[0] = m(B_rho(x0, 0))
}

// ---------------------------------------------------------------------------
// Weighted graphs and the standard adapted distance

struct GraphEdge {
  PointId a = 0;
  PointId b = 0;
  double weight = 0.0;  // omega(a, b) >= 0
};

/// Locally finite weighted graph. Edges are the neighbour relation x ~ y;
/// `weight` is omega(x, y). An edge may carry weight 0.
struct GraphData {
  std::size_t vertices = 0;
  std::vector<GraphEdge> edges;
  std::vector<double> vertex_measure;  // mu
  PointId origin = 0;
  double truncation_radius = kInf;     // in graph hops, if generated
  std::vector<bool> boundary;          // optional
};

/// Validates symmetry, merges duplicate listings and returns one entry per
/// unordered pair (a < b).
inline std::vector<GraphEdge> canonical_edges(const GraphData& g) {
  require(g.vertex_measure.size() == g.vertices, "vertex_measure must have one entry per vertex");
  for (std::size_t v = 0; v < g.vertices; ++v)
    require(g.vertex_measure[v] > 0.0, "vertex measure mu must be positive (vertex " +
                                            std::to_string(v) + ")");
  std::map<std::pair<PointId, PointId>, double> merged;
  for (const auto& e : g.edges) {
    require(e.a < g.vertices && e.b < g.vertices, "edge endpoint out of range");
    if (e.a == e.b) {
      require(e.weight == 0.0, "omega(x, x) must be 0 (vertex " + std::to_string(e.a) + ")");
      continue;
    }
    require(e.weight >= 0.0 && std::isfinite(e.weight), "edge weights must be finite and nonnegative");
    const auto key = std::minmax(e.a, e.b);
    auto [it, inserted] = merged.emplace(key, e.weight);
    if (!inserted && it->second != e.weight)
      throw UserError("edge weights are not symmetric: omega(" + std::to_string(key.first) + "," +
                      std::to_string(key.second) + ") listed with different values");
  }
  std::vector<GraphEdge> out;
  out.reserve(merged.size());
  for (const auto& [key, w] : merged) out.push_back({key.first, key.second, w});
  return out;
}

/// deg(x) = (1/mu(x)) sum_{y ~ x} omega(x, y).
inline std::vector<double> weighted_degrees(const GraphData& g, const std::vector<GraphEdge>& edges) {
  std::vector<double> deg(g.vertices, 0.0);
  for (const auto& e : edges) {
    deg[e.a] += e.weight;
    deg[e.b] += e.weight;
  }
  for (std::size_t v = 0; v < g.vertices; ++v) deg[v] /= g.vertex_measure[v];
  return deg;
}

/// sigma(x, y) = min(deg(x)^{-1/2}, deg(y)^{-1/2}, 1); a zero degree makes its
/// term +inf. Rejects vertices with no incident edge.
inline std::vector<double> adapted_edge_lengths(const GraphData& g, const std::vector<GraphEdge>& edges) {
  std::vector<int> incident(g.vertices, 0);
  for (const auto& e : edges) {
    ++incident[e.a];
    ++incident[e.b];
  }
  if (g.vertices > 1) {
    for (std::size_t v = 0; v < g.vertices; ++v)
      if (incident[v] == 0)
        throw UserError("vertex " + std::to_string(v) +
                        " is isolated (zero degree); adapted edge length undefined");
  }
  const auto deg = weighted_degrees(g, edges);
  auto inv_sqrt = [](double d) { return d > 0.0 ? 1.0 / std::sqrt(d) : kInf; };
  std::vector<double> len;
  len.reserve(edges.size());
  for (const auto& e : edges) len.push_back(std::min({inv_sqrt(deg[e.a]), inv_sqrt(deg[e.b]), 1.0}));
  return len;
}

/// Weighted graph -> space with the adapted shortest-path metric d and the
/// unit-length graph distance rho.
inline DiscreteMMSpace build_graph_space(const GraphData& g,
                                         std::size_t cache_threshold = GraphMetric::kDefaultCacheThreshold) {
  require(g.vertices > 0, "graph has no vertices");
  const auto edges = canonical_edges(g);
  const auto len = adapted_edge_lengths(g, edges);
  std::vector<std::tuple<PointId, PointId, double>> weighted, unit;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    weighted.emplace_back(edges[i].a, edges[i].b, len[i]);
    unit.emplace_back(edges[i].a, edges[i].b, 1.0);
  }
  DiscreteMMSpace space(g.vertex_measure,
                        GraphMetric(WeightedAdjacency::from_edges(g.vertices, weighted), cache_threshold));
  space.set_graph_distance(GraphMetric(WeightedAdjacency::from_edges(g.vertices, unit), cache_threshold));
  space.set_origin(g.origin);
  space.set_truncation_radius(g.truncation_radius);
  if (!g.boundary.empty()) space.set_boundary(g.boundary);
  return space;
}

}  // namespace jdlab

#endif  // JDLAB_SPACE_HPP
