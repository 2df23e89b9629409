#ifndef JDLAB_KERNELS_HPP
#define JDLAB_KERNELS_HPP

// Builders for the example families: stable-like kernels on lattices and the
// Sierpinski gasket, stacks of layers, the exponentially weighted line, radial
// model manifolds, and mixed jump/quantum graphs.
//
// Kernels that are specified only up to two-sided comparison are implemented
// with comparison constant 1.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "common.hpp"
#include "forms.hpp"
#include "space.hpp"
#include "special.hpp"

namespace jdlab::kernels {

/// Distance profile of a jump kernel on a kappa-set.
///   layered  (i):  r^{-(kappa+alpha)} for r <= 1,  r^{-(kappa+beta)} for r > 1
///   tempered (ii): r^{-(kappa+alpha)} for r <= 1,  e^{-c r} r^{-(kappa+alpha)} for r > 1
///   nearest_neighbor: 1 at the lattice spacing, 0 elsewhere
struct JumpProfile {
  enum class Family { zero, nearest_neighbor, layered, tempered };

  Family family = Family::nearest_neighbor;
  double alpha = 1.0;
  double beta = 1.0;
  double c = 1.0;
  std::optional<double> cutoff;  // zero the density beyond this distance

  void validate() const {
    if (family == Family::layered || family == Family::tempered)
      require(alpha > 0.0 && alpha < 2.0, "alpha must lie in (0, 2)");
    if (family == Family::layered) require(beta > 0.0, "beta must be positive");
    if (family == Family::tempered) require(c > 0.0, "tempering constant c must be positive");
    if (cutoff) require(*cutoff > 0.0, "kernel cutoff must be positive");
  }

  bool dense() const { return family == Family::layered || family == Family::tempered; }

  /// Density at distance r > 0 on a set of dimension kappa.
  double operator()(double r, double kappa) const {
    if (cutoff && !within(r, *cutoff)) return 0.0;
    switch (family) {
      case Family::zero:
      case Family::nearest_neighbor:
        return 0.0;  // handled by adjacency
      case Family::layered:
        return r <= 1.0 ? std::pow(r, -(kappa + alpha)) : std::pow(r, -(kappa + beta));
      case Family::tempered:
        return r <= 1.0 ? std::pow(r, -(kappa + alpha)) : std::exp(-c * r) * std::pow(r, -(kappa + alpha));
    }
    return 0.0;
  }
};

inline const char* to_string(JumpProfile::Family f) {
  switch (f) {
    case JumpProfile::Family::zero: return "zero";
    case JumpProfile::Family::nearest_neighbor: return "nearest_neighbor";
    case JumpProfile::Family::layered: return "layered";
    case JumpProfile::Family::tempered: return "tempered";
  }
  return "?";
}

/// Upper bound on stored kernel entries for all-pairs families.
inline constexpr std::size_t kMaxDenseEntries = 40'000'000;

namespace detail {

inline void check_dense_budget(std::size_t n) {
  if (static_cast<double>(n) * static_cast<double>(n) > static_cast<double>(kMaxDenseEntries))
    throw UserError("all-pairs kernel on " + std::to_string(n) +
                    " points exceeds the entry budget; reduce the truncation radius or set a cutoff");
}

/// Integer lattice box indexing for {k in Z^n : |k|_inf <= K}.
struct LatticeIndex {
  int dim = 1;
  long half = 0;  // K
  std::vector<long> slot;  // box position -> point id or -1

  long side() const { return 2 * half + 1; }
  std::optional<std::size_t> box_position(const std::vector<long>& k) const {
    std::size_t pos = 0;
    for (int d = 0; d < dim; ++d) {
      if (k[d] < -half || k[d] > half) return std::nullopt;
      pos = pos * static_cast<std::size_t>(side()) + static_cast<std::size_t>(k[d] + half);
    }
    return pos;
  }
  long lookup(const std::vector<long>& k) const {
    const auto pos = box_position(k);
    return pos ? slot[*pos] : -1;
  }
};

inline void finish(Model& model) { refresh_supports(model); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Lattices hZ^n truncated to a Euclidean ball

struct LatticeSpec {
  int dim = 1;
  double spacing = 1.0;
  double truncation_radius = 10.0;
  JumpProfile kernel;
};

/// hZ^n intersected with the closed ball of radius R, cell measure h^n,
/// Euclidean metric. Kernel profile evaluated with kappa = n.
inline Model lattice(const LatticeSpec& spec) {
  require(spec.dim >= 1 && spec.dim <= 4, "lattice dimension must be in 1..4");
  require(spec.spacing > 0.0, "spacing h must be positive");
  require(spec.truncation_radius > 0.0, "truncation_radius must be positive");
  spec.kernel.validate();
  const int n = spec.dim;
  const double h = spec.spacing;
  const double R = spec.truncation_radius;
  const long K = static_cast<long>(std::floor(R / h + 1e-9));
  detail::LatticeIndex index{n, K, {}};
  std::size_t box = 1;
  for (int d = 0; d < n; ++d) box *= static_cast<std::size_t>(index.side());
  index.slot.assign(box, -1);

  std::vector<std::vector<long>> points;
  CoordinateMetric metric{CoordinateMetric::Kind::euclidean, static_cast<std::size_t>(n), {}};
  std::vector<long> k(n, -K);
  auto inside = [&](const std::vector<long>& v) {
    double s = 0.0;
    for (long c : v) s += static_cast<double>(c) * c;
    return within(std::sqrt(s) * h, R);
  };
  for (std::size_t pos = 0; pos < box; ++pos) {
    std::size_t rem = pos;
    for (int d = n - 1; d >= 0; --d) {
      k[d] = static_cast<long>(rem % static_cast<std::size_t>(index.side())) - K;
      rem /= static_cast<std::size_t>(index.side());
    }
    if (!inside(k)) continue;
    index.slot[pos] = static_cast<long>(points.size());
    points.push_back(k);
    for (long c : k) metric.coords.push_back(c * h);
  }
  const std::size_t N = points.size();
  const double cell = std::pow(h, n);

  std::vector<bool> boundary(N, false);
  std::vector<int> missing(N, 0);
  for (std::size_t i = 0; i < N; ++i) {
    auto nb = points[i];
    for (int d = 0; d < n; ++d) {
      for (long step : {-1L, 1L}) {
        nb[d] += step;
        if (index.lookup(nb) < 0) {
          boundary[i] = true;
          ++missing[i];
        }
        nb[d] -= step;
      }
    }
  }

  Model model{DiscreteMMSpace(std::vector<double>(N, cell), metric), JumpKernel(N), std::nullopt, {}};
  auto& space = model.space;
  space.set_origin(static_cast<PointId>(index.lookup(std::vector<long>(n, 0))));
  space.set_truncation_radius(R);
  space.set_boundary(boundary);

  std::vector<double> exterior(N, 0.0);
  std::string exterior_note = "exact";
  using F = JumpProfile::Family;
  JumpKernel::Builder kb(N);
  if (spec.kernel.family == F::nearest_neighbor) {
    for (std::size_t i = 0; i < N; ++i) {
      auto nb = points[i];
      for (int d = 0; d < n; ++d) {
        nb[d] += 1;
        const long j = index.lookup(nb);
        if (j >= 0) kb.add_pair(static_cast<PointId>(i), static_cast<PointId>(j), 1.0);
        nb[d] -= 1;
      }
      exterior[i] = missing[i] * cell;
    }
  } else if (spec.kernel.dense()) {
    const auto& prof = spec.kernel;
    if (prof.cutoff) {
      const long reach = static_cast<long>(std::floor(*prof.cutoff / h + 1e-9));
      std::vector<long> off(n);
      const long span = 2 * reach + 1;
      std::size_t offsets = 1;
      for (int d = 0; d < n; ++d) offsets *= static_cast<std::size_t>(span);
      for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t o = 0; o < offsets; ++o) {
          std::size_t rem = o;
          auto nb = points[i];
          for (int d = n - 1; d >= 0; --d) {
            off[d] = static_cast<long>(rem % static_cast<std::size_t>(span)) - reach;
            rem /= static_cast<std::size_t>(span);
            nb[d] += off[d];
          }
          double s = 0.0;
          for (long c : off) s += static_cast<double>(c) * c;
          const double r = std::sqrt(s) * h;
          if (r == 0.0) continue;
          const double v = prof(r, n);
          if (v == 0.0) continue;
          const long j = index.lookup(nb);
          if (j < 0 || !inside(nb)) {
            exterior[i] += v * cell;
          } else if (static_cast<std::size_t>(j) > i) {
            kb.add_pair(static_cast<PointId>(i), static_cast<PointId>(j), v);
          }
        }
      }
    } else {
      detail::check_dense_budget(N);
      for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = i + 1; j < N; ++j) {
          const double v = prof(metric.distance(static_cast<PointId>(i), static_cast<PointId>(j)), n);
          kb.add_pair(static_cast<PointId>(i), static_cast<PointId>(j), v);
        }
      if (n == 1) {
        // Points k*h with |k| > K: tails sum_{t >= a} f(t h) h on both sides.
        auto tail = [&](long a) {
          double s = 0.0;
          long t = a;
          const long short_end = static_cast<long>(std::floor(1.0 / h + 1e-9));
          for (; t <= short_end; ++t) s += prof(t * h, 1.0) * h;
          if (prof.family == F::layered) {
            s += std::pow(h, -prof.beta) * special::hurwitz_zeta(1.0 + prof.beta, static_cast<double>(t));
          } else {
            for (;; ++t) {
              const double term = prof(t * h, 1.0) * h;
              s += term;
              if (term < 1e-18 * s || term == 0.0) break;
            }
          }
          return s;
        };
        for (std::size_t i = 0; i < N; ++i) {
          const long ki = points[i][0];
          exterior[i] = tail(K - ki + 1) + tail(ki + K + 1);
        }
      } else {
        exterior_note = "omitted (long-range kernel in dimension >= 2)";
      }
    }
  }
  model.kernel = std::move(kb).build();
  model.kernel.set_exterior_mass(std::move(exterior));
  detail::finish(model);
  model.info = {{"type", "lattice"},
                {"dim", n},
                {"spacing", h},
                {"truncation_radius", R},
                {"kappa", n},
                {"kernel", {{"family", to_string(spec.kernel.family)},
                            {"alpha", spec.kernel.alpha},
                            {"beta", spec.kernel.beta},
                            {"c", spec.kernel.c}}},
                {"comparison_constant", 1.0},
                {"exterior_mass", exterior_note}};
  if (spec.kernel.cutoff) model.info["kernel"]["cutoff"] = *spec.kernel.cutoff;
  return model;
}

// ---------------------------------------------------------------------------
// Sierpinski gasket graph

struct GasketSpec {
  int level = 5;
  JumpProfile kernel;
};

inline double gasket_dimension() { return std::log(3.0) / std::log(2.0); }

/// Vertices of the level-L Sierpinski gasket graph with unit edge length,
/// counting measure, Euclidean metric in the plane. Dimension ln 3 / ln 2.
inline Model sierpinski_gasket(const GasketSpec& spec) {
  require(spec.level >= 0 && spec.level <= 9, "gasket level must be in 0..9");
  spec.kernel.validate();
  // Lattice coordinates (a, b) meaning a*e1 + b*e2, e1 = (1,0), e2 = (1/2, sqrt3/2).
  // Unit upward cells by lower-left corner. Edges are cell sides only: hole
  // side midpoints sit at distance 1 from each other but are not adjacent.
  std::set<std::pair<long, long>> cells{{0, 0}};
  for (int l = 1; l <= spec.level; ++l) {
    const long s = 1L << (l - 1);
    std::set<std::pair<long, long>> next;
    for (const auto& [a, b] : cells) {
      next.emplace(a, b);
      next.emplace(a + s, b);
      next.emplace(a, b + s);
    }
    cells = std::move(next);
  }
  std::set<std::pair<long, long>> pts;
  for (const auto& [a, b] : cells) {
    pts.emplace(a, b);
    pts.emplace(a + 1, b);
    pts.emplace(a, b + 1);
  }
  const long side = 1L << spec.level;
  const std::size_t N = pts.size();
  CoordinateMetric metric{CoordinateMetric::Kind::euclidean, 2, {}};
  std::vector<bool> boundary;
  PointId origin = 0;
  std::map<std::pair<long, long>, PointId> index;
  for (const auto& [a, b] : pts) {
    index.emplace(std::make_pair(a, b), static_cast<PointId>(boundary.size()));
    if (a == 0 && b == 0) origin = static_cast<PointId>(boundary.size());
    metric.coords.push_back(a + 0.5 * b);
    metric.coords.push_back(0.5 * std::sqrt(3.0) * b);
    boundary.push_back(a + b == side);
  }
  Model model{DiscreteMMSpace(std::vector<double>(N, 1.0), metric), JumpKernel(N), std::nullopt, {}};
  model.space.set_origin(origin);
  model.space.set_truncation_radius(static_cast<double>(side));
  model.space.set_boundary(boundary);
  const double kappa = gasket_dimension();
  JumpKernel::Builder kb(N);
  using F = JumpProfile::Family;
  if (spec.kernel.family != F::zero) {
    if (spec.kernel.family == F::nearest_neighbor) {
      for (const auto& [a, b] : cells) {
        const PointId p0 = index.at({a, b}), p1 = index.at({a + 1, b}), p2 = index.at({a, b + 1});
        kb.add_pair(p0, p1, 1.0);
        kb.add_pair(p0, p2, 1.0);
        kb.add_pair(p1, p2, 1.0);
      }
    } else {
      if (!spec.kernel.cutoff) detail::check_dense_budget(N);
      for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = i + 1; j < N; ++j) {
          const double r = metric.distance(static_cast<PointId>(i), static_cast<PointId>(j));
          kb.add_pair(static_cast<PointId>(i), static_cast<PointId>(j), spec.kernel(r, kappa));
        }
    }
  }
  model.kernel = std::move(kb).build();
  detail::finish(model);
  model.info = {{"type", "sierpinski"},
                {"level", spec.level},
                {"kappa", kappa},
                {"kernel", {{"family", to_string(spec.kernel.family)},
                            {"alpha", spec.kernel.alpha},
                            {"beta", spec.kernel.beta},
                            {"c", spec.kernel.c}}},
                {"comparison_constant", 1.0},
                {"exterior_mass", "omitted (compact truncation of the unbounded gasket)"}};
  return model;
}

/// Stable-like kernel on a kappa-set: `lattice` with integer kappa, or the
/// gasket for kappa = ln 3 / ln 2.
inline Model stable_like(const LatticeSpec& spec) {
  require(spec.kernel.dense(), "stable_like requires the layered or tempered family");
  return lattice(spec);
}

inline Model stable_like(const GasketSpec& spec) {
  require(spec.kernel.dense(), "stable_like requires the layered or tempered family");
  return sierpinski_gasket(spec);
}

// ---------------------------------------------------------------------------
// Radial profiles shared by several builders

/// Positive function of a radius: constant c, c (1+r)^p, c e^{lambda r},
/// c r^p, or the super-exponential c [r^r (1 + ln r) v 1]^{1/n}.
struct Profile {
  enum class Kind { constant, power_shifted, power, exponential, superexponential };
  Kind kind = Kind::constant;
  double c = 1.0;
  double p = 0.0;
  double lambda = 0.0;
  int n = 1;  // root for the super-exponential profile

  double operator()(double r) const {
    switch (kind) {
      case Kind::constant: return c;
      case Kind::power_shifted: return c * std::pow(1.0 + r, p);
      case Kind::power: return c * std::pow(r, p);
      case Kind::exponential: return c * std::exp(lambda * r);
      case Kind::superexponential: {
        const double base = r > 0.0 ? std::pow(r, r) * (1.0 + std::log(r)) : 1.0;
        return c * std::pow(std::max(base, 1.0), 1.0 / n);
      }
    }
    return c;
  }
};

inline const char* to_string(Profile::Kind k) {
  switch (k) {
    case Profile::Kind::constant: return "constant";
    case Profile::Kind::power_shifted: return "power_shifted";
    case Profile::Kind::power: return "power";
    case Profile::Kind::exponential: return "exponential";
    case Profile::Kind::superexponential: return "superexponential";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Stacked layers R^n x {i}

struct StackSpec {
  int dim = 1;            // n
  int layers = 2;         // layer indices -layers..layers
  double spacing = 0.5;   // h
  double truncation_radius = 10.0;
  double alpha = 1.0;
  double beta = 1.0;
  Profile psi;            // Psi(|p|)
  std::optional<double> c0;  // kernel cutoff radius
  double c1 = 1.0;
  bool with_local = true;
};

/// Lattice discretization of the union of layers R^n x {i}. Distance
/// |p(x)-p(y)| + |q(x)-q(y)|, measure Psi(p) h^n, kernel
///   [d^{-(n+alpha)} 1_{d<1} + d^{-(n+beta+1)} 1_{d>=1}] / (Psi(p(x)) + Psi(p(y))).
inline Model stack_space(const StackSpec& spec) {
  require(spec.dim >= 1 && spec.dim <= 3, "stack dimension n must be in 1..3");
  require(spec.layers >= 1, "stack needs at least two layers (layers >= 1 gives indices -layers..layers)");
  require(spec.spacing > 0.0, "spacing h must be positive");
  require(spec.alpha > 0.0 && spec.alpha < 2.0, "alpha must lie in (0, 2)");
  require(spec.beta > 0.0, "beta must be positive");
  require(spec.truncation_radius > 0.0, "truncation_radius must be positive");
  if (spec.c0) require(*spec.c0 > 0.0, "c0 must be positive");
  const int n = spec.dim;
  const double h = spec.spacing;
  const double R = spec.truncation_radius;
  const int L = spec.layers;
  const long K = static_cast<long>(std::floor(R / h + 1e-9));

  std::vector<std::vector<long>> pts;  // (k_1..k_n, q)
  std::map<std::vector<long>, PointId> id;
  auto pnorm = [&](const std::vector<long>& v) {
    double s = 0.0;
    for (int d = 0; d < n; ++d) s += static_cast<double>(v[d]) * v[d];
    return std::sqrt(s) * h;
  };
  auto inside = [&](const std::vector<long>& v) {
    return std::abs(v[n]) <= L && within(pnorm(v) + std::abs(v[n]), R);
  };
  const long span = 2 * K + 1;
  std::size_t box = 1;
  for (int d = 0; d < n; ++d) box *= static_cast<std::size_t>(span);
  for (long q = -L; q <= L; ++q) {
    for (std::size_t pos = 0; pos < box; ++pos) {
      std::vector<long> v(n + 1);
      std::size_t rem = pos;
      for (int d = n - 1; d >= 0; --d) {
        v[d] = static_cast<long>(rem % static_cast<std::size_t>(span)) - K;
        rem /= static_cast<std::size_t>(span);
      }
      v[n] = q;
      if (!inside(v)) continue;
      id.emplace(v, static_cast<PointId>(pts.size()));
      pts.push_back(v);
    }
  }
  const std::size_t N = pts.size();
  CoordinateMetric metric{CoordinateMetric::Kind::stack_l1, static_cast<std::size_t>(n + 1), {}};
  std::vector<double> measure(N), psi(N);
  const double cell = std::pow(h, n);
  for (std::size_t i = 0; i < N; ++i) {
    for (int d = 0; d < n; ++d) metric.coords.push_back(pts[i][d] * h);
    metric.coords.push_back(static_cast<double>(pts[i][n]));
    psi[i] = spec.psi(pnorm(pts[i]));
    require(psi[i] > 0.0 && std::isfinite(psi[i]), "Psi must be positive on the grid");
    measure[i] = psi[i] * cell;
  }

  std::vector<bool> boundary(N, false);
  LocalPart::Builder lb(N);
  std::vector<int> local_deg(N, 0);
  for (std::size_t i = 0; i < N; ++i) {
    auto nb = pts[i];
    for (int d = 0; d <= n; ++d)
      for (long step : {-1L, 1L}) {
        nb[d] += step;
        if (!inside(nb)) boundary[i] = true;
        else if (d < n) ++local_deg[i];
        nb[d] -= step;
      }
  }
  if (spec.with_local) {
    for (std::size_t i = 0; i < N; ++i) {
      auto nb = pts[i];
      for (int d = 0; d < n; ++d) {
        nb[d] += 1;
        if (auto it = id.find(nb); it != id.end()) {
          const int deg = std::max(local_deg[i], local_deg[it->second]);
          lb.add_pair(static_cast<PointId>(i), it->second, 1.0 / (h * h * deg));
        }
        nb[d] -= 1;
      }
    }
  }

  Model model{DiscreteMMSpace(measure, metric), JumpKernel(N), std::nullopt, {}};
  model.space.set_origin(id.at(std::vector<long>(n + 1, 0)));
  model.space.set_truncation_radius(R);
  model.space.set_boundary(boundary);
  if (spec.with_local) model.local = std::move(lb).build(std::vector<bool>(N, true));

  detail::check_dense_budget(N);
  JumpKernel::Builder kb(N);
  bool cutoff_ok = spec.c0.has_value();
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = i + 1; j < N; ++j) {
      const double d = metric.distance(static_cast<PointId>(i), static_cast<PointId>(j));
      if (spec.c0 && !within(d, *spec.c0)) continue;
      const double num = d < 1.0 ? std::pow(d, -(n + spec.alpha)) : std::pow(d, -(n + spec.beta + 1.0));
      const double v = num / (psi[i] + psi[j]);
      if (cutoff_ok && v > std::pow(d, -(1.0 + spec.alpha)) * (1.0 + 1e-12)) cutoff_ok = false;
      kb.add_pair(static_cast<PointId>(i), static_cast<PointId>(j), v);
    }
  model.kernel = std::move(kb).build();
  detail::finish(model);

  // Psi(x) <= c1 |x|^{1-n} on grid points with |x| >= 1.
  bool psi_ok = true;
  double psi_worst = 0.0;
  for (long k = 0; k <= K; ++k) {
    const double r = k * h;
    if (r < 1.0) continue;
    const double ratio = spec.psi(r) / std::pow(r, 1.0 - n);
    psi_worst = std::max(psi_worst, ratio);
    if (ratio > spec.c1 * (1.0 + 1e-12)) psi_ok = false;
  }

  // sum_{0<=k<=[r]} int_{B(0,[r]-k)} Psi  <= r^{c r}: fitted c over integer r.
  std::vector<double> cumulative;  // lattice Riemann sum of Psi over B(0, s), s = 0..ceil(R)
  const long smax = static_cast<long>(std::ceil(R));
  {
    std::vector<long> v(n, 0);
    std::vector<double> by_radius(static_cast<std::size_t>(smax) + 1, 0.0);
    const long KK = static_cast<long>(std::floor(smax / h + 1e-9));
    const long sp = 2 * KK + 1;
    std::size_t bx = 1;
    for (int d = 0; d < n; ++d) bx *= static_cast<std::size_t>(sp);
    for (std::size_t pos = 0; pos < bx; ++pos) {
      std::size_t rem = pos;
      double s2 = 0.0;
      for (int d = n - 1; d >= 0; --d) {
        const long c = static_cast<long>(rem % static_cast<std::size_t>(sp)) - KK;
        rem /= static_cast<std::size_t>(sp);
        s2 += static_cast<double>(c) * c;
      }
      const double r = std::sqrt(s2) * h;
      const long bucket = static_cast<long>(std::ceil(r - 1e-9));
      if (bucket <= smax) by_radius[static_cast<std::size_t>(bucket)] += spec.psi(r) * cell;
    }
    double acc = 0.0;
    for (double b : by_radius) cumulative.push_back(acc += b);
  }
  nlohmann::json fit = nlohmann::json::array();
  double c_needed = 0.0;
  for (long r = 2; r <= smax; ++r) {
    double s = 0.0;
    for (long k = 0; k <= r; ++k) s += cumulative[static_cast<std::size_t>(r - k)];
    const double c = std::log(s) / (r * std::log(static_cast<double>(r)));
    fit.push_back({{"r", r}, {"c", c}});
    if (r > smax / 2) c_needed = std::max(c_needed, c);
  }

  double tail = 0.0;
  if (!spec.c0 || *spec.c0 > L + 1) {
    // Continuum estimate of the kernel mass beyond the outermost layers, using
    // j(x,y) m(y) <= d^{-(n+beta+1)} h^n for d >= 1.
    const double sphere = special::sphere_volume(n - 1);
    const double beta_fn = std::exp(std::lgamma(n) + std::lgamma(spec.beta + 1.0) - std::lgamma(n + spec.beta + 1.0));
    tail = 2.0 * sphere * beta_fn * special::hurwitz_zeta(spec.beta + 1.0, L + 1.0);
  }

  model.info = {{"type", "stack"},
                {"dim", n},
                {"layers", L},
                {"spacing", h},
                {"truncation_radius", R},
                {"alpha", spec.alpha},
                {"beta", spec.beta},
                {"psi", {{"profile", to_string(spec.psi.kind)}, {"c", spec.psi.c}, {"p", spec.psi.p},
                         {"lambda", spec.psi.lambda}}},
                {"c1", spec.c1},
                {"with_local", spec.with_local},
                {"comparison_constant", 1.0},
                {"flags", {{"cutoff_kernel_bound", cutoff_ok},
                           {"psi_decay", psi_ok},
                           {"psi_decay_worst_ratio", psi_worst},
                           {"volume_sum_bound", c_needed <= 10.0},
                           {"volume_sum_fitted_c", c_needed},
                           {"volume_sum_fit", fit}}},
                {"cross_layer_tail_mass_estimate", tail},
                {"exterior_mass", "omitted (see cross_layer_tail_mass_estimate)"}};
  if (spec.c0) model.info["c0"] = *spec.c0;
  return model;
}

// ---------------------------------------------------------------------------
// Exponentially weighted line

struct WeightedLineSpec {
  double lambda = 1.0;
  double spacing = 0.1;
  double truncation_radius = 20.0;
};

/// Grid x = k h with m = h e^{2 lambda |x|}, j = e^{-lambda(|x|+|y|)} 1_{|x-y| <= 1}.
inline Model weighted_line(const WeightedLineSpec& spec) {
  require(spec.lambda > 0.0, "lambda must be positive");
  require(spec.spacing > 0.0 && spec.spacing < 1.0, "spacing h must lie in (0, 1)");
  require(spec.truncation_radius > 0.0, "truncation_radius must be positive");
  const double h = spec.spacing;
  const double lam = spec.lambda;
  const long K = static_cast<long>(std::floor(spec.truncation_radius / h + 1e-9));
  const long reach = static_cast<long>(std::floor(1.0 / h + 1e-9));
  const std::size_t N = static_cast<std::size_t>(2 * K + 1);
  CoordinateMetric metric{CoordinateMetric::Kind::euclidean, 1, {}};
  std::vector<double> measure;
  auto mass = [&](long k) { return h * std::exp(2.0 * lam * std::abs(k * h)); };
  auto dens = [&](long a, long b) { return std::exp(-lam * (std::abs(a * h) + std::abs(b * h))); };
  for (long k = -K; k <= K; ++k) {
    metric.coords.push_back(k * h);
    measure.push_back(mass(k));
  }
  std::vector<bool> boundary(N, false);
  boundary.front() = boundary.back() = true;
  Model model{DiscreteMMSpace(measure, metric), JumpKernel(N), std::nullopt, {}};
  model.space.set_origin(static_cast<PointId>(K));
  model.space.set_truncation_radius(K * h);
  model.space.set_boundary(boundary);
  JumpKernel::Builder kb(N);
  std::vector<double> exterior(N, 0.0);
  for (long a = -K; a <= K; ++a) {
    for (long t = 1; t <= reach; ++t) {
      const long b = a + t;
      if (b <= K) kb.add_pair(static_cast<PointId>(a + K), static_cast<PointId>(b + K), dens(a, b));
      else exterior[static_cast<std::size_t>(a + K)] += dens(a, b) * mass(b);
      const long c = a - t;
      if (c < -K) exterior[static_cast<std::size_t>(a + K)] += dens(a, c) * mass(c);
    }
  }
  model.kernel = std::move(kb).build();
  model.kernel.set_exterior_mass(std::move(exterior));
  detail::finish(model);
  // sup_x int (1 ^ |x-y|^2) j(x, dy) <= int_{|z|<=1} z^2 e^{lambda |z|} dz
  const double bound = 2.0 * (std::exp(lam) * (lam * lam - 2.0 * lam + 2.0) - 2.0) / (lam * lam * lam);
  model.info = {{"type", "weighted_line"},
                {"lambda", lam},
                {"spacing", h},
                {"truncation_radius", K * h},
                {"m_j_analytic_bound", bound},
                {"exterior_mass", "exact"}};
  return model;
}

// ---------------------------------------------------------------------------
// Radial model manifolds

struct ModelManifoldSpec {
  int sphere_dim = 1;  // n
  double spacing = 0.01;
  double truncation_radius = 10.0;
  Profile sigma;       // warping function sigma(r)
  bool with_local = true;
};

/// Superexponential warping whose volume density omega_n sigma^n equals
/// r^r (1 + ln r) v 1 exactly.
inline Profile superexponential_warp(int n) {
  Profile p;
  p.kind = Profile::Kind::superexponential;
  p.n = n;
  p.c = std::pow(special::sphere_volume(n), -1.0 / n);
  return p;
}

/// Radial reduction of (0, inf) x S^n with metric dr^2 + sigma(r)^2 g: grid
/// r = h, 2h, ..., measure omega_n sigma(r)^n h, distance |r(x) - r(y)|,
/// kernel [1_{d<1} / (sigma(r_x) sigma(r_y))]^n and a radial finite-difference
/// local part. Exact for radial test functions.
inline Model model_manifold(const ModelManifoldSpec& spec) {
  require(spec.sphere_dim >= 1, "sphere dimension n must be >= 1");
  require(spec.spacing > 0.0 && spec.spacing < 1.0, "spacing h must lie in (0, 1)");
  require(spec.truncation_radius >= 2.0 * spec.spacing, "truncation_radius too small for the grid");
  const int n = spec.sphere_dim;
  const double h = spec.spacing;
  const long K = static_cast<long>(std::floor(spec.truncation_radius / h + 1e-9));
  const long reach = static_cast<long>(std::ceil(1.0 / h - 1e-9)) - 1;  // t h < 1
  const double omega_n = special::sphere_volume(n);
  auto sig = [&](long i) {
    const double s = spec.sigma(i * h);
    require(s > 0.0 && std::isfinite(s), "sigma must be positive on the radial grid");
    return s;
  };
  const std::size_t N = static_cast<std::size_t>(K);
  CoordinateMetric metric{CoordinateMetric::Kind::euclidean, 1, {}};
  std::vector<double> measure(N), sigma(N);
  for (long i = 1; i <= K; ++i) {
    metric.coords.push_back(i * h);
    sigma[static_cast<std::size_t>(i - 1)] = sig(i);
    measure[static_cast<std::size_t>(i - 1)] = omega_n * std::pow(sigma[static_cast<std::size_t>(i - 1)], n) * h;
  }
  std::vector<bool> boundary(N, false);
  boundary.back() = true;
  Model model{DiscreteMMSpace(measure, metric), JumpKernel(N), std::nullopt, {}};
  model.space.set_origin(0);
  model.space.set_truncation_radius(K * h);
  model.space.set_boundary(boundary);
  JumpKernel::Builder kb(N);
  std::vector<double> exterior(N, 0.0);
  for (std::size_t i = 0; i < N; ++i)
    for (long t = 1; t <= reach; ++t) {
      const std::size_t j = i + static_cast<std::size_t>(t);
      if (j < N) {
        kb.add_pair(static_cast<PointId>(i), static_cast<PointId>(j), std::pow(1.0 / (sigma[i] * sigma[j]), n));
      } else {
        const double sj = sig(static_cast<long>(j) + 1);
        exterior[i] += std::pow(1.0 / (sigma[i] * sj), n) * omega_n * std::pow(sj, n) * h;
      }
    }
  model.kernel = std::move(kb).build();
  model.kernel.set_exterior_mass(std::move(exterior));
  if (spec.with_local && N >= 2) {
    LocalPart::Builder lb(N);
    for (std::size_t i = 0; i + 1 < N; ++i) {
      const int deg = N == 2 ? 1 : 2;
      lb.add_pair(static_cast<PointId>(i), static_cast<PointId>(i + 1), 1.0 / (h * h * deg));
    }
    model.local = std::move(lb).build(std::vector<bool>(N, true));
  }
  detail::finish(model);
  model.info = {{"type", "model_manifold"},
                {"sphere_dim", n},
                {"omega_n", omega_n},
                {"spacing", h},
                {"truncation_radius", K * h},
                {"sigma", {{"profile", to_string(spec.sigma.kind)}, {"c", spec.sigma.c}, {"p", spec.sigma.p}}},
                {"with_local", spec.with_local},
                {"exterior_mass", "exact"}};
  return model;
}

// ---------------------------------------------------------------------------
// Graph generators and the mixed physical/quantum Laplacian

/// Path on n vertices; origin at `origin`.
inline GraphData path_graph(std::size_t n, double omega = 1.0, double mu = 1.0, PointId origin = 0) {
  require(n >= 1, "path needs at least one vertex");
  GraphData g;
  g.vertices = n;
  g.vertex_measure.assign(n, mu);
  for (std::size_t i = 0; i + 1 < n; ++i)
    g.edges.push_back({static_cast<PointId>(i), static_cast<PointId>(i + 1), omega});
  g.origin = origin;
  return g;
}

/// Z^2 restricted to the l1 ball of radius R, nearest-neighbour edges.
inline GraphData grid_graph(int R, double omega = 1.0, double mu = 1.0) {
  require(R >= 1, "grid radius must be >= 1");
  GraphData g;
  std::map<std::pair<int, int>, PointId> id;
  for (int a = -R; a <= R; ++a)
    for (int b = -R; b <= R; ++b)
      if (std::abs(a) + std::abs(b) <= R) {
        id.emplace(std::make_pair(a, b), static_cast<PointId>(g.vertices++));
        g.boundary.push_back(std::abs(a) + std::abs(b) == R);
      }
  for (const auto& [ab, i] : id) {
    for (const auto& nb : {std::make_pair(ab.first + 1, ab.second), std::make_pair(ab.first, ab.second + 1)})
      if (auto it = id.find(nb); it != id.end()) g.edges.push_back({i, it->second, omega});
  }
  g.vertex_measure.assign(g.vertices, mu);
  g.origin = id.at({0, 0});
  g.truncation_radius = R;
  return g;
}

/// Star K_{1,leaves}; vertex 0 is the centre.
inline GraphData star_graph(std::size_t leaves, double omega = 1.0, double mu = 1.0) {
  require(leaves >= 1, "star needs at least one leaf");
  GraphData g;
  g.vertices = leaves + 1;
  g.vertex_measure.assign(g.vertices, mu);
  for (std::size_t i = 1; i <= leaves; ++i) g.edges.push_back({0, static_cast<PointId>(i), omega});
  g.origin = 0;
  return g;
}

/// Complete binary tree of the given depth rooted at vertex 0.
inline GraphData binary_tree(int depth, double omega = 1.0, double mu = 1.0) {
  require(depth >= 1 && depth <= 22, "tree depth must be in 1..22");
  GraphData g;
  g.vertices = (std::size_t{1} << (depth + 1)) - 1;
  g.vertex_measure.assign(g.vertices, mu);
  g.boundary.assign(g.vertices, false);
  for (std::size_t v = 1; v < g.vertices; ++v)
    g.edges.push_back({static_cast<PointId>((v - 1) / 2), static_cast<PointId>(v), omega});
  for (std::size_t v = (std::size_t{1} << depth) - 1; v < g.vertices; ++v) g.boundary[v] = true;
  g.origin = 0;
  g.truncation_radius = depth;
  return g;
}

struct MixedGraphSpec {
  GraphData graph;
  int subdivisions = 0;  // k interior points per edge
  Profile edge_density;  // phi as a function of rho(x0, x)
  bool jump = true;      // include the physical-Laplacian jump part
};

/// Metric graph with vertex jumps j(x,y) = omega(x,y) / (mu(x) mu(y)) and a
/// quantum-graph local part discretized by k interior points per edge. Edge
/// e has adapted length sigma_e, interior spacing sigma_e / (k+1), interior
/// measure phi(x) * spacing. rho is extended linearly along edges.
inline Model mixed_graph(const MixedGraphSpec& spec) {
  const auto& g = spec.graph;
  require(g.vertices > 0, "graph has no vertices");
  require(spec.subdivisions >= 0, "subdivisions k must be >= 0");
  const auto edges = canonical_edges(g);
  const auto sigma = adapted_edge_lengths(g, edges);
  const int k = spec.subdivisions;
  const std::size_t V = g.vertices;
  const std::size_t N = V + edges.size() * static_cast<std::size_t>(k);

  // Hop distance on vertices from the origin, extended along edges.
  std::vector<std::tuple<PointId, PointId, double>> unit_vertex;
  for (const auto& e : edges) unit_vertex.emplace_back(e.a, e.b, 1.0);
  const auto hop = dijkstra(WeightedAdjacency::from_edges(V, unit_vertex), g.origin);

  std::vector<double> measure(g.vertex_measure);
  measure.resize(N);
  std::vector<std::tuple<PointId, PointId, double>> dlen, rlen;
  LocalPart::Builder lb(N);
  std::vector<bool> carrier(N, false), boundary(N, false);
  for (std::size_t v = 0; v < V; ++v) boundary[v] = !g.boundary.empty() && g.boundary[v];
  for (std::size_t ei = 0; ei < edges.size(); ++ei) {
    const auto& e = edges[ei];
    const double step = sigma[ei] / (k + 1);
    const double rstep = 1.0 / (k + 1);
    PointId prev = e.a;
    for (int t = 1; t <= k + 1; ++t) {
      const PointId cur = t <= k ? static_cast<PointId>(V + ei * static_cast<std::size_t>(k) + (t - 1)) : e.b;
      if (t <= k) {
        const double rho = std::min(hop[e.a] + t * rstep, hop[e.b] + (k + 1 - t) * rstep);
        const double phi = spec.edge_density(rho);
        require(phi > 0.0 && std::isfinite(phi), "edge density phi must be positive");
        measure[cur] = phi * step;
        carrier[cur] = true;
      }
      dlen.emplace_back(prev, cur, step);
      rlen.emplace_back(prev, cur, rstep);
      if (k > 0) lb.add_pair(prev, cur, 1.0 / (2.0 * step * step));
      prev = cur;
    }
  }
  DiscreteMMSpace space(measure, GraphMetric(WeightedAdjacency::from_edges(N, dlen)));
  space.set_graph_distance(GraphMetric(WeightedAdjacency::from_edges(N, rlen)));
  space.set_origin(g.origin);
  space.set_truncation_radius(g.truncation_radius);
  space.set_boundary(boundary);

  JumpKernel::Builder kb(N);
  if (spec.jump)
    for (const auto& e : edges)
      kb.add_pair(e.a, e.b, e.weight / (g.vertex_measure[e.a] * g.vertex_measure[e.b]));
  Model model{std::move(space), std::move(kb).build(), std::nullopt, {}};
  if (k > 0) model.local = std::move(lb).build(std::move(carrier));
  detail::finish(model);
  model.info = {{"type", "graph"},
                {"vertices", V},
                {"edges", edges.size()},
                {"subdivisions", k},
                {"edge_density", {{"profile", to_string(spec.edge_density.kind)},
                                  {"c", spec.edge_density.c},
                                  {"p", spec.edge_density.p}}},
                {"truncation_radius", g.truncation_radius},
                {"exterior_mass", "none (graph given in full)"}};
  return model;
}

/// Pure physical Laplacian on the vertices (no subdivision).
inline Model graph_model(const GraphData& g) {
  MixedGraphSpec spec;
  spec.graph = g;
  return mixed_graph(spec);
}

}  // namespace jdlab::kernels

#endif  // JDLAB_KERNELS_HPP
