#ifndef JDLAB_CAPACITY_HPP
#define JDLAB_CAPACITY_HPP

// Equilibrium potentials, capacities cap(K, B) and truncated Green functions.
//
// The zero-extension energy is written as a weighted graph quadratic form
//   E[u] = sum_{x<y} W(x,y) (u(x)-u(y))^2 + sum_x k(x) u(x)^2
// with W = 2 j m(x) m(y) + 1/2 c(x,y) (m(x) 1_{x in X_c} + m(y) 1_{y in X_c})
// and k = 2 ext(x) m(x) for jumps leaving the truncation.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "common.hpp"
#include "criteria.hpp"
#include "forms.hpp"
#include "space.hpp"

namespace jdlab {

/// Symmetric pair weights W and killing k of the zero-extension energy.
class EnergyOperator {
 public:
  explicit EnergyOperator(const Model& model) {
    const auto& space = model.space;
    const std::size_t n = space.size();
    const LocalPart* local = model.local_ptr();
    offsets_.assign(1, 0);
    kill_.assign(n, 0.0);
    degree_.assign(n, 0.0);
    std::size_t reserve = model.kernel.nnz();
    if (local) reserve += local->entries().size();
    entries_.reserve(reserve);
    for (PointId x = 0; x < n; ++x) {
      const auto jr = model.kernel.row(x);
      std::span<const KernelEntry> lr;
      if (local) lr = local->row(x);
      std::size_t a = 0, b = 0;
      const double mx = space.measure(x);
      auto local_w = [&](const KernelEntry& e) {
        double w = 0.0;
        if (local->carries(x)) w += mx;
        if (local->carries(e.target)) w += space.measure(e.target);
        return 0.5 * e.value * w;
      };
      while (a < jr.size() || b < lr.size()) {
        KernelEntry out;
        if (b == lr.size() || (a < jr.size() && jr[a].target < lr[b].target)) {
          out = {jr[a].target, 2.0 * jr[a].value * mx * space.measure(jr[a].target)};
          ++a;
        } else if (a == jr.size() || lr[b].target < jr[a].target) {
          out = {lr[b].target, local_w(lr[b])};
          ++b;
        } else {
          out = {jr[a].target, 2.0 * jr[a].value * mx * space.measure(jr[a].target) + local_w(lr[b])};
          ++a;
          ++b;
        }
        if (out.value == 0.0) continue;
        entries_.push_back(out);
        degree_[x] += out.value;
      }
      offsets_.push_back(entries_.size());
      kill_[x] = 2.0 * model.kernel.exterior_mass(x) * mx;
    }
  }

  std::size_t size() const { return kill_.size(); }
  std::span<const KernelEntry> row(PointId x) const {
    return {entries_.data() + offsets_[x], offsets_[x + 1] - offsets_[x]};
  }
  double degree(PointId x) const { return degree_[x]; }
  double kill(PointId x) const { return kill_[x]; }
  std::size_t nnz() const { return entries_.size(); }

  /// E[u] for the zero extension of u.
  double quadratic(const Field& u) const {
    double s = 0.0;
    for (PointId x = 0; x < size(); ++x) {
      for (const auto& e : row(x)) {
        if (e.target <= x) continue;
        const double d = u[x] - u[e.target];
        s += e.value * d * d;
      }
      s += kill_[x] * u[x] * u[x];
    }
    return s;
  }

 private:
  std::vector<std::size_t> offsets_;
  std::vector<KernelEntry> entries_;
  std::vector<double> degree_;
  std::vector<double> kill_;
};

struct SolverOptions {
  double tolerance = 1e-10;              // relative residual for CG
  std::size_t direct_threshold = 2000;   // direct factorization below this many unknowns
  std::optional<std::size_t> max_iterations;  // default 50 sqrt(n) + 1000
};

struct DirichletSolution {
  Field u;                  // full field (fixed values included)
  double residual = 0.0;    // relative residual ||A u - b|| / ||b||
  std::size_t iterations = 0;
  bool direct = false;
  std::vector<std::string> warnings;
};

namespace detail {

/// Solves (D + k - W)_{II} u_I = rhs_I with u fixed outside I. `rhs` must
/// already include the coupling to fixed values. Components of I that connect
/// neither to a point outside I nor to killing are singular; they are set to
/// zero and reported.
inline DirichletSolution solve_dirichlet(const EnergyOperator& op, const std::vector<bool>& free,
                                         Field fixed, const Field& rhs, const SolverOptions& opt) {
  const std::size_t n = op.size();
  DirichletSolution sol;
  sol.u = std::move(fixed);

  // Nonsingular components of the free set.
  std::vector<int> comp(n, -1);
  std::vector<char> anchored;
  int ncomp = 0;
  for (PointId s = 0; s < n; ++s) {
    if (!free[s] || comp[s] >= 0) continue;
    bool anchor = false;
    std::queue<PointId> q;
    q.push(s);
    comp[s] = ncomp;
    while (!q.empty()) {
      const PointId x = q.front();
      q.pop();
      if (op.kill(x) > 0.0) anchor = true;
      for (const auto& e : op.row(x)) {
        if (!free[e.target]) {
          anchor = true;
        } else if (comp[e.target] < 0) {
          comp[e.target] = ncomp;
          q.push(e.target);
        }
      }
    }
    anchored.push_back(anchor ? 1 : 0);
    ++ncomp;
  }
  std::vector<long> index(n, -1);
  std::vector<PointId> unknowns;
  std::size_t dropped = 0;
  for (PointId x = 0; x < n; ++x) {
    if (!free[x]) continue;
    if (anchored[static_cast<std::size_t>(comp[x])]) {
      index[x] = static_cast<long>(unknowns.size());
      unknowns.push_back(x);
    } else {
      sol.u[x] = 0.0;
      ++dropped;
    }
  }
  if (dropped > 0)
    sol.warnings.push_back(std::to_string(dropped) +
                           " free points lie in components reaching neither the fixed set nor killing; set to 0");
  const std::size_t m = unknowns.size();
  if (m == 0) return sol;

  Eigen::VectorXd b(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) b[static_cast<Eigen::Index>(i)] = rhs[unknowns[i]];
  const double bnorm = b.norm();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  if (bnorm == 0.0) {
    for (std::size_t i = 0; i < m; ++i) sol.u[unknowns[i]] = 0.0;
    return sol;
  }

  auto apply = [&](const Eigen::VectorXd& v, Eigen::VectorXd& out) {
    for (std::size_t i = 0; i < m; ++i) {
      const PointId p = unknowns[i];
      double s = (op.degree(p) + op.kill(p)) * v[static_cast<Eigen::Index>(i)];
      for (const auto& e : op.row(p)) {
        const long j = index[e.target];
        if (j >= 0) s -= e.value * v[j];
      }
      out[static_cast<Eigen::Index>(i)] = s;
    }
  };

  if (m < opt.direct_threshold) {
    sol.direct = true;
    std::size_t nnz = 0;
    for (PointId p : unknowns)
      for (const auto& e : op.row(p))
        if (index[e.target] >= 0) ++nnz;
    const auto mi = static_cast<Eigen::Index>(m);
    if (static_cast<double>(nnz) > 0.1 * static_cast<double>(m) * static_cast<double>(m)) {
      Eigen::MatrixXd A = Eigen::MatrixXd::Zero(mi, mi);
      for (std::size_t i = 0; i < m; ++i) {
        const PointId p = unknowns[i];
        const auto ii = static_cast<Eigen::Index>(i);
        A(ii, ii) = op.degree(p) + op.kill(p);
        for (const auto& e : op.row(p))
          if (index[e.target] >= 0) A(ii, index[e.target]) -= e.value;
      }
      x = A.ldlt().solve(b);
    } else {
      std::vector<Eigen::Triplet<double>> trip;
      trip.reserve(nnz + m);
      for (std::size_t i = 0; i < m; ++i) {
        const PointId p = unknowns[i];
        const auto ii = static_cast<Eigen::Index>(i);
        trip.emplace_back(ii, ii, op.degree(p) + op.kill(p));
        for (const auto& e : op.row(p))
          if (index[e.target] >= 0) trip.emplace_back(ii, index[e.target], -e.value);
      }
      Eigen::SparseMatrix<double> A(mi, mi);
      A.setFromTriplets(trip.begin(), trip.end());
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
      if (ldlt.info() != Eigen::Success) throw NumericalError("sparse LDLT factorization failed");
      x = ldlt.solve(b);
    }
  } else {
    // Jacobi-preconditioned conjugate gradients, matrix-free.
    const std::size_t max_it =
        opt.max_iterations.value_or(static_cast<std::size_t>(50.0 * std::sqrt(static_cast<double>(m))) + 1000);
    Eigen::VectorXd diag(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) diag[static_cast<Eigen::Index>(i)] = op.degree(unknowns[i]) + op.kill(unknowns[i]);
    Eigen::VectorXd r = b, z(static_cast<Eigen::Index>(m)), p(static_cast<Eigen::Index>(m)),
                    Ap(static_cast<Eigen::Index>(m));
    z = r.cwiseQuotient(diag);
    p = z;
    double rz = r.dot(z);
    std::size_t it = 0;
    while (r.norm() > opt.tolerance * bnorm) {
      if (it == max_it)
        throw NumericalError("conjugate gradients did not converge in " + std::to_string(max_it) +
                             " iterations (relative residual " + std::to_string(r.norm() / bnorm) + ")");
      apply(p, Ap);
      const double pAp = p.dot(Ap);
      if (!(pAp > 0.0)) throw NumericalError("conjugate gradients broke down (non-positive curvature)");
      const double alpha = rz / pAp;
      x += alpha * p;
      r -= alpha * Ap;
      z = r.cwiseQuotient(diag);
      const double rz_new = r.dot(z);
      p = z + (rz_new / rz) * p;
      rz = rz_new;
      ++it;
    }
    sol.iterations = it;
  }
  Eigen::VectorXd Ax(static_cast<Eigen::Index>(m));
  apply(x, Ax);
  sol.residual = (Ax - b).norm() / bnorm;
  if (!std::isfinite(sol.residual)) throw NumericalError("linear solve produced non-finite values");
  for (std::size_t i = 0; i < m; ++i) sol.u[unknowns[i]] = x[static_cast<Eigen::Index>(i)];
  return sol;
}

}  // namespace detail

/// {y : d(center, y) < R}. Capacity and Green-function balls are open so
/// that the outermost shell at distance exactly R carries the zero condition.
inline std::vector<bool> open_ball(const DiscreteMMSpace& space, PointId center, double R) {
  space.check_point(center);
  const auto dist = space.distances_from(center);
  std::vector<bool> mask(space.size(), false);
  for (std::size_t y = 0; y < space.size(); ++y)
    mask[y] = dist[y] < R - kBallSlack * std::max(1.0, R);
  return mask;
}

struct PotentialSolve {
  std::vector<PointId> K;
  std::vector<bool> B;
  Field u;
  double energy = 0.0;  // = cap(K, B)
  double residual = 0.0;
  std::vector<std::string> warnings;
};

/// Minimizer of E over {v : v = 1 on K, v = 0 off B}.
inline PotentialSolve equilibrium_potential(const Model& model, const EnergyOperator& op,
                                            const std::vector<PointId>& K, const std::vector<bool>& B,
                                            const SolverOptions& opt = {}) {
  const std::size_t n = model.space.size();
  require(B.size() == n, "equilibrium_potential: ball mask size mismatch");
  require(!K.empty(), "equilibrium_potential: K must be nonempty");
  std::vector<bool> inK(n, false);
  for (PointId x : K) {
    model.space.check_point(x);
    require(B[x], "equilibrium_potential: K must lie inside B (point " + std::to_string(x) + " is outside)");
    inK[x] = true;
  }
  std::vector<bool> free(n, false);
  bool any_free = false;
  for (std::size_t x = 0; x < n; ++x) {
    free[x] = B[x] && !inK[x];
    any_free = any_free || free[x];
  }
  require(any_free, "equilibrium_potential: K must be a proper subset of B");
  Field fixed(n, 0.0), rhs(n, 0.0);
  for (PointId x : K) fixed[x] = 1.0;
  for (PointId x = 0; x < n; ++x) {
    if (!free[x]) continue;
    for (const auto& e : op.row(x))
      if (inK[e.target]) rhs[x] += e.value;
  }
  auto sol = detail::solve_dirichlet(op, free, std::move(fixed), rhs, opt);
  PotentialSolve out;
  out.K = K;
  out.B = B;
  out.u = std::move(sol.u);
  out.energy = op.quadratic(out.u);
  out.residual = sol.residual;
  out.warnings = std::move(sol.warnings);
  return out;
}

inline PotentialSolve equilibrium_potential(const Model& model, const std::vector<PointId>& K,
                                            const std::vector<bool>& B, const SolverOptions& opt = {}) {
  return equilibrium_potential(model, EnergyOperator(model), K, B, opt);
}

/// Thresholds for the recurrence certificate of a capacity scan.
struct CertificateOptions {
  double decay = 0.05;        // last capacity below decay * first
  double slope_ratio = 0.75;  // or 1/cap still growing at this fraction of its initial rate per log radius
};

struct CapacityScan {
  std::vector<double> radii;
  std::vector<double> capacities;
  std::vector<double> resistances;      // 1 / cap
  std::vector<double> residuals;
  bool nonincreasing = false;
  bool still_decreasing = false;
  double decay_ratio = 0.0;             // last / first
  double slope_ratio = 0.0;             // last / first increment of 1/cap per log radius
  bool certificate = false;
  std::vector<std::string> notes;
};

/// cap(K, B(center, R)) along increasing radii.
///
/// The certificate fires when the capacities are nonincreasing, still
/// decreasing at the end, and either decayed below `decay` times the first
/// value or the resistance 1/cap keeps growing in log R at no less than
/// `slope_ratio` times its initial rate. The second clause catches the
/// logarithmic decay of critical cases that a fixed relative decay misses on
/// a finite grid.
inline CapacityScan capacity_scan(const Model& model, const std::vector<PointId>& K, PointId center,
                                  const std::vector<double>& radii, const CertificateOptions& cert = {},
                                  const SolverOptions& opt = {}) {
  const auto& space = model.space;
  space.check_point(center);
  require(!radii.empty(), "capacity_scan: radius grid is empty");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    require(std::isfinite(radii[i]) && radii[i] > 0.0, "capacity_scan: radii must be positive");
    if (i > 0) require(radii[i] > radii[i - 1], "capacity_scan: radii must be increasing");
  }
  const double max_r = space.max_usable_radius(center);
  if (radii.back() > max_r + kBallSlack * std::max(1.0, max_r))
    throw UserError("capacity_scan: radius " + detail::fmt(radii.back()) +
                    " lies beyond the truncation; max usable radius from point " + std::to_string(center) +
                    " is " + detail::fmt(max_r));
  const auto first_ball = open_ball(space, center, radii.front());
  for (PointId x : K)
    if (x >= space.size() || !first_ball[x])
      throw UserError("capacity_scan: K is not inside the smallest ball B(" + std::to_string(center) + ", " +
                      detail::fmt(radii.front()) + ")");

  const EnergyOperator op(model);
  CapacityScan scan;
  scan.radii = radii;
  for (double R : radii) {
    auto sol = equilibrium_potential(model, op, K, open_ball(space, center, R), opt);
    scan.capacities.push_back(sol.energy);
    scan.resistances.push_back(sol.energy > 0.0 ? 1.0 / sol.energy : kInf);
    scan.residuals.push_back(sol.residual);
    for (auto& w : sol.warnings) scan.notes.push_back("R=" + detail::fmt(R) + ": " + w);
  }
  const auto& c = scan.capacities;
  const std::size_t n = c.size();
  const double slack = 1e-9;
  scan.nonincreasing = true;
  for (std::size_t i = 1; i < n; ++i)
    if (c[i] > c[i - 1] * (1.0 + slack) + 1e-300) scan.nonincreasing = false;
  scan.still_decreasing = n >= 2 && c[n - 1] < c[n - 2] * (1.0 - slack);
  scan.decay_ratio = c.front() > 0.0 ? c.back() / c.front() : 0.0;
  if (n >= 3 && c.back() > 0.0) {
    auto inc = [&](std::size_t i) {
      return (scan.resistances[i + 1] - scan.resistances[i]) / std::log(radii[i + 1] / radii[i]);
    };
    const double first = inc(0);
    scan.slope_ratio = first > 0.0 ? inc(n - 2) / first : 0.0;
  }
  const bool decayed = scan.decay_ratio < cert.decay;
  const bool sustained = scan.slope_ratio >= cert.slope_ratio;
  scan.certificate = scan.nonincreasing && scan.still_decreasing && (decayed || sustained);
  if (c.front() == 0.0) scan.notes.push_back("capacity vanishes identically (no energy couples K to its complement)");
  if (std::isfinite(max_r) && !(radii.back() < max_r))
    scan.notes.push_back("boundary contamination: ball of radius " + detail::fmt(radii.back()) +
                         " reaches the truncation edge");
  return scan;
}

struct GreenGrowth {
  std::vector<double> radii;
  std::vector<double> values;  // u_R(x0)
  std::vector<double> residuals;
  double slope_ratio = 0.0;    // last / first increment of u(x0) per log radius
  bool divergence_evidence = false;
  std::vector<std::string> notes;
};

/// Solves -L u = f on B(x0, R) (open) with zero values outside, for each R,
/// and records u(x0). In terms of the energy operator: A u = m f.
inline GreenGrowth green_growth(const Model& model, const Field& f, PointId x0, const std::vector<double>& radii,
                                double slope_threshold = 0.75, const SolverOptions& opt = {}) {
  const auto& space = model.space;
  space.check_point(x0);
  check_field(space, f, "f");
  bool positive = false;
  for (double v : f) {
    require(v >= 0.0 && std::isfinite(v), "green_growth: f must be finite and nonnegative");
    positive = positive || v > 0.0;
  }
  require(positive, "green_growth: f must not vanish identically");
  require(!radii.empty(), "green_growth: radius grid is empty");
  for (std::size_t i = 1; i < radii.size(); ++i)
    require(radii[i] > radii[i - 1], "green_growth: radii must be increasing");
  const double max_r = space.max_usable_radius(x0);
  if (radii.back() > max_r + kBallSlack * std::max(1.0, max_r))
    throw UserError("green_growth: radius " + detail::fmt(radii.back()) +
                    " lies beyond the truncation; max usable radius from point " + std::to_string(x0) +
                    " is " + detail::fmt(max_r));
  const EnergyOperator op(model);
  GreenGrowth g;
  g.radii = radii;
  for (double R : radii) {
    const auto B = open_ball(space, x0, R);
    Field rhs(space.size(), 0.0);
    for (PointId x = 0; x < space.size(); ++x)
      if (B[x]) rhs[x] = space.measure(x) * f[x];
    auto sol = detail::solve_dirichlet(op, B, Field(space.size(), 0.0), rhs, opt);
    g.values.push_back(sol.u[x0]);
    g.residuals.push_back(sol.residual);
    for (auto& w : sol.warnings) g.notes.push_back("R=" + detail::fmt(R) + ": " + w);
  }
  const std::size_t n = g.values.size();
  if (n >= 3) {
    auto inc = [&](std::size_t i) { return (g.values[i + 1] - g.values[i]) / std::log(radii[i + 1] / radii[i]); };
    const double first = inc(0);
    g.slope_ratio = first > 0.0 ? inc(n - 2) / first : 0.0;
    g.divergence_evidence = g.slope_ratio >= slope_threshold;
  }
  return g;
}

}  // namespace jdlab

#endif  // JDLAB_CAPACITY_HPP
