#ifndef JDLAB_CRITERIA_HPP
#define JDLAB_CRITERIA_HPP

// Numerical evaluation of volume-based sufficient conditions for
// conservativeness and recurrence on a truncation.
//
// A liminf over r -> infinity cannot be computed on a finite truncation; every
// report estimates it by the minimum of the statistic over the top half of
// the supplied radius grid. Verdicts are one-sided: "satisfied" means the
// sufficient condition holds numerically, "inconclusive" asserts nothing.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "common.hpp"
#include "forms.hpp"
#include "space.hpp"

namespace jdlab {

enum class Verdict { satisfied, inconclusive };

inline const char* to_string(Verdict v) {
  return v == Verdict::satisfied ? "satisfied" : "inconclusive";
}

struct CriterionReport {
  std::string statistic;
  std::vector<double> radii;
  std::vector<double> values;
  std::size_t window_start = 0;  // first index of the liminf window
  double liminf_estimate = 0.0;
  double threshold = 0.0;
  Verdict verdict = Verdict::inconclusive;
  double truncation_radius = kInf;
  std::vector<std::string> notes;
};

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

inline void check_radius_grid(const DiscreteMMSpace& space, PointId x0, const std::vector<double>& radii,
                              double lower_exclusive, const char* what) {
  require(!radii.empty(), std::string(what) + ": radius grid is empty");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    require(std::isfinite(radii[i]) && radii[i] > lower_exclusive,
            std::string(what) + ": radii must exceed " + fmt(lower_exclusive));
    if (i > 0) require(radii[i] > radii[i - 1], std::string(what) + ": radii must be increasing");
  }
  const double max_r = space.max_usable_radius(x0);
  if (radii.back() > max_r + kBallSlack * std::max(1.0, max_r))
    throw UserError(std::string(what) + ": radius " + fmt(radii.back()) +
                    " lies beyond the truncation; max usable radius from point " + std::to_string(x0) +
                    " is " + fmt(max_r));
}

/// Fills window, liminf estimate and verdict from values and threshold.
inline void finish_report(CriterionReport& rep, const DiscreteMMSpace& space, PointId x0) {
  const std::size_t n = rep.values.size();
  rep.window_start = n / 2;
  rep.liminf_estimate = *std::min_element(rep.values.begin() + static_cast<std::ptrdiff_t>(rep.window_start),
                                          rep.values.end());
  rep.verdict = rep.liminf_estimate <= rep.threshold ? Verdict::satisfied : Verdict::inconclusive;
  rep.truncation_radius = space.truncation_radius();
  const double max_r = space.max_usable_radius(x0);
  if (std::isfinite(max_r) && !(rep.radii.back() < max_r))
    rep.notes.push_back("boundary contamination: ball of radius " + fmt(rep.radii.back()) +
                        " touches the truncation edge");
}

inline std::vector<double> mask_measure(const DiscreteMMSpace& space, const std::vector<bool>& mask) {
  std::vector<double> out(space.size(), 0.0);
  for (PointId x = 0; x < space.size(); ++x)
    if (mask[x]) out[x] = space.measure(x);
  return out;
}

}  // namespace detail

/// s(r) = ln V(x0, r) / (r ln r); satisfied iff the liminf estimate is <= tau.
inline CriterionReport volume_growth_report(const DiscreteMMSpace& space, PointId x0,
                                            const std::vector<double>& radii, double tau = 10.0) {
  require(tau > 0.0, "volume_growth_report: threshold must be positive");
  detail::check_radius_grid(space, x0, radii, 1.0, "volume_growth_report");
  CriterionReport rep;
  rep.statistic = "log_volume_over_r_log_r";
  rep.radii = radii;
  rep.threshold = tau;
  const VolumeProfile profile(space, x0);
  for (double r : radii) rep.values.push_back(std::log(profile.volume(r)) / (r * std::log(r)));
  detail::finish_report(rep, space, x0);
  return rep;
}

/// a = 1 / (8 l + 9), the bounded-range constant used with liminf l.
inline double davies_constant(double liminf_estimate) {
  require(liminf_estimate >= 0.0 && !std::isnan(liminf_estimate),
          "davies_constant: liminf estimate must be nonnegative");
  return 1.0 / (8.0 * liminf_estimate + 9.0);
}

/// omega(r) = max over X_j of sum_y (d(x,y) ^ r)^2 j(x,y) m(y), for every r of
/// a grid in one pass over the kernel.
inline std::vector<double> omega_curve(const Model& model, const std::vector<double>& radii) {
  for (double r : radii) require(r > 0.0, "omega: r must be positive");
  const auto& space = model.space;
  std::vector<double> best(radii.size(), 0.0);
  std::vector<double> acc(radii.size());
  for (PointId x = 0; x < space.size(); ++x) {
    if (!space.jump_support()[x]) continue;
    std::fill(acc.begin(), acc.end(), 0.0);
    const DistanceRow dist(space, x);
    for (const auto& e : model.kernel.row(x)) {
      const double d = dist(e.target);
      const double w = e.value * space.measure(e.target);
      for (std::size_t k = 0; k < radii.size(); ++k) {
        const double t = std::min(d, radii[k]);
        acc[k] += t * t * w;
      }
    }
    for (std::size_t k = 0; k < radii.size(); ++k) best[k] = std::max(best[k], acc[k]);
  }
  return best;
}

inline double omega(const Model& model, double r) { return omega_curve(model, {r}).front(); }

/// t(r) = [V_c(x0, r) + V_j(x0, r) omega(r)] / r^2; satisfied iff the liminf
/// estimate is <= tau.
inline CriterionReport recurrence_report(const Model& model, PointId x0, const std::vector<double>& radii,
                                         double tau = 10.0) {
  require(tau > 0.0, "recurrence_report: threshold must be positive");
  const auto& space = model.space;
  detail::check_radius_grid(space, x0, radii, 0.0, "recurrence_report");
  CriterionReport rep;
  rep.statistic = "recurrence_volume_omega_over_r2";
  rep.radii = radii;
  rep.threshold = tau;
  const auto& sup = space.supports();
  const VolumeProfile vc(space, x0, &sup.local);
  const VolumeProfile vj(space, x0, &sup.jump);
  const auto om = omega_curve(model, radii);
  if (std::none_of(sup.jump.begin(), sup.jump.end(), [](bool b) { return b; }))
    rep.notes.push_back("jump support is empty; omega(r) = 0");
  for (std::size_t k = 0; k < radii.size(); ++k) {
    const double r = radii[k];
    rep.values.push_back((vc.volume(r) + vj.volume(r) * om[k]) / (r * r));
  }
  detail::finish_report(rep, space, x0);
  return rep;
}

/// theta_R(x) = ((R - d(x, x0)) / (R - 1) ^ 1)_+.
inline Field theta_test_function(const DiscreteMMSpace& space, PointId x0, double R) {
  require(R > 2.0, "theta_test_function: R must exceed 2");
  const auto dist = space.distances_from(x0);
  Field theta(space.size());
  for (std::size_t y = 0; y < space.size(); ++y)
    theta[y] = std::max(0.0, std::min(1.0, (R - dist[y]) / (R - 1.0)));
  return theta;
}

struct ThetaEnergyReport {
  std::vector<double> radii;
  std::vector<double> energies;
  bool bounded = false;  // no growth from the lower to the upper half of the grid
};

/// E[theta_R] along a grid of R. `bounded` holds when the largest energy in
/// the top half of the grid is at most `growth_tolerance` times the largest in
/// the bottom half.
inline ThetaEnergyReport theta_energy(const Model& model, PointId x0, const std::vector<double>& radii,
                                      double growth_tolerance = 1.25) {
  detail::check_radius_grid(model.space, x0, radii, 2.0, "theta_energy");
  ThetaEnergyReport rep;
  rep.radii = radii;
  for (double R : radii) {
    const auto theta = theta_test_function(model.space, x0, R);
    rep.energies.push_back(energy(model, theta));
  }
  const std::size_t half = radii.size() / 2;
  const double low = half == 0 ? rep.energies.front()
                               : *std::max_element(rep.energies.begin(),
                                                   rep.energies.begin() + static_cast<std::ptrdiff_t>(half));
  const double high = *std::max_element(rep.energies.begin() + static_cast<std::ptrdiff_t>(half),
                                        rep.energies.end());
  rep.bounded = high <= growth_tolerance * low + 1e-15;
  return rep;
}

/// g_n(x) = ((n - d(x, x0)/a) ^ 1)_+.
inline Field cutoff_gn(const DiscreteMMSpace& space, PointId x0, int n, double a) {
  require(n >= 1, "cutoff_gn: n must be >= 1");
  require(a > 0.0, "cutoff_gn: a must be positive");
  const auto dist = space.distances_from(x0);
  Field g(space.size());
  for (std::size_t y = 0; y < space.size(); ++y) g[y] = std::max(0.0, std::min(1.0, n - dist[y] / a));
  return g;
}

struct DoublingReport {
  std::vector<double> radii;
  std::vector<double> ratios;  // V(x0, 2r) / V(x0, r)
  double max_ratio = 1.0;
  double constant_bound = 16.0;
  bool doubling = false;
  // with doubling: V(x0, r) <= growth_constant * r^kappa over the grid
  double kappa = 0.0;
  double growth_constant = 0.0;
};

inline DoublingReport doubling_report(const DiscreteMMSpace& space, PointId x0, const std::vector<double>& radii,
                                      double constant_bound = 16.0) {
  require(!radii.empty(), "doubling_report: radius grid is empty");
  for (double r : radii) require(r > 0.0, "doubling_report: radii must be positive");
  const double max_r = space.max_usable_radius(x0);
  const double top = *std::max_element(radii.begin(), radii.end());
  if (2.0 * top > max_r + kBallSlack * std::max(1.0, max_r))
    throw UserError("doubling_report: 2 * max radius = " + detail::fmt(2.0 * top) +
                    " exceeds the max usable radius " + detail::fmt(max_r));
  DoublingReport rep;
  rep.radii = radii;
  rep.constant_bound = constant_bound;
  const VolumeProfile profile(space, x0);
  for (double r : radii) rep.ratios.push_back(profile.volume(2.0 * r) / profile.volume(r));
  rep.max_ratio = *std::max_element(rep.ratios.begin(), rep.ratios.end());
  rep.doubling = rep.max_ratio <= constant_bound;
  if (rep.doubling) {
    rep.kappa = std::log2(rep.max_ratio);
    for (double r : radii) rep.growth_constant = std::max(rep.growth_constant, profile.volume(r) / std::pow(r, rep.kappa));
  }
  return rep;
}

struct ShellReport {
  std::vector<int> n;
  std::vector<double> shell_volume;  // m(S_rho(x0, n))
  std::vector<double> ratio;         // m(S_rho(x0, n)) / n^2
  double fitted_constant = 0.0;      // max ratio over the grid
  bool stable = false;
  Verdict verdict = Verdict::inconclusive;
};

/// Fits m(S_rho(x0, n)) <= C n^2. Satisfied iff C is finite and the ratio does
/// not grow from the lower to the upper half of the grid.
inline ShellReport quadratic_shell_report(const DiscreteMMSpace& space, PointId x0, const std::vector<int>& n_grid,
                                          double growth_tolerance = 1.0) {
  require(!n_grid.empty(), "quadratic_shell_report: grid is empty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    require(n_grid[i] >= 1, "quadratic_shell_report: n must be >= 1");
    if (i > 0) require(n_grid[i] > n_grid[i - 1], "quadratic_shell_report: grid must be increasing");
  }
  const auto shells = shell_volumes(space, x0, n_grid.back());
  ShellReport rep;
  rep.n = n_grid;
  for (int n : n_grid) {
    const double v = shells[static_cast<std::size_t>(n)];
    rep.shell_volume.push_back(v);
    rep.ratio.push_back(v / (static_cast<double>(n) * n));
  }
  rep.fitted_constant = *std::max_element(rep.ratio.begin(), rep.ratio.end());
  const std::size_t half = n_grid.size() / 2;
  const double low = half == 0 ? rep.ratio.front()
                               : *std::max_element(rep.ratio.begin(), rep.ratio.begin() + static_cast<std::ptrdiff_t>(half));
  const double high = *std::max_element(rep.ratio.begin() + static_cast<std::ptrdiff_t>(half), rep.ratio.end());
  rep.stable = std::isfinite(rep.fitted_constant) && high <= growth_tolerance * low + 1e-15;
  rep.verdict = rep.stable ? Verdict::satisfied : Verdict::inconclusive;
  return rep;
}

struct LogDistanceReport {
  double delta = kInf;  // +inf when no point has rho >= 2
  std::optional<PointId> argmin;
  std::size_t points_checked = 0;
};

/// Largest delta with d(x0, x) >= delta log rho(x0, x) for every point with rho >= 2.
inline LogDistanceReport log_distance_check(const DiscreteMMSpace& space, PointId x0) {
  const auto rho = space.graph_distances_from(x0);
  const auto d = space.distances_from(x0);
  LogDistanceReport rep;
  for (PointId y = 0; y < space.size(); ++y) {
    if (!std::isfinite(rho[y]) || rho[y] < 2.0 - kBallSlack) continue;
    ++rep.points_checked;
    const double q = d[y] / std::log(rho[y]);
    if (q < rep.delta) {
      rep.delta = q;
      rep.argmin = y;
    }
  }
  return rep;
}

}  // namespace jdlab

#endif  // JDLAB_CRITERIA_HPP
