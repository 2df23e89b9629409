#ifndef JDLAB_SIMULATE_HPP
#define JDLAB_SIMULATE_HPP

// Gillespie sampling of the pure-jump chain with rates from a RateTable,
// survival and return-probability estimates, and explosion diagnostics.
//
// Trial i draws from a generator seeded by splitmix64(seed, i), so a batch is
// identical for any number of worker threads.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "common.hpp"
#include "forms.hpp"
#include "space.hpp"

namespace jdlab {

enum class TruncationPolicy { absorb, reflect_reject };

inline const char* to_string(TruncationPolicy p) {
  return p == TruncationPolicy::absorb ? "absorb" : "reflect-reject";
}

struct SimConfig {
  double horizon = 1.0;                  // T
  std::size_t max_jumps = 1'000'000;
  std::size_t trials = 1000;             // N
  std::uint64_t seed = 0;
  TruncationPolicy policy = TruncationPolicy::absorb;
  double outer_radius = kInf;            // R_out; leaving B(center, R_out) is absorption
  std::optional<PointId> center;         // centre of the outer ball, default x0
  unsigned threads = 1;
  bool record_paths = false;

  void validate() const {
    require(horizon > 0.0, "horizon T must be positive");
    require(trials >= 1, "trials N must be at least 1");
    require(max_jumps >= 1, "max_jumps must be at least 1");
    require(outer_radius > 0.0, "outer radius must be positive");
  }
};

enum class PathStatus { alive_at_T, absorbed_at_boundary, jump_cap_hit, reached_target };

inline const char* to_string(PathStatus s) {
  switch (s) {
    case PathStatus::alive_at_T: return "alive-at-T";
    case PathStatus::absorbed_at_boundary: return "absorbed-at-boundary";
    case PathStatus::jump_cap_hit: return "jump-cap-hit";
    case PathStatus::reached_target: return "reached-target";
  }
  return "?";
}

struct PathStep {
  PointId state = 0;
  double holding = 0.0;
};

struct Trajectory {
  std::vector<PathStep> steps;  // only with record_paths
  PathStatus status = PathStatus::alive_at_T;
  double elapsed = 0.0;
  std::size_t jumps = 0;
  PointId final_state = 0;
  double half_cap_time = 0.0;   // elapsed time after max_jumps/2 jumps
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Uniform on (0, 1), never 0 or 1.
inline double uniform_open(std::mt19937_64& g) {
  return (static_cast<double>(g() >> 11) + 0.5) * 0x1.0p-53;
}

/// Per-run view of the rate table: absorbing and target masks plus rates
/// with rejected moves removed.
struct Walker {
  const RateTable* rates = nullptr;
  std::vector<bool> outside;  // absorbing under the absorb policy
  std::vector<bool> target;   // stop with reached_target
  std::vector<double> total;  // effective total rate per state
  TruncationPolicy policy = TruncationPolicy::absorb;

  bool allowed(PointId y) const { return policy == TruncationPolicy::absorb || !outside[y]; }
};

inline Walker make_walker(const RateTable& rates, std::vector<bool> outside, std::vector<bool> target,
                          TruncationPolicy policy) {
  Walker w;
  w.rates = &rates;
  w.outside = std::move(outside);
  w.target = std::move(target);
  w.policy = policy;
  w.total.resize(rates.size());
  for (PointId x = 0; x < rates.size(); ++x) {
    if (policy == TruncationPolicy::absorb) {
      w.total[x] = rates.total_rate(x);
    } else {
      double s = 0.0;
      for (const auto& e : rates.row(x))
        if (!w.outside[e.target]) s += e.value;
      w.total[x] = s;
    }
  }
  return w;
}

inline Trajectory run_path(const Walker& w, PointId x0, const SimConfig& cfg, std::uint64_t trial) {
  std::mt19937_64 gen(splitmix64(cfg.seed ^ splitmix64(trial + 0x632be59bd9b4e019ULL)));
  Trajectory tr;
  PointId x = x0;
  double t = 0.0;
  const std::size_t half = cfg.max_jumps / 2;
  auto record = [&](double hold) {
    if (cfg.record_paths) tr.steps.push_back({x, hold});
  };
  for (;;) {
    if (!w.target.empty() && w.target[x]) {
      record(0.0);
      tr.status = PathStatus::reached_target;
      break;
    }
    const double lambda = w.total[x];
    if (!(lambda > 0.0)) {
      record(cfg.horizon - t);
      t = cfg.horizon;
      tr.status = PathStatus::alive_at_T;
      break;
    }
    const double hold = -std::log(uniform_open(gen)) / lambda;
    if (t + hold >= cfg.horizon) {
      record(cfg.horizon - t);
      t = cfg.horizon;
      tr.status = PathStatus::alive_at_T;
      break;
    }
    record(hold);
    t += hold;
    // Pick the move proportionally to its rate; the exit rate sits last.
    double u = uniform_open(gen) * lambda;
    std::optional<PointId> next;
    const auto row = w.rates->row(x);
    for (const auto& e : row) {
      if (!w.allowed(e.target)) continue;
      if (u < e.value) {
        next = e.target;
        break;
      }
      u -= e.value;
    }
    ++tr.jumps;
    if (tr.jumps == half) tr.half_cap_time = t;
    if (!next) {
      if (w.policy == TruncationPolicy::absorb && w.rates->exit_rate(x) > 0.0) {
        tr.status = PathStatus::absorbed_at_boundary;
        break;
      }
      // round-off fell past the last allowed entry
      for (auto it = row.rbegin(); it != row.rend(); ++it)
        if (w.allowed(it->target)) {
          next = it->target;
          break;
        }
    }
    x = *next;
    if (w.outside[x] && w.policy == TruncationPolicy::absorb) {
      record(0.0);
      tr.status = PathStatus::absorbed_at_boundary;
      break;
    }
    if (tr.jumps >= cfg.max_jumps) {
      record(0.0);
      tr.status = PathStatus::jump_cap_hit;
      break;
    }
  }
  tr.elapsed = t;
  tr.final_state = x;
  return tr;
}

inline std::vector<Trajectory> run_batch(const Walker& w, PointId x0, const SimConfig& cfg) {
  std::vector<Trajectory> out(cfg.trials);
  const unsigned workers = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(cfg.trials)));
  if (workers == 1) {
    for (std::size_t i = 0; i < cfg.trials; ++i) out[i] = run_path(w, x0, cfg, i);
    return out;
  }
  std::vector<std::thread> pool;
  for (unsigned k = 0; k < workers; ++k)
    pool.emplace_back([&, k] {
      for (std::size_t i = k; i < cfg.trials; i += workers) out[i] = run_path(w, x0, cfg, i);
    });
  for (auto& th : pool) th.join();
  return out;
}

}  // namespace detail

/// Points at distance >= R from the centre (outside the open ball).
inline std::vector<bool> outside_ball(const DiscreteMMSpace& space, PointId center, double R) {
  std::vector<bool> mask(space.size(), false);
  if (!std::isfinite(R)) return mask;
  const auto dist = space.distances_from(center);
  for (std::size_t y = 0; y < space.size(); ++y) mask[y] = !(dist[y] < R - kBallSlack * std::max(1.0, R));
  return mask;
}

/// One sample path. Deterministic in (config.seed, trial_index).
inline Trajectory gillespie_path(const RateTable& rates, PointId x0, const SimConfig& config,
                                 std::uint64_t trial_index, const std::vector<bool>& outside = {}) {
  config.validate();
  require(x0 < rates.size(), "x0 out of range");
  auto w = detail::make_walker(rates, outside.empty() ? std::vector<bool>(rates.size(), false) : outside, {},
                               config.policy);
  return detail::run_path(w, x0, config, trial_index);
}

/// Batch of trials 0..N-1.
inline std::vector<Trajectory> simulate_batch(const RateTable& rates, PointId x0, const SimConfig& config,
                                              const std::vector<bool>& outside = {}) {
  config.validate();
  require(x0 < rates.size(), "x0 out of range");
  auto w = detail::make_walker(rates, outside.empty() ? std::vector<bool>(rates.size(), false) : outside, {},
                               config.policy);
  return detail::run_batch(w, x0, config);
}

/// Batch on a space, with the outer ball from the config.
inline std::vector<Trajectory> simulate_batch(const DiscreteMMSpace& space, const RateTable& rates, PointId x0,
                                              const SimConfig& config) {
  space.check_point(x0);
  const PointId c = config.center.value_or(x0);
  space.check_point(c);
  return simulate_batch(rates, x0, config, outside_ball(space, c, config.outer_radius));
}

struct Proportion {
  std::size_t successes = 0;
  std::size_t trials = 0;
  double estimate = 0.0;
  double lower = 0.0;  // 95% Wilson score interval
  double upper = 1.0;
  double standard_error = 0.0;
};

inline Proportion wilson(std::size_t k, std::size_t n) {
  Proportion p;
  p.successes = k;
  p.trials = n;
  if (n == 0) return p;
  constexpr double z = 1.959963984540054;
  const double nn = static_cast<double>(n);
  const double ph = static_cast<double>(k) / nn;
  const double denom = 1.0 + z * z / nn;
  const double centre = (ph + z * z / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(ph * (1.0 - ph) / nn + z * z / (4.0 * nn * nn)) / denom;
  p.estimate = ph;
  p.lower = std::max(0.0, centre - half);
  p.upper = std::min(1.0, centre + half);
  p.standard_error = std::sqrt(ph * (1.0 - ph) / nn);
  return p;
}

/// Fraction of trials alive at T.
inline Proportion survival_estimate(const std::vector<Trajectory>& batch) {
  std::size_t alive = 0;
  for (const auto& t : batch) alive += t.status == PathStatus::alive_at_T ? 1 : 0;
  return wilson(alive, batch.size());
}

inline Proportion survival_estimate(const DiscreteMMSpace& space, const RateTable& rates, PointId x0,
                                    const SimConfig& config) {
  return survival_estimate(simulate_batch(space, rates, x0, config));
}

struct ReturnEstimate {
  Proportion p;
  std::size_t exited = 0;
  std::size_t undecided = 0;  // jump cap or horizon reached first
  std::vector<std::string> warnings;
};

/// P_x0(hit K before leaving B(center, R)); the horizon of the config is
/// ignored (paths run until they decide or hit the jump cap).
inline ReturnEstimate return_probability(const DiscreteMMSpace& space, const RateTable& rates, PointId x0,
                                         const std::vector<PointId>& K, double R, SimConfig config,
                                         std::optional<PointId> center = std::nullopt) {
  space.check_point(x0);
  require(!K.empty(), "return_probability: K must be nonempty");
  std::vector<bool> target(space.size(), false);
  for (PointId k : K) {
    space.check_point(k);
    target[k] = true;
  }
  require(!target[x0], "return_probability: x0 must not lie in K");
  require(R > 0.0, "return_probability: outer radius must be positive");
  const PointId c = center.value_or(K.front());
  space.check_point(c);
  config.horizon = kInf;
  config.policy = TruncationPolicy::absorb;
  auto outside = outside_ball(space, c, R);
  require(!outside[x0], "return_probability: x0 lies outside the outer ball");

  ReturnEstimate est;
  // K reachable from x0 through the ball?
  {
    std::vector<bool> seen(space.size(), false);
    std::vector<PointId> stack{x0};
    seen[x0] = true;
    bool reach = false;
    while (!stack.empty() && !reach) {
      const PointId x = stack.back();
      stack.pop_back();
      for (const auto& e : rates.row(x)) {
        if (seen[e.target] || outside[e.target]) continue;
        if (target[e.target]) {
          reach = true;
          break;
        }
        seen[e.target] = true;
        stack.push_back(e.target);
      }
    }
    if (!reach) {
      est.p = wilson(0, config.trials);
      est.exited = config.trials;
      est.warnings.push_back("K is unreachable from x0 inside the ball; estimate set to 0");
      return est;
    }
  }
  auto w = detail::make_walker(rates, std::move(outside), std::move(target), TruncationPolicy::absorb);
  config.validate();
  const auto batch = detail::run_batch(w, x0, config);
  std::size_t hit = 0;
  for (const auto& t : batch) {
    if (t.status == PathStatus::reached_target) ++hit;
    else if (t.status == PathStatus::absorbed_at_boundary) ++est.exited;
    else ++est.undecided;
  }
  est.p = wilson(hit, batch.size());
  if (est.undecided > 0)
    est.warnings.push_back(std::to_string(est.undecided) + " paths hit the jump cap before deciding");
  return est;
}

struct ExplosionSummary {
  std::size_t trials = 0;
  double alive_fraction = 0.0;
  double jump_cap_fraction = 0.0;
  double absorbed_fraction = 0.0;
  std::vector<double> elapsed_quantiles;  // at 0, 0.1, 0.5, 0.9, 1
  double median_elapsed_at_cap = 0.0;
  double median_stall_ratio = 0.0;        // (t_end - t_half) / t_half over capped paths
  bool explosion_suspected = false;
  bool truncation_too_small = false;
};

struct ExplosionOptions {
  double stall_ratio = 0.1;
  double absorbed_threshold = 0.05;
};

namespace detail {
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}
}  // namespace detail

/// Jump-cap paths whose second half of jumps took almost no time point to
/// accumulating holding times (explosion); heavy boundary absorption points
/// to a truncation that is too small.
inline ExplosionSummary explosion_diagnostic(const std::vector<Trajectory>& batch, const ExplosionOptions& opt = {}) {
  require(!batch.empty(), "explosion_diagnostic: empty batch");
  ExplosionSummary s;
  s.trials = batch.size();
  std::size_t alive = 0, cap = 0, absorbed = 0;
  std::vector<double> elapsed, at_cap, stall;
  for (const auto& t : batch) {
    elapsed.push_back(t.elapsed);
    switch (t.status) {
      case PathStatus::alive_at_T: ++alive; break;
      case PathStatus::absorbed_at_boundary: ++absorbed; break;
      case PathStatus::jump_cap_hit:
        ++cap;
        at_cap.push_back(t.elapsed);
        stall.push_back(t.half_cap_time > 0.0 ? (t.elapsed - t.half_cap_time) / t.half_cap_time : kInf);
        break;
      case PathStatus::reached_target: break;
    }
  }
  const double n = static_cast<double>(batch.size());
  s.alive_fraction = alive / n;
  s.jump_cap_fraction = cap / n;
  s.absorbed_fraction = absorbed / n;
  for (double q : {0.0, 0.1, 0.5, 0.9, 1.0}) s.elapsed_quantiles.push_back(detail::quantile(elapsed, q));
  if (cap > 0) {
    s.median_elapsed_at_cap = detail::quantile(at_cap, 0.5);
    s.median_stall_ratio = detail::quantile(stall, 0.5);
    s.explosion_suspected = s.median_stall_ratio < opt.stall_ratio;
  }
  s.truncation_too_small = s.absorbed_fraction >= opt.absorbed_threshold;
  return s;
}

/// Time spent in each state, summed over recorded paths.
inline std::vector<double> occupation_time(const std::vector<Trajectory>& batch, std::size_t states) {
  std::vector<double> occ(states, 0.0);
  for (const auto& t : batch)
    for (const auto& s : t.steps) occ[s.state] += s.holding;
  return occ;
}

/// Pure birth chain on x_start, x_start+1, ..., x_start+length with rate
/// x^exponent from x to x+1; the last state leaves the table at its rate.
inline RateTable birth_chain_rates(double x_start, std::size_t length, double exponent) {
  require(x_start > 0.0, "birth chain must start at a positive state");
  require(length >= 1, "birth chain needs at least two states");
  std::vector<std::vector<KernelEntry>> rows(length + 1);
  std::vector<double> exit(length + 1, 0.0);
  for (std::size_t i = 0; i < length; ++i)
    rows[i].push_back({static_cast<PointId>(i + 1), std::pow(x_start + static_cast<double>(i), exponent)});
  exit[length] = std::pow(x_start + static_cast<double>(length), exponent);
  return RateTable::from_rows(std::move(rows), std::move(exit));
}

}  // namespace jdlab

#endif  // JDLAB_SIMULATE_HPP
