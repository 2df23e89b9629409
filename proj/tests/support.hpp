#ifndef JDLAB_TESTS_SUPPORT_HPP
#define JDLAB_TESTS_SUPPORT_HPP

// Shared fixtures and independent oracles for the test suite. Nothing here
// calls the library's solvers; the oracles use plain dense linear algebra.

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "jdlab/jdlab.hpp"

namespace testing_support {

using Matrix = std::vector<std::vector<double>>;

/// Gaussian elimination with partial pivoting.
inline std::vector<double> dense_solve(Matrix A, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
    if (A[piv][c] == 0.0) throw std::runtime_error("dense_solve: singular matrix");
    std::swap(A[c], A[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = A[r][c] / A[c][c];
      if (f == 0.0) continue;
      for (std::size_t k = c; k < n; ++k) A[r][k] -= f * A[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= A[i][k] * x[k];
    x[i] = s / A[i][i];
  }
  return x;
}

/// Hitting probability of `target` before `absorb` for the chain with rates q,
/// by solving the harmonic equations on the remaining states.
inline std::vector<double> hitting_probability(const jdlab::RateTable& q, const std::vector<bool>& target,
                                               const std::vector<bool>& absorb) {
  const std::size_t n = q.size();
  std::vector<long> idx(n, -1);
  std::vector<std::size_t> free;
  for (std::size_t x = 0; x < n; ++x)
    if (!target[x] && !absorb[x]) {
      idx[x] = static_cast<long>(free.size());
      free.push_back(x);
    }
  Matrix A(free.size(), std::vector<double>(free.size(), 0.0));
  std::vector<double> b(free.size(), 0.0);
  for (std::size_t i = 0; i < free.size(); ++i) {
    const auto x = static_cast<jdlab::PointId>(free[i]);
    A[i][i] = q.total_rate(x);
    for (const auto& e : q.row(x)) {
      if (target[e.target]) b[i] += e.value;
      else if (idx[e.target] >= 0) A[i][static_cast<std::size_t>(idx[e.target])] -= e.value;
    }
  }
  const auto sol = dense_solve(A, b);
  std::vector<double> h(n, 0.0);
  for (std::size_t x = 0; x < n; ++x) {
    if (target[x]) h[x] = 1.0;
    else if (idx[x] >= 0) h[x] = sol[static_cast<std::size_t>(idx[x])];
  }
  return h;
}

/// Distribution at time t of the chain killed on `absorb` (and by exit rates),
/// started at x0, by uniformization. Returns mass per state; the missing mass
/// is the absorbed probability.
inline std::vector<double> transient_distribution(const jdlab::RateTable& q, std::size_t x0, double t,
                                                  const std::vector<bool>& absorb) {
  const std::size_t n = q.size();
  double lam = 0.0;
  for (std::size_t x = 0; x < n; ++x) lam = std::max(lam, q.total_rate(static_cast<jdlab::PointId>(x)));
  std::vector<double> p(n, 0.0), next(n), acc(n, 0.0);
  p[x0] = 1.0;
  double weight = std::exp(-lam * t);
  const auto kmax = static_cast<std::size_t>(lam * t + 12.0 * std::sqrt(lam * t + 1.0) + 50.0);
  for (std::size_t k = 0; k <= kmax; ++k) {
    for (std::size_t x = 0; x < n; ++x) acc[x] += weight * p[x];
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t x = 0; x < n; ++x) {
      if (p[x] == 0.0) continue;
      const auto xi = static_cast<jdlab::PointId>(x);
      next[x] += p[x] * (1.0 - q.total_rate(xi) / lam);
      for (const auto& e : q.row(xi))
        if (!absorb[e.target]) next[e.target] += p[x] * e.value / lam;
    }
    p.swap(next);
    weight *= lam * t / static_cast<double>(k + 1);
  }
  return acc;
}

/// Z with nearest-neighbour kernel and counting measure, points -R..R.
inline jdlab::Model z_nn(double R, int dim = 1) {
  jdlab::kernels::LatticeSpec s;
  s.dim = dim;
  s.truncation_radius = R;
  s.kernel.family = jdlab::kernels::JumpProfile::Family::nearest_neighbor;
  return jdlab::kernels::lattice(s);
}

/// Z with the layered kernel of case (i).
inline jdlab::Model z_layered(double alpha, double beta, double R) {
  jdlab::kernels::LatticeSpec s;
  s.truncation_radius = R;
  s.kernel.family = jdlab::kernels::JumpProfile::Family::layered;
  s.kernel.alpha = alpha;
  s.kernel.beta = beta;
  return jdlab::kernels::lattice(s);
}

/// Point id of integer coordinate k on a 1-D lattice built by z_nn/z_layered.
inline jdlab::PointId z_id(const jdlab::Model& m, long k) {
  return static_cast<jdlab::PointId>(static_cast<long>(m.space.origin()) + k);
}

/// Random space with n points on a line (random positive measure) and a
/// random symmetric kernel of the given density.
inline jdlab::Model random_model(std::size_t n, double density, std::mt19937_64& gen, bool with_local = false) {
  std::uniform_real_distribution<double> U(0.1, 2.0);
  std::bernoulli_distribution B(density);
  jdlab::CoordinateMetric cm{jdlab::CoordinateMetric::Kind::euclidean, 1, {}};
  std::vector<double> m(n);
  double pos = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    pos += U(gen);
    cm.coords.push_back(pos);
    m[i] = U(gen);
  }
  jdlab::Model model{jdlab::DiscreteMMSpace(m, cm), jdlab::JumpKernel(n), std::nullopt, {}};
  jdlab::JumpKernel::Builder kb(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (B(gen)) kb.add_pair(static_cast<jdlab::PointId>(i), static_cast<jdlab::PointId>(j), U(gen));
  model.kernel = std::move(kb).build();
  if (with_local && n >= 2) {
    jdlab::LocalPart::Builder lb(n);
    for (std::size_t i = 0; i + 1 < n; ++i)
      lb.add_pair(static_cast<jdlab::PointId>(i), static_cast<jdlab::PointId>(i + 1), U(gen));
    std::vector<bool> carrier(n);
    for (std::size_t i = 0; i < n; ++i) carrier[i] = i % 2 == 0;
    model.local = std::move(lb).build(carrier);
  }
  jdlab::refresh_supports(model);
  return model;
}

inline std::vector<double> random_field(std::size_t n, std::mt19937_64& gen) {
  std::normal_distribution<double> N(0.0, 1.0);
  std::vector<double> u(n);
  for (auto& v : u) v = N(gen);
  return u;
}

/// E[u] straight from the definition, O(n^2), for comparison.
inline double energy_by_definition(const jdlab::Model& model, const std::vector<double>& u) {
  const auto& s = model.space;
  const std::size_t n = s.size();
  double e = 0.0;
  for (jdlab::PointId x = 0; x < n; ++x)
    for (jdlab::PointId y = 0; y < n; ++y) {
      if (x == y) continue;
      const double d = u[x] - u[y];
      e += d * d * model.kernel.value(x, y) * s.measure(y) * s.measure(x);
    }
  if (model.local) {
    for (jdlab::PointId x = 0; x < n; ++x) {
      if (!model.local->carries(x)) continue;
      double g = 0.0;
      for (const auto& en : model.local->row(x)) {
        const double d = u[x] - u[en.target];
        g += en.value * d * d;
      }
      e += 0.5 * g * s.measure(x);
    }
  }
  return e;
}

}  // namespace testing_support

#endif  // JDLAB_TESTS_SUPPORT_HPP
