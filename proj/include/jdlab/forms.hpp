#ifndef JDLAB_FORMS_HPP
#define JDLAB_FORMS_HPP

// Jump kernels, the discretized local (diffusion) part, carre du champ
// operators and the energy form
//
//   E(u,v) = 1/2 sum_x Gamma_c(u,v)(x) m(x)
//          + sum_x sum_{y != x} (u(x)-u(y)) (v(x)-v(y)) j(x,y) m(y) m(x).
//
// The jump double sum runs over ordered pairs and carries no 1/2.

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "common.hpp"
#include "space.hpp"

namespace jdlab {

struct KernelEntry {
  PointId target = 0;
  double value = 0.0;
};

/// Symmetric off-diagonal density j(x, y) with respect to m (x) m, stored as
/// sorted CSR rows. Symmetry is exact: both halves hold the same double.
///
/// `exterior_mass(x)` optionally records sum_{y outside the truncation}
/// j(x, y) m(y), the jump intensity towards points that were cut away. It is
/// only consulted where functions are extended by zero (Dirichlet problems,
/// absorption in the simulator).
class JumpKernel {
 public:
  JumpKernel() = default;
  explicit JumpKernel(std::size_t n) : offsets_(n + 1, 0), exterior_(n, 0.0) {}

  /// Accumulates unordered pairs; each pair is written into both rows.
  class Builder {
   public:
    explicit Builder(std::size_t n) : rows_(n) {}
    void add_pair(PointId x, PointId y, double value) {
      require(x != y, "jump kernel is off-diagonal");
      require(value >= 0.0 && std::isfinite(value), "kernel density must be finite and nonnegative");
      if (value == 0.0) return;
      rows_[x].push_back({y, value});
      rows_[y].push_back({x, value});
    }
    std::size_t size() const { return rows_.size(); }
    JumpKernel build() && {
      JumpKernel k;
      const std::size_t n = rows_.size();
      k.offsets_.assign(1, 0);
      k.offsets_.reserve(n + 1);
      std::size_t total = 0;
      for (const auto& r : rows_) total += r.size();
      k.entries_.reserve(total);
      for (auto& row : rows_) {
        std::sort(row.begin(), row.end(),
                  [](const KernelEntry& a, const KernelEntry& b) { return a.target < b.target; });
        for (std::size_t i = 1; i < row.size(); ++i)
          require(row[i].target != row[i - 1].target, "kernel pair listed twice");
        k.entries_.insert(k.entries_.end(), row.begin(), row.end());
        k.offsets_.push_back(k.entries_.size());
        std::vector<KernelEntry>().swap(row);
      }
      k.exterior_.assign(n, 0.0);
      return k;
    }

   private:
    std::vector<std::vector<KernelEntry>> rows_;
  };

  /// Explicit (i, j, value) list. A pair may be given once (mirrored) or twice
  /// with identical values; conflicting values are rejected.
  static JumpKernel from_entries(std::size_t n,
                                 const std::vector<std::tuple<PointId, PointId, double>>& entries) {
    std::map<std::pair<PointId, PointId>, double> pairs;
    for (const auto& [i, j, v] : entries) {
      require(i < n && j < n, "kernel entry index out of range");
      if (i == j) {
        require(v == 0.0, "kernel entry on the diagonal must be 0");
        continue;
      }
      const auto key = std::minmax(i, j);
      auto [it, inserted] = pairs.emplace(key, v);
      if (!inserted && it->second != v)
        throw UserError("kernel is not symmetric: j(" + std::to_string(key.first) + "," +
                        std::to_string(key.second) + ") has two different values");
    }
    Builder b(n);
    for (const auto& [key, v] : pairs) b.add_pair(key.first, key.second, v);
    return std::move(b).build();
  }

  std::size_t size() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t nnz() const { return entries_.size(); }

  std::span<const KernelEntry> row(PointId x) const {
    return {entries_.data() + offsets_[x], offsets_[x + 1] - offsets_[x]};
  }

  double value(PointId x, PointId y) const {
    const auto r = row(x);
    const auto it = std::lower_bound(r.begin(), r.end(), y,
                                     [](const KernelEntry& e, PointId t) { return e.target < t; });
    return (it != r.end() && it->target == y) ? it->value : 0.0;
  }

  bool is_zero() const { return entries_.empty(); }

  double exterior_mass(PointId x) const { return exterior_.empty() ? 0.0 : exterior_[x]; }
  const std::vector<double>& exterior() const { return exterior_; }
  void set_exterior_mass(std::vector<double> ext) {
    require(ext.size() == size(), "exterior mass size mismatch");
    for (double e : ext) require(e >= 0.0 && std::isfinite(e), "exterior mass must be finite and nonnegative");
    exterior_ = std::move(ext);
  }

  // raw access for serialization
  const std::vector<std::size_t>& offsets() const { return offsets_; }
  const std::vector<KernelEntry>& entries() const { return entries_; }
  static JumpKernel from_csr(std::vector<std::size_t> offsets, std::vector<KernelEntry> entries,
                             std::vector<double> exterior) {
    JumpKernel k;
    k.offsets_ = std::move(offsets);
    k.entries_ = std::move(entries);
    k.exterior_ = std::move(exterior);
    return k;
  }

 private:
  std::vector<std::size_t> offsets_{0};
  std::vector<KernelEntry> entries_;
  std::vector<double> exterior_;
};

/// Symmetric finite-difference conductances c(x, y) approximating the
/// strongly-local part. Gamma_c is evaluated only at carrier points; points
/// off the carrier (graph vertices bounding a subdivided edge) may appear as
/// neighbours.
class LocalPart {
 public:
  LocalPart() = default;

  class Builder {
   public:
    explicit Builder(std::size_t n) : rows_(n) {}
    void add_pair(PointId x, PointId y, double c) {
      require(x != y, "local conductance is off-diagonal");
      require(c > 0.0 && std::isfinite(c), "local conductance must be positive");
      rows_[x].push_back({y, c});
      rows_[y].push_back({x, c});
    }
    LocalPart build(std::vector<bool> carrier) && {
      require(carrier.size() == rows_.size(), "carrier mask size mismatch");
      LocalPart lp;
      lp.offsets_.assign(1, 0);
      for (auto& row : rows_) {
        std::sort(row.begin(), row.end(),
                  [](const KernelEntry& a, const KernelEntry& b) { return a.target < b.target; });
        lp.entries_.insert(lp.entries_.end(), row.begin(), row.end());
        lp.offsets_.push_back(lp.entries_.size());
      }
      lp.carrier_ = std::move(carrier);
      return lp;
    }

   private:
    std::vector<std::vector<KernelEntry>> rows_;
  };

  std::size_t size() const { return carrier_.size(); }
  std::span<const KernelEntry> row(PointId x) const {
    return {entries_.data() + offsets_[x], offsets_[x + 1] - offsets_[x]};
  }
  bool carries(PointId x) const { return carrier_[x]; }
  const std::vector<bool>& carrier() const { return carrier_; }

  const std::vector<std::size_t>& offsets() const { return offsets_; }
  const std::vector<KernelEntry>& entries() const { return entries_; }
  static LocalPart from_csr(std::vector<std::size_t> offsets, std::vector<KernelEntry> entries,
                            std::vector<bool> carrier) {
    LocalPart lp;
    lp.offsets_ = std::move(offsets);
    lp.entries_ = std::move(entries);
    lp.carrier_ = std::move(carrier);
    return lp;
  }

 private:
  std::vector<std::size_t> offsets_{0};
  std::vector<KernelEntry> entries_;
  std::vector<bool> carrier_;
};

/// A built instance: space, jump kernel and optional local part, plus the
/// builder's parameters and diagnostics.
struct Model {
  DiscreteMMSpace space;
  JumpKernel kernel;
  std::optional<LocalPart> local;
  nlohmann::json info = nlohmann::json::object();

  const LocalPart* local_ptr() const { return local ? &*local : nullptr; }
};

// ---------------------------------------------------------------------------
// Carre du champ and energies

inline void check_field(const DiscreteMMSpace& space, const Field& u, const char* name) {
  require(u.size() == space.size(), std::string("function ") + name + " must be defined on every point");
}

/// Gamma_j(u, v)(x) = sum_y (u(x)-u(y)) (v(x)-v(y)) j(x,y) m(y).
inline Field gamma_jump(const DiscreteMMSpace& space, const JumpKernel& kernel, const Field& u,
                        const Field& v) {
  check_field(space, u, "u");
  check_field(space, v, "v");
  Field out(space.size(), 0.0);
  for (PointId x = 0; x < space.size(); ++x) {
    double s = 0.0;
    for (const auto& e : kernel.row(x))
      s += (u[x] - u[e.target]) * (v[x] - v[e.target]) * e.value * space.measure(e.target);
    out[x] = s;
  }
  return out;
}

inline Field gamma_jump(const DiscreteMMSpace& space, const JumpKernel& kernel, const Field& u) {
  return gamma_jump(space, kernel, u, u);
}

/// Gamma_c(u, v)(x) = sum_{y local-adjacent} c(x,y) (u(x)-u(y)) (v(x)-v(y)) on
/// the carrier, 0 elsewhere.
inline Field gamma_local(const DiscreteMMSpace& space, const LocalPart& local, const Field& u,
                         const Field& v) {
  check_field(space, u, "u");
  check_field(space, v, "v");
  Field out(space.size(), 0.0);
  for (PointId x = 0; x < space.size(); ++x) {
    if (!local.carries(x)) continue;
    double s = 0.0;
    for (const auto& e : local.row(x)) s += e.value * (u[x] - u[e.target]) * (v[x] - v[e.target]);
    out[x] = s;
  }
  return out;
}

inline double jump_energy(const DiscreteMMSpace& space, const JumpKernel& kernel, const Field& u,
                          const Field& v) {
  const auto g = gamma_jump(space, kernel, u, v);
  double s = 0.0;
  for (PointId x = 0; x < space.size(); ++x) s += g[x] * space.measure(x);
  return s;
}

inline double local_energy(const DiscreteMMSpace& space, const LocalPart& local, const Field& u,
                           const Field& v) {
  const auto g = gamma_local(space, local, u, v);
  double s = 0.0;
  for (PointId x = 0; x < space.size(); ++x) s += g[x] * space.measure(x);
  return 0.5 * s;
}

/// E(u, v) on the truncation (no contribution from outside it).
inline double energy(const DiscreteMMSpace& space, const JumpKernel& kernel, const LocalPart* local,
                     const Field& u, const Field& v) {
  double e = jump_energy(space, kernel, u, v);
  if (local) e += local_energy(space, *local, u, v);
  return e;
}

inline double energy(const Model& model, const Field& u, const Field& v) {
  return energy(model.space, model.kernel, model.local_ptr(), u, v);
}

inline double energy(const Model& model, const Field& u) { return energy(model, u, u); }

/// Energy of the extension of u by zero beyond the truncation:
/// E(u, v) + 2 sum_x u(x) v(x) ext(x) m(x).
inline double zero_extension_energy(const Model& model, const Field& u, const Field& v) {
  double e = energy(model, u, v);
  for (PointId x = 0; x < model.space.size(); ++x)
    e += 2.0 * u[x] * v[x] * model.kernel.exterior_mass(x) * model.space.measure(x);
  return e;
}

// ---------------------------------------------------------------------------
// Supports

/// X_j = points with a positive kernel entry; X_c = carrier points with a
/// nonzero local coefficient.
inline Supports split_supports(const DiscreteMMSpace& space, const JumpKernel& kernel,
                               const LocalPart* local) {
  Supports s;
  s.jump.assign(space.size(), false);
  s.local.assign(space.size(), false);
  for (PointId x = 0; x < space.size(); ++x) {
    s.jump[x] = !kernel.row(x).empty();
    if (local && local->carries(x)) s.local[x] = !local->row(x).empty();
  }
  return s;
}

/// Recomputes the supports and stores them in the model's space.
inline void refresh_supports(Model& model) {
  model.space.set_supports(split_supports(model.space, model.kernel, model.local_ptr()));
}

// ---------------------------------------------------------------------------
// Truncation and the (M) constants

/// Kernel restricted to jumps with d(x, y) <= a. Exterior mass is dropped.
inline JumpKernel truncate_kernel(const DiscreteMMSpace& space, const JumpKernel& kernel, double a) {
  require(a > 0.0, "truncate_kernel: a must be positive");
  JumpKernel::Builder b(kernel.size());
  for (PointId x = 0; x < kernel.size(); ++x) {
    const auto row = kernel.row(x);
    if (row.empty()) continue;
    const DistanceRow dist(space, x);
    for (const auto& e : row) {
      if (e.target <= x) continue;
      if (within(dist(e.target), a)) b.add_pair(x, e.target, e.value);
    }
  }
  return std::move(b).build();
}

struct MConstants {
  double m_c = 0.0;
  double m_j = 0.0;
  std::optional<PointId> argmax_c;
  std::optional<PointId> argmax_j;
  bool argmax_c_on_boundary = false;
  bool argmax_j_on_boundary = false;
};

/// M_j = max over X_j of sum_y (1 ^ d(x,y)^2) j(x,y) m(y);
/// M_c = max over X_c of Gamma_c(d(x, .), d(x, .))(x) = sum_y c(x,y) d(x,y)^2.
/// Maxima over the truncation, with a flag when the maximiser is a boundary point.
inline MConstants m_constants(const Model& model) {
  const auto& space = model.space;
  const auto& sup = space.supports();
  MConstants mc;
  for (PointId x = 0; x < space.size(); ++x) {
    if (!sup.jump[x]) continue;
    double s = 0.0;
    const DistanceRow dist(space, x);
    for (const auto& e : model.kernel.row(x)) {
      const double d = dist(e.target);
      s += std::min(1.0, d * d) * e.value * space.measure(e.target);
    }
    if (!mc.argmax_j || s > mc.m_j) {
      mc.m_j = s;
      mc.argmax_j = x;
    }
  }
  if (model.local) {
    for (PointId x = 0; x < space.size(); ++x) {
      if (!sup.local[x]) continue;
      double s = 0.0;
      const DistanceRow dist(space, x);
      for (const auto& e : model.local->row(x)) {
        const double d = dist(e.target);
        s += e.value * d * d;
      }
      if (!mc.argmax_c || s > mc.m_c) {
        mc.m_c = s;
        mc.argmax_c = x;
      }
    }
  }
  if (mc.argmax_j) mc.argmax_j_on_boundary = space.boundary()[*mc.argmax_j];
  if (mc.argmax_c) mc.argmax_c_on_boundary = space.boundary()[*mc.argmax_c];
  return mc;
}

/// E_j(u, u phi) - sum u Gamma_j(u, phi) m - sum phi Gamma_j[u] m.
/// Zero for every symmetric kernel; a nonzero value measures round-off.
inline double derivation_residual(const DiscreteMMSpace& space, const JumpKernel& kernel, const Field& u,
                                  const Field& phi) {
  check_field(space, u, "u");
  check_field(space, phi, "phi");
  Field uphi(space.size());
  for (std::size_t i = 0; i < uphi.size(); ++i) uphi[i] = u[i] * phi[i];
  const double lhs = jump_energy(space, kernel, u, uphi);
  const auto g_uphi = gamma_jump(space, kernel, u, phi);
  const auto g_uu = gamma_jump(space, kernel, u, u);
  double rhs = 0.0;
  for (PointId x = 0; x < space.size(); ++x)
    rhs += (u[x] * g_uphi[x] + phi[x] * g_uu[x]) * space.measure(x);
  return lhs - rhs;
}

// ---------------------------------------------------------------------------
// Rates of the pure-jump process

/// Transition rates q(x, y) of a continuous-time Markov chain in CSR form,
/// plus a per-state exit rate towards states outside the table.
class RateTable {
 public:
  RateTable() = default;

  static RateTable from_rows(std::vector<std::vector<KernelEntry>> rows, std::vector<double> exit_rate) {
    require(exit_rate.size() == rows.size(), "exit rate size mismatch");
    RateTable t;
    t.offsets_.assign(1, 0);
    for (auto& row : rows) {
      std::sort(row.begin(), row.end(),
                [](const KernelEntry& a, const KernelEntry& b) { return a.target < b.target; });
      for (const auto& e : row) require(e.value >= 0.0 && std::isfinite(e.value), "rates must be nonnegative");
      t.entries_.insert(t.entries_.end(), row.begin(), row.end());
      t.offsets_.push_back(t.entries_.size());
    }
    t.exit_ = std::move(exit_rate);
    t.total_.assign(t.exit_.size(), 0.0);
    for (std::size_t x = 0; x < t.exit_.size(); ++x) {
      double s = t.exit_[x];
      for (const auto& e : t.row(static_cast<PointId>(x))) s += e.value;
      t.total_[x] = s;
    }
    return t;
  }

  std::size_t size() const { return total_.size(); }
  std::span<const KernelEntry> row(PointId x) const {
    return {entries_.data() + offsets_[x], offsets_[x + 1] - offsets_[x]};
  }
  double rate(PointId x, PointId y) const {
    for (const auto& e : row(x))
      if (e.target == y) return e.value;
    return 0.0;
  }
  /// lambda(x), including the exit rate.
  double total_rate(PointId x) const { return total_[x]; }
  double exit_rate(PointId x) const { return exit_[x]; }

 private:
  std::vector<std::size_t> offsets_{0};
  std::vector<KernelEntry> entries_;
  std::vector<double> exit_;
  std::vector<double> total_;
};

/// q(x, y) = 2 j(x, y) m(y), the rates for which <-L u, v>_m = E_j(u, v).
/// The exit rate is 2 * exterior_mass(x).
inline RateTable jump_rates(const DiscreteMMSpace& space, const JumpKernel& kernel) {
  std::vector<std::vector<KernelEntry>> rows(space.size());
  std::vector<double> exit(space.size(), 0.0);
  for (PointId x = 0; x < space.size(); ++x) {
    for (const auto& e : kernel.row(x)) rows[x].push_back({e.target, 2.0 * e.value * space.measure(e.target)});
    exit[x] = 2.0 * kernel.exterior_mass(x);
  }
  return RateTable::from_rows(std::move(rows), std::move(exit));
}

/// (L u)(x) = sum_y q(x, y) (u(y) - u(x)); exit rates are ignored.
inline Field apply_generator(const RateTable& rates, const Field& u) {
  Field out(rates.size(), 0.0);
  for (PointId x = 0; x < rates.size(); ++x) {
    double s = 0.0;
    for (const auto& e : rates.row(x)) s += e.value * (u[e.target] - u[x]);
    out[x] = s;
  }
  return out;
}

}  // namespace jdlab

#endif  // JDLAB_FORMS_HPP
