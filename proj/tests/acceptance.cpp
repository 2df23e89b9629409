// Acceptance run: one [PASS]/[FAIL] line per criterion, nonzero exit on any
// failure. Runtime budgets are part of each criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "jdlab/cli.hpp"
#include "jdlab/jdlab.hpp"
#include "support.hpp"

using namespace jdlab;
namespace ts = testing_support;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " FAILED(" << what << ")";
    }
  }
};

int failures = 0;

void criterion(const char* id, const char* title, double budget_s, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << " exception: " << e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > budget_s) {
    o.pass = false;
    o.detail << " over budget (" << budget_s << " s)";
  }
  std::printf("[%s] %s %s (%.2f s)%s\n", o.pass ? "PASS" : "FAIL", id, title, secs, o.detail.str().c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

kernels::LatticeSpec z_line(kernels::JumpProfile::Family f, double alpha, double beta, double R) {
  kernels::LatticeSpec s;
  s.truncation_radius = R;
  s.kernel.family = f;
  s.kernel.alpha = alpha;
  s.kernel.beta = beta;
  return s;
}

std::vector<double> geometric(double lo, double hi, int n) {
  std::vector<double> r;
  for (int i = 0; i < n; ++i) r.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return r;
}

void ac1(Outcome& o) {
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<int> size(2, 200);
  std::uniform_real_distribution<double> dens(0.02, 1.0);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto n = static_cast<std::size_t>(size(gen));
    const auto m = ts::random_model(n, dens(gen), gen);
    const auto u = ts::random_field(n, gen), phi = ts::random_field(n, gen);
    Field uphi(n);
    for (std::size_t i = 0; i < n; ++i) uphi[i] = u[i] * phi[i];
    const auto g1 = gamma_jump(m.space, m.kernel, u, phi);
    const auto g2 = gamma_jump(m.space, m.kernel, u, u);
    double scale = std::abs(jump_energy(m.space, m.kernel, u, uphi));
    for (PointId x = 0; x < n; ++x) scale += (std::abs(u[x] * g1[x]) + std::abs(phi[x] * g2[x])) * m.space.measure(x);
    const double rel = std::abs(derivation_residual(m.space, m.kernel, u, phi)) / std::max(scale, 1e-300);
    worst = std::max(worst, rel);
  }
  o.detail << " worst relative residual " << worst;
  o.check(worst <= 1e-10, "residual");
}

void ac2(Outcome& o) {
  using F = kernels::JumpProfile::Family;
  const double R = 500;
  const std::vector<double> radii{10, 20, 40, 60, 80, 120, 160, 200, 250};
  struct Cell {
    F family;
    double alpha, beta;
    bool expect_recurrence;
  };
  std::vector<Cell> cells;
  for (double a : {0.5, 1.5}) {
    for (double b : {0.5, 1.5, 3.0}) cells.push_back({F::layered, a, b, 1.0 <= std::min(b, 2.0)});
    cells.push_back({F::tempered, a, a, true});
  }
  int agree = 0;
  for (const auto& c : cells) {
    auto spec = z_line(c.family, c.alpha, c.beta, R);
    spec.kernel.c = 1.0;
    const auto m = kernels::stable_like(spec);
    const auto o0 = m.space.origin();
    const auto cons = volume_growth_report(m.space, o0, radii);
    const auto rec = recurrence_report(m, o0, radii);
    const bool ok = cons.verdict == Verdict::satisfied &&
                    (rec.verdict == Verdict::satisfied) == c.expect_recurrence;
    agree += ok;
    if (!ok) {
      std::ostringstream w;
      w << (c.family == F::layered ? "i" : "ii") << " a=" << c.alpha << " b=" << c.beta
        << " rec=" << to_string(rec.verdict) << " t=" << rec.liminf_estimate;
      o.check(false, w.str());
    }
  }
  o.detail << " " << agree << "/" << cells.size() << " cells match";
}

void ac3(Outcome& o) {
  using F = kernels::JumpProfile::Family;
  std::vector<double> radii;
  for (double r = 2; r <= 1024; r *= 2) radii.push_back(r);
  radii.push_back(2000);
  for (double a : {0.5, 1.0, 1.5}) {
    const auto m = kernels::stable_like(z_line(F::layered, a, a, 2000));
    const auto c = m.space.origin();
    const auto scan = capacity_scan(m, {c}, c, radii);
    const bool expect = a >= 1.0;
    o.detail << " a=" << a << ": cert=" << scan.certificate << " decay=" << scan.decay_ratio
             << " slope=" << scan.slope_ratio << ";";
    o.check(scan.certificate == expect, "alpha " + std::to_string(a));
  }
}

void ac4(Outcome& o) {
  const auto m = ts::z_nn(30);
  const auto q = jump_rates(m.space, m.kernel);
  SimConfig c;
  c.trials = 10000;
  c.seed = 20240601;
  const auto est = return_probability(m.space, q, ts::z_id(m, 1), {m.space.origin()}, 10.0, c);
  const double se = std::sqrt(0.9 * 0.1 / 10000.0);
  o.detail << " p=" << est.p.estimate << " CI [" << est.p.lower << ", " << est.p.upper << "]";
  o.check(std::abs(est.p.estimate - 0.9) <= 3.0 * se, "3 SE");
  o.check(est.undecided == 0, "undecided paths");
}

void ac5(Outcome& o) {
  const auto m = ts::z_nn(150);
  const auto c = m.space.origin();
  for (double R : {4.0, 10.0, 40.0, 100.0}) {
    const auto sol = equilibrium_potential(m, {c}, open_ball(m.space, c, R));
    const double th = energy(m, theta_test_function(m.space, c, R));
    o.detail << " R=" << R << ": cap=" << sol.energy << " theta=" << th << ";";
    o.check(std::abs(sol.energy - 4.0 / R) <= 1e-6, "4/R at R=" + std::to_string(R));
    o.check(std::abs(th - 4.0 / (R - 1.0)) <= 1e-9, "theta energy");
    o.check(sol.energy <= th, "cap <= theta energy");
  }
}

void ac6(Outcome& o) {
  const auto m = ts::z_nn(200);
  const auto c = m.space.origin();
  std::vector<double> radii;
  for (double r = 2; r <= 150; r += 1.5) radii.push_back(r);
  const auto om = omega_curve(m, radii);
  const auto rep = recurrence_report(m, c, radii);
  double err = 0.0;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    const double r = radii[k];
    err = std::max(err, std::abs(om[k] - 2.0));
    err = std::max(err, std::abs(rep.values[k] - 2.0 * (2.0 * std::floor(r) + 1.0) / (r * r)));
  }
  o.detail << " Z max error " << err;
  o.check(err <= 1e-12, "closed form");
  const auto m3 = ts::z_nn(12, 3);
  const std::vector<double> r3{2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto rep3 = recurrence_report(m3, m3.space.origin(), r3);
  bool growing = true;
  for (std::size_t k = 1; k < r3.size(); ++k) growing = growing && rep3.values[k] > rep3.values[k - 1];
  const double per_r = rep3.values.back() / r3.back();
  o.detail << "; Z3 t(10)/10=" << per_r << " verdict " << to_string(rep3.verdict);
  o.check(growing, "Z3 t increasing");
  o.check(per_r > 1.0 && per_r < 100.0, "Z3 t ~ r");
  o.check(rep3.verdict == Verdict::inconclusive, "Z3 verdict");
}

void ac7(Outcome& o) {
  kernels::MixedGraphSpec spec;
  spec.graph = kernels::grid_graph(24);
  spec.subdivisions = 1;
  const auto m = kernels::mixed_graph(spec);
  const PointId x0 = m.space.origin();
  std::vector<int> grid;
  for (int n = 2; n <= 24; ++n) grid.push_back(n);
  const auto shells = quadratic_shell_report(m.space, x0, grid);
  const auto ld = log_distance_check(m.space, x0);
  const double top = m.space.max_usable_radius(x0);
  const auto vol = volume_growth_report(m.space, x0, geometric(1.5, top, 12));
  o.detail << " C=" << shells.fitted_constant << " delta=" << ld.delta << " vol liminf=" << vol.liminf_estimate;
  o.check(shells.fitted_constant <= 4.0 && shells.verdict == Verdict::satisfied, "shell fit");
  o.check(ld.delta > 0.0 && std::isfinite(ld.delta), "log distance");
  o.check(vol.verdict == Verdict::satisfied, "volume growth");

  const auto q = birth_chain_rates(10.0, 20000, 3.0);
  SimConfig c;
  c.horizon = 1.0;
  c.trials = 1000;
  c.max_jumps = 10000;
  c.seed = 7;
  const auto ex = explosion_diagnostic(simulate_batch(q, 0, c));
  o.detail << "; birth chain cap fraction " << ex.jump_cap_fraction << " stall " << ex.median_stall_ratio
           << " elapsed@cap " << ex.median_elapsed_at_cap;
  o.check(ex.explosion_suspected, "explosion flag");
  o.check(ex.median_elapsed_at_cap < 0.1, "elapsed at cap < T/10");
}

void ac8(Outcome& o) {
  o.check(davies_constant(0.0) == 1.0 / 9.0, "a(0)");
  o.check(davies_constant(1.0) == 1.0 / 17.0, "a(1)");
}

void ac9(Outcome& o) {
  for (int n : {1, 2}) {
    kernels::ModelManifoldSpec spec;
    spec.sphere_dim = n;
    spec.spacing = 0.01;
    spec.truncation_radius = 52.0;
    spec.sigma = kernels::superexponential_warp(n);
    const auto m = kernels::model_manifold(spec);
    const PointId x0 = m.space.origin();
    const VolumeProfile vp(m.space, x0);
    bool sandwich = true;
    double worst_lo = kInf, worst_hi = -kInf;
    std::vector<double> radii;
    for (double r = 5.0; r <= 50.0 + 1e-9; r += 0.05) {
      const double v = vp.volume(r);
      const double lo = std::log(v) - 0.5 * r * std::log(r);          // ln V - ln r^{r/2}
      const double hi = std::log(v) - (std::log(2.0) + r * std::log(r));  // ln V - ln 2r^r
      worst_lo = std::min(worst_lo, lo);
      worst_hi = std::max(worst_hi, hi);
      sandwich = sandwich && lo > 0.0 && hi < 0.0;
      radii.push_back(r);
    }
    const auto rep = volume_growth_report(m.space, x0, radii);
    const double smax = *std::max_element(rep.values.begin(), rep.values.end());
    o.detail << " n=" << n << ": min ln(V/r^{r/2})=" << worst_lo << " max ln(V/2r^r)=" << worst_hi
             << " max stat=" << smax << ";";
    o.check(sandwich, "volume sandwich n=" + std::to_string(n));
    o.check(smax <= 1.2, "statistic n=" + std::to_string(n));
  }
}

void ac10(Outcome& o) {
  namespace fs = std::filesystem;
  const auto base = fs::temp_directory_path() / "jdlab_acceptance_ac10";
  fs::remove_all(base);
  fs::create_directories(base);
  const auto spec = (base / "spec.json").string();
  io::write_file(spec, R"({"type": "stable_like", "truncation_radius": 200,
    "kernel": {"family": "layered", "alpha": 1.0, "beta": 1.0}})");
  std::vector<std::string> files;
  int k = 0;
  for (const char* threads : {"1", "1", "2"}) {
    const auto out = (base / ("run" + std::to_string(k++))).string();
    std::ostringstream err;
    const int rc = cli::run({"--seed", "12345", "--threads", threads, "--out-dir", out, "simulate", "--space", spec,
                             "--trials", "2000", "--horizon", "5", "--outer", "150", "--return-K", "point:200",
                             "--return-R", "100", "--x0", "201", "--paths-csv"},
                            err);
    o.check(rc == 0, "simulate exit code " + std::to_string(rc) + " " + err.str());
    files.push_back(io::read_file(out + "/simulate.json") + io::read_file(out + "/trajectories.csv"));
  }
  o.check(!files[0].empty() && files[0] == files[1], "same seed, same threads");
  o.check(files[0] == files[2], "same seed, 1 vs 2 threads");
  o.detail << " " << files[0].size() << " bytes compared per run";
  fs::remove_all(base);
}

}  // namespace

int main() {
  criterion("AC1", "derivation identity on random kernels", 10, ac1);
  criterion("AC2", "verdict matrix for stable-like kernels on Z", 60, ac2);
  criterion("AC3", "capacity certificate vs 1-D stable recurrence", 120, ac3);
  criterion("AC4", "gambler's ruin return probability", 30, ac4);
  criterion("AC5", "capacity closed form on Z", 10, ac5);
  criterion("AC6", "omega and recurrence statistic closed forms", 10, ac6);
  criterion("AC7", "Z^2 mixed graph pipeline and explosive birth chain", 60, ac7);
  criterion("AC8", "Davies constant", 1, ac8);
  criterion("AC9", "model manifold volume sandwich", 30, ac9);
  criterion("AC10", "simulate summaries are byte-identical", 60, ac10);
  std::printf("%d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
