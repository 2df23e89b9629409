#ifndef JDLAB_CLI_HPP
#define JDLAB_CLI_HPP

// Command-line front end: build | criteria | simulate | capacity | report.
// Exit codes: 0 success, 2 user error, 3 numerical failure.

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "capacity.hpp"
#include "criteria.hpp"
#include "forms.hpp"
#include "io.hpp"
#include "simulate.hpp"

namespace jdlab::cli {

inline constexpr const char* kVersion = "0.1.0";

using io::json;
using io::num;
using io::nums;

inline std::string verdict_wording(Verdict v) {
  return v == Verdict::satisfied ? "criterion satisfied (sufficient condition)" : "inconclusive";
}

/// "a,b,c" or "lo:hi:step" (inclusive of hi up to round-off).
inline std::vector<double> parse_grid(const std::string& text, const char* what) {
  std::vector<double> out;
  auto to_d = [&](const std::string& s) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw UserError(std::string(what) + ": cannot parse number '" + s + "'");
    }
  };
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw UserError(std::string(what) + ": expected lo:hi:step");
    const double lo = to_d(parts[0]), hi = to_d(parts[1]), step = to_d(parts[2]);
    if (!(step > 0.0) || hi < lo) throw UserError(std::string(what) + ": need step > 0 and hi >= lo");
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(lo + static_cast<double>(i) * step);
    return out;
  }
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ',');)
    if (!p.empty()) out.push_back(to_d(p));
  if (out.empty()) throw UserError(std::string(what) + ": empty list");
  return out;
}

inline PointId parse_point(const std::string& s, const DiscreteMMSpace& space, const char* what) {
  long v = -1;
  try {
    std::size_t pos = 0;
    v = std::stol(s, &pos);
    if (pos != s.size()) v = -1;
  } catch (const std::exception&) {
    v = -1;
  }
  if (v < 0) throw UserError(std::string(what) + ": expected a point id, got '" + s + "'");
  if (static_cast<std::size_t>(v) >= space.size())
    throw UserError(std::string(what) + ": point id " + s + " out of range (space has " +
                    std::to_string(space.size()) + " points)");
  return static_cast<PointId>(v);
}

struct TargetSet {
  std::vector<PointId> points;
  PointId center = 0;  // ball centre, or the first listed point
};

/// "ball:x0:r" (closed ball), "point:ID", or "set:ID,ID,...".
inline TargetSet parse_target(const std::string& text, const DiscreteMMSpace& space, const char* what) {
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw UserError(std::string(what) + ": expected ball:x0:r, point:ID or set:ID,...");
  const auto kind = text.substr(0, colon);
  const auto rest = text.substr(colon + 1);
  TargetSet t;
  if (kind == "ball") {
    const auto c2 = rest.find(':');
    if (c2 == std::string::npos) throw UserError(std::string(what) + ": expected ball:x0:r");
    t.center = parse_point(rest.substr(0, c2), space, what);
    const auto r = parse_grid(rest.substr(c2 + 1), what);
    if (r.size() != 1 || r[0] < 0.0) throw UserError(std::string(what) + ": ball radius must be one nonnegative number");
    t.points = metric_ball(space, t.center, r[0]).points;
  } else if (kind == "point") {
    t.center = parse_point(rest, space, what);
    t.points = {t.center};
  } else if (kind == "set") {
    std::stringstream ss(rest);
    for (std::string p; std::getline(ss, p, ',');)
      if (!p.empty()) t.points.push_back(parse_point(p, space, what));
    if (t.points.empty()) throw UserError(std::string(what) + ": empty set");
    t.center = t.points.front();
  } else {
    throw UserError(std::string(what) + ": unknown target kind '" + kind + "'");
  }
  return t;
}

struct Globals {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string out_dir = ".";
  std::string format = "both";
};

/// Tracks output files and writes the run manifest.
class Run {
 public:
  Run(std::string command, const Globals& g)
      : command_(std::move(command)), g_(g), start_(std::chrono::steady_clock::now()) {
    std::error_code ec;
    std::filesystem::create_directories(g_.out_dir, ec);
    if (ec) throw UserError("cannot create output directory '" + g_.out_dir + "': " + ec.message());
  }

  bool want_json() const { return g_.format != "csv"; }
  bool want_csv() const { return g_.format != "json"; }
  std::string manifest_name() const { return command_ + ".manifest.json"; }
  std::string path(const std::string& name) const { return (std::filesystem::path(g_.out_dir) / name).string(); }

  void input(const std::string& path, const std::string& bytes) {
    inputs_.push_back({{"path", path}, {"fnv1a64", io::hex64(io::fnv1a(bytes))}});
  }
  void parameters(json p) { params_ = std::move(p); }

  void write(const std::string& name, const std::string& data) {
    io::write_file(path(name), data);
    outputs_.push_back(name);
  }
  void write_json(const std::string& name, json j) {
    j["manifest"] = manifest_name();
    write(name, j.dump(2) + "\n");
  }

  void finish() {
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json m = {{"tool", "jdlab"},
              {"version", kVersion},
              {"command", command_},
              {"inputs", inputs_},
              {"parameters", params_},
              {"seed", g_.seed},
              {"threads", g_.threads},
              {"wall_time_seconds", num(wall)},
              {"outputs", outputs_}};
    io::write_file(path(manifest_name()), m.dump(2) + "\n");
  }

 private:
  std::string command_;
  Globals g_;
  std::chrono::steady_clock::time_point start_;
  json inputs_ = json::array();
  json params_ = json::object();
  json outputs_ = json::array();
};

inline json to_json(const CriterionReport& r) {
  return {{"statistic", r.statistic},
          {"radii", nums(r.radii)},
          {"values", nums(r.values)},
          {"window_start_index", r.window_start},
          {"liminf_estimate", num(r.liminf_estimate)},
          {"threshold", num(r.threshold)},
          {"verdict", verdict_wording(r.verdict)},
          {"truncation_radius", num(r.truncation_radius)},
          {"notes", r.notes}};
}

inline json to_json(const MConstants& mc) {
  json j = {{"M_c", num(mc.m_c)}, {"M_j", num(mc.m_j)}};
  j["argmax_c"] = mc.argmax_c ? json(*mc.argmax_c) : json(nullptr);
  j["argmax_j"] = mc.argmax_j ? json(*mc.argmax_j) : json(nullptr);
  j["argmax_c_on_boundary"] = mc.argmax_c_on_boundary;
  j["argmax_j_on_boundary"] = mc.argmax_j_on_boundary;
  return j;
}

inline json space_summary(const Model& model) {
  const auto& s = model.space;
  std::size_t nj = 0, nc = 0, nb = 0;
  for (std::size_t x = 0; x < s.size(); ++x) {
    nj += s.jump_support()[x];
    nc += s.local_support()[x];
    nb += s.boundary()[x];
  }
  return {{"points", s.size()},
          {"total_measure", num(s.total_measure())},
          {"kernel_entries", model.kernel.nnz()},
          {"jump_support_points", nj},
          {"local_support_points", nc},
          {"boundary_points", nb},
          {"origin", s.origin()},
          {"truncation_radius", num(s.truncation_radius())},
          {"max_usable_radius_from_origin", num(s.max_usable_radius(s.origin()))},
          {"has_graph_distance", s.has_graph_distance()},
          {"has_local_part", model.local.has_value()}};
}

inline json info_without_spec(const Model& model) {
  json j = model.info;
  if (j.is_object()) j.erase("spec");
  return j;
}

/// Evenly spaced grid of `count` radii from 2 up to the usable extent.
inline std::vector<double> default_radii(const DiscreteMMSpace& space, PointId x0, int count = 16) {
  double top = space.max_usable_radius(x0);
  if (!std::isfinite(top)) {
    top = 0.0;
    for (double d : space.distances_from(x0))
      if (std::isfinite(d)) top = std::max(top, d);
  }
  if (!(top > 2.0))
    throw UserError("space too small for a default radius grid (usable extent " + io::fmt12(top) +
                    "); pass --radii");
  std::vector<double> r;
  for (int i = 0; i < count; ++i) r.push_back(2.0 + (top - 2.0) * i / (count - 1));
  return r;
}

struct Loaded {
  Model model;
  std::string bytes;
};

inline Loaded load(Run& run, const std::string& path) {
  Loaded l;
  l.model = io::load_model(path, &l.bytes);
  run.input(path, l.bytes);
  return l;
}

// ---------------------------------------------------------------------------
// Commands

inline void cmd_build(const Globals& g, const std::string& spec, const std::string& out) {
  Run run("build", g);
  auto l = load(run, spec);
  run.parameters({{"spec", spec}, {"out", out}});
  run.write(out, io::serialize(l.model));
  json summary = {{"command", "build"},
                  {"space", space_summary(l.model)},
                  {"m_constants", to_json(m_constants(l.model))},
                  {"info", info_without_spec(l.model)},
                  {"binary", out}};
  run.write_json("build.json", summary);
  run.finish();
}

struct CriteriaArgs {
  std::string space;
  std::string x0;
  std::string radii;
  double tau = 10.0;
  double tau_recurrence = 10.0;
  std::string theta_radii;
  std::string shell_grid;
  std::string doubling_radii;
};

inline void cmd_criteria(const Globals& g, const CriteriaArgs& a) {
  Run run("criteria", g);
  auto l = load(run, a.space);
  const auto& model = l.model;
  const PointId x0 = a.x0.empty() ? model.space.origin() : parse_point(a.x0, model.space, "--x0");
  const auto radii = a.radii.empty() ? default_radii(model.space, x0) : parse_grid(a.radii, "--radii");
  run.parameters({{"space", a.space},
                  {"x0", x0},
                  {"radii", nums(radii)},
                  {"tau", num(a.tau)},
                  {"tau_recurrence", num(a.tau_recurrence)}});

  const auto cons = volume_growth_report(model.space, x0, radii, a.tau);
  const auto rec = recurrence_report(model, x0, radii, a.tau_recurrence);
  json out = {{"command", "criteria"},
              {"x0", x0},
              {"space", space_summary(model)},
              {"conservativeness", to_json(cons)},
              {"recurrence", to_json(rec)},
              {"m_constants", to_json(m_constants(model))}};
  out["conservativeness"]["davies_constant"] =
      std::isfinite(cons.liminf_estimate) && cons.liminf_estimate >= 0.0 ? num(davies_constant(cons.liminf_estimate))
                                                                         : json(nullptr);
  out["recurrence"]["omega"] = nums(omega_curve(model, radii));

  std::ostringstream csv;
  csv << "statistic,radius,value\n";
  for (std::size_t i = 0; i < radii.size(); ++i)
    csv << cons.statistic << "," << io::fmt12(radii[i]) << "," << io::fmt12(cons.values[i]) << "\n";
  for (std::size_t i = 0; i < radii.size(); ++i)
    csv << rec.statistic << "," << io::fmt12(radii[i]) << "," << io::fmt12(rec.values[i]) << "\n";

  if (!a.theta_radii.empty()) {
    const auto tr = theta_energy(model, x0, parse_grid(a.theta_radii, "--theta-radii"));
    out["theta_energy"] = {{"radii", nums(tr.radii)}, {"energies", nums(tr.energies)}, {"bounded", tr.bounded}};
    for (std::size_t i = 0; i < tr.radii.size(); ++i)
      csv << "theta_energy," << io::fmt12(tr.radii[i]) << "," << io::fmt12(tr.energies[i]) << "\n";
  }
  if (!a.doubling_radii.empty()) {
    const auto dr = doubling_report(model.space, x0, parse_grid(a.doubling_radii, "--doubling-radii"));
    out["doubling"] = {{"radii", nums(dr.radii)},
                       {"ratios", nums(dr.ratios)},
                       {"max_ratio", num(dr.max_ratio)},
                       {"doubling", dr.doubling},
                       {"kappa", num(dr.kappa)},
                       {"growth_constant", num(dr.growth_constant)}};
  }
  if (model.space.has_graph_distance()) {
    std::vector<int> grid;
    if (!a.shell_grid.empty()) {
      for (double v : parse_grid(a.shell_grid, "--shell-grid")) {
        if (v < 1.0 || v != std::floor(v)) throw UserError("--shell-grid: shells are positive integers");
        grid.push_back(static_cast<int>(v));
      }
    } else {
      double top = 0.0;
      for (double d : model.space.graph_distances_from(x0))
        if (std::isfinite(d)) top = std::max(top, d);
      for (int n = 2; n <= static_cast<int>(std::floor(top)); ++n) grid.push_back(n);
    }
    if (!grid.empty()) {
      const auto sr = quadratic_shell_report(model.space, x0, grid);
      json shells = {{"n", sr.n},
                     {"shell_volume", nums(sr.shell_volume)},
                     {"ratio_to_n_squared", nums(sr.ratio)},
                     {"fitted_constant", num(sr.fitted_constant)},
                     {"stable", sr.stable},
                     {"verdict", verdict_wording(sr.verdict)}};
      out["quadratic_shells"] = shells;
      for (std::size_t i = 0; i < sr.n.size(); ++i)
        csv << "shell_ratio," << sr.n[i] << "," << io::fmt12(sr.ratio[i]) << "\n";
    }
    const auto ld = log_distance_check(model.space, x0);
    out["log_distance"] = {{"delta", num(ld.delta)},
                           {"argmin", ld.argmin ? json(*ld.argmin) : json(nullptr)},
                           {"points_checked", ld.points_checked},
                           {"positive", ld.delta > 0.0}};
  }
  if (run.want_json()) run.write_json("criteria.json", out);
  if (run.want_csv()) run.write("criteria.csv", csv.str());
  run.finish();
}

struct SimulateArgs {
  std::string space;
  std::string x0;
  double horizon = 1.0;
  std::size_t trials = 1000;
  std::size_t max_jumps = 1'000'000;
  double outer = kInf;
  std::string center;
  std::string policy = "absorb";
  std::string return_target;
  double return_radius = 0.0;
  bool paths_csv = false;
};

inline json to_json(const Proportion& p) {
  return {{"estimate", num(p.estimate)},
          {"ci95", {num(p.lower), num(p.upper)}},
          {"standard_error", num(p.standard_error)},
          {"successes", p.successes},
          {"trials", p.trials}};
}

inline json to_json(const ExplosionSummary& s) {
  return {{"trials", s.trials},
          {"alive_fraction", num(s.alive_fraction)},
          {"jump_cap_fraction", num(s.jump_cap_fraction)},
          {"absorbed_fraction", num(s.absorbed_fraction)},
          {"elapsed_quantiles", {{"q0", num(s.elapsed_quantiles[0])},
                                 {"q10", num(s.elapsed_quantiles[1])},
                                 {"q50", num(s.elapsed_quantiles[2])},
                                 {"q90", num(s.elapsed_quantiles[3])},
                                 {"q100", num(s.elapsed_quantiles[4])}}},
          {"median_elapsed_at_cap", num(s.median_elapsed_at_cap)},
          {"median_stall_ratio", num(s.median_stall_ratio)},
          {"explosion_suspected", s.explosion_suspected},
          {"truncation_too_small", s.truncation_too_small}};
}

inline void cmd_simulate(const Globals& g, const SimulateArgs& a) {
  Run run("simulate", g);
  auto l = load(run, a.space);
  const auto& model = l.model;
  const auto& space = model.space;
  const PointId x0 = a.x0.empty() ? space.origin() : parse_point(a.x0, space, "--x0");
  SimConfig cfg;
  cfg.horizon = a.horizon;
  cfg.trials = a.trials;
  cfg.max_jumps = a.max_jumps;
  cfg.seed = g.seed;
  cfg.threads = g.threads;
  cfg.outer_radius = a.outer;
  if (a.policy == "absorb") cfg.policy = TruncationPolicy::absorb;
  else if (a.policy == "reflect-reject") cfg.policy = TruncationPolicy::reflect_reject;
  else throw UserError("--policy: expected absorb or reflect-reject");
  if (!a.center.empty()) cfg.center = parse_point(a.center, space, "--center");
  cfg.validate();
  const auto rates = jump_rates(space, model.kernel);

  json params = {{"space", a.space},
                 {"x0", x0},
                 {"horizon", num(cfg.horizon)},
                 {"trials", cfg.trials},
                 {"max_jumps", cfg.max_jumps},
                 {"outer_radius", num(cfg.outer_radius)},
                 {"center", cfg.center.value_or(x0)},
                 {"policy", to_string(cfg.policy)},
                 {"seed", cfg.seed}};
  json out = {{"command", "simulate"}, {"config", params}};
  if (model.local)
    out["notes"] = json::array({"local part ignored by the simulator (pure-jump process only)"});

  const auto batch = simulate_batch(space, rates, x0, cfg);
  out["survival"] = to_json(survival_estimate(batch));
  json counts = {{"alive-at-T", 0}, {"absorbed-at-boundary", 0}, {"jump-cap-hit", 0}};
  for (const auto& t : batch) counts[to_string(t.status)] = counts[to_string(t.status)].get<long>() + 1;
  out["status_counts"] = counts;
  out["explosion"] = to_json(explosion_diagnostic(batch));

  if (!a.return_target.empty()) {
    const auto K = parse_target(a.return_target, space, "--return-K");
    if (!(a.return_radius > 0.0)) throw UserError("--return-R: outer radius must be positive");
    const auto ret = return_probability(space, rates, x0, K.points, a.return_radius, cfg, K.center);
    out["return"] = {{"K", a.return_target},
                     {"K_points", K.points.size()},
                     {"center", K.center},
                     {"outer_radius", num(a.return_radius)},
                     {"probability", to_json(ret.p)},
                     {"exited", ret.exited},
                     {"undecided", ret.undecided},
                     {"warnings", ret.warnings}};
    params["return_K"] = a.return_target;
    params["return_R"] = num(a.return_radius);
    out["config"] = params;
  }
  run.parameters(params);
  if (run.want_json()) run.write_json("simulate.json", out);
  if (a.paths_csv) {
    std::ostringstream csv;
    csv << "trial,status,jumps,elapsed,final_state\n";
    for (std::size_t i = 0; i < batch.size(); ++i)
      csv << i << "," << to_string(batch[i].status) << "," << batch[i].jumps << "," << io::fmt12(batch[i].elapsed)
          << "," << batch[i].final_state << "\n";
    run.write("trajectories.csv", csv.str());
  }
  run.finish();
}

struct CapacityArgs {
  std::string space;
  std::string K;
  std::string radii;
  std::string center;
  double decay = 0.05;
  double slope_ratio = 0.75;
  bool green = false;
  std::size_t direct_threshold = 2000;
  std::size_t max_iterations = 0;  // 0: solver default
};

inline void cmd_capacity(const Globals& g, const CapacityArgs& a) {
  Run run("capacity", g);
  auto l = load(run, a.space);
  const auto& model = l.model;
  const auto K = parse_target(a.K, model.space, "--K");
  const PointId center = a.center.empty() ? K.center : parse_point(a.center, model.space, "--center");
  const auto radii = parse_grid(a.radii, "--radii");
  CertificateOptions cert;
  cert.decay = a.decay;
  cert.slope_ratio = a.slope_ratio;
  run.parameters({{"space", a.space},
                  {"K", a.K},
                  {"center", center},
                  {"radii", nums(radii)},
                  {"decay", num(a.decay)},
                  {"slope_ratio", num(a.slope_ratio)}});
  SolverOptions solver;
  solver.direct_threshold = a.direct_threshold;
  if (a.max_iterations > 0) solver.max_iterations = a.max_iterations;
  const auto scan = capacity_scan(model, K.points, center, radii, cert, solver);
  json out = {{"command", "capacity"},
              {"K", a.K},
              {"K_points", K.points.size()},
              {"center", center},
              {"radii", nums(scan.radii)},
              {"capacities", nums(scan.capacities)},
              {"resistances", nums(scan.resistances)},
              {"solver_residuals", nums(scan.residuals)},
              {"nonincreasing", scan.nonincreasing},
              {"still_decreasing", scan.still_decreasing},
              {"decay_ratio", num(scan.decay_ratio)},
              {"slope_ratio", num(scan.slope_ratio)},
              {"certificate", scan.certificate},
              {"thresholds", {{"decay", num(a.decay)}, {"slope_ratio", num(a.slope_ratio)}}},
              {"notes", scan.notes}};
  std::ostringstream csv;
  csv << "radius,capacity\n";
  for (std::size_t i = 0; i < radii.size(); ++i)
    csv << io::fmt12(radii[i]) << "," << io::fmt12(scan.capacities[i]) << "\n";
  if (a.green) {
    Field f(model.space.size(), 0.0);
    for (PointId x : K.points) f[x] = 1.0;
    const auto gg = green_growth(model, f, center, radii, a.slope_ratio, solver);
    out["green"] = {{"f", "indicator of K"},
                    {"values", nums(gg.values)},
                    {"residuals", nums(gg.residuals)},
                    {"slope_ratio", num(gg.slope_ratio)},
                    {"divergence_evidence", gg.divergence_evidence},
                    {"notes", gg.notes}};
  }
  if (run.want_json()) run.write_json("capacity.json", out);
  if (run.want_csv()) run.write("capacity.csv", csv.str());
  run.finish();
}

/// Plain-text digest of the JSON summaries found in a directory.
inline std::string render_report(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ostringstream os;
  auto read = [&](const char* name) -> std::optional<json> {
    const auto p = fs::path(dir) / name;
    if (!fs::exists(p)) return std::nullopt;
    return io::parse_json(io::read_file(p.string()), p.string());
  };
  bool any = false;
  if (auto b = read("build.json")) {
    any = true;
    const auto& s = (*b)["space"];
    os << "build: " << s["points"] << " points, " << s["kernel_entries"] << " kernel entries, truncation radius "
       << s["truncation_radius"] << "\n";
  }
  if (auto c = read("criteria.json")) {
    any = true;
    os << "criteria (x0 = " << (*c)["x0"] << "):\n"
       << "  conservativeness: " << (*c)["conservativeness"]["verdict"].get<std::string>()
       << " (liminf estimate " << (*c)["conservativeness"]["liminf_estimate"] << ")\n"
       << "  recurrence:       " << (*c)["recurrence"]["verdict"].get<std::string>() << " (liminf estimate "
       << (*c)["recurrence"]["liminf_estimate"] << ")\n";
    if (c->contains("quadratic_shells"))
      os << "  quadratic shells: " << (*c)["quadratic_shells"]["verdict"].get<std::string>() << " (C = "
         << (*c)["quadratic_shells"]["fitted_constant"] << ")\n";
  }
  if (auto s = read("simulate.json")) {
    any = true;
    os << "simulate: survival " << (*s)["survival"]["estimate"] << " CI " << (*s)["survival"]["ci95"].dump()
       << ", explosion suspected " << (*s)["explosion"]["explosion_suspected"] << ", truncation too small "
       << (*s)["explosion"]["truncation_too_small"] << "\n";
    if (s->contains("return"))
      os << "  return probability " << (*s)["return"]["probability"]["estimate"] << " CI "
         << (*s)["return"]["probability"]["ci95"].dump() << "\n";
  }
  if (auto c = read("capacity.json")) {
    any = true;
    os << "capacity: " << (*c)["capacities"].dump() << " certificate " << (*c)["certificate"] << "\n";
  }
  if (!any) throw UserError("no summaries found in '" + dir + "'");
  return os.str();
}

inline void cmd_report(const Globals& g, const std::string& in_dir) {
  const auto text = render_report(in_dir.empty() ? g.out_dir : in_dir);
  Run run("report", g);
  run.parameters({{"in_dir", in_dir.empty() ? g.out_dir : in_dir}});
  run.write("report.txt", text);
  run.finish();
  std::cout << text;
}

// ---------------------------------------------------------------------------

/// Entry point; `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& err = std::cerr) {
  CLI::App app{"jdlab: volume and capacity diagnostics for symmetric jump processes on discrete spaces"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "RNG seed")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads (JDLAB_THREADS overrides)")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "output directory")->capture_default_str();
  app.add_option("--format", g.format, "json | csv | both")
      ->check(CLI::IsMember({"json", "csv", "both"}))
      ->capture_default_str();

  auto* build = app.add_subcommand("build", "build an instance from a JSON spec and serialize it");
  std::string spec, out = "space.bin";
  build->add_option("--spec", spec, "JSON spec file")->required();
  build->add_option("--out", out, "binary output file name (inside --out-dir)")->capture_default_str();

  auto* crit = app.add_subcommand("criteria", "evaluate the volume and recurrence criteria");
  CriteriaArgs ca;
  crit->add_option("--space", ca.space, "JSON spec or binary model")->required();
  crit->add_option("--x0", ca.x0, "base point (default: origin)");
  crit->add_option("--radii", ca.radii, "radius grid: a,b,c or lo:hi:step");
  crit->add_option("--tau", ca.tau, "threshold for the volume statistic")->capture_default_str();
  crit->add_option("--tau-recurrence", ca.tau_recurrence, "threshold for the recurrence statistic")
      ->capture_default_str();
  crit->add_option("--theta-radii", ca.theta_radii, "grid of R for theta_R energies");
  crit->add_option("--shell-grid", ca.shell_grid, "shell indices n for the quadratic shell fit");
  crit->add_option("--doubling-radii", ca.doubling_radii, "radii for the doubling report");

  auto* sim = app.add_subcommand("simulate", "Monte-Carlo survival, return and explosion diagnostics");
  SimulateArgs sa;
  sim->add_option("--space", sa.space, "JSON spec or binary model")->required();
  sim->add_option("--x0", sa.x0, "start point (default: origin)");
  sim->add_option("--horizon", sa.horizon, "time horizon T")->capture_default_str();
  sim->add_option("--trials", sa.trials, "number of trials N")->capture_default_str();
  sim->add_option("--max-jumps", sa.max_jumps, "jump cap per path")->capture_default_str();
  sim->add_option("--outer", sa.outer, "outer radius R_out (absorbing)");
  sim->add_option("--center", sa.center, "centre of the outer ball (default: x0)");
  sim->add_option("--policy", sa.policy, "absorb | reflect-reject")->capture_default_str();
  sim->add_option("--return-K", sa.return_target, "target set for the return probability");
  sim->add_option("--return-R", sa.return_radius, "outer radius for the return probability");
  sim->add_flag("--paths-csv", sa.paths_csv, "write per-trajectory CSV");

  auto* cap = app.add_subcommand("capacity", "capacity scan cap(K, B(center, R))");
  CapacityArgs pa;
  cap->add_option("--space", pa.space, "JSON spec or binary model")->required();
  cap->add_option("--K", pa.K, "ball:x0:r | point:ID | set:ID,...")->required();
  cap->add_option("--radii", pa.radii, "increasing radii")->required();
  cap->add_option("--center", pa.center, "ball centre (default: centre of K)");
  cap->add_option("--decay", pa.decay, "relative decay threshold")->capture_default_str();
  cap->add_option("--slope-ratio", pa.slope_ratio, "resistance growth threshold")->capture_default_str();
  cap->add_flag("--green", pa.green, "also report Green-function growth for f = 1_K");
  cap->add_option("--direct-threshold", pa.direct_threshold, "factorize directly below this many unknowns")
      ->capture_default_str();
  cap->add_option("--max-iterations", pa.max_iterations, "conjugate-gradient iteration cap (0: 50 sqrt(n) + 1000)");

  auto* rep = app.add_subcommand("report", "summarize the JSON outputs of a directory");
  std::string in_dir;
  rep->add_option("--in-dir", in_dir, "directory with summaries (default: --out-dir)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, er;
    const int code = app.exit(e, o, er);
    std::cout << o.str();
    err << er.str();
    return code == 0 ? 0 : 2;
  }
  if (const char* env = std::getenv("JDLAB_THREADS")) {
    try {
      const long t = std::stol(env);
      if (t < 1) throw std::invalid_argument(env);
      g.threads = static_cast<unsigned>(t);
    } catch (const std::exception&) {
      err << "error: JDLAB_THREADS must be a positive integer\n";
      return 2;
    }
  }
  if (g.threads < 1) {
    err << "error: --threads must be at least 1\n";
    return 2;
  }

  try {
    if (*build) cmd_build(g, spec, out);
    else if (*crit) cmd_criteria(g, ca);
    else if (*sim) cmd_simulate(g, sa);
    else if (*cap) cmd_capacity(g, pa);
    else if (*rep) cmd_report(g, in_dir);
  } catch (const UserError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

}  // namespace jdlab::cli

#endif  // JDLAB_CLI_HPP
