#ifndef JDLAB_IO_HPP
#define JDLAB_IO_HPP

// JSON instance specs, binary serialization of built models, and the
// number formatting used by every report.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "common.hpp"
#include "forms.hpp"
#include "kernels.hpp"
#include "space.hpp"

namespace jdlab::io {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Output numbers

/// Rounds to 12 significant digits; non-finite values become strings.
inline json num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return std::stod(os.str());
}

inline json nums(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

inline std::string fmt12(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

inline std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError("cannot open file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError("cannot write file '" + path + "'");
  out << data;
}

// ---------------------------------------------------------------------------
// Spec parsing

/// Field access with a dotted path in every diagnostic.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw UserError(where() + ": expected an object");
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  double number(const char* key) const {
    const auto& v = need(key);
    if (!v.is_number()) throw UserError(where(key) + ": expected a number");
    return v.get<double>();
  }
  double number(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }

  long integer(const char* key) const {
    const auto& v = need(key);
    if (!v.is_number_integer()) throw UserError(where(key) + ": expected an integer");
    return v.get<long>();
  }
  long integer(const char* key, long fallback) const { return has(key) ? integer(key) : fallback; }

  bool boolean(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) throw UserError(where(key) + ": expected true or false");
    return v.get<bool>();
  }

  std::string string(const char* key) const {
    const auto& v = need(key);
    if (!v.is_string()) throw UserError(where(key) + ": expected a string");
    return v.get<std::string>();
  }
  std::string string(const char* key, const std::string& fallback) const {
    return has(key) ? string(key) : fallback;
  }

  Fields object(const char* key) const { return Fields(need(key), where(key)); }
  const json& raw(const char* key) const { return need(key); }
  const json& raw() const { return j_; }

  std::string where(const char* key = nullptr) const {
    if (!key) return path_.empty() ? "spec" : path_;
    return path_.empty() ? std::string(key) : path_ + "." + key;
  }

 private:
  const json& need(const char* key) const {
    if (!has(key)) throw UserError("missing field '" + where(key) + "'");
    return j_.at(key);
  }
  const json& j_;
  std::string path_;
};

namespace detail {

inline kernels::JumpProfile parse_profile(const Fields& k) {
  using F = kernels::JumpProfile::Family;
  kernels::JumpProfile p;
  const auto fam = k.string("family");
  if (fam == "nearest_neighbor") p.family = F::nearest_neighbor;
  else if (fam == "layered") p.family = F::layered;
  else if (fam == "tempered") p.family = F::tempered;
  else if (fam == "zero") p.family = F::zero;
  else if (fam == "explicit") p.family = F::zero;  // entries applied afterwards
  else
    throw UserError(k.where("family") + ": unknown kernel family '" + fam +
                    "' (expected nearest_neighbor, layered, tempered, zero, explicit)");
  p.alpha = k.number("alpha", 1.0);
  p.beta = k.number("beta", p.alpha);
  p.c = k.number("c", 1.0);
  if (k.has("cutoff")) p.cutoff = k.number("cutoff");
  return p;
}

inline kernels::Profile parse_radial(const Fields& f, kernels::Profile fallback) {
  using K = kernels::Profile::Kind;
  kernels::Profile p = fallback;
  const auto kind = f.string("profile");
  const auto before = p.kind;
  if (kind == "constant") p.kind = K::constant;
  else if (kind == "power_shifted") p.kind = K::power_shifted;
  else if (kind == "power") p.kind = K::power;
  else if (kind == "exponential") p.kind = K::exponential;
  else if (kind == "superexponential") p.kind = K::superexponential;
  else
    throw UserError(f.where("profile") + ": unknown profile '" + kind +
                    "' (expected constant, power_shifted, power, exponential, superexponential)");
  if (p.kind != before) p = kernels::Profile{p.kind, 1.0, 0.0, 0.0, fallback.n};
  p.c = f.number("c", p.c);
  p.p = f.number("p", p.p);
  p.lambda = f.number("lambda", p.lambda);
  return p;
}

inline void apply_explicit_entries(Model& model, const Fields& k) {
  const auto& entries = k.raw("entries");
  if (!entries.is_array()) throw UserError(k.where("entries") + ": expected an array of [i, j, value]");
  std::vector<std::tuple<PointId, PointId, double>> list;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() || !e[1].is_number_integer() ||
        !e[2].is_number())
      throw UserError(k.where("entries") + "[" + std::to_string(i) + "]: expected [i, j, value]");
    const long a = e[0].get<long>(), b = e[1].get<long>();
    if (a < 0 || b < 0) throw UserError(k.where("entries") + "[" + std::to_string(i) + "]: negative index");
    list.emplace_back(static_cast<PointId>(a), static_cast<PointId>(b), e[2].get<double>());
  }
  model.kernel = JumpKernel::from_entries(model.space.size(), list);
  refresh_supports(model);
  model.info["kernel"] = {{"family", "explicit"}, {"entries", list.size()}};
  model.info["exterior_mass"] = "none (explicit kernel)";
}

inline GraphData parse_graph(const Fields& p, double truncation_radius, bool has_truncation) {
  const auto gen = p.string("generator", "explicit");
  const double omega = p.number("omega", 1.0);
  const double mu = p.number("mu", 1.0);
  GraphData g;
  if (gen == "path") {
    const long n = p.integer("vertices");
    require(n >= 1, p.where("vertices") + ": must be >= 1");
    g = kernels::path_graph(static_cast<std::size_t>(n), omega, mu);
  } else if (gen == "grid") {
    const long R = has_truncation ? static_cast<long>(std::floor(truncation_radius + 1e-9)) : p.integer("radius");
    require(R >= 1, "grid radius must be >= 1");
    g = kernels::grid_graph(static_cast<int>(R), omega, mu);
  } else if (gen == "star") {
    const long n = p.integer("leaves");
    require(n >= 1, p.where("leaves") + ": must be >= 1");
    g = kernels::star_graph(static_cast<std::size_t>(n), omega, mu);
  } else if (gen == "binary_tree") {
    g = kernels::binary_tree(static_cast<int>(p.integer("depth")), omega, mu);
  } else if (gen == "explicit") {
    const long n = p.integer("vertices");
    require(n >= 1, p.where("vertices") + ": must be >= 1");
    g.vertices = static_cast<std::size_t>(n);
    const auto& edges = p.raw("edges");
    if (!edges.is_array()) throw UserError(p.where("edges") + ": expected an array of [a, b, omega]");
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const auto& e = edges[i];
      if (!e.is_array() || e.size() < 2 || e.size() > 3 || !e[0].is_number_integer() || !e[1].is_number_integer())
        throw UserError(p.where("edges") + "[" + std::to_string(i) + "]: expected [a, b] or [a, b, omega]");
      const long a = e[0].get<long>(), b = e[1].get<long>();
      if (a < 0 || b < 0 || a >= n || b >= n)
        throw UserError(p.where("edges") + "[" + std::to_string(i) + "]: vertex index out of range");
      const double w = e.size() == 3 ? e[2].get<double>() : omega;
      g.edges.push_back({static_cast<PointId>(a), static_cast<PointId>(b), w});
    }
    if (p.has("vertex_measure")) {
      const auto& vm = p.raw("vertex_measure");
      if (!vm.is_array() || vm.size() != g.vertices)
        throw UserError(p.where("vertex_measure") + ": expected one number per vertex");
      for (const auto& v : vm) g.vertex_measure.push_back(v.get<double>());
    } else {
      g.vertex_measure.assign(g.vertices, mu);
    }
    if (p.has("boundary")) {
      g.boundary.assign(g.vertices, false);
      for (const auto& v : p.raw("boundary")) {
        const long b = v.get<long>();
        require(b >= 0 && b < n, p.where("boundary") + ": vertex index out of range");
        g.boundary[static_cast<std::size_t>(b)] = true;
      }
    }
    if (has_truncation) g.truncation_radius = truncation_radius;
  } else {
    throw UserError(p.where("generator") + ": unknown generator '" + gen +
                    "' (expected path, grid, star, binary_tree, explicit)");
  }
  if (p.has("origin")) {
    const long o = p.integer("origin");
    require(o >= 0 && static_cast<std::size_t>(o) < g.vertices, p.where("origin") + ": vertex index out of range");
    g.origin = static_cast<PointId>(o);
  }
  return g;
}

}  // namespace detail

/// Builds a model from a JSON spec
///   {"type": ..., "truncation_radius": R, "params": {...}, "kernel": {...}}.
inline Model build_model(const json& spec) {
  const Fields top(spec, "");
  const auto type = top.string("type");
  static const json kEmpty = json::object();
  const Fields params = top.has("params") ? top.object("params") : Fields(kEmpty, "params");
  auto truncation = [&] {
    const double R = top.number("truncation_radius");
    require(R > 0.0 && std::isfinite(R), "truncation_radius: must be positive and finite");
    return R;
  };
  Model model;
  if (type == "lattice" || type == "stable_like") {
    const std::string base = params.string("space", "lattice");
    const Fields kf = top.object("kernel");
    const auto profile = detail::parse_profile(kf);
    if (type == "stable_like") {
      const auto fam = kf.string("family");
      if (fam != "layered" && fam != "tempered")
        throw UserError("kernel.family: stable_like requires 'layered' or 'tempered'");
    }
    if (base == "sierpinski_gasket") {
      kernels::GasketSpec gs;
      gs.level = static_cast<int>(params.integer("level"));
      gs.kernel = profile;
      model = kernels::sierpinski_gasket(gs);
    } else if (base == "lattice") {
      kernels::LatticeSpec ls;
      ls.dim = static_cast<int>(params.integer("dim", 1));
      ls.spacing = params.number("spacing", 1.0);
      ls.truncation_radius = truncation();
      ls.kernel = profile;
      model = kernels::lattice(ls);
    } else {
      throw UserError("params.space: expected 'lattice' or 'sierpinski_gasket'");
    }
    if (kf.string("family") == "explicit") detail::apply_explicit_entries(model, kf);
  } else if (type == "sierpinski_gasket") {
    kernels::GasketSpec gs;
    gs.level = static_cast<int>(params.integer("level"));
    gs.kernel = top.has("kernel") ? detail::parse_profile(top.object("kernel")) : kernels::JumpProfile{};
    model = kernels::sierpinski_gasket(gs);
    if (top.has("kernel") && top.object("kernel").string("family") == "explicit")
      detail::apply_explicit_entries(model, top.object("kernel"));
  } else if (type == "stack") {
    kernels::StackSpec ss;
    ss.truncation_radius = truncation();
    ss.dim = static_cast<int>(params.integer("dim", 1));
    ss.layers = static_cast<int>(params.integer("layers", 2));
    ss.spacing = params.number("spacing", 0.5);
    ss.alpha = params.number("alpha", 1.0);
    ss.beta = params.number("beta", 1.0);
    ss.c1 = params.number("c1", 1.0);
    ss.with_local = params.boolean("with_local", true);
    if (params.has("c0")) ss.c0 = params.number("c0");
    if (params.has("psi")) ss.psi = detail::parse_radial(params.object("psi"), ss.psi);
    model = kernels::stack_space(ss);
  } else if (type == "weighted_line") {
    kernels::WeightedLineSpec ws;
    ws.truncation_radius = truncation();
    ws.lambda = params.number("lambda");
    ws.spacing = params.number("spacing", 0.1);
    model = kernels::weighted_line(ws);
  } else if (type == "model_manifold") {
    kernels::ModelManifoldSpec ms;
    ms.truncation_radius = truncation();
    ms.sphere_dim = static_cast<int>(params.integer("sphere_dim", 1));
    require(ms.sphere_dim >= 1, "params.sphere_dim: must be >= 1");
    ms.spacing = params.number("spacing", 0.01);
    ms.with_local = params.boolean("with_local", true);
    ms.sigma = kernels::superexponential_warp(ms.sphere_dim);
    if (params.has("sigma")) ms.sigma = detail::parse_radial(params.object("sigma"), ms.sigma);
    ms.sigma.n = ms.sphere_dim;
    model = kernels::model_manifold(ms);
  } else if (type == "graph") {
    kernels::MixedGraphSpec gs;
    const bool has_t = top.has("truncation_radius");
    gs.graph = detail::parse_graph(params, has_t ? truncation() : kInf, has_t);
    gs.subdivisions = static_cast<int>(params.integer("subdivisions", 0));
    gs.jump = params.boolean("jump", true);
    if (params.has("edge_density")) gs.edge_density = detail::parse_radial(params.object("edge_density"), {});
    model = kernels::mixed_graph(gs);
  } else {
    throw UserError("type: unknown space type '" + type +
                    "' (expected lattice, stable_like, sierpinski_gasket, stack, weighted_line, model_manifold, graph)");
  }
  model.info["spec"] = spec;
  return model;
}

inline json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw UserError(source + ": malformed JSON: " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Binary serialization

inline constexpr char kMagic[4] = {'J', 'D', 'L', 'B'};
inline constexpr std::uint32_t kFormatVersion = 1;

namespace detail {

class Writer {
 public:
  template <class T>
  void pod(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.append(p, sizeof(T));
  }
  template <class T>
  void vec(const std::vector<T>& v) {
    pod<std::uint64_t>(v.size());
    if (!v.empty()) buf_.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(T));
  }
  void bools(const std::vector<bool>& v) {
    std::vector<std::uint8_t> b(v.begin(), v.end());
    vec(b);
  }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    buf_.append(s);
  }
  void raw(const char* p, std::size_t n) { buf_.append(p, n); }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}
  template <class T>
  T pod() {
    T v;
    need(sizeof(T));
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  template <class T>
  std::vector<T> vec() {
    const auto n = pod<std::uint64_t>();
    if (n > (data_.size() - pos_) / std::max<std::size_t>(sizeof(T), 1)) throw UserError("binary model truncated");
    std::vector<T> v(n);
    if (n) std::memcpy(v.data(), data_.data() + pos_, n * sizeof(T));
    pos_ += n * sizeof(T);
    return v;
  }
  std::vector<bool> bools() {
    const auto b = vec<std::uint8_t>();
    return {b.begin(), b.end()};
  }
  std::string str() {
    const auto n = pod<std::uint64_t>();
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  void expect_magic() {
    need(4);
    if (std::memcmp(data_.data(), kMagic, 4) != 0) throw UserError("not a jdlab binary model (bad magic)");
    pos_ += 4;
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw UserError("binary model truncated");
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

inline void write_adjacency(Writer& w, const WeightedAdjacency& a) {
  w.vec(a.offsets);
  w.vec(a.targets);
  w.vec(a.lengths);
}

inline WeightedAdjacency read_adjacency(Reader& r) {
  WeightedAdjacency a;
  a.offsets = r.vec<std::size_t>();
  a.targets = r.vec<PointId>();
  a.lengths = r.vec<double>();
  if (a.offsets.empty() || a.offsets.back() != a.targets.size() || a.targets.size() != a.lengths.size())
    throw UserError("binary model: inconsistent adjacency");
  return a;
}

}  // namespace detail

inline std::string serialize(const Model& model) {
  detail::Writer w;
  w.raw(kMagic, 4);
  w.pod(kFormatVersion);
  const auto& s = model.space;
  w.vec(s.measures());
  if (const auto* cm = std::get_if<CoordinateMetric>(&s.metric())) {
    w.pod<std::uint8_t>(0);
    w.pod<std::uint8_t>(cm->kind == CoordinateMetric::Kind::euclidean ? 0 : 1);
    w.pod<std::uint64_t>(cm->dim);
    w.vec(cm->coords);
  } else {
    const auto& gm = std::get<GraphMetric>(s.metric());
    w.pod<std::uint8_t>(1);
    w.pod<std::uint64_t>(gm.cache_threshold());
    detail::write_adjacency(w, gm.adjacency());
  }
  w.pod<std::uint8_t>(s.has_graph_distance() ? 1 : 0);
  if (s.has_graph_distance()) {
    w.pod<std::uint64_t>(s.graph_metric()->cache_threshold());
    detail::write_adjacency(w, s.graph_metric()->adjacency());
  }
  w.pod<std::uint32_t>(s.origin());
  w.pod<double>(s.truncation_radius());
  w.bools(s.boundary());
  w.vec(model.kernel.offsets());
  w.vec(model.kernel.entries());
  w.vec(model.kernel.exterior());
  w.pod<std::uint8_t>(model.local ? 1 : 0);
  if (model.local) {
    w.vec(model.local->offsets());
    w.vec(model.local->entries());
    w.bools(model.local->carrier());
  }
  w.str(model.info.dump());
  return w.take();
}

inline bool is_binary_model(std::string_view data) {
  return data.size() >= 4 && std::memcmp(data.data(), kMagic, 4) == 0;
}

inline Model deserialize(std::string_view data) {
  detail::Reader r(data);
  r.expect_magic();
  const auto version = r.pod<std::uint32_t>();
  if (version != kFormatVersion)
    throw UserError("unsupported binary model version " + std::to_string(version));
  auto measure = r.vec<double>();
  const auto metric_kind = r.pod<std::uint8_t>();
  Metric metric;
  if (metric_kind == 0) {
    CoordinateMetric cm;
    cm.kind = r.pod<std::uint8_t>() == 0 ? CoordinateMetric::Kind::euclidean : CoordinateMetric::Kind::stack_l1;
    cm.dim = r.pod<std::uint64_t>();
    cm.coords = r.vec<double>();
    metric = std::move(cm);
  } else if (metric_kind == 1) {
    const auto threshold = r.pod<std::uint64_t>();
    metric = GraphMetric(detail::read_adjacency(r), threshold);
  } else {
    throw UserError("binary model: unknown metric kind");
  }
  DiscreteMMSpace space(std::move(measure), std::move(metric));
  if (r.pod<std::uint8_t>()) {
    const auto threshold = r.pod<std::uint64_t>();
    space.set_graph_distance(GraphMetric(detail::read_adjacency(r), threshold));
  }
  space.set_origin(r.pod<std::uint32_t>());
  space.set_truncation_radius(r.pod<double>());
  space.set_boundary(r.bools());
  auto offsets = r.vec<std::size_t>();
  auto entries = r.vec<KernelEntry>();
  auto exterior = r.vec<double>();
  if (offsets.size() != space.size() + 1 || offsets.back() != entries.size() || exterior.size() != space.size())
    throw UserError("binary model: inconsistent kernel");
  Model model{std::move(space), JumpKernel::from_csr(std::move(offsets), std::move(entries), std::move(exterior)),
              std::nullopt, {}};
  if (r.pod<std::uint8_t>()) {
    auto lo = r.vec<std::size_t>();
    auto le = r.vec<KernelEntry>();
    auto carrier = r.bools();
    if (lo.size() != model.space.size() + 1 || lo.back() != le.size() || carrier.size() != model.space.size())
      throw UserError("binary model: inconsistent local part");
    model.local = LocalPart::from_csr(std::move(lo), std::move(le), std::move(carrier));
  }
  model.info = parse_json(r.str(), "binary model info");
  refresh_supports(model);
  return model;
}

/// Reads either a JSON spec or a binary model.
inline Model load_model(const std::string& path, std::string* raw_out = nullptr) {
  auto data = read_file(path);
  Model m = is_binary_model(data) ? deserialize(data) : build_model(parse_json(data, path));
  if (raw_out) *raw_out = std::move(data);
  return m;
}

}  // namespace jdlab::io

#endif  // JDLAB_IO_HPP
