#ifndef DNNSTAB_IO_HPP
#define DNNSTAB_IO_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dnnstab/dde.hpp"
#include "dnnstab/stability_search.hpp"
#include "dnnstab/system.hpp"
#include "dnnstab/types.hpp"

namespace dnnstab {

using Json = nlohmann::json;

/// Optional run defaults carried by a system file.
struct RunDefaults {
  std::optional<double> h, mu, k, xi, tol;
  std::optional<std::pair<double, double>> k_range, h_range;
  std::optional<double> horizon, step;
};

/// A parsed system definition.
struct SystemFile {
  std::string name;
  DelayedNNSystem system;
  std::optional<DelaySignal> delay;
  std::optional<Vec> initial_state;
  RunDefaults defaults;
};

/// Schema violation; `path` names the offending field, e.g. "K1[0][2]".
class SchemaError : public InvalidArgument {
 public:
  SchemaError(const std::string& path, const std::string& what)
      : InvalidArgument(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

namespace detail {

inline const Json& field(const Json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw SchemaError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(path.empty() ? key : path + "." + key, "missing required field");
  return *it;
}

inline std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

inline double as_number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw SchemaError(path, "must be finite");
  return v;
}

inline Vec as_vector(const Json& j, const std::string& path, Eigen::Index expect = -1) {
  if (!j.is_array()) throw SchemaError(path, "expected an array of numbers");
  if (expect >= 0 && static_cast<Eigen::Index>(j.size()) != expect) {
    throw SchemaError(path, "expected " + std::to_string(expect) + " entries, got " + std::to_string(j.size()));
  }
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = as_number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

inline Mat as_matrix(const Json& j, const std::string& path, Eigen::Index n) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n) {
    throw SchemaError(path, "expected " + std::to_string(n) + " rows");
  }
  Mat m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    m.row(r) = as_vector(j[r], path + "[" + std::to_string(r) + "]", n).transpose();
  }
  return m;
}

inline std::pair<double, double> as_range(const Json& j, const std::string& path) {
  const Vec v = as_vector(j, path, 2);
  if (!(v(0) < v(1))) throw SchemaError(path, "range must be increasing");
  return {v(0), v(1)};
}

inline Activation::Kind activation_kind(const Json& j, const std::string& path) {
  if (!j.is_string()) throw SchemaError(path, "expected a string");
  const auto s = j.get<std::string>();
  if (s == "tanh") return Activation::Kind::tanh;
  if (s == "linear") return Activation::Kind::linear;
  if (s == "saturation") return Activation::Kind::saturation;
  throw SchemaError(path, "unknown activation '" + s + "' (tanh, linear, saturation)");
}

inline DelaySignal parse_delay(const Json& j, const std::string& path) {
  const Json& kind = field(j, "kind", path);
  if (!kind.is_string()) throw SchemaError(join_path(path, "kind"), "expected a string");
  const auto k = kind.get<std::string>();
  if (k == "constant") return DelaySignal::constant_delay(as_number(field(j, "value", path), join_path(path, "value")));
  if (k == "sinusoid") {
    const double a = as_number(field(j, "offset", path), join_path(path, "offset"));
    const double b = as_number(field(j, "amplitude", path), join_path(path, "amplitude"));
    const double w = j.contains("omega") ? as_number(j["omega"], join_path(path, "omega")) : 1.0;
    return DelaySignal::sinusoid(a, b, w);
  }
  if (k == "table") {
    const Vec t = as_vector(field(j, "times", path), join_path(path, "times"));
    const Vec v = as_vector(field(j, "values", path), join_path(path, "values"), t.size());
    try {
      return DelaySignal::table({t.data(), t.data() + t.size()}, {v.data(), v.data() + v.size()});
    } catch (const InvalidArgument& e) {
      throw SchemaError(path, e.what());
    }
  }
  throw SchemaError(join_path(path, "kind"), "unknown delay kind '" + k + "' (constant, sinusoid, table)");
}

}  // namespace detail

/// Builds a system from its JSON document. Every violation is reported with
/// the path of the field at fault.
inline SystemFile parse_system(const Json& doc) {
  using namespace detail;
  SystemFile out;
  if (!doc.is_object()) throw SchemaError("$", "expected an object at top level");
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) throw SchemaError("name", "expected a string");
    out.name = doc["name"].get<std::string>();
  }
  auto& s = out.system;
  s.k0 = as_vector(field(doc, "K0", ""), "K0");
  const Eigen::Index n = s.k0.size();
  if (n < 1) throw SchemaError("K0", "need at least one entry");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(s.k0(i) > 0.0)) throw SchemaError("K0[" + std::to_string(i) + "]", "must be positive");
  }
  s.k1 = as_matrix(field(doc, "K1", ""), "K1", n);
  s.k2 = as_matrix(field(doc, "K2", ""), "K2", n);
  s.sector = as_vector(field(doc, "L", ""), "L", n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (s.sector(i) < 0.0) throw SchemaError("L[" + std::to_string(i) + "]", "must be non-negative");
  }

  Activation::Kind kind = Activation::Kind::tanh;
  Vec slopes = s.sector;
  if (doc.contains("activation")) {
    const Json& a = doc["activation"];
    if (!a.is_object()) throw SchemaError("activation", "expected an object");
    if (a.contains("kind")) kind = activation_kind(a["kind"], "activation.kind");
    if (a.contains("slopes")) slopes = as_vector(a["slopes"], "activation.slopes", n);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::string p = "activation.slopes[" + std::to_string(i) + "]";
    if (slopes(i) < 0.0) throw SchemaError(p, "must be non-negative");
    if (slopes(i) > s.sector(i) * (1.0 + 1e-12)) throw SchemaError(p, "exceeds sector bound L");
    s.activations.push_back({kind, slopes(i)});
  }
  s.input = doc.contains("input") ? as_vector(doc["input"], "input", n) : Vec::Zero(n);

  if (doc.contains("delay")) {
    out.delay = parse_delay(doc["delay"], "delay");
    if (out.delay->h_min() < 0.0) throw SchemaError("delay", "delay must stay non-negative");
  }
  if (doc.contains("initial_state")) out.initial_state = as_vector(doc["initial_state"], "initial_state", n);

  if (doc.contains("defaults")) {
    const Json& d = doc["defaults"];
    if (!d.is_object()) throw SchemaError("defaults", "expected an object");
    auto num = [&](const char* key, std::optional<double>& dst) {
      if (d.contains(key)) dst = as_number(d[key], std::string("defaults.") + key);
    };
    num("h", out.defaults.h);
    num("mu", out.defaults.mu);
    num("k", out.defaults.k);
    num("xi", out.defaults.xi);
    num("tol", out.defaults.tol);
    num("horizon", out.defaults.horizon);
    num("step", out.defaults.step);
    if (d.contains("k_range")) out.defaults.k_range = as_range(d["k_range"], "defaults.k_range");
    if (d.contains("h_range")) out.defaults.h_range = as_range(d["h_range"], "defaults.h_range");
  }

  if (s.input.cwiseAbs().maxCoeff() > 0.0) s.equilibrium = find_equilibrium(s);
  s.validate();
  return out;
}

inline SystemFile load_system(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open system file '" + path + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw SchemaError("$", std::string("malformed JSON: ") + e.what());
  }
  return parse_system(doc);
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
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
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

namespace detail {

inline Json to_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Json to_json(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const Vec row = m.row(r).transpose();
    rows.push_back(to_json(row));
  }
  return rows;
}

}  // namespace detail

inline Json certificate_json(const StabilityCertificate& c) {
  using detail::to_json;
  Json j;
  j["h"] = c.h;
  j["mu"] = c.mu;
  j["k"] = c.k;
  j["xi"] = c.xi;
  j["lambda"] = c.lambda_big;
  j["envelope"] = {{"E_lambda_min", c.envelope_E}, {"E_lambda_max", c.envelope_E_max}};
  Json margins = Json::object();
  for (std::size_t i = 0; i < c.constraint_names.size(); ++i) margins[c.constraint_names[i]] = c.margins[i];
  j["margins"] = margins;
  j["min_margin"] = c.min_margin();
  const auto& w = c.witness;
  j["witness"] = {{"P", to_json(w.P)},   {"Q", to_json(w.Q)},   {"U1", to_json(w.U1)}, {"U2", to_json(w.U2)},
                  {"U3", to_json(w.U3)}, {"Z1", to_json(w.Z1)}, {"Z2", to_json(w.Z2)}, {"Z3", to_json(w.Z3)},
                  {"Z4", to_json(w.Z4)}, {"N1", to_json(w.N1)}, {"N2", to_json(w.N2)}, {"M1", to_json(w.M1)},
                  {"M2", to_json(w.M2)}, {"D1", to_json(w.D1)}, {"D2", to_json(w.D2)}, {"R1", to_json(w.R1)},
                  {"R2", to_json(w.R2)}, {"S1", to_json(w.S1)}, {"S2", to_json(w.S2)}};
  j["flat_witness"] = to_json(c.flat_witness);
  return j;
}

inline StabilityCertificate certificate_from_json(const Json& j, int n) {
  using namespace detail;
  StabilityCertificate c;
  c.h = as_number(field(j, "h", ""), "h");
  c.mu = as_number(field(j, "mu", ""), "mu");
  c.k = as_number(field(j, "k", ""), "k");
  c.xi = as_number(field(j, "xi", ""), "xi");
  c.flat_witness = as_vector(field(j, "flat_witness", ""), "flat_witness", count_variables(n));
  c.witness = unflatten(c.flat_witness, n);
  return c;
}

/// Columns t, r1..rn, h(t).
inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  const auto old = os.precision(12);
  os << "t";
  for (Eigen::Index j = 0; j < tr.dimension(); ++j) os << ",r" << (j + 1);
  os << ",h\n";
  for (std::size_t i = 0; i < tr.size(); ++i) {
    os << tr.t[i];
    for (Eigen::Index j = 0; j < tr.dimension(); ++j) os << ',' << tr.r[i](j);
    os << ',' << tr.delay[i] << '\n';
  }
  os.precision(old);
}

/// Plain polyline chart of every state component against time.
inline void write_trajectory_svg(std::ostream& os, const Trajectory& tr, const std::string& title = "",
                                 std::size_t max_points = 2000) {
  const int width = 720, height = 420, left = 60, right = 20, top = 36, bottom = 44;
  const double pw = width - left - right, ph = height - top - bottom;
  const double t0 = tr.t.front(), t1 = tr.t.back();
  double lo = 0.0, hi = 0.0;
  for (const auto& r : tr.r) {
    lo = std::min(lo, r.minCoeff());
    hi = std::max(hi, r.maxCoeff());
  }
  if (hi - lo < 1e-12) hi = lo + 1.0;
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  auto sx = [&](double t) { return left + pw * (t - t0) / (t1 - t0); };
  auto sy = [&](double y) { return top + ph * (hi - y) / (hi - lo); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  if (!title.empty()) os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\">" << title << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  if (lo < 0.0 && hi > 0.0) {
    os << "<line x1=\"" << left << "\" y1=\"" << sy(0.0) << "\" x2=\"" << left + pw << "\" y2=\"" << sy(0.0)
       << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const double t = t0 + (t1 - t0) * i / 5.0, y = lo + (hi - lo) * i / 5.0;
    os << "<text x=\"" << sx(t) << "\" y=\"" << height - bottom + 16 << "\" text-anchor=\"middle\">" << t << "</text>\n";
    os << "<text x=\"" << left - 6 << "\" y=\"" << sy(y) + 4 << "\" text-anchor=\"end\">" << y << "</text>\n";
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 8 << "\" text-anchor=\"middle\">t</text>\n";

  const std::size_t stride = std::max<std::size_t>(1, tr.size() / max_points);
  for (Eigen::Index j = 0; j < tr.dimension(); ++j) {
    os << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << colors[j % 8] << "\" points=\"";
    for (std::size_t i = 0; i < tr.size(); i += stride) os << sx(tr.t[i]) << ',' << sy(tr.r[i](j)) << ' ';
    os << sx(tr.t.back()) << ',' << sy(tr.r.back()(j)) << "\"/>\n";
    os << "<text x=\"" << left + pw - 40 << "\" y=\"" << top + 16 + 15 * j << "\" fill=\"" << colors[j % 8] << "\">r"
       << (j + 1) << "</text>\n";
  }
  os << "</svg>\n";
  os.unsetf(std::ios::floatfield);
}

inline constexpr const char* kVersion = "1.0.0";

/// Machine-readable record of one run.
struct RunManifest {
  std::string command;
  std::string input_path;
  std::string input_hash;
  std::uint64_t seed = 0;
  Json parameters = Json::object();
  std::vector<std::string> outputs;
  int exit_code = 0;
  double wall_seconds = 0.0;

  Json to_json() const {
    return {{"command", command},
            {"input", {{"path", input_path}, {"fnv1a64", input_hash}}},
            {"seed", seed},
            {"parameters", parameters},
            {"outputs", outputs},
            {"exit_code", exit_code},
            {"wall_seconds", wall_seconds},
            {"versions",
             {{"dnnstab", kVersion},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
              {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
              {"compiler", __VERSION__}}}};
  }
};

}  // namespace dnnstab

#endif  // DNNSTAB_IO_HPP
