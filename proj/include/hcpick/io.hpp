#pragma once

// Plain-text file formats. Every file starts with one header line:
//
//   PAIRS   <kind> <count> [key=value ...]      then P/S line pairs
//   ANCHORS <kind> <count> <settings-hash> [key=value ...]   then P/S line pairs
//   MLP     <kind> <n_anchors> <layer-count> [key=value ...]
//           per layer: "L <rows> <cols>", one "W" line per row, a "B" line
//           and an "A" line with the PReLU slopes (empty for the output layer)
//   MATCHES <kind> <count> [key=value ...]      then one "M" line per match,
//           optionally followed by "GT <count>" and "C" pose lines
//   SCENE   <n_points> <n_cameras> [key=value ...]  then "P", "C" and "V" lines
//
// Camera and pose lines share one layout: "C r00 r01 r02 r10 ... r22 t0 t1 t2".
// Floats are written with 17 significant digits so they round-trip exactly.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hcpick/anchors.hpp"
#include "hcpick/error.hpp"
#include "hcpick/kinds.hpp"
#include "hcpick/ransac.hpp"
#include "hcpick/scene.hpp"
#include "hcpick/selector.hpp"

namespace hcpick {

/// Header key=value fields in insertion-independent (sorted) order.
using HeaderFields = std::map<std::string, std::string>;

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

namespace detail {

inline void set_precision(std::ostream& os) { os << std::setprecision(17); }

inline void write_fields(std::ostream& os, const HeaderFields& f) {
  for (const auto& [k, v] : f) os << ' ' << k << '=' << v;
}

/// Splits the remaining tokens of a header line into key=value fields.
inline HeaderFields read_fields(std::istringstream& is) {
  HeaderFields f;
  std::string tok;
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw ParseError("malformed header field '" + tok + "'");
    f[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return f;
}

inline std::string next_line(std::istream& in, const char* what) {
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') return line;
  }
  throw ParseError(std::string("unexpected end of input while reading ") + what);
}

/// Reads a line starting with `tag` followed by exactly n floats.
inline std::vector<double> tagged_floats(std::istream& in, const std::string& tag, int n) {
  std::istringstream is(next_line(in, tag.c_str()));
  std::string t;
  is >> t;
  if (t != tag) throw ParseError("expected '" + tag + "' line, found '" + t + "'");
  std::vector<double> v;
  double x;
  while (is >> x) v.push_back(x);
  if (!is.eof()) throw ParseError("non-numeric value on '" + tag + "' line");
  if (n >= 0 && int(v.size()) != n)
    throw ParseError("'" + tag + "' line has " + std::to_string(v.size()) + " values, expected " + std::to_string(n));
  return v;
}

template <class Vec>
void write_tagged(std::ostream& os, const char* tag, const Vec& v) {
  os << tag;
  for (Eigen::Index i = 0; i < v.size(); ++i) os << ' ' << v(i);
  os << '\n';
}

template <class K>
void write_pair_lines(std::ostream& os, const PsPair<K>& p) {
  write_tagged(os, "P", p.problem);
  write_tagged(os, "S", p.solution);
}

template <class K>
PsPair<K> read_pair_lines(std::istream& in) {
  PsPair<K> p;
  const auto a = tagged_floats(in, "P", K::kProblemDim);
  const auto b = tagged_floats(in, "S", K::kUnknowns);
  for (int i = 0; i < K::kProblemDim; ++i) p.problem(i) = a[i];
  for (int i = 0; i < K::kUnknowns; ++i) p.solution(i) = b[i];
  return p;
}

inline void write_camera_line(std::ostream& os, const Matrix3d& R, const Vector3d& t) {
  os << 'C';
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) os << ' ' << R(r, c);
  os << ' ' << t.x() << ' ' << t.y() << ' ' << t.z() << '\n';
}

inline std::pair<Matrix3d, Vector3d> read_camera_line(std::istream& in) {
  const auto v = tagged_floats(in, "C", 12);
  Matrix3d R;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) R(r, c) = v[3 * r + c];
  return {R, Vector3d(v[9], v[10], v[11])};
}

struct Header {
  std::string magic;
  std::vector<std::string> fixed;
  HeaderFields fields;
};

inline Header read_header(std::istream& in, const std::string& magic, int n_fixed) {
  std::istringstream is(next_line(in, "header"));
  Header h;
  is >> h.magic;
  if (h.magic != magic) throw ParseError("expected a " + magic + " file, found '" + h.magic + "'");
  for (int i = 0; i < n_fixed; ++i) {
    std::string tok;
    if (!(is >> tok)) throw ParseError(magic + " header is missing fields");
    h.fixed.push_back(tok);
  }
  h.fields = read_fields(is);
  return h;
}

inline long parse_count(const std::string& s) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size() || v < 0) throw ParseError("bad count '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw ParseError("bad count '" + s + "'");
  }
}

template <class K>
void expect_kind(const std::string& s) {
  if (parse_kind(s) != K::kind) throw ParseError("file holds kind '" + s + "', expected '" + K::name + "'");
}

}  // namespace detail

/// Kind named in the header of any kind-tagged file.
inline Kind peek_kind(const std::string& path) {
  std::ifstream in = open_input(path);
  std::istringstream is(detail::next_line(in, "header"));
  std::string magic, kind;
  is >> magic >> kind;
  return parse_kind(kind);
}

// --- PAIRS -----------------------------------------------------------------

template <class K>
void write_pairs(std::ostream& os, const std::vector<PsPair<K>>& pairs, const HeaderFields& fields = {}) {
  detail::set_precision(os);
  os << "PAIRS " << K::name << ' ' << pairs.size();
  detail::write_fields(os, fields);
  os << '\n';
  for (const auto& p : pairs) detail::write_pair_lines(os, p);
}

template <class K>
std::vector<PsPair<K>> read_pairs(std::istream& in, HeaderFields* fields = nullptr) {
  const auto h = detail::read_header(in, "PAIRS", 2);
  detail::expect_kind<K>(h.fixed[0]);
  const long n = detail::parse_count(h.fixed[1]);
  std::vector<PsPair<K>> out;
  out.reserve(n);
  for (long i = 0; i < n; ++i) out.push_back(detail::read_pair_lines<K>(in));
  if (fields) *fields = h.fields;
  return out;
}

// --- ANCHORS ---------------------------------------------------------------

template <class K>
void write_anchors(std::ostream& os, const AnchorSet<K>& a, HeaderFields fields = {}) {
  detail::set_precision(os);
  fields["coverage"] = [&] {
    std::ostringstream c;
    detail::set_precision(c);
    c << a.coverage;
    return c.str();
  }();
  if (!a.source.empty()) fields["source"] = a.source;
  std::ostringstream nodes;
  for (std::size_t i = 0; i < a.node_index.size(); ++i) nodes << (i ? "," : "") << a.node_index[i];
  if (!a.node_index.empty()) fields["nodes"] = nodes.str();
  os << "ANCHORS " << K::name << ' ' << a.size() << ' ' << hex64(a.settings_hash);
  detail::write_fields(os, fields);
  os << '\n';
  for (const auto& p : a.anchors) detail::write_pair_lines(os, p);
}

template <class K>
AnchorSet<K> read_anchors(std::istream& in, HeaderFields* fields = nullptr) {
  const auto h = detail::read_header(in, "ANCHORS", 3);
  detail::expect_kind<K>(h.fixed[0]);
  const long n = detail::parse_count(h.fixed[1]);
  AnchorSet<K> a;
  try {
    a.settings_hash = std::stoull(h.fixed[2], nullptr, 16);
  } catch (const std::logic_error&) {
    throw ParseError("bad settings hash '" + h.fixed[2] + "'");
  }
  if (auto it = h.fields.find("coverage"); it != h.fields.end()) a.coverage = std::stod(it->second);
  if (auto it = h.fields.find("source"); it != h.fields.end()) a.source = it->second;
  if (auto it = h.fields.find("nodes"); it != h.fields.end()) {
    std::istringstream ns(it->second);
    std::string tok;
    while (std::getline(ns, tok, ',')) a.node_index.push_back(int(detail::parse_count(tok)));
  }
  for (long i = 0; i < n; ++i) a.anchors.push_back(detail::read_pair_lines<K>(in));
  if (a.node_index.size() != a.anchors.size()) a.node_index.assign(a.anchors.size(), -1);
  if (fields) *fields = h.fields;
  return a;
}

// --- MLP -------------------------------------------------------------------

inline void write_mlp(std::ostream& os, const MlpModel& m, const HeaderFields& fields = {}) {
  detail::set_precision(os);
  os << "MLP " << kind_name(m.kind) << ' ' << m.n_anchors << ' ' << m.layers.size();
  detail::write_fields(os, fields);
  os << '\n';
  for (const auto& l : m.layers) {
    os << "L " << l.W.rows() << ' ' << l.W.cols() << '\n';
    for (Eigen::Index r = 0; r < l.W.rows(); ++r) detail::write_tagged(os, "W", l.W.row(r));
    detail::write_tagged(os, "B", l.b);
    detail::write_tagged(os, "A", l.slope);
  }
}

inline MlpModel read_mlp(std::istream& in, HeaderFields* fields = nullptr) {
  const auto h = detail::read_header(in, "MLP", 3);
  MlpModel m;
  m.kind = parse_kind(h.fixed[0]);
  m.n_anchors = int(detail::parse_count(h.fixed[1]));
  const long n_layers = detail::parse_count(h.fixed[2]);
  for (long i = 0; i < n_layers; ++i) {
    std::istringstream is(detail::next_line(in, "layer header"));
    std::string tag;
    long rows = -1, cols = -1;
    is >> tag >> rows >> cols;
    if (tag != "L" || rows < 1 || cols < 1) throw ParseError("malformed layer header");
    Layer l;
    l.W.resize(rows, cols);
    for (long r = 0; r < rows; ++r) {
      const auto w = detail::tagged_floats(in, "W", int(cols));
      for (long c = 0; c < cols; ++c) l.W(r, c) = w[c];
    }
    const auto b = detail::tagged_floats(in, "B", int(rows));
    l.b = Eigen::Map<const VectorXd>(b.data(), rows);
    const auto a = detail::tagged_floats(in, "A", -1);
    if (!a.empty() && long(a.size()) != rows) throw ParseError("PReLU slope count does not match layer width");
    l.slope = Eigen::Map<const VectorXd>(a.data(), Eigen::Index(a.size()));
    if (!m.layers.empty() && m.layers.back().W.rows() != cols) throw ShapeError("MLP layers do not chain");
    m.layers.push_back(std::move(l));
  }
  if (m.layers.empty() || m.output_dim() != m.n_anchors + 1) throw ShapeError("MLP output width is not anchors + 1");
  if (fields) *fields = h.fields;
  return m;
}

// --- MATCHES ---------------------------------------------------------------

template <class K>
void write_matches(std::ostream& os, const MatchSet<K>& m, const HeaderFields& fields = {}) {
  detail::set_precision(os);
  os << "MATCHES " << K::name << ' ' << m.size();
  detail::write_fields(os, fields);
  os << '\n';
  for (const auto& row : m.points) {
    os << 'M';
    for (const auto& x : row) os << ' ' << x.x() << ' ' << x.y();
    os << '\n';
  }
  if (!m.gt.empty()) {
    os << "GT " << m.gt.size() << '\n';
    for (const auto& p : m.gt) detail::write_camera_line(os, p.R, p.t);
  }
}

template <class K>
MatchSet<K> read_matches(std::istream& in, HeaderFields* fields = nullptr) {
  const auto h = detail::read_header(in, "MATCHES", 2);
  detail::expect_kind<K>(h.fixed[0]);
  const long n = detail::parse_count(h.fixed[1]);
  MatchSet<K> m;
  for (long i = 0; i < n; ++i) {
    const auto v = detail::tagged_floats(in, "M", 2 * K::kViews);
    std::array<Vector2d, K::kViews> row;
    for (int k = 0; k < K::kViews; ++k) row[k] = Vector2d(v[2 * k], v[2 * k + 1]);
    m.points.push_back(row);
  }
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    std::string tag;
    long count = -1;
    is >> tag >> count;
    if (tag != "GT" || count < 0) throw ParseError("expected optional GT block after matches");
    for (long i = 0; i < count; ++i) {
      const auto [R, t] = detail::read_camera_line(in);
      m.gt.push_back(Pose{R, t});
    }
    break;
  }
  if (fields) *fields = h.fields;
  return m;
}

// --- SCENE -----------------------------------------------------------------

inline void write_scene(std::ostream& os, const SceneModel& s, const HeaderFields& fields = {}) {
  detail::set_precision(os);
  os << "SCENE " << s.points.size() << ' ' << s.cameras.size();
  detail::write_fields(os, fields);
  os << '\n';
  for (const auto& X : s.points) os << "P " << X.x() << ' ' << X.y() << ' ' << X.z() << '\n';
  for (const auto& c : s.cameras) detail::write_camera_line(os, c.R, c.t);
  for (const auto& [p, c] : s.visibility) os << "V " << p << ' ' << c << '\n';
}

/// Reads a scene. Lines are "P x y z", "C r11..r33 tx ty tz" and
/// "V <point> <camera>" in any order; points and cameras are numbered in
/// order of appearance. Without any V line every point counts as visible in
/// every camera it lies in front of.
inline SceneModel read_scene(std::istream& in, HeaderFields* fields = nullptr) {
  const auto h = detail::read_header(in, "SCENE", 2);
  const long np = detail::parse_count(h.fixed[0]), nc = detail::parse_count(h.fixed[1]);
  SceneModel s;
  std::vector<std::pair<long, long>> vis;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    std::string tag;
    is >> tag;
    if (tag == "P" || tag == "C") {
      std::istringstream one(line);
      if (tag == "P") {
        const auto v = detail::tagged_floats(one, "P", 3);
        s.points.emplace_back(v[0], v[1], v[2]);
      } else {
        const auto [R, t] = detail::read_camera_line(one);
        s.cameras.push_back(CameraPose{R, t});
      }
    } else if (tag == "V") {
      long p = -1, c = -1;
      if (!(is >> p >> c)) throw ParseError("malformed visibility line '" + line + "'");
      vis.emplace_back(p, c);
    } else {
      throw ParseError("unexpected scene line '" + line + "'");
    }
  }
  if (long(s.points.size()) != np || long(s.cameras.size()) != nc)
    throw ParseError("scene header announces " + std::to_string(np) + " points and " + std::to_string(nc) +
                     " cameras, found " + std::to_string(s.points.size()) + " and " +
                     std::to_string(s.cameras.size()));
  for (auto [p, c] : vis) {
    if (p < 0 || p >= np || c < 0 || c >= nc)
      throw ParseError("visibility edge " + std::to_string(p) + " " + std::to_string(c) + " out of range");
    s.visibility.insert({int(p), int(c)});
  }
  if (s.visibility.empty())
    for (long p = 0; p < np; ++p)
      for (long c = 0; c < nc; ++c)
        if (s.cameras[c].to_camera(s.points[p]).z() > 0) s.visibility.insert({int(p), int(c)});
  if (fields) *fields = h.fields;
  return s;
}

// --- file wrappers ---------------------------------------------------------

template <class F>
auto read_file(const std::string& path, F&& reader) {
  std::ifstream in = open_input(path);
  try {
    return reader(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

template <class F>
void write_file(const std::string& path, F&& writer) {
  std::ofstream out = open_output(path);
  writer(out);
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace hcpick
