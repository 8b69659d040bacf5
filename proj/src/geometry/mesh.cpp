#include "bigrasp/geometry/mesh.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include <spdlog/spdlog.h>

#include "bigrasp/common/error.hpp"

namespace bigrasp::geometry {

namespace {

constexpr double kMinFaceArea = 1e-12;

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

double TriangleMesh::face_area(std::size_t f) const {
  const auto& [a, b, c] = faces[f];
  return 0.5 * (vertices[b] - vertices[a]).cross(vertices[c] - vertices[a]).norm();
}

std::size_t TriangleMesh::finalize() {
  const int n = static_cast<int>(vertices.size());
  std::vector<Face> kept;
  kept.reserve(faces.size());
  for (const Face& f : faces) {
    const bool in_range = std::all_of(f.begin(), f.end(), [n](int i) { return i >= 0 && i < n; });
    if (!in_range) continue;
    const double area =
        0.5 * (vertices[f[1]] - vertices[f[0]]).cross(vertices[f[2]] - vertices[f[0]]).norm();
    if (!(area > kMinFaceArea)) continue;
    kept.push_back(f);
  }
  const std::size_t dropped = faces.size() - kept.size();
  faces = std::move(kept);
  face_normals.resize(faces.size());
  for (std::size_t i = 0; i < faces.size(); ++i) {
    const auto& [a, b, c] = faces[i];
    face_normals[i] = (vertices[b] - vertices[a]).cross(vertices[c] - vertices[a]).normalized();
  }
  return dropped;
}

// ---------------------------------------------------------------------------
// Loading

TriangleMesh parse_obj(std::istream& in, const std::string& source_name) {
  TriangleMesh mesh;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ls >> v.x() >> v.y() >> v.z()))
        throw Error(source_name + ":" + std::to_string(line_no) + ": malformed vertex");
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string token;
      while (ls >> token) {
        const auto slash = token.find('/');
        int i = 0;
        try {
          i = std::stoi(token.substr(0, slash));
        } catch (const std::exception&) {
          throw Error(source_name + ":" + std::to_string(line_no) + ": malformed face index");
        }
        idx.push_back(i < 0 ? static_cast<int>(mesh.vertices.size()) + i : i - 1);
      }
      if (idx.size() != 3)
        throw Error(source_name + ":" + std::to_string(line_no) +
                    ": non-triangulated geometry (face with " + std::to_string(idx.size()) +
                    " vertices)");
      mesh.faces.push_back({idx[0], idx[1], idx[2]});
    }
  }
  return mesh;
}

namespace {

enum class PlyFormat { Ascii, BinaryLittle, BinaryBig };

struct PlyProperty {
  std::string name;
  std::string type;
  bool is_list = false;
  std::string count_type;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

std::size_t ply_type_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" || t == "float32")
    return 4;
  if (t == "double" || t == "float64") return 8;
  throw Error("unsupported PLY property type '" + t + "'");
}

class PlyReader {
 public:
  PlyReader(std::istream& in, PlyFormat format, std::string source)
      : in_(in), format_(format), source_(std::move(source)) {}

  double read(const std::string& type) {
    if (format_ == PlyFormat::Ascii) {
      double v = 0.0;
      if (!(in_ >> v)) throw Error(source_ + ": truncated PLY body");
      return v;
    }
    const std::size_t size = ply_type_size(type);
    unsigned char buf[8];
    if (!in_.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(size)))
      throw Error(source_ + ": truncated PLY body");
    const bool swap = (format_ == PlyFormat::BinaryBig) == (std::endian::native == std::endian::little);
    if (swap) std::reverse(buf, buf + size);
    if (type == "char" || type == "int8") return static_cast<int8_t>(buf[0]);
    if (type == "uchar" || type == "uint8") return buf[0];
    if (type == "short" || type == "int16") return as<int16_t>(buf);
    if (type == "ushort" || type == "uint16") return as<uint16_t>(buf);
    if (type == "int" || type == "int32") return as<int32_t>(buf);
    if (type == "uint" || type == "uint32") return as<uint32_t>(buf);
    if (type == "float" || type == "float32") return as<float>(buf);
    return as<double>(buf);
  }

 private:
  template <typename T>
  static double as(const unsigned char* buf) {
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return static_cast<double>(v);
  }

  std::istream& in_;
  PlyFormat format_;
  std::string source_;
};

}  // namespace

TriangleMesh parse_ply(std::istream& in, const std::string& source_name) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0) throw Error(source_name + ": not a PLY file");
  PlyFormat format = PlyFormat::Ascii;
  std::vector<PlyElement> elements;
  bool header_done = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "format") {
      std::string f;
      ls >> f;
      if (f == "ascii") format = PlyFormat::Ascii;
      else if (f == "binary_little_endian") format = PlyFormat::BinaryLittle;
      else if (f == "binary_big_endian") format = PlyFormat::BinaryBig;
      else throw Error(source_name + ": unknown PLY format '" + f + "'");
    } else if (tag == "element") {
      PlyElement e;
      ls >> e.name >> e.count;
      elements.push_back(e);
    } else if (tag == "property") {
      if (elements.empty()) throw Error(source_name + ": PLY property before element");
      PlyProperty p;
      std::string t;
      ls >> t;
      if (t == "list") {
        p.is_list = true;
        ls >> p.count_type >> p.type >> p.name;
      } else {
        p.type = t;
        ls >> p.name;
      }
      elements.back().properties.push_back(p);
    } else if (tag == "end_header") {
      header_done = true;
      break;
    }
  }
  if (!header_done) throw Error(source_name + ": PLY header not terminated");

  TriangleMesh mesh;
  PlyReader reader(in, format, source_name);
  for (const PlyElement& e : elements) {
    for (std::size_t i = 0; i < e.count; ++i) {
      Vec3 v = Vec3::Zero();
      for (const PlyProperty& p : e.properties) {
        if (p.is_list) {
          const auto n = static_cast<std::size_t>(reader.read(p.count_type));
          std::vector<int> idx(n);
          for (auto& k : idx) k = static_cast<int>(reader.read(p.type));
          if (e.name == "face" && (p.name == "vertex_indices" || p.name == "vertex_index")) {
            if (n != 3)
              throw Error(source_name + ": non-triangulated geometry (face with " + std::to_string(n) +
                          " vertices)");
            mesh.faces.push_back({idx[0], idx[1], idx[2]});
          }
        } else {
          const double value = reader.read(p.type);
          if (e.name == "vertex") {
            if (p.name == "x") v.x() = value;
            else if (p.name == "y") v.y() = value;
            else if (p.name == "z") v.z() = value;
          }
        }
      }
      if (e.name == "vertex") mesh.vertices.push_back(v);
    }
  }
  return mesh;
}

TriangleMesh load_mesh(const std::filesystem::path& path, MeshLoadReport* report) {
  const std::string ext = lowercase(path.extension().string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read mesh file '" + path.string() + "'");
  TriangleMesh mesh;
  if (ext == ".obj") mesh = parse_obj(in, path.string());
  else if (ext == ".ply") mesh = parse_ply(in, path.string());
  else throw Error("unsupported mesh format '" + ext + "' for '" + path.string() + "'");
  const std::size_t dropped = mesh.finalize();
  if (dropped > 0) spdlog::warn("{}: dropped {} degenerate face(s)", path.string(), dropped);
  if (mesh.faces.empty()) throw Error(path.string() + ": zero faces after validation");
  if (report) report->dropped_faces = dropped;
  return mesh;
}

void write_obj(const TriangleMesh& mesh, std::ostream& out, int vertex_offset) {
  char buf[128];
  for (const Vec3& v : mesh.vertices) {
    std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
    out << buf;
  }
  for (const Face& f : mesh.faces)
    out << "f " << f[0] + 1 + vertex_offset << ' ' << f[1] + 1 + vertex_offset << ' '
        << f[2] + 1 + vertex_offset << '\n';
}

void save_obj(const TriangleMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  write_obj(mesh, out);
}

// ---------------------------------------------------------------------------
// Properties

bool is_watertight(const TriangleMesh& mesh) {
  std::map<std::pair<int, int>, int> directed;
  for (const Face& f : mesh.faces)
    for (int k = 0; k < 3; ++k) ++directed[{f[k], f[(k + 1) % 3]}];
  for (const auto& [edge, count] : directed) {
    if (count != 1) return false;
    const auto twin = directed.find({edge.second, edge.first});
    if (twin == directed.end() || twin->second != 1) return false;
  }
  return !mesh.faces.empty();
}

double mesh_volume(const TriangleMesh& mesh) {
  double v = 0.0;
  for (const Face& f : mesh.faces)
    v += mesh.vertices[f[0]].dot(mesh.vertices[f[1]].cross(mesh.vertices[f[2]]));
  return v / 6.0;
}

Vec3 mesh_centroid(const TriangleMesh& mesh) {
  // Tetrahedra against a reference vertex keep cancellation small.
  const Vec3 ref = mesh.vertices.empty() ? Vec3::Zero() : mesh.vertices.front();
  double volume = 0.0;
  Vec3 moment = Vec3::Zero();
  double area = 0.0;
  Vec3 area_moment = Vec3::Zero();
  for (const Face& f : mesh.faces) {
    const Vec3 a = mesh.vertices[f[0]] - ref;
    const Vec3 b = mesh.vertices[f[1]] - ref;
    const Vec3 c = mesh.vertices[f[2]] - ref;
    const double v = a.dot(b.cross(c)) / 6.0;
    volume += v;
    moment += v * (a + b + c) / 4.0;
    const double s = 0.5 * (b - a).cross(c - a).norm();
    area += s;
    area_moment += s * (a + b + c) / 3.0;
  }
  if (std::abs(volume) > 1e-15) return ref + moment / volume;
  return area > 0.0 ? Vec3(ref + area_moment / area) : ref;
}

namespace {

Sphere sphere_from(const Vec3& a) { return {a, 0.0}; }

Sphere sphere_from(const Vec3& a, const Vec3& b) { return {0.5 * (a + b), 0.5 * (b - a).norm()}; }

Sphere sphere_from(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 u = b - a;
  const Vec3 v = c - a;
  const Vec3 w = u.cross(v);
  const double w2 = w.squaredNorm();
  if (w2 < 1e-30) {
    // Collinear: the two farthest points span the sphere.
    Sphere s = sphere_from(a, b);
    for (const Sphere& t : {sphere_from(a, c), sphere_from(b, c)})
      if (t.radius > s.radius) s = t;
    return s;
  }
  const Vec3 offset = (u.squaredNorm() * v.cross(w) + v.squaredNorm() * w.cross(u)) / (2.0 * w2);
  return {a + offset, offset.norm()};
}

Sphere sphere_from(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  Mat3 m;
  m.row(0) = (b - a).transpose();
  m.row(1) = (c - a).transpose();
  m.row(2) = (d - a).transpose();
  const Vec3 rhs(0.5 * (b - a).squaredNorm(), 0.5 * (c - a).squaredNorm(), 0.5 * (d - a).squaredNorm());
  const double det = m.determinant();
  if (std::abs(det) < 1e-30) {
    Sphere s = sphere_from(a, b, c);
    for (const Sphere& t : {sphere_from(a, b, d), sphere_from(a, c, d), sphere_from(b, c, d)})
      if (t.radius > s.radius) s = t;
    return s;
  }
  const Vec3 offset = m.partialPivLu().solve(rhs);
  return {a + offset, offset.norm()};
}

bool contains(const Sphere& s, const Vec3& p, double tol) { return (p - s.center).norm() <= s.radius + tol; }

}  // namespace

Sphere bounding_sphere(const std::vector<Vec3>& input) {
  if (input.empty()) return {};
  std::vector<Vec3> p = input;
  std::mt19937_64 rng(0x5eed);
  std::shuffle(p.begin(), p.end(), rng);
  double scale = 0.0;
  for (const Vec3& v : p) scale = std::max(scale, v.cwiseAbs().maxCoeff());
  const double tol = 1e-12 * std::max(scale, 1.0);

  Sphere s = sphere_from(p[0]);
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (contains(s, p[i], tol)) continue;
    s = sphere_from(p[i]);
    for (std::size_t j = 0; j < i; ++j) {
      if (contains(s, p[j], tol)) continue;
      s = sphere_from(p[i], p[j]);
      for (std::size_t k = 0; k < j; ++k) {
        if (contains(s, p[k], tol)) continue;
        s = sphere_from(p[i], p[j], p[k]);
        for (std::size_t l = 0; l < k; ++l) {
          if (contains(s, p[l], tol)) continue;
          s = sphere_from(p[i], p[j], p[k], p[l]);
        }
      }
    }
  }
  return s;
}

TriangleMesh transformed(const TriangleMesh& mesh, const Mat3& rotation, const Vec3& translation) {
  TriangleMesh out = mesh;
  for (Vec3& v : out.vertices) v = rotation * v + translation;
  for (Vec3& n : out.face_normals) n = rotation * n;
  return out;
}

TriangleMesh scaled(const TriangleMesh& mesh, double factor, const Vec3& about) {
  TriangleMesh out = mesh;
  for (Vec3& v : out.vertices) v = about + factor * (v - about);
  return out;
}

std::vector<Vec3> vertex_normals(const TriangleMesh& mesh) {
  std::vector<Vec3> normals(mesh.vertices.size(), Vec3::Zero());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const Face& face = mesh.faces[f];
    const Vec3 n = (mesh.vertices[face[1]] - mesh.vertices[face[0]])
                       .cross(mesh.vertices[face[2]] - mesh.vertices[face[0]])
                       .normalized();
    for (int k = 0; k < 3; ++k) {
      const Vec3 e1 = (mesh.vertices[face[(k + 1) % 3]] - mesh.vertices[face[k]]).normalized();
      const Vec3 e2 = (mesh.vertices[face[(k + 2) % 3]] - mesh.vertices[face[k]]).normalized();
      const double angle = std::acos(std::clamp(e1.dot(e2), -1.0, 1.0));
      normals[face[k]] += angle * n;
    }
  }
  for (Vec3& n : normals)
    if (n.squaredNorm() > 0.0) n.normalize();
  return normals;
}

// ---------------------------------------------------------------------------
// Fixtures

TriangleMesh make_box(const Vec3& h) {
  TriangleMesh m;
  for (int i = 0; i < 8; ++i)
    m.vertices.emplace_back((i & 1 ? 1 : -1) * h.x(), (i & 2 ? 1 : -1) * h.y(), (i & 4 ? 1 : -1) * h.z());
  m.faces = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
             {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  m.finalize();
  return m;
}

TriangleMesh make_icosphere(double radius, int subdivisions) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  TriangleMesh m;
  m.vertices = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  m.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
             {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
             {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (Vec3& v : m.vertices) v.normalize();
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      const auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      m.vertices.push_back((m.vertices[a] + m.vertices[b]).normalized());
      const int idx = static_cast<int>(m.vertices.size()) - 1;
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<Face> next;
    next.reserve(m.faces.size() * 4);
    for (const Face& f : m.faces) {
      const int ab = mid(f[0], f[1]);
      const int bc = mid(f[1], f[2]);
      const int ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    m.faces = std::move(next);
  }
  for (Vec3& v : m.vertices) v *= radius;
  m.finalize();
  return m;
}

TriangleMesh make_cylinder(double radius, double half_height, int segments) {
  TriangleMesh m;
  for (int i = 0; i < segments; ++i) {
    const double a = 2.0 * std::numbers::pi * i / segments;
    m.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), -half_height);
    m.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), half_height);
  }
  const int bottom = static_cast<int>(m.vertices.size());
  m.vertices.emplace_back(0, 0, -half_height);
  const int top = bottom + 1;
  m.vertices.emplace_back(0, 0, half_height);
  for (int i = 0; i < segments; ++i) {
    const int j = (i + 1) % segments;
    const int b0 = 2 * i, t0 = 2 * i + 1, b1 = 2 * j, t1 = 2 * j + 1;
    m.faces.push_back({b0, b1, t1});
    m.faces.push_back({b0, t1, t0});
    m.faces.push_back({bottom, b1, b0});
    m.faces.push_back({top, t0, t1});
  }
  m.finalize();
  return m;
}

TriangleMesh make_capsule(const Vec3& a, const Vec3& b, double radius, int segments) {
  const double length = (b - a).norm();
  TriangleMesh m;
  if (length < 1e-12) {
    m = make_icosphere(radius, 2);
    for (Vec3& v : m.vertices) v += a;
    m.finalize();
    return m;
  }
  // Latitude rings: lower hemisphere, then upper hemisphere, along local z.
  const int rings = std::max(2, segments / 4);
  std::vector<std::pair<double, double>> lat;  // (z, ring radius)
  for (int r = 0; r <= rings; ++r) {
    const double phi = -std::numbers::pi / 2 + (std::numbers::pi / 2) * r / rings;
    lat.emplace_back(radius * std::sin(phi), radius * std::cos(phi));
  }
  for (int r = 0; r <= rings; ++r) {
    const double phi = (std::numbers::pi / 2) * r / rings;
    lat.emplace_back(length + radius * std::sin(phi), radius * std::cos(phi));
  }
  // Poles are single vertices; intermediate rings have `segments` vertices.
  std::vector<int> ring_start;
  for (std::size_t r = 0; r < lat.size(); ++r) {
    ring_start.push_back(static_cast<int>(m.vertices.size()));
    const bool pole = (r == 0 || r + 1 == lat.size());
    if (pole) {
      m.vertices.emplace_back(0, 0, lat[r].first);
    } else {
      for (int s = 0; s < segments; ++s) {
        const double t = 2.0 * std::numbers::pi * s / segments;
        m.vertices.emplace_back(lat[r].second * std::cos(t), lat[r].second * std::sin(t), lat[r].first);
      }
    }
  }
  const int last = static_cast<int>(lat.size()) - 1;
  for (int s = 0; s < segments; ++s) {
    const int n = (s + 1) % segments;
    m.faces.push_back({ring_start[0], ring_start[1] + n, ring_start[1] + s});
    m.faces.push_back({ring_start[last], ring_start[last - 1] + s, ring_start[last - 1] + n});
  }
  for (int r = 1; r + 1 < last; ++r) {
    for (int s = 0; s < segments; ++s) {
      const int n = (s + 1) % segments;
      const int a0 = ring_start[r] + s, a1 = ring_start[r] + n;
      const int b0 = ring_start[r + 1] + s, b1 = ring_start[r + 1] + n;
      m.faces.push_back({a0, a1, b1});
      m.faces.push_back({a0, b1, b0});
    }
  }
  const Vec3 axis = (b - a) / length;
  const Mat3 rot = Eigen::Quaterniond::FromTwoVectors(Vec3::UnitZ(), axis).toRotationMatrix();
  for (Vec3& v : m.vertices) v = rot * v + a;
  m.finalize();
  return m;
}

}  // namespace bigrasp::geometry
