#include "bigrasp/geometry/hull.hpp"

#include <algorithm>
#include <set>

#include "bigrasp/common/error.hpp"

namespace bigrasp::geometry {

namespace {

struct HullFace {
  std::array<int, 3> v;
  Vec3 normal;
  double offset;
  bool alive = true;
};

HullFace make_face(const std::vector<Vec3>& p, int a, int b, int c) {
  HullFace f;
  f.v = {a, b, c};
  f.normal = (p[b] - p[a]).cross(p[c] - p[a]).normalized();
  f.offset = f.normal.dot(p[a]);
  return f;
}

}  // namespace

TriangleMesh convex_hull(const std::vector<Vec3>& points) {
  if (points.size() < 4) throw Error("convex hull needs at least 4 non-coplanar vertices");
  Eigen::AlignedBox3d bounds;
  for (const Vec3& p : points) bounds.extend(p);
  const double scale = std::max(bounds.diagonal().norm(), 1e-300);
  const double eps = 1e-10 * scale;

  // Initial tetrahedron from extreme points.
  const auto n = static_cast<int>(points.size());
  int i0 = 0;
  for (int i = 1; i < n; ++i)
    if (points[i].x() < points[i0].x()) i0 = i;
  int i1 = -1;
  double best = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = (points[i] - points[i0]).norm();
    if (d > best) best = d, i1 = i;
  }
  if (i1 < 0 || best < eps) throw Error("convex hull needs at least 4 non-coplanar vertices");
  const Vec3 axis = (points[i1] - points[i0]).normalized();
  int i2 = -1;
  best = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = (points[i] - points[i0]).cross(axis).norm();
    if (d > best) best = d, i2 = i;
  }
  if (i2 < 0 || best < eps) throw Error("convex hull needs at least 4 non-coplanar vertices");
  const Vec3 plane_n = (points[i1] - points[i0]).cross(points[i2] - points[i0]).normalized();
  int i3 = -1;
  best = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = std::abs(plane_n.dot(points[i] - points[i0]));
    if (d > best) best = d, i3 = i;
  }
  if (i3 < 0 || best < eps) throw Error("convex hull needs at least 4 non-coplanar vertices");

  std::vector<HullFace> faces;
  const Vec3 inner = (points[i0] + points[i1] + points[i2] + points[i3]) / 4.0;
  auto add_oriented = [&](int a, int b, int c) {
    HullFace f = make_face(points, a, b, c);
    if (f.normal.dot(inner) - f.offset > 0.0) f = make_face(points, a, c, b);
    faces.push_back(f);
  };
  add_oriented(i0, i1, i2);
  add_oriented(i0, i1, i3);
  add_oriented(i0, i2, i3);
  add_oriented(i1, i2, i3);

  for (int i = 0; i < n; ++i) {
    if (i == i0 || i == i1 || i == i2 || i == i3) continue;
    const Vec3& p = points[i];
    std::set<std::pair<int, int>> visible_edges;
    bool any = false;
    for (HullFace& f : faces) {
      if (!f.alive || f.normal.dot(p) - f.offset <= eps) continue;
      any = true;
      f.alive = false;
      for (int k = 0; k < 3; ++k) visible_edges.insert({f.v[k], f.v[(k + 1) % 3]});
    }
    if (!any) continue;
    for (const auto& [a, b] : visible_edges)
      if (!visible_edges.count({b, a})) faces.push_back(make_face(points, a, b, i));
    if (faces.size() > 64 && faces.size() > 4 * static_cast<std::size_t>(std::count_if(
                                                 faces.begin(), faces.end(), [](const HullFace& f) { return f.alive; })))
      std::erase_if(faces, [](const HullFace& f) { return !f.alive; });
  }

  TriangleMesh hull;
  std::vector<int> remap(points.size(), -1);
  for (const HullFace& f : faces) {
    if (!f.alive) continue;
    Face out;
    for (int k = 0; k < 3; ++k) {
      int& r = remap[f.v[k]];
      if (r < 0) {
        r = static_cast<int>(hull.vertices.size());
        hull.vertices.push_back(points[f.v[k]]);
      }
      out[k] = r;
    }
    hull.faces.push_back(out);
  }
  hull.finalize();
  if (hull.faces.size() < 4) throw Error("degenerate convex hull");
  return hull;
}

TriangleMesh inflated_convex_hull(const TriangleMesh& mesh, double offset) {
  if (!(offset >= 0.0)) throw Error("inflated_convex_hull: offset must be non-negative");
  TriangleMesh hull = convex_hull(mesh.vertices);
  if (offset > 0.0) {
    const std::vector<Vec3> normals = vertex_normals(hull);
    for (std::size_t i = 0; i < hull.vertices.size(); ++i) hull.vertices[i] += offset * normals[i];
    hull.finalize();
  }
  return hull;
}

}  // namespace bigrasp::geometry
