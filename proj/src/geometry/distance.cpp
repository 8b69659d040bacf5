#include "bigrasp/geometry/distance.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>

namespace bigrasp::geometry {

namespace {
constexpr int kLeafSize = 4;
}

double MeshDistance::box_distance2(const Node& node, const Vec3& p) {
  return (node.lo - p).cwiseMax(p - node.hi).cwiseMax(0.0).squaredNorm();
}

MeshDistance::MeshDistance(TriangleMesh mesh) : mesh_(std::move(mesh)) {
  if (mesh_.face_normals.size() != mesh_.faces.size()) mesh_.finalize();
  watertight_ = is_watertight(mesh_);

  const std::size_t nf = mesh_.faces.size();
  std::map<std::pair<int, int>, int> edge_face;
  for (std::size_t f = 0; f < nf; ++f)
    for (int k = 0; k < 3; ++k) edge_face[{mesh_.faces[f][k], mesh_.faces[f][(k + 1) % 3]}] = static_cast<int>(f);
  edge_normals_.resize(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    for (int k = 0; k < 3; ++k) {
      const int a = mesh_.faces[f][k];
      const int b = mesh_.faces[f][(k + 1) % 3];
      Vec3 n = mesh_.face_normals[f];
      const auto twin = edge_face.find({b, a});
      if (twin != edge_face.end()) n += mesh_.face_normals[twin->second];
      edge_normals_[f][k] = n.squaredNorm() > 0 ? Vec3(n.normalized()) : mesh_.face_normals[f];
    }
  }
  vertex_normals_ = vertex_normals(mesh_);

  order_.resize(nf);
  std::iota(order_.begin(), order_.end(), 0);
  std::vector<Vec3> centers(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    const auto& [a, b, c] = mesh_.faces[f];
    centers[f] = (mesh_.vertices[a] + mesh_.vertices[b] + mesh_.vertices[c]) / 3.0;
  }
  nodes_.reserve(2 * nf / kLeafSize + 2);
  if (nf > 0) build(0, static_cast<int>(nf), centers);
  triangles_.resize(nf);
  for (std::size_t i = 0; i < nf; ++i) {
    const auto& [a, b, c] = mesh_.faces[order_[i]];
    triangles_[i] = {mesh_.vertices[a], mesh_.vertices[b], mesh_.vertices[c]};
  }
}

int MeshDistance::build(int begin, int end, std::vector<Vec3>& centers) {
  const int index = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  Eigen::AlignedBox3d box;
  Eigen::AlignedBox3d center_box;
  for (int i = begin; i < end; ++i) {
    for (int v : mesh_.faces[order_[i]]) box.extend(mesh_.vertices[v]);
    center_box.extend(centers[order_[i]]);
  }
  nodes_[index].lo = box.min();
  nodes_[index].hi = box.max();
  if (end - begin <= kLeafSize) {
    nodes_[index].first = begin;
    nodes_[index].count = end - begin;
    return index;
  }
  int axis = 0;
  center_box.sizes().maxCoeff(&axis);
  const int mid = (begin + end) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end, [&](int a, int b) {
    if (centers[a][axis] != centers[b][axis]) return centers[a][axis] < centers[b][axis];
    return a < b;
  });
  const int left = build(begin, mid, centers);
  const int right = build(mid, end, centers);
  nodes_[index].left = left;
  nodes_[index].right = right;
  return index;
}

void MeshDistance::closest_on_triangle(int tri, const Vec3& p, Vec3& point, Feature& feature,
                                       int& index) const {
  const Triangle& t = triangles_[tri];
  const Vec3 ab = t.b - t.a;
  const Vec3 ac = t.c - t.a;
  const Vec3 ap = p - t.a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) {
    point = t.a, feature = Feature::Vertex, index = 0;
    return;
  }
  const Vec3 bp = p - t.b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) {
    point = t.b, feature = Feature::Vertex, index = 1;
    return;
  }
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    point = t.a + (d1 / (d1 - d3)) * ab, feature = Feature::Edge, index = 0;
    return;
  }
  const Vec3 cp = p - t.c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) {
    point = t.c, feature = Feature::Vertex, index = 2;
    return;
  }
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    point = t.a + (d2 / (d2 - d6)) * ac, feature = Feature::Edge, index = 2;
    return;
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    point = t.b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (t.c - t.b), feature = Feature::Edge, index = 1;
    return;
  }
  const double denom = 1.0 / (va + vb + vc);
  point = t.a + ab * (vb * denom) + ac * (vc * denom);
  feature = Feature::Face;
  index = 0;
}

NearestPoint MeshDistance::query(const Vec3& p) const {
  NearestPoint out;
  if (nodes_.empty()) return out;
  double best = std::numeric_limits<double>::infinity();
  int best_tri = -1;
  Vec3 best_point = Vec3::Zero();
  Feature best_feature = Feature::Face;
  int best_index = 0;
  struct Entry {
    int node;
    double d2;
  };
  Entry stack[64];
  int top = 0;
  stack[top++] = {0, box_distance2(nodes_[0], p)};
  while (top > 0) {
    const Entry e = stack[--top];
    if (e.d2 >= best) continue;
    const Node& node = nodes_[e.node];
    if (node.left < 0) {
      for (int i = node.first; i < node.first + node.count; ++i) {
        Vec3 q;
        Feature feature;
        int index;
        closest_on_triangle(i, p, q, feature, index);
        const double d2 = (p - q).squaredNorm();
        if (d2 < best) {
          best = d2, best_tri = i, best_point = q, best_feature = feature, best_index = index;
        }
      }
      continue;
    }
    const double dl = box_distance2(nodes_[node.left], p);
    const double dr = box_distance2(nodes_[node.right], p);
    // Push the farther child first so the nearer one is popped next.
    if (dl <= dr) {
      if (dr < best) stack[top++] = {node.right, dr};
      if (dl < best) stack[top++] = {node.left, dl};
    } else {
      if (dl < best) stack[top++] = {node.left, dl};
      if (dr < best) stack[top++] = {node.right, dr};
    }
  }

  const int face = order_[best_tri];
  out.face = face;
  out.point = best_point;
  out.feature = best_feature;
  out.feature_index = best_index;
  switch (best_feature) {
    case Feature::Face: out.normal = mesh_.face_normals[face]; break;
    case Feature::Edge: out.normal = edge_normals_[face][best_index]; break;
    case Feature::Vertex: out.normal = vertex_normals_[mesh_.faces[face][best_index]]; break;
  }
  const Vec3 diff = p - best_point;
  const double dist = std::sqrt(best);
  double sign = 1.0;
  if (watertight_ && diff.dot(out.normal) < 0.0) sign = -1.0;
  out.distance = sign * dist;
  out.gradient = dist > 1e-12 ? Vec3(sign * diff / dist) : out.normal;
  return out;
}

Mat3 MeshDistance::closest_point_jacobian(const NearestPoint& np, const TriangleMesh& mesh) {
  switch (np.feature) {
    case Feature::Face: {
      const Vec3& n = mesh.face_normals[np.face];
      return Mat3::Identity() - n * n.transpose();
    }
    case Feature::Edge: {
      const auto& f = mesh.faces[np.face];
      const Vec3 e =
          (mesh.vertices[f[(np.feature_index + 1) % 3]] - mesh.vertices[f[np.feature_index]]).normalized();
      return e * e.transpose();
    }
    case Feature::Vertex: break;
  }
  return Mat3::Zero();
}

SignedDistanceResult signed_distance(const MeshDistance& mesh, const Vec3& p) {
  const NearestPoint np = mesh.query(p);
  return {np.distance, SurfacePoint{np.point, np.normal, np.face}};
}

}  // namespace bigrasp::geometry
