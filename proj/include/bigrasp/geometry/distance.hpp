#pragma once

#include <cstdint>
#include <vector>

#include "bigrasp/geometry/mesh.hpp"

namespace bigrasp::geometry {

// Which part of the nearest triangle the closest point lies on.
enum class Feature : std::uint8_t { Face, Edge, Vertex };

struct NearestPoint {
  double distance = 0.0;  // signed when the mesh is watertight, negative inside
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();  // pseudonormal of the closest feature
  int face = -1;
  Feature feature = Feature::Face;
  int feature_index = 0;  // local edge (k -> k+1) or vertex k of the face

  // d(distance)/d(query), valid away from the medial axis.
  Vec3 gradient = Vec3::UnitZ();
};

// Static bounding-volume hierarchy over a triangle mesh answering closest-point
// and signed-distance queries in O(log F). Immutable after construction and
// safe to query from many threads.
class MeshDistance {
 public:
  explicit MeshDistance(TriangleMesh mesh);

  const TriangleMesh& mesh() const { return mesh_; }
  // False for open or non-manifold meshes; distances are then unsigned.
  bool sign_reliable() const { return watertight_; }

  NearestPoint query(const Vec3& p) const;
  double signed_distance(const Vec3& p) const { return query(p).distance; }

  // Jacobian of the closest point with respect to the query point, with the
  // closest feature held fixed.
  static Mat3 closest_point_jacobian(const NearestPoint& np, const TriangleMesh& mesh);

 private:
  struct Node {
    Vec3 lo = Vec3::Zero();
    Vec3 hi = Vec3::Zero();
    int left = -1;   // internal: child indices; leaf: left = -1
    int right = -1;
    int first = 0;   // leaf: range into order_
    int count = 0;
  };
  struct Triangle {
    Vec3 a, b, c;
  };

  static double box_distance2(const Node& node, const Vec3& p);
  int build(int begin, int end, std::vector<Vec3>& centers);
  void closest_on_triangle(int tri, const Vec3& p, Vec3& point, Feature& feature, int& index) const;

  TriangleMesh mesh_;
  bool watertight_ = false;
  std::vector<Node> nodes_;
  std::vector<int> order_;             // leaf-ordered face indices
  std::vector<Triangle> triangles_;    // in leaf order
  std::vector<std::array<Vec3, 3>> edge_normals_;  // per face, edge k -> k+1
  std::vector<Vec3> vertex_normals_;
};

// Convenience form: distance and closest surface point.
struct SignedDistanceResult {
  double distance = 0.0;
  SurfacePoint nearest;
};
SignedDistanceResult signed_distance(const MeshDistance& mesh, const Vec3& p);

}  // namespace bigrasp::geometry
