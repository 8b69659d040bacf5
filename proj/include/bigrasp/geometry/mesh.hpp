#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace bigrasp::geometry {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Face = std::array<int, 3>;

// Triangle soup with shared vertices, meters. Faces wind counter-clockwise when
// seen from outside.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<Vec3> face_normals;  // filled by finalize()

  std::size_t face_count() const { return faces.size(); }
  double face_area(std::size_t f) const;

  // Drops faces with out-of-range indices or area <= 1e-12 m^2 and recomputes
  // normals. Returns the number of dropped faces.
  std::size_t finalize();
};

struct SurfacePoint {
  Vec3 position = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  int face = -1;
};

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;  // empty or same size as points

  std::size_t size() const { return points.size(); }
};

struct MeshLoadReport {
  std::size_t dropped_faces = 0;
};

// OBJ or PLY (ascii / binary little and big endian), triangles only.
TriangleMesh load_mesh(const std::filesystem::path& path, MeshLoadReport* report = nullptr);
TriangleMesh parse_obj(std::istream& in, const std::string& source_name);
TriangleMesh parse_ply(std::istream& in, const std::string& source_name);

void write_obj(const TriangleMesh& mesh, std::ostream& out, int vertex_offset = 0);
void save_obj(const TriangleMesh& mesh, const std::filesystem::path& path);

// Every edge is shared by exactly two faces with opposite orientation.
bool is_watertight(const TriangleMesh& mesh);
double mesh_volume(const TriangleMesh& mesh);
// Volume centroid for closed meshes; falls back to the area centroid when the
// enclosed volume vanishes.
Vec3 mesh_centroid(const TriangleMesh& mesh);

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
};
// Smallest enclosing sphere of the vertices (Welzl, deterministic order).
Sphere bounding_sphere(const std::vector<Vec3>& points);

TriangleMesh transformed(const TriangleMesh& mesh, const Mat3& rotation, const Vec3& translation);
TriangleMesh scaled(const TriangleMesh& mesh, double factor, const Vec3& about);

// Angle-weighted vertex normals (unit, outward for consistently wound meshes).
std::vector<Vec3> vertex_normals(const TriangleMesh& mesh);

// Analytic fixtures, centered at the origin.
TriangleMesh make_box(const Vec3& half_extents);
TriangleMesh make_icosphere(double radius, int subdivisions);
TriangleMesh make_cylinder(double radius, double half_height, int segments);
TriangleMesh make_capsule(const Vec3& a, const Vec3& b, double radius, int segments = 12);

}  // namespace bigrasp::geometry
