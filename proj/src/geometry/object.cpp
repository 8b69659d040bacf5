#include "bigrasp/object.hpp"

#include <cmath>

#include "bigrasp/common/error.hpp"

namespace bigrasp {

using geometry::Vec3;

ObjectModel ObjectModel::from_mesh(std::string id, geometry::TriangleMesh mesh, double density,
                                   std::optional<double> target_diameter) {
  if (!(density > 0.0)) throw Error("object density must be positive");
  if (mesh.face_normals.size() != mesh.faces.size()) mesh.finalize();
  if (mesh.faces.empty()) throw Error("object '" + id + "' has zero faces");
  geometry::Sphere ball = geometry::bounding_sphere(mesh.vertices);
  if (!(ball.radius > 0.0)) throw Error("object '" + id + "' has zero extent");
  if (target_diameter) {
    if (!(*target_diameter > 0.0)) throw Error("target diameter must be positive");
    mesh = geometry::scaled(mesh, *target_diameter / (2.0 * ball.radius), ball.center);
    mesh.finalize();
    ball.radius = 0.5 * *target_diameter;
  }
  ObjectModel obj;
  obj.id = std::move(id);
  obj.diameter = 2.0 * ball.radius;
  obj.density = density;
  obj.volume = std::abs(geometry::mesh_volume(mesh));
  obj.centroid = geometry::mesh_centroid(mesh);
  obj.shape = std::make_shared<const geometry::MeshDistance>(std::move(mesh));
  return obj;
}

ObjectModel ObjectModel::with_density(double new_density) const {
  if (!(new_density > 0.0)) throw Error("object density must be positive");
  ObjectModel copy = *this;
  copy.density = new_density;
  return copy;
}

geometry::TriangleMesh fixture_mesh(const std::string& kind, double diameter) {
  const double r = 0.5 * diameter;
  if (kind == "sphere") return geometry::make_icosphere(r, 3);
  if (kind == "box") {
    // Cube whose corners lie on the bounding sphere.
    const double h = r / std::sqrt(3.0);
    return geometry::make_box(Vec3(h, h, h));
  }
  if (kind == "cylinder") {
    // Height equal to diameter of the cross-section.
    const double h = r / std::sqrt(2.0);
    return geometry::make_cylinder(h, h, 48);
  }
  throw Error("unknown fixture '" + kind + "' (expected sphere, box or cylinder)");
}

ObjectModel make_fixture(const std::string& kind, double diameter, double density) {
  return ObjectModel::from_mesh(kind, fixture_mesh(kind, diameter), density);
}

}  // namespace bigrasp
