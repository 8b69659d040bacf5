#pragma once

#include <memory>
#include <optional>
#include <string>

#include "bigrasp/geometry/distance.hpp"

namespace bigrasp {

// Rigid object under grasp: geometry plus the physical parameters the verifier
// needs. Shares its distance structure, so copies are cheap.
struct ObjectModel {
  std::string id;
  std::shared_ptr<const geometry::MeshDistance> shape;
  double diameter = 0.0;  // bounding-sphere diameter, m
  double density = 2500.0;  // kg / m^3
  double volume = 0.0;   // m^3
  geometry::Vec3 centroid = geometry::Vec3::Zero();

  const geometry::TriangleMesh& mesh() const { return shape->mesh(); }
  double mass() const { return density * volume; }

  // Optionally rescales the mesh about its bounding-sphere center so that the
  // bounding-sphere diameter equals `target_diameter`.
  static ObjectModel from_mesh(std::string id, geometry::TriangleMesh mesh, double density,
                               std::optional<double> target_diameter = std::nullopt);

  // Same geometry, different density.
  ObjectModel with_density(double density) const;
};

// Analytic fixtures used by tests and the CLI: "sphere", "box", "cylinder",
// all centered at the origin with the given bounding-sphere diameter.
ObjectModel make_fixture(const std::string& kind, double diameter, double density);
geometry::TriangleMesh fixture_mesh(const std::string& kind, double diameter);

}  // namespace bigrasp
