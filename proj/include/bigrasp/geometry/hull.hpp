#pragma once

#include "bigrasp/geometry/mesh.hpp"

namespace bigrasp::geometry {

// Convex hull of a point set as an outward-wound triangle mesh containing only
// hull vertices. Throws when fewer than 4 non-coplanar points exist.
TriangleMesh convex_hull(const std::vector<Vec3>& points);

// Convex hull of the mesh vertices with every hull vertex pushed `offset`
// meters along its angle-weighted normal.
TriangleMesh inflated_convex_hull(const TriangleMesh& mesh, double offset);

}  // namespace bigrasp::geometry
