#pragma once

#include <cstdint>

#include "bigrasp/geometry/mesh.hpp"

namespace bigrasp::geometry {

// Area-weighted uniform samples with face normals; deterministic per seed.
PointCloud sample_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed);

// Same, but also reports the source face of every sample.
PointCloud sample_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed,
                          std::vector<int>* faces);

}  // namespace bigrasp::geometry
