#include "bigrasp/geometry/sampling.hpp"

#include <algorithm>
#include <random>

#include "bigrasp/common/error.hpp"
#include "bigrasp/common/rng.hpp"

namespace bigrasp::geometry {

PointCloud sample_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
  return sample_surface(mesh, n, seed, nullptr);
}

PointCloud sample_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed,
                          std::vector<int>* faces) {
  if (n == 0) throw Error("sample_surface: sample count must be at least 1");
  if (mesh.faces.empty()) throw Error("sample_surface: mesh has no faces");
  std::vector<double> cumulative(mesh.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    total += mesh.face_area(f);
    cumulative[f] = total;
  }
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  PointCloud cloud;
  cloud.points.reserve(n);
  cloud.normals.reserve(n);
  if (faces) faces->clear();
  for (std::size_t i = 0; i < n; ++i) {
    const double pick = uniform(rng) * total;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    const std::size_t f = std::min<std::size_t>(it - cumulative.begin(), mesh.faces.size() - 1);
    const double r1 = std::sqrt(uniform(rng));
    const double r2 = uniform(rng);
    const auto& [a, b, c] = mesh.faces[f];
    const Vec3 p = (1.0 - r1) * mesh.vertices[a] + r1 * (1.0 - r2) * mesh.vertices[b] +
                   r1 * r2 * mesh.vertices[c];
    cloud.points.push_back(p);
    cloud.normals.push_back(mesh.face_normals[f]);
    if (faces) faces->push_back(static_cast<int>(f));
  }
  return cloud;
}

}  // namespace bigrasp::geometry
