#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "bigrasp/common/error.hpp"
#include "bigrasp/geometry/distance.hpp"
#include "bigrasp/geometry/hull.hpp"
#include "bigrasp/geometry/mesh.hpp"
#include "bigrasp/geometry/sampling.hpp"
#include "bigrasp/object.hpp"
#include "support.hpp"

using namespace bigrasp;
using namespace bigrasp::geometry;

namespace {

const char* kCubeObj = R"(v -0.5 -0.5 -0.5
v 0.5 -0.5 -0.5
v -0.5 0.5 -0.5
v 0.5 0.5 -0.5
v -0.5 -0.5 0.5
v 0.5 -0.5 0.5
v -0.5 0.5 0.5
v 0.5 0.5 0.5
f 1 3 4
f 1 4 2
f 5 6 8
f 5 8 7
f 1 2 6
f 1 6 5
f 3 7 8
f 3 8 4
f 1 5 7
f 1 7 3
f 2 4 8
f 2 8 6
)";

TriangleMesh unit_cube() { return make_box(Vec3(0.5, 0.5, 0.5)); }

// Möller-Trumbore crossing count along +dir.
int crossings(const TriangleMesh& m, const Vec3& o, const Vec3& dir) {
  int hits = 0;
  for (const Face& f : m.faces) {
    const Vec3& a = m.vertices[f[0]];
    const Vec3 e1 = m.vertices[f[1]] - a;
    const Vec3 e2 = m.vertices[f[2]] - a;
    const Vec3 p = dir.cross(e2);
    const double det = e1.dot(p);
    if (std::abs(det) < 1e-15) continue;
    const Vec3 s = o - a;
    const double u = s.dot(p) / det;
    if (u < 0 || u > 1) continue;
    const Vec3 q = s.cross(e1);
    const double v = dir.dot(q) / det;
    if (v < 0 || u + v > 1) continue;
    if (e2.dot(q) / det > 0) ++hits;
  }
  return hits;
}

}  // namespace

TEST_CASE("load_mesh: canonical cube, degenerate face, empty file") {
  test::TempDir dir;
  {
    std::ofstream(dir / "cube.obj") << kCubeObj;
    const TriangleMesh m = load_mesh(dir / "cube.obj");
    CHECK(m.vertices.size() == 8);
    CHECK(m.faces.size() == 12);
    CHECK(is_watertight(m));
    CHECK(mesh_volume(m) == doctest::Approx(1.0).epsilon(1e-12));
  }
  {
    std::ofstream(dir / "degenerate.obj") << kCubeObj << "f 1 1 2\n";
    MeshLoadReport report;
    const TriangleMesh m = load_mesh(dir / "degenerate.obj", &report);
    CHECK(m.faces.size() == 12);
    CHECK(report.dropped_faces == 1);
  }
  {
    // one of the 12 faces replaced by a zero-area one
    std::string text = kCubeObj;
    text.replace(text.rfind("f 2 8 6"), 7, "f 2 2 6");
    std::ofstream(dir / "eleven.obj") << text;
    MeshLoadReport report;
    const TriangleMesh m = load_mesh(dir / "eleven.obj", &report);
    CHECK(m.faces.size() == 11);
    CHECK(report.dropped_faces == 1);
  }
  {
    std::ofstream(dir / "empty.obj") << "";
    CHECK_THROWS_WITH_AS(load_mesh(dir / "empty.obj"), doctest::Contains("zero faces"), Error);
  }
  CHECK_THROWS_AS(load_mesh(dir / "missing.obj"), Error);
}

TEST_CASE("load_mesh: PLY ascii matches OBJ") {
  test::TempDir dir;
  const TriangleMesh cube = unit_cube();
  std::ofstream ply(dir / "cube.ply");
  ply << "ply\nformat ascii 1.0\nelement vertex 8\nproperty float x\nproperty float y\nproperty float z\n"
         "element face 12\nproperty list uchar int vertex_indices\nend_header\n";
  for (const Vec3& v : cube.vertices) ply << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const Face& f : cube.faces) ply << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  ply.close();
  const TriangleMesh m = load_mesh(dir / "cube.ply");
  CHECK(m.faces.size() == 12);
  CHECK(mesh_volume(m) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("signed distance on the unit cube") {
  const MeshDistance d(unit_cube());
  REQUIRE(d.sign_reliable());
  const NearestPoint above = d.query(Vec3(0, 0, 1.0));
  CHECK(above.distance == doctest::Approx(0.5).epsilon(1e-15));
  CHECK((above.point - Vec3(0, 0, 0.5)).norm() < 1e-15);
  CHECK((above.normal - Vec3(0, 0, 1)).norm() < 1e-12);
  CHECK(d.signed_distance(Vec3::Zero()) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(std::abs(d.signed_distance(Vec3(0.5, 0, 0))) < 1e-15);
  // outside a corner: distance to the corner point
  CHECK(d.signed_distance(Vec3(1, 1, 1)) == doctest::Approx(std::sqrt(0.75)).epsilon(1e-12));
}

TEST_CASE("sign agrees with ray-casting parity") {
  for (const char* kind : {"sphere", "box", "cylinder"}) {
    CAPTURE(kind);
    const TriangleMesh mesh = fixture_mesh(kind, 0.2);
    const MeshDistance d(mesh);
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-0.15, 0.15);
    std::normal_distribution<double> n(0.0, 1.0);
    int tested = 0;
    int agree = 0;
    while (tested < 1000) {
      const Vec3 p(u(rng), u(rng), u(rng));
      const double sd = d.signed_distance(p);
      if (std::abs(sd) < 1e-6) continue;
      const Vec3 dir = Vec3(n(rng), n(rng), n(rng)).normalized();
      const bool inside = crossings(mesh, p, dir) % 2 == 1;
      ++tested;
      agree += inside == (sd < 0);
    }
    CHECK(agree == tested);
  }
}

TEST_CASE("surface sampling") {
  const TriangleMesh cube = unit_cube();
  const MeshDistance d(cube);
  const PointCloud a = sample_surface(cube, 4000, 7);
  const PointCloud b = sample_surface(cube, 4000, 7);
  REQUIRE(a.size() == 4000);
  bool identical = true;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    identical = identical && a.points[i] == b.points[i];
    worst = std::max(worst, std::abs(d.signed_distance(a.points[i])));
  }
  CHECK(identical);
  CHECK(worst < 1e-9);

  // 12 equal-area triangles: counts ~ binomial(6000, 1/12).
  std::vector<int> faces;
  sample_surface(cube, 6000, 3, &faces);
  std::vector<int> counts(12, 0);
  for (int f : faces) ++counts[f];
  const double sigma = std::sqrt(6000.0 / 12.0 * (11.0 / 12.0));
  for (int c : counts) CHECK(std::abs(c - 500.0) < 3.0 * sigma);

  CHECK_THROWS_AS(sample_surface(cube, 0, 1), Error);
}

TEST_CASE("inflated convex hull") {
  const TriangleMesh cube = unit_cube();
  const TriangleMesh h0 = inflated_convex_hull(cube, 0.0);
  CHECK(h0.vertices.size() == 8);
  for (const Vec3& v : h0.vertices) CHECK((v.cwiseAbs() - Vec3::Constant(0.5)).norm() < 1e-12);

  const TriangleMesh h1 = inflated_convex_hull(cube, 0.1);
  const double c = 0.5 + 0.1 / std::sqrt(3.0);
  bool found = false;
  for (const Vec3& v : h1.vertices) found = found || (v - Vec3(c, c, c)).norm() < 1e-12;
  CHECK(found);

  const double r = 0.3;
  const double t = 0.05;
  const TriangleMesh ico = make_icosphere(r, 2);
  const TriangleMesh hi = inflated_convex_hull(ico, t);
  double far = 0.0;
  for (const Vec3& v : hi.vertices) far = std::max(far, v.norm());
  CHECK(std::abs(far - (r + t)) < 1e-9);

  // every original vertex is inside (or on) the inflated hull
  const MeshDistance hull(hi);
  double worst = -1.0;
  for (const Vec3& v : ico.vertices) worst = std::max(worst, hull.signed_distance(v));
  CHECK(worst <= 0.0);

  CHECK_THROWS_AS(convex_hull({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0)}), Error);
}

TEST_CASE("fixtures and object model") {
  for (const char* kind : {"sphere", "box", "cylinder"}) {
    CAPTURE(kind);
    const ObjectModel obj = make_fixture(kind, 0.2, 2500.0);
    CHECK(obj.diameter == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(obj.shape->sign_reliable());
    CHECK(obj.mass() == doctest::Approx(2500.0 * mesh_volume(obj.mesh())));
  }
  // box: cube with corners on the bounding sphere, side 0.2 / sqrt(3)
  const double side = 0.2 / std::sqrt(3.0);
  CHECK(make_fixture("box", 0.2, 1000.0).volume == doctest::Approx(side * side * side).epsilon(1e-12));
  CHECK(make_fixture("box", 0.2, 1000.0).with_density(500.0).mass() ==
        doctest::Approx(500.0 * side * side * side).epsilon(1e-12));
  CHECK_THROWS_AS(make_fixture("torus", 0.2, 1.0), Error);

  // rescaling a mesh sets the bounding-sphere diameter
  const ObjectModel scaled = ObjectModel::from_mesh("cube", unit_cube(), 1000.0, 0.5);
  CHECK(scaled.diameter == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("bounding sphere of cube corners") {
  const Sphere s = bounding_sphere(unit_cube().vertices);
  CHECK(s.center.norm() < 1e-12);
  CHECK(s.radius == doctest::Approx(std::sqrt(0.75)).epsilon(1e-12));
}
