#include <doctest.h>

#include <cmath>
#include <random>

#include "corpus.hpp"
#include "spinmesh/net.hpp"
#include "spinmesh/synth.hpp"

using namespace spinmesh;

namespace {

MeshData tetrahedron() {
  MeshData m;
  m.positions = {{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
  m.faces = {{0, 1, 2}, {0, 2, 3}, {0, 3, 1}, {1, 3, 2}};
  return m;
}

// Axis-aligned unit cube, every square split into two triangles.
MeshData unit_cube() {
  MeshData m;
  for (int z = 0; z <= 1; ++z)
    for (int y = 0; y <= 1; ++y)
      for (int x = 0; x <= 1; ++x) m.positions.push_back({double(x), double(y), double(z)});
  auto idx = [](int x, int y, int z) { return x + 2 * y + 4 * z; };
  auto quad = [&](int a, int b, int c, int d) {
    m.faces.push_back({a, b, c});
    m.faces.push_back({a, c, d});
  };
  quad(idx(0, 0, 0), idx(0, 1, 0), idx(1, 1, 0), idx(1, 0, 0));  // z=0, outward -z
  quad(idx(0, 0, 1), idx(1, 0, 1), idx(1, 1, 1), idx(0, 1, 1));  // z=1, outward +z
  quad(idx(0, 0, 0), idx(1, 0, 0), idx(1, 0, 1), idx(0, 0, 1));  // y=0, outward -y
  quad(idx(0, 1, 0), idx(0, 1, 1), idx(1, 1, 1), idx(1, 1, 0));  // y=1, outward +y
  quad(idx(0, 0, 0), idx(0, 0, 1), idx(0, 1, 1), idx(0, 1, 0));  // x=0, outward -x
  quad(idx(1, 0, 0), idx(1, 1, 0), idx(1, 1, 1), idx(1, 0, 1));  // x=1, outward +x
  return m;
}

void check_invariants(const FaceEdgeNet& net) {
  // Unit normals, positive areas, per-face closure and the edge constraint.
  for (int f = 0; f < net.face_count(); ++f) {
    CHECK(std::abs(net.face_normal(f).norm() - 1.0) < 1e-12);
    CHECK(net.face_area(f) > 0.0);
    Vec3 closure = Vec3::Zero();
    double perim = 0.0;
    for (int s = 0; s < 3; ++s) {
      closure += net.edge_vector(f, s);
      perim += net.edge_vector(f, s).norm();
    }
    CHECK(closure.norm() < 1e-9 * perim);
  }
  for (int e = 0; e < net.edge_count(); ++e) {
    const auto& rec = net.edge(e);
    const Vec3 vec = net.position(rec.vb) - net.position(rec.va);
    CHECK(std::abs((net.face_normal(rec.face_left) + net.face_normal(rec.face_right)).dot(vec)) <
          1e-9 * vec.norm());
  }
  // Exact twin antisymmetry through the two face sides of each edge.
  for (int f = 0; f < net.face_count(); ++f) {
    for (int s = 0; s < 3; ++s) {
      const int j = net.side(f, s).neighbor;
      const int sj = net.find_side(j, f);
      if (net.side(j, sj).edge != net.side(f, s).edge) continue;  // double adjacency
      CHECK((net.edge_vector(f, s) + net.edge_vector(j, sj)).norm() == 0.0);
      CHECK(net.dihedral_angle(f, s) == net.dihedral_angle(j, sj));
    }
  }
}

} // namespace

TEST_CASE("tetrahedron builds with full invariants") {
  const FaceEdgeNet net = FaceEdgeNet::build(tetrahedron());
  CHECK(net.face_count() == 4);
  CHECK(net.edge_count() == 6);  // 12 directed edges as 6 stored twins
  CHECK(net.genus() == 0);
  check_invariants(net);
}

TEST_CASE("icosahedron dihedral and edge curvature") {
  const FaceEdgeNet net = FaceEdgeNet::build(synth::icosahedron());
  CHECK(net.face_count() == 20);
  CHECK(net.edge_count() == 30);  // 60 directed edges
  check_invariants(net);
  const double bending = M_PI - std::acos(-std::sqrt(5.0) / 3.0);
  for (int e = 0; e < net.edge_count(); ++e) {
    CHECK(std::abs(net.edge(e).dihedral - bending) < 1e-12);
    const double h = net.integrated_edge_curvature_edge(e);
    CHECK(std::abs(h - net.edge(e).length * std::tan(bending / 2)) < 1e-12);
    CHECK(std::abs(h / net.edge(e).length - 0.381966) < 1e-5);
  }
}

TEST_CASE("cube edges: dihedral pi/2, H = |e|, hyperedge 1 + i") {
  const FaceEdgeNet net = FaceEdgeNet::build(unit_cube());
  check_invariants(net);
  const HyperedgeField E = hyperedges(net);
  int cube_edges = 0, flat_edges = 0;
  bool found_x_edge = false;
  for (int f = 0; f < net.face_count(); ++f) {
    for (int s = 0; s < 3; ++s) {
      const double theta = net.dihedral_angle(f, s);
      if (std::abs(theta) < 1e-12) {
        ++flat_edges;  // square diagonals
        CHECK(std::abs(E.at(f, s).w) < 1e-12);
      } else {
        CHECK(std::abs(theta - M_PI / 2) < 1e-12);  // all cube edges convex
        ++cube_edges;
        CHECK(std::abs(net.integrated_edge_curvature(f, s) - net.edge_vector(f, s).norm()) < 1e-12);
        const Quaternion q = E.at(f, s);
        if ((q.coeffs() - Vec4(1, 1, 0, 0)).norm() < 1e-12) found_x_edge = true;
      }
    }
  }
  CHECK(cube_edges == 24);  // 12 cube edges, two sides each
  CHECK(flat_edges == 12);
  CHECK(found_x_edge);  // E = 1 + i on a unit edge along +x
}

TEST_CASE("construction errors name the offending simplex") {
  MeshData open_mesh = tetrahedron();
  open_mesh.faces.pop_back();
  CHECK_THROWS_WITH_AS(FaceEdgeNet::build(open_mesh), doctest::Contains("boundary"),
                       TopologyError);

  MeshData nonmanifold = tetrahedron();
  nonmanifold.positions.push_back({0, 0, 3});
  nonmanifold.faces.push_back({0, 1, 4});  // third face on edge (0,1)
  CHECK_THROWS_WITH_AS(FaceEdgeNet::build(nonmanifold), doctest::Contains("non-manifold"),
                       TopologyError);

  MeshData flipped = tetrahedron();
  std::swap(flipped.faces[0][0], flipped.faces[0][1]);
  CHECK_THROWS_WITH_AS(FaceEdgeNet::build(flipped), doctest::Contains("winding"), TopologyError);

  MeshData degenerate = tetrahedron();
  degenerate.positions[3] = degenerate.positions[0];  // collapses faces at vertex 3
  CHECK_THROWS_AS(FaceEdgeNet::build(degenerate), Error);
}

TEST_CASE("icosphere mean curvature: honest per-face spread, tight mean, exact scaling") {
  const FaceEdgeNet& unit = spinmesh::testing::icosphere(3, 1.0);
  const FaceCurvature c1 = face_mean_curvature(unit);
  // The per-face density does not converge pointwise on icospheres; the
  // measured spread at subdiv 3 is [1.79, 2.17].
  for (int f = 0; f < unit.face_count(); ++f) {
    CHECK(c1.density[f] > 1.75);
    CHECK(c1.density[f] < 2.25);
  }
  const double mean = c1.density.dot(unit.face_areas()) / unit.total_area();
  CHECK(std::abs(mean - 2.0) < 0.01 * 2.0);

  const FaceEdgeNet& twice = spinmesh::testing::icosphere(3, 2.0);
  const FaceCurvature c2 = face_mean_curvature(twice);
  for (int f = 0; f < unit.face_count(); ++f)
    CHECK(std::abs(c2.density[f] - 0.5 * c1.density[f]) < 1e-11);
}

TEST_CASE("hyperedges: twin conjugation and face sums") {
  const FaceEdgeNet& net = spinmesh::testing::icosphere(2);
  const HyperedgeField E = hyperedges(net);
  const FaceCurvature curv = face_mean_curvature(net);
  for (int f = 0; f < net.face_count(); ++f) {
    for (int s = 0; s < 3; ++s) {
      const int j = net.side(f, s).neighbor;
      const int sj = net.find_side(j, f);
      const Quaternion diff = E.at(f, s).conj() - E.at(j, sj);
      CHECK(diff.norm() == 0.0);  // structural
    }
    const Quaternion sum = E.sum_over_face(f);
    CHECK(sum.imag().norm() < 1e-12);  // closedness of the source net
    CHECK(std::abs(sum.w - curv.integrated[f]) < 1e-12);
  }
}

TEST_CASE("hyperedge polar identity and transport") {
  const FaceEdgeNet& net = spinmesh::testing::icosphere(2);
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> pick(0, net.face_count() - 1);
  for (int t = 0; t < 64; ++t) {
    const int f = pick(rng);
    for (int s = 0; s < 3; ++s) CHECK(hyperedge_polar_identity(net, f, s) < 1e-10);
  }
  const FaceEdgeNet cube = FaceEdgeNet::build(unit_cube());
  for (int f = 0; f < cube.face_count(); ++f)
    for (int s = 0; s < 3; ++s) CHECK(hyperedge_polar_identity(cube, f, s) < 1e-12);
}

TEST_CASE("rigid invariance and scale covariance") {
  const FaceEdgeNet& net = spinmesh::testing::icosphere(2);
  const FaceCurvature base = face_mean_curvature(net);
  const HyperedgeField E0 = hyperedges(net);

  std::mt19937_64 rng(6);
  const Eigen::Matrix3d rot = spinmesh::testing::rotation_of(
      spinmesh::testing::random_unit_quaternion(rng));
  const Vec3 shift(0.3, -1.2, 2.5);

  MeshData moved = net.mesh();
  for (Vec3& p : moved.positions) p = rot * p + shift;
  const FaceEdgeNet rigid = FaceEdgeNet::build(moved);
  const FaceCurvature rigid_c = face_mean_curvature(rigid);
  for (int f = 0; f < net.face_count(); ++f) {
    CHECK(std::abs(rigid_c.integrated[f] - base.integrated[f]) < 1e-9 * (1 + std::abs(base.integrated[f])));
    CHECK(std::abs(rigid.face_area(f) - net.face_area(f)) < 1e-9 * net.face_area(f));
  }
  const HyperedgeField E1 = hyperedges(rigid);
  for (int e = 0; e < net.edge_count(); ++e)
    CHECK(std::abs(E1.canonical(e).w - E0.canonical(e).w) < 1e-9 * (1 + std::abs(E0.canonical(e).w)));

  const double s = 2.37;
  MeshData scaled = net.mesh();
  for (Vec3& p : scaled.positions) p *= s;
  const FaceEdgeNet big = FaceEdgeNet::build(scaled);
  const FaceCurvature big_c = face_mean_curvature(big);
  for (int f = 0; f < net.face_count(); ++f) {
    CHECK(std::abs(big_c.integrated[f] - s * base.integrated[f]) < 1e-9 * s * (1 + std::abs(base.integrated[f])));
    CHECK(std::abs(big.face_area(f) - s * s * net.face_area(f)) < 1e-9 * s * s * net.face_area(f));
    CHECK(std::abs(big_c.density[f] - base.density[f] / s) < 1e-9);
  }
}

TEST_CASE("steiner offset: exact at 0, quadratic order, flat faces exact") {
  const FaceEdgeNet& net = spinmesh::testing::icosphere(3);
  CHECK(steiner_offset_check(net, 0.0).maxCoeff() < 1e-12);

  double err[3];
  const double ts[3] = {1e-2, 1e-3, 1e-4};
  for (int i = 0; i < 3; ++i) err[i] = steiner_offset_check(net, ts[i]).maxCoeff();
  // log-log slope over the decade pairs
  const double slope1 = std::log10(err[0] / err[1]);
  const double slope2 = std::log10(err[1] / err[2]);
  CHECK(slope1 >= 1.9);
  CHECK(slope2 >= 1.9);

  // Interior plate faces of the genus-2 shape are flat: exact offsets.
  const FaceEdgeNet& plate = spinmesh::testing::genus2();
  const FaceScalarField flat_err = steiner_offset_check(plate, 0.05);
  int flat_found = 0;
  for (int f = 0; f < plate.face_count(); ++f) {
    double worst_theta = 0.0;
    for (int s = 0; s < 3; ++s)
      worst_theta = std::max(worst_theta, std::abs(plate.dihedral_angle(f, s)));
    if (worst_theta < 1e-12) {
      ++flat_found;
      CHECK(flat_err[f] < 1e-12);
    }
  }
  CHECK(flat_found > 0);
}

TEST_CASE("corpus shapes build and genus detection") {
  CHECK(spinmesh::testing::bumpy_sphere().genus() == 0);
  CHECK(spinmesh::testing::ellipsoid().genus() == 0);
  CHECK(spinmesh::testing::capsule().genus() == 0);
  CHECK(spinmesh::testing::torus().genus() == 1);
  CHECK(spinmesh::testing::genus2().genus() == 2);
  CHECK(spinmesh::testing::icosphere(3).face_count() == 1280);  // 20 * 4^3
  check_invariants(spinmesh::testing::bumpy_sphere());
  check_invariants(spinmesh::testing::torus());
  check_invariants(spinmesh::testing::genus2());
  check_invariants(spinmesh::testing::capsule());
}

TEST_CASE("folded pillow: valid net whose edge curvature is singular") {
  // Two coincident triangles with opposite orientation form a closed manifold
  // whose dihedrals sit exactly at the fold.
  MeshData pillow;
  pillow.positions = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  pillow.faces = {{0, 1, 2}, {0, 2, 1}};
  const FaceEdgeNet net = FaceEdgeNet::build(pillow);
  CHECK(net.genus() == 0);
  CHECK(std::abs(std::abs(net.dihedral_angle(0, 0)) - M_PI) < 1e-12);
  CHECK_THROWS_WITH_AS(net.integrated_edge_curvature(0, 0), doctest::Contains("fold"),
                       GeometryError);
  CHECK_THROWS_AS(face_mean_curvature(net), GeometryError);
}
