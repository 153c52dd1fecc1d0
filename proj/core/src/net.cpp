#include "spinmesh/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>

#include "spinmesh/errors.hpp"

namespace spinmesh {

namespace {

constexpr double kFoldGuard = 1e-6;   // |theta| > pi - guard is a singular fold
constexpr double kCotClamp = 1e8;

std::string simplex(const char* kind, int a, int b = -1, int c = -1) {
  std::string s = std::string(kind) + " (" + std::to_string(a);
  if (b >= 0) s += ", " + std::to_string(b);
  if (c >= 0) s += ", " + std::to_string(c);
  return s + ")";
}

double clamped_cot(const Vec3& u, const Vec3& v, int* clamp_count) {
  const double cross = u.cross(v).norm();
  const double dot = u.dot(v);
  if (cross * kCotClamp < std::abs(dot)) {
    ++*clamp_count;
    return dot > 0 ? kCotClamp : -kCotClamp;
  }
  return dot / cross;
}

} // namespace

FaceEdgeNet FaceEdgeNet::build(const MeshData& mesh) {
  FaceEdgeNet net;
  net.positions_ = mesh.positions;
  net.faces_ = mesh.faces;

  const int nv = net.vertex_count();
  const int nf = net.face_count();
  if (nf == 0) throw TopologyError("build_net: empty mesh");

  for (int f = 0; f < nf; ++f) {
    const auto& tri = net.faces_[f];
    for (int s = 0; s < 3; ++s) {
      if (tri[s] < 0 || tri[s] >= nv)
        throw TopologyError("build_net: vertex index out of range in " + simplex("face", f));
      if (tri[s] == tri[(s + 1) % 3])
        throw TopologyError("build_net: repeated vertex in " + simplex("face", f));
    }
  }

  // Undirected edge table keyed by the unordered vertex pair. The first face
  // to visit an edge fixes the canonical direction.
  auto key = [](int a, int b) {
    return (static_cast<std::uint64_t>(std::min(a, b)) << 32) | static_cast<std::uint32_t>(std::max(a, b));
  };
  std::unordered_map<std::uint64_t, int> edge_of;
  edge_of.reserve(3 * nf);
  net.sides_.assign(nf, {});

  for (int f = 0; f < nf; ++f) {
    for (int s = 0; s < 3; ++s) {
      const int va = net.side_start_vertex(f, s);
      const int vb = net.side_end_vertex(f, s);
      auto [it, inserted] = edge_of.try_emplace(key(va, vb), static_cast<int>(net.edges_.size()));
      if (inserted) {
        Edge e;
        e.va = va;
        e.vb = vb;
        e.face_left = f;
        e.opp_left = net.faces_[f][(s + 2) % 3];
        net.edges_.push_back(e);
      } else {
        Edge& e = net.edges_[it->second];
        if (e.face_right >= 0)
          throw TopologyError("build_net: non-manifold " + simplex("edge", va, vb));
        if (e.va == va)
          throw TopologyError("build_net: inconsistent winding at " + simplex("edge", va, vb) +
                              " between " + simplex("face", e.face_left) + " and " + simplex("face", f));
        e.face_right = f;
        e.opp_right = net.faces_[f][(s + 2) % 3];
      }
      net.sides_[f][s].edge = it->second;
    }
  }

  for (const Edge& e : net.edges_) {
    if (e.face_right < 0)
      throw TopologyError("build_net: boundary " + simplex("edge", e.va, e.vb));
  }

  // Fill side records now that both faces of every edge are known.
  for (int f = 0; f < nf; ++f) {
    for (int s = 0; s < 3; ++s) {
      Side& side = net.sides_[f][s];
      const Edge& e = net.edges_[side.edge];
      side.sign = (e.face_left == f) ? 1 : -1;
      side.neighbor = (e.face_left == f) ? e.face_right : e.face_left;
    }
  }

  // Face-connectivity; also catches unreferenced vertices below.
  {
    std::vector<int> stack{0};
    std::vector<char> seen(nf, 0);
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      const int f = stack.back();
      stack.pop_back();
      for (int s = 0; s < 3; ++s) {
        const int g = net.sides_[f][s].neighbor;
        if (!seen[g]) {
          seen[g] = 1;
          ++count;
          stack.push_back(g);
        }
      }
    }
    if (count != nf)
      throw TopologyError("build_net: mesh is disconnected (" + std::to_string(nf - count) +
                          " unreachable faces)");
  }
  {
    std::vector<char> used(nv, 0);
    for (const auto& tri : net.faces_)
      for (int v : tri) used[v] = 1;
    for (int v = 0; v < nv; ++v)
      if (!used[v]) throw TopologyError("build_net: unreferenced " + simplex("vertex", v));
  }

  // Geometric normals and areas.
  net.normals_.resize(nf);
  net.areas_.resize(nf);
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
  Vec3 hi = Vec3::Constant(std::numeric_limits<double>::lowest());
  for (const Vec3& p : net.positions_) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  net.bbox_diagonal_ = (hi - lo).norm();

  net.total_area_ = 0.0;
  for (int f = 0; f < nf; ++f) {
    const auto& tri = net.faces_[f];
    const Vec3 u = net.positions_[tri[1]] - net.positions_[tri[0]];
    const Vec3 v = net.positions_[tri[2]] - net.positions_[tri[0]];
    const Vec3 cr = u.cross(v);
    const double area = 0.5 * cr.norm();
    const double perim = u.norm() + v.norm() + (v - u).norm();
    if (!(area > 1e-14 * perim * perim))
      throw GeometryError("build_net: degenerate (zero-area) " + simplex("face", f));
    net.normals_[f] = cr / (2.0 * area);
    net.areas_[f] = area;
    net.total_area_ += area;
  }

  net.vertex_areas_.setZero(nv);
  for (int f = 0; f < nf; ++f)
    for (int v : net.faces_[f]) net.vertex_areas_[v] += net.areas_[f] / 3.0;

  // Dihedrals and cotangent weights.
  double edge_len_sum = 0.0;
  for (Edge& e : net.edges_) {
    const Vec3 vec = net.positions_[e.vb] - net.positions_[e.va];
    e.length = vec.norm();
    edge_len_sum += e.length;
    const Vec3 dir = vec / e.length;
    const Vec3& ni = net.normals_[e.face_left];
    const Vec3& nj = net.normals_[e.face_right];
    e.dihedral = std::atan2(ni.cross(nj).dot(dir), ni.dot(nj));

    const Vec3& pa = net.positions_[e.va];
    const Vec3& pb = net.positions_[e.vb];
    const Vec3& pl = net.positions_[e.opp_left];
    const Vec3& pr = net.positions_[e.opp_right];
    const double cot_l = clamped_cot(pa - pl, pb - pl, &net.cot_clamp_count_);
    const double cot_r = clamped_cot(pa - pr, pb - pr, &net.cot_clamp_count_);
    e.cot_weight = 0.5 * (cot_l + cot_r);
  }
  net.mean_edge_length_ = edge_len_sum / static_cast<double>(net.edges_.size());

  return net;
}

Vec3 FaceEdgeNet::face_centroid(int f) const {
  const auto& tri = faces_[f];
  return (positions_[tri[0]] + positions_[tri[1]] + positions_[tri[2]]) / 3.0;
}

int FaceEdgeNet::find_side(int face, int neighbor) const {
  for (int s = 0; s < 3; ++s)
    if (sides_[face][s].neighbor == neighbor) return s;
  return -1;
}

Vec3 FaceEdgeNet::edge_vector(int f, int s) const {
  const Side& side = sides_[f][s];
  const Edge& e = edges_[side.edge];
  const Vec3 canon = positions_[e.vb] - positions_[e.va];
  return side.sign > 0 ? canon : Vec3(-canon);
}

double FaceEdgeNet::dihedral_angle_between(int i, int j) const {
  const int s = find_side(i, j);
  if (s < 0) throw TopologyError("dihedral_angle: faces " + std::to_string(i) + " and " +
                                 std::to_string(j) + " are not adjacent");
  return dihedral_angle(i, s);
}

double FaceEdgeNet::integrated_edge_curvature_edge(int e) const {
  const Edge& rec = edges_[e];
  if (std::abs(rec.dihedral) > M_PI - kFoldGuard)
    throw GeometryError("integrated_edge_curvature: singular fold at " +
                        simplex("edge", rec.va, rec.vb));
  return rec.length * std::tan(0.5 * rec.dihedral);
}

double FaceEdgeNet::integrated_edge_curvature(int f, int s) const {
  return integrated_edge_curvature_edge(sides_[f][s].edge);
}

double FaceEdgeNet::integrated_edge_curvature_between(int i, int j) const {
  const int s = find_side(i, j);
  if (s < 0) throw TopologyError("integrated_edge_curvature: faces not adjacent");
  return integrated_edge_curvature(i, s);
}

FaceCurvature face_mean_curvature(const FaceEdgeNet& net) {
  const int nf = net.face_count();
  FaceCurvature c;
  c.integrated.resize(nf);
  c.density.resize(nf);
  for (int f = 0; f < nf; ++f) {
    double h = 0.0;
    for (int s = 0; s < 3; ++s) h += net.integrated_edge_curvature(f, s);
    c.integrated[f] = h;
    c.density[f] = h / net.face_area(f);
  }
  return c;
}

HyperedgeField HyperedgeField::from_canonical(const FaceEdgeNet& net,
                                              std::vector<Quaternion> canonical) {
  HyperedgeField field;
  field.net_ = &net;
  field.canonical_ = std::move(canonical);
  return field;
}

HyperedgeField hyperedges(const FaceEdgeNet& net) {
  std::vector<Quaternion> canon(net.edge_count());
  for (int e = 0; e < net.edge_count(); ++e) {
    const auto& rec = net.edge(e);
    Quaternion q = Quaternion::pure(net.position(rec.vb) - net.position(rec.va));
    q.w = net.integrated_edge_curvature_edge(e);
    canon[e] = q;
  }
  return HyperedgeField::from_canonical(net, std::move(canon));
}

double hyperedge_polar_identity(const FaceEdgeNet& net, int f, int s) {
  const auto& side = net.side(f, s);
  const auto& rec = net.edge(side.edge);
  const int j = side.neighbor;

  const Vec3 e_ij = net.edge_vector(f, s);
  const double theta = net.dihedral_angle(f, s);
  const Quaternion E(net.integrated_edge_curvature(f, s), e_ij.x(), e_ij.y(), e_ij.z());

  // Appendix-style polar form of the hyperedge.
  const Quaternion rhs =
      (rec.length / std::cos(0.5 * theta)) * exp_axis(0.5 * (M_PI - theta), e_ij / rec.length);
  double res = (E - rhs).norm() / E.norm();

  // Transport: conjugation by E^{-1} maps -n_i to n_j and the plane of face i
  // onto the plane of face j.
  const Vec3& ni = net.face_normal(f);
  const Vec3& nj = net.face_normal(j);
  const Quaternion minus_ni = Quaternion::pure(-ni);
  res = std::max(res, (conjugate_by(E, minus_ni) - Quaternion::pure(nj)).norm());

  const Vec3 in_plane = ni.cross(e_ij).normalized();
  const Quaternion moved = conjugate_by(E, Quaternion::pure(in_plane));
  res = std::max(res, std::abs(moved.imag().dot(nj)));
  res = std::max(res, (conjugate_by(E, Quaternion::pure(e_ij)) - Quaternion::pure(e_ij)).norm() /
                          rec.length);
  return res;
}

FaceScalarField steiner_offset_check(const FaceEdgeNet& net, double t) {
  const int nf = net.face_count();
  const FaceCurvature curv = face_mean_curvature(net);
  FaceScalarField err(nf);

  for (int f = 0; f < nf; ++f) {
    const auto& tri = net.face_vertices(f);
    // 2D orthonormal frame in the face plane.
    const Vec3& p0 = net.position(tri[0]);
    const Vec3 u = (net.position(tri[1]) - p0).normalized();
    const Vec3 v = net.face_normal(f).cross(u);
    Eigen::Vector2d q[3];
    for (int s = 0; s < 3; ++s) {
      const Vec3 d = net.position(tri[s]) - p0;
      q[s] = {d.dot(u), d.dot(v)};
    }

    // Each edge line is displaced outward by t * tan(theta/2); the offset face
    // is the triangle bounded by the displaced lines (exact corner terms give
    // the O(t^2) remainder of the expansion).
    Eigen::Vector2d normal[3];
    double offset[3];
    for (int s = 0; s < 3; ++s) {
      const Eigen::Vector2d a = q[s];
      const Eigen::Vector2d b = q[(s + 1) % 3];
      const Eigen::Vector2d dir = (b - a).normalized();
      normal[s] = {dir.y(), -dir.x()};  // outward for CCW polygons
      offset[s] = normal[s].dot(a) + t * std::tan(0.5 * net.dihedral_angle(f, s));
    }
    Eigen::Vector2d corner[3];
    for (int s = 0; s < 3; ++s) {
      const int sp = (s + 2) % 3;  // lines sp and s meet at corner s
      Eigen::Matrix2d m;
      m.row(0) = normal[sp];
      m.row(1) = normal[s];
      corner[s] = m.inverse() * Eigen::Vector2d(offset[sp], offset[s]);
    }
    double area_t = 0.0;
    for (int s = 0; s < 3; ++s) {
      const auto& a = corner[s];
      const auto& b = corner[(s + 1) % 3];
      area_t += 0.5 * (a.x() * b.y() - a.y() * b.x());
    }
    const double a0 = net.face_area(f);
    err[f] = std::abs(area_t - a0 * (1.0 + curv.density[f] * t)) / a0;
  }
  return err;
}

} // namespace spinmesh
