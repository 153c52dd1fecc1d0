#pragma once

#include <Eigen/Core>
#include <array>
#include <vector>

#include "spinmesh/mesh_data.hpp"
#include "spinmesh/quaternion.hpp"

namespace spinmesh {

// One real value per face (h, H, A, rho, lambda, targets, ...).
using FaceScalarField = Eigen::VectorXd;

// One quaternion per face.
using SpinField = std::vector<Quaternion>;

// Face edge-constraint net over a closed, oriented, connected triangle mesh.
// Immutable after construction; all queries are read-only.
//
// Directed edges follow the paper-side convention: e_ij is the edge of face i
// shared with face j, traversed in face i's counter-clockwise order, so
// e_ji = -e_ij exactly. Each undirected edge is stored once along a canonical
// direction; twin access negates.
class FaceEdgeNet {
public:
  struct Edge {
    int va = -1, vb = -1;          // canonical direction va -> vb
    int face_left = -1;            // face traversing va -> vb
    int face_right = -1;           // face traversing vb -> va
    int opp_left = -1;             // vertex of face_left opposite this edge
    int opp_right = -1;
    double length = 0.0;
    double dihedral = 0.0;         // bending angle theta_ij, positive if convex
    double cot_weight = 0.0;       // 1/2 (cot alpha + cot beta)
  };

  struct Side {
    int edge = -1;       // undirected edge index
    int neighbor = -1;   // adjacent face
    int sign = 0;        // +1 if this face traverses the canonical direction
  };

  // Validates closedness, manifoldness, consistent winding, connectivity and
  // non-degeneracy; computes geometric normals, areas, dihedrals and cotangent
  // weights. Throws TopologyError / GeometryError naming the offending simplex.
  static FaceEdgeNet build(const MeshData& mesh);

  int vertex_count() const { return static_cast<int>(positions_.size()); }
  int face_count() const { return static_cast<int>(faces_.size()); }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  // 2 - 2g = V - E + F for closed connected surfaces.
  int genus() const { return (2 - (vertex_count() - edge_count() + face_count())) / 2; }

  const std::vector<Vec3>& positions() const { return positions_; }
  const Vec3& position(int v) const { return positions_[v]; }
  const std::array<int, 3>& face_vertices(int f) const { return faces_[f]; }
  const Vec3& face_normal(int f) const { return normals_[f]; }
  double face_area(int f) const { return areas_[f]; }
  const FaceScalarField& face_areas() const { return areas_; }
  Vec3 face_centroid(int f) const;
  double vertex_area(int v) const { return vertex_areas_[v]; }
  const Eigen::VectorXd& vertex_areas() const { return vertex_areas_; }
  double total_area() const { return total_area_; }
  double mean_edge_length() const { return mean_edge_length_; }
  double bbox_diagonal() const { return bbox_diagonal_; }

  const Edge& edge(int e) const { return edges_[e]; }
  const Side& side(int f, int s) const { return sides_[f][s]; }
  // Index of the side of `face` adjacent to `neighbor`, -1 if not adjacent.
  int find_side(int face, int neighbor) const;

  // Start/end vertices of side s in face f's traversal order.
  int side_start_vertex(int f, int s) const { return faces_[f][s]; }
  int side_end_vertex(int f, int s) const { return faces_[f][(s + 1) % 3]; }

  // e_ij for side s of face f (exact twin antisymmetry).
  Vec3 edge_vector(int f, int s) const;

  // Signed bending angle theta_ij in (-pi, pi); theta_ij = theta_ji.
  double dihedral_angle(int f, int s) const { return edges_[sides_[f][s].edge].dihedral; }
  double dihedral_angle_between(int i, int j) const;

  // H_ij = |e_ij| tan(theta_ij / 2). Throws GeometryError within 1e-6 of a fold.
  double integrated_edge_curvature(int f, int s) const;
  double integrated_edge_curvature_between(int i, int j) const;
  double integrated_edge_curvature_edge(int e) const;

  MeshData mesh() const { return MeshData{positions_, faces_}; }

  // Number of cotangent values clamped at |cot| = 1e8 during construction.
  int cot_clamp_count() const { return cot_clamp_count_; }

private:
  FaceEdgeNet() = default;

  std::vector<Vec3> positions_;
  std::vector<std::array<int, 3>> faces_;
  std::vector<Vec3> normals_;
  FaceScalarField areas_;
  Eigen::VectorXd vertex_areas_;
  std::vector<Edge> edges_;
  std::vector<std::array<Side, 3>> sides_;
  double total_area_ = 0.0;
  double mean_edge_length_ = 0.0;
  double bbox_diagonal_ = 0.0;
  int cot_clamp_count_ = 0;
};

// Integrated (H_i) and density (h_i = H_i / A_i) mean curvature per face.
struct FaceCurvature {
  FaceScalarField integrated;
  FaceScalarField density;
};

FaceCurvature face_mean_curvature(const FaceEdgeNet& net);

// Quaternion per directed edge, E_ij = H_ij + e_ij, stored once per undirected
// edge along its canonical direction; conj(E_ij) = E_ji holds exactly.
class HyperedgeField {
public:
  static HyperedgeField from_canonical(const FaceEdgeNet& net, std::vector<Quaternion> canonical);

  const FaceEdgeNet& net() const { return *net_; }
  int edge_count() const { return static_cast<int>(canonical_.size()); }
  const Quaternion& canonical(int e) const { return canonical_[e]; }

  // E_ij for side s of face f.
  Quaternion at(int f, int s) const {
    const auto& side = net_->side(f, s);
    return side.sign > 0 ? canonical_[side.edge] : canonical_[side.edge].conj();
  }

  // (D_X 1)_i = sum_j E_ij; real part H_i, imaginary part 0 on a source net.
  Quaternion sum_over_face(int f) const {
    Quaternion acc;
    for (int s = 0; s < 3; ++s) acc += at(f, s);
    return acc;
  }

private:
  const FaceEdgeNet* net_ = nullptr;
  std::vector<Quaternion> canonical_;
};

HyperedgeField hyperedges(const FaceEdgeNet& net);

// Max residual of the polar identity
//   E_ij = (|e_ij| / cos(theta_ij/2)) exp(((pi - theta_ij)/2) u_ij)
// and of the transport property of conjugation by E_ij^{-1} (face-i vectors to
// face j, -n_i to n_j) on side s of face f.
double hyperedge_polar_identity(const FaceEdgeNet& net, int f, int s);

// Per-face relative error |A_i^(t) - A_i (1 + h_i t)| / A_i of the unit-normal
// offset construction; shrinks as O(t^2).
FaceScalarField steiner_offset_check(const FaceEdgeNet& net, double t);

} // namespace spinmesh
