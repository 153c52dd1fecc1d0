#pragma once

#include <vector>

#include "spinmesh/net.hpp"

namespace spinmesh {

// Per-vertex R^3 data (reconstructed positions f~); cell areas live on the net.
using VertexField = std::vector<Vec3>;

// R^3-valued alternating discrete 1-form, stored once per undirected edge
// along the canonical direction; value(j,i) = -value(i,j) exactly.
class EdgeOneForm {
public:
  EdgeOneForm(const FaceEdgeNet& net, std::vector<Vec3> canonical)
      : net_(&net), canonical_(std::move(canonical)) {}

  static EdgeOneForm zero(const FaceEdgeNet& net) {
    return EdgeOneForm(net, std::vector<Vec3>(net.edge_count(), Vec3::Zero()));
  }
  // Im E per edge.
  static EdgeOneForm from_hyperedges(const HyperedgeField& E);
  // Exact 1-form (grad f)(v -> v') = f_v' - f_v.
  static EdgeOneForm gradient_of(const FaceEdgeNet& net, const VertexField& f);

  const FaceEdgeNet& net() const { return *net_; }
  int edge_count() const { return static_cast<int>(canonical_.size()); }
  const Vec3& canonical(int e) const { return canonical_[e]; }
  Vec3& canonical(int e) { return canonical_[e]; }

  // Value on side s of face f (the face's traversal direction).
  Vec3 at(int f, int s) const {
    const auto& side = net_->side(f, s);
    return side.sign > 0 ? canonical_[side.edge] : Vec3(-canonical_[side.edge]);
  }

private:
  const FaceEdgeNet* net_;
  std::vector<Vec3> canonical_;
};

// Result of applying a spin transformation to hyperedges and normals.
struct TransformedNet {
  HyperedgeField hyperedges;   // E~_ij = conj(phi_i) E_ij phi_j
  std::vector<Vec3> normals;   // n~_i = phi_i^{-1} n_i phi_i
};

// Throws GeometryError if any phi_i is zero.
TransformedNet transform_hyperedges(const HyperedgeField& E, const SpinField& phi);

// Cotangent-weighted divergence: per vertex, sum of outbound w_e * e~.
VertexField divergence_of_edges(const FaceEdgeNet& metric, const EdgeOneForm& form);

// Solves the cotangent Poisson system for positions with zero-mean pinning of
// the translation kernel. If the form is exact the gradient of the result
// matches it edge-wise to solver tolerance; otherwise the result is the
// least-squares-closest potential (harmonic/co-exact parts are dropped).
VertexField integrate_edges(const FaceEdgeNet& metric, const EdgeOneForm& form);

// max over edges |e~_ij - (f_v' - f_v)| / mean |e~|.
double integrability_residual(const HyperedgeField& transformed, const VertexField& positions);

struct RebuildResult {
  FaceEdgeNet net;
  double normal_discrepancy = 0.0;   // max angle (radians) between transformed
                                     // and geometric normals
  double edge_constraint_residual = 0.0;
};

// New net with the reconstructed positions and the source combinatorics;
// geometric normals are used (valid by construction for triangles) and their
// angular discrepancy to the transformed normals is reported.
RebuildResult rebuild_net(const FaceEdgeNet& source, const TransformedNet& transformed,
                          const VertexField& positions);

} // namespace spinmesh
