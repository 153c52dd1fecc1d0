#pragma once

#include <Eigen/Sparse>
#include <vector>

#include "spinmesh/integrate.hpp"
#include "spinmesh/net.hpp"

namespace spinmesh {

// Real-valued alternating 1-form over edges.
class ScalarOneForm {
public:
  ScalarOneForm(const FaceEdgeNet& net, Eigen::VectorXd canonical)
      : net_(&net), canonical_(std::move(canonical)) {}

  const FaceEdgeNet& net() const { return *net_; }
  const Eigen::VectorXd& canonical() const { return canonical_; }

  double at(int f, int s) const {
    const auto& side = net_->side(f, s);
    return side.sign > 0 ? canonical_[side.edge] : -canonical_[side.edge];
  }

private:
  const FaceEdgeNet* net_;
  Eigen::VectorXd canonical_;
};

// [curl g](i) = sum_{j in N(i)} g_ij.
Eigen::VectorXd curl(const FaceEdgeNet& net, const ScalarOneForm& form);
std::vector<Vec3> curl(const FaceEdgeNet& net, const EdgeOneForm& form);

// Cotangent-weighted edge inner product <g|g~>_1 = sum_e w_e g_e g~_e.
double one_form_inner(const FaceEdgeNet& net, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct HarmonicBasis {
  std::vector<ScalarOneForm> forms;  // closed, divergence-free, <.|.>_1-orthonormal
  int betti() const { return static_cast<int>(forms.size()); }
};

// Null space of the graph Helmholtzian, dimension b1 = 2 * genus, with an
// explicit eigen-gap check between the null cluster and the first nonzero
// eigenvalue. Throws SolverError on an ambiguous gap.
HarmonicBasis helmholtzian_nullspace(const FaceEdgeNet& net);

// Orthonormalized (area-weighted) span of the constraint fields that stop a
// rho update from generating harmonic (non-exact) edge components.
//
// With alpha <= 0 these are the imaginary components z^k_nu of the fields
// solving D_e z^k = curl(w E omega^k) with the constant kernel deflated. For
// alpha > 0 the same adjoint derivation is carried through the regularized
// quadratic operator K = D_e A^{-1} D_e + alpha R actually used by the spin
// solve, giving (D_e K^{-1} curl(w E omega^k) nu)_w / A; this reduces to the
// z fields as alpha -> 0 and cancels what the regularized solve really
// produces.
struct ExactnessProjector {
  std::vector<FaceScalarField> fields;  // at most 3 * b1, orthonormal
  FaceScalarField areas;                // inner-product weights
  bool empty() const { return fields.empty(); }
};

ExactnessProjector exactness_constraint_vectors(const FaceEdgeNet& net, const HyperedgeField& E,
                                                const HarmonicBasis& basis, double alpha = 1.0,
                                                double beta = -1.0 /* 0.1 x mean face area */);

// delta_rho minus its projection onto the projector span (area-weighted).
FaceScalarField project_rho_update(const FaceScalarField& delta_rho,
                                   const ExactnessProjector& projector);

// Re(nu sum_eps w_eps E~_eps omega^k_eps) for nu in {i,j,k}; row k, column nu.
// The magnitudes measure the harmonic obstruction to exactness.
Eigen::MatrixXd exactness_residual(const HyperedgeField& transformed, const HarmonicBasis& basis,
                                   const Eigen::VectorXd& cot_weights);

} // namespace spinmesh
