#pragma once

#include <Eigen/Sparse>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "spinmesh/net.hpp"
#include "spinmesh/topology.hpp"

namespace spinmesh {

struct SolveConfig {
  double alpha = 1.0;                 // regularization weight
  std::optional<double> beta;         // face-Laplacian weight; default 0.1 * mean face area
  // Area-distortion penalty (enabled when area_tolerance is finite).
  double area_tolerance = std::numeric_limits<double>::infinity();
  double area_multiplier = 1.0;       // uniform lambda
  Eigen::VectorXd area_multipliers;   // per-face lambda, overrides the uniform value when sized
  // Reference area distribution for the penalty; empty means the carrier net's
  // own areas (no accumulated distortion).
  Eigen::VectorXd penalty_reference_areas;
  bool enforce_closedness = false;
  bool enforce_exactness = false;
  double linear_solver_tolerance = 1e-10;
  int max_iterations = 50;

  double resolved_beta(const FaceEdgeNet& net) const {
    return beta ? *beta : 0.1 * net.total_area() / net.face_count();
  }
  bool area_penalty_enabled() const { return std::isfinite(area_tolerance); }
  Eigen::VectorXd resolved_multipliers(int face_count) const {
    if (area_multipliers.size() > 0) return area_multipliers;
    return Eigen::VectorXd::Constant(face_count, area_multiplier);
  }
};

// rho_i = h_bar_i * sqrt(A_bar_i / A_i). Throws on non-positive areas.
FaceScalarField prescribe_rho(const FaceScalarField& h_bar, const FaceScalarField& A_bar,
                              const FaceScalarField& A);

// Dual-graph Laplacian over faces: off-diagonal -|e_ij| / dist(centroids),
// diagonal the negated row sum. PSD, constants in the kernel.
Eigen::SparseMatrix<double> face_laplacian(const FaceEdgeNet& net);

// Implicit low-pass over faces: (A + strength L_f)^{-1} (A field); preserves
// the area-weighted mean.
FaceScalarField filter_face_field(const FaceEdgeNet& net, const FaceScalarField& field,
                                  double strength);

// Appendix-style linearized area-distortion penalty around phi:
//   1/2 Psi^T Q Psi - F^T Psi  with  Q = 16 (blockdiag(Q_i Q_i^T) + low rank).
struct AreaPenaltyTerms {
  std::vector<Vec4> diag_vectors;  // Q_i per face
  Eigen::MatrixXd low_rank;        // columns L1, L2, L3 (4n x 3)
  Eigen::VectorXd linear;          // F (4n)
  Eigen::VectorXd log_distortion;  // s_i at the linearization point
};

AreaPenaltyTerms area_penalty_terms(const FaceEdgeNet& net, const SpinField& phi,
                                    const FaceScalarField& lambda,
                                    const FaceScalarField& current_areas,
                                    const FaceScalarField& reference_areas = {});

// Sparse core plus symmetric low-rank update, solved through the Woodbury
// identity: (S + U C U^T)^{-1} b from one factorization of S and a small dense
// capacitance solve. Degenerate low-rank combinations are compressed to a
// non-degenerate basis first; a singular capacitance falls back to its
// pseudo-inverse with a warning flag.
class PenalizedSystem {
public:
  PenalizedSystem(const Eigen::SparseMatrix<double>& sparse_core, const Eigen::MatrixXd& u,
                  const Eigen::MatrixXd& core);

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  bool used_pseudo_inverse() const { return used_pseudo_inverse_; }

private:
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> factor_;
  Eigen::MatrixXd reduced_u_;        // 4n x r, orthonormal columns
  Eigen::MatrixXd capacitance_inv_;  // r x r
  bool used_pseudo_inverse_ = false;
};

struct SpinSolveResult {
  SpinField phi;
  double objective = 0.0;              // quadratic objective at phi
  double objective_at_identity = 0.0;  // same objective at phi == 1
  double max_closedness_residual = 0.0;
  int relinearizations = 0;
  std::vector<std::string> warnings;
};

// Minimizes phi^T (D_rho A^{-1} D_rho) phi + alpha (phi-1)^T R (phi-1) with
// R = A + beta L_f applied blockwise, plus the linearized area penalty when
// enabled. Projects the rho update through the exactness projector when given,
// optionally projects the result onto the closedness constraint manifold, and
// gauge-fixes the area-weighted mean to a positive real.
SpinSolveResult solve_spin(const FaceEdgeNet& net, const HyperedgeField& E,
                           const FaceScalarField& rho, const SolveConfig& config,
                           const ExactnessProjector* projector = nullptr);

// Per-face |Im(conj(phi_i) (D_X phi)_i)| normalized by the spec denominator
// |phi_i| |(D_X phi)_i| plus the transformed face perimeter (which carries the
// closure-defect scale when the target curvature vanishes).
FaceScalarField closedness_residual(const FaceEdgeNet& net, const HyperedgeField& E,
                                    const SpinField& phi);

// Newton projection onto the linearized closedness constraints
// Im(conj(phi_i) (D_X phi)_i) = 0; iterates until the max residual drops below
// the target (default well under 1e-6). Throws SolverError on stagnation.
SpinField enforce_closedness(const FaceEdgeNet& net, const HyperedgeField& E, const SpinField& phi,
                             double target = 1e-8, int max_iterations = 30);

// The two Eq-QP terms at phi (no penalty), for monotonicity checks.
double spin_objective(const FaceEdgeNet& net, const HyperedgeField& E, const FaceScalarField& rho,
                      double alpha, double beta, const SpinField& phi);

} // namespace spinmesh
