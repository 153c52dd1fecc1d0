#pragma once

#include <Eigen/Sparse>
#include <vector>

#include "spinmesh/eigs.hpp"
#include "spinmesh/net.hpp"

namespace spinmesh {

// Quaternionic sparse operator over faces; each block is the 4x4 real
// left-multiplication matrix M[q] of its quaternion entry. Self-adjoint
// operators have q_ji = conj(q_ij), which makes the real matrix exactly
// symmetric since M[conj(q)] = M[q]^T.
class QuaternionSparseMatrix {
public:
  struct Entry {
    int col;
    Quaternion value;
  };

  explicit QuaternionSparseMatrix(int dimension) : rows_(dimension) {}

  int quaternion_dimension() const { return static_cast<int>(rows_.size()); }
  const std::vector<Entry>& row(int i) const { return rows_[i]; }

  void add(int i, int j, const Quaternion& q) { rows_[i].push_back({j, q}); }

  // Structural self-adjointness: every block (j,i) equals conj of block (i,j),
  // bitwise.
  bool is_symmetric() const;

  // y_i = sum_j q_ij phi_j.
  SpinField apply(const SpinField& phi) const;

  // Real 4n x 4n matrix in face-major (w,x,y,z) coordinates.
  Eigen::SparseMatrix<double> to_real() const;

private:
  std::vector<std::vector<Entry>> rows_;
};

// (D_X phi)_i = sum_j E_ij phi_j; zero diagonal.
QuaternionSparseMatrix assemble_intrinsic(const FaceEdgeNet& net, const HyperedgeField& E);

// (D_e phi)_i = sum_j E_ij (phi_j - phi_i) = (D_X phi)_i - H_i phi_i.
QuaternionSparseMatrix assemble_extrinsic(const FaceEdgeNet& net, const HyperedgeField& E);

// D_rho = D_X - diag(rho_i A_i); the area weight on the shift makes
// D_rho phi = 0 equivalent to D_X phi = rho A phi.
QuaternionSparseMatrix assemble_shifted(const FaceEdgeNet& net, const HyperedgeField& E,
                                        const FaceScalarField& rho);

struct EigenPair {
  double value = 0.0;       // gamma
  SpinField vector;         // phi, gauge-fixed
  double residual = 0.0;    // ||D phi - gamma A phi||_{A^-1} / ||phi||_A
};

struct DiracEigsOptions {
  double tol = 1e-10;
  int max_iterations = 400;
  std::uint64_t seed = 12345;
};

// k smallest-magnitude generalized eigenpairs of D phi = gamma A phi, one per
// quaternionic line (right-multiplication gauge grouped and fixed so the
// area-weighted mean of phi is a positive real).
std::vector<EigenPair> smallest_eigenpairs(const QuaternionSparseMatrix& D,
                                           const FaceScalarField& areas, int k,
                                           const DiracEigsOptions& opts = {});

// Rotates phi by a constant unit right factor so that sum_i A_i phi_i becomes
// a positive real multiple of 1; returns the factor applied.
Quaternion gauge_fix(SpinField& phi, const FaceScalarField& areas);

// Flattened real coordinates (w,x,y,z per face) and back.
Eigen::VectorXd to_coords(const SpinField& phi);
SpinField from_coords(const Eigen::VectorXd& v);

} // namespace spinmesh
