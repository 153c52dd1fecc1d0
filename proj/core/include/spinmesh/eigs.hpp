#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <vector>

namespace spinmesh {

struct RealEigenPair {
  double value = 0.0;
  Eigen::VectorXd vector;
  double residual = 0.0;
};

struct SymEigsOptions {
  int k = 1;
  double sigma = 0.0;        // eigenpairs nearest this shift are returned
  double tol = 1e-10;        // relative residual tolerance
  int max_iterations = 400;
  int subspace_pad = 8;
  std::uint64_t seed = 12345;
};

// Eigenpairs of S x = lambda B x nearest opts.sigma, for symmetric sparse S
// and diagonal SPD B (pass b_diag of all ones for a standard problem).
// Shift-invert subspace iteration with sparse LU of (S - sigma B); restarts
// with a small random perturbation on stagnation. Throws SolverError on
// non-convergence, reporting the best residual reached.
std::vector<RealEigenPair> smallest_sym_eigs(const Eigen::SparseMatrix<double>& S,
                                             const Eigen::VectorXd& b_diag,
                                             const SymEigsOptions& opts);

} // namespace spinmesh
