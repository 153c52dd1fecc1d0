#include "spinmesh/eigs.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "spinmesh/errors.hpp"

namespace spinmesh {

namespace {

// B-inner modified Gram-Schmidt, run twice for stability. Columns that
// collapse are replaced with fresh random data and re-orthogonalized.
void b_orthonormalize(Eigen::MatrixXd& x, const Eigen::VectorXd& b, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto bdot = [&](const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    return u.dot(b.cwiseProduct(v));
  };
  for (int c = 0; c < x.cols(); ++c) {
    for (int attempt = 0; attempt < 8; ++attempt) {
      for (int pass = 0; pass < 2; ++pass)
        for (int p = 0; p < c; ++p)
          x.col(c) -= bdot(x.col(p), x.col(c)) * x.col(p);
      const double n = std::sqrt(std::max(bdot(x.col(c), x.col(c)), 0.0));
      if (n > 1e-12 * std::sqrt(static_cast<double>(x.rows()))) {
        x.col(c) /= n;
        break;
      }
      for (int r = 0; r < x.rows(); ++r) x(r, c) = gauss(rng);
    }
  }
}

} // namespace

std::vector<RealEigenPair> smallest_sym_eigs(const Eigen::SparseMatrix<double>& S,
                                             const Eigen::VectorXd& b_diag,
                                             const SymEigsOptions& opts) {
  using SpMat = Eigen::SparseMatrix<double>;
  const int n = static_cast<int>(S.rows());
  if (opts.k < 1 || opts.k > n) throw SolverError("smallest_sym_eigs: bad eigenpair count");

  int m = std::min(n, opts.k + opts.subspace_pad);
  const int m_cap = std::min(n, opts.k + std::max(opts.subspace_pad, 96));
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Row scale of S for relative residuals.
  double row_scale = 0.0;
  for (int col = 0; col < S.outerSize(); ++col) {
    double acc = 0.0;
    for (SpMat::InnerIterator it(S, col); it; ++it) acc += std::abs(it.value());
    row_scale = std::max(row_scale, acc);
  }
  if (row_scale == 0.0) row_scale = 1.0;

  // Factor S - sigma B; on singular or unstable factorization, back off the
  // shift progressively (shift-invert on a near-singular pencil is fine, an
  // exactly reported-singular LU is not).
  Eigen::SparseLU<SpMat> lu;
  double sigma = opts.sigma;
  double bump = 1e-10 * row_scale / b_diag.maxCoeff();
  for (int attempt = 0;; ++attempt) {
    SpMat shifted = S;
    if (sigma != 0.0) {
      SpMat bs(n, n);
      std::vector<Eigen::Triplet<double>> trip;
      trip.reserve(n);
      for (int i = 0; i < n; ++i) trip.emplace_back(i, i, b_diag[i]);
      bs.setFromTriplets(trip.begin(), trip.end());
      shifted = S - sigma * bs;
    }
    lu.compute(shifted);
    if (lu.info() == Eigen::Success) break;
    if (attempt >= 4) throw SolverError("smallest_sym_eigs: factorization failed repeatedly");
    sigma = opts.sigma + bump;
    bump *= 1e3;
  }

  Eigen::MatrixXd x(n, m);
  for (int c = 0; c < m; ++c)
    for (int r = 0; r < n; ++r) x(r, c) = gauss(rng);
  b_orthonormalize(x, b_diag, rng);

  Eigen::VectorXd ritz(m);
  Eigen::MatrixXd residual_num;
  double best = std::numeric_limits<double>::infinity();
  int since_improved = 0;

  const auto apply_shift_invert = [&](Eigen::MatrixXd& y) {
    for (int c = 0; c < m; ++c) y.col(c) = lu.solve(b_diag.cwiseProduct(y.col(c)).eval());
    if (!y.allFinite()) {
      // Singular direction blow-up: replace broken columns and continue.
      for (int c = 0; c < m; ++c) {
        if (!y.col(c).allFinite())
          for (int r = 0; r < n; ++r) y(r, c) = gauss(rng);
      }
    }
    b_orthonormalize(y, b_diag, rng);
  };

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    // Two shift-invert applications per sweep: the squared operator has a
    // positive spectrum, so magnitude-tied eigenvalues of opposite sign
    // (common for Dirac-type pencils) cannot make the subspace oscillate.
    Eigen::MatrixXd y = x;
    apply_shift_invert(y);
    apply_shift_invert(y);

    // Rayleigh-Ritz on the pencil restricted to span(y).
    Eigen::MatrixXd sy = S * y;
    Eigen::MatrixXd t = y.transpose() * sy;
    t = 0.5 * (t + t.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    if (es.info() != Eigen::Success) throw SolverError("smallest_sym_eigs: dense Ritz step failed");

    // Order Ritz pairs by distance to the target shift.
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int bidx) {
      return std::abs(es.eigenvalues()[a] - opts.sigma) < std::abs(es.eigenvalues()[bidx] - opts.sigma);
    });
    Eigen::MatrixXd z(m, m);
    for (int c = 0; c < m; ++c) z.col(c) = es.eigenvectors().col(order[c]);
    for (int c = 0; c < m; ++c) ritz[c] = es.eigenvalues()[order[c]];
    x = y * z;

    // Residuals of the leading k pairs.
    double worst = 0.0;
    for (int c = 0; c < opts.k; ++c) {
      const Eigen::VectorXd r =
          S * x.col(c) - ritz[c] * b_diag.cwiseProduct(x.col(c));
      worst = std::max(worst, r.norm() / (row_scale * x.col(c).norm()));
    }
    if (worst < opts.tol) {
      std::vector<RealEigenPair> out(opts.k);
      for (int c = 0; c < opts.k; ++c) {
        out[c].value = ritz[c];
        out[c].vector = x.col(c);
        const Eigen::VectorXd r =
            S * x.col(c) - ritz[c] * b_diag.cwiseProduct(x.col(c));
        out[c].residual = r.norm() / (row_scale * x.col(c).norm());
      }
      return out;
    }
    if (worst < 0.7 * best) {
      best = worst;
      since_improved = 0;
    } else if (++since_improved > 8) {
      since_improved = 0;
      if (m < m_cap) {
        // Constant residual usually means the subspace boundary cuts through
        // a degenerate +/- eigenvalue shell; widen until the shell fits.
        const int grown = std::min(m_cap, m + 12);
        Eigen::MatrixXd wider(n, grown);
        wider.leftCols(m) = x;
        for (int c = m; c < grown; ++c)
          for (int r = 0; r < n; ++r) wider(r, c) = gauss(rng);
        m = grown;
        x = std::move(wider);
        ritz.resize(m);
        b_orthonormalize(x, b_diag, rng);
      } else {
        // Jiggle the unconverged trailing part of the basis.
        for (int c = opts.k; c < m; ++c)
          for (int r = 0; r < n; ++r) x(r, c) += 1e-6 * gauss(rng);
        b_orthonormalize(x, b_diag, rng);
      }
    }
  }
  throw SolverError("smallest_sym_eigs: no convergence after " +
                    std::to_string(opts.max_iterations) +
                    " iterations (best residual " + std::to_string(best) + ")");
}

} // namespace spinmesh
