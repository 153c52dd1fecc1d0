#include "spinmesh/spin.hpp"

#include <Eigen/QR>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <cmath>

#include "spinmesh/dirac.hpp"
#include "spinmesh/errors.hpp"

namespace spinmesh {

namespace {

// L_f (x) I_4 in face-major coordinates.
Eigen::SparseMatrix<double> kron_identity4(const Eigen::SparseMatrix<double>& m) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(4 * m.nonZeros());
  for (int c = 0; c < m.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, c); it; ++it)
      for (int b = 0; b < 4; ++b)
        trip.emplace_back(4 * static_cast<int>(it.row()) + b, 4 * static_cast<int>(it.col()) + b,
                          it.value());
  Eigen::SparseMatrix<double> out(4 * m.rows(), 4 * m.cols());
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

Eigen::VectorXd transformed_perimeters(const FaceEdgeNet& net, const HyperedgeField& E,
                                       const SpinField& phi) {
  Eigen::VectorXd p(net.face_count());
  for (int f = 0; f < net.face_count(); ++f) {
    double acc = 0.0;
    for (int s = 0; s < 3; ++s)
      acc += E.at(f, s).norm() * phi[net.side(f, s).neighbor].norm();
    p[f] = phi[f].norm() * acc;
  }
  return p;
}

} // namespace

FaceScalarField prescribe_rho(const FaceScalarField& h_bar, const FaceScalarField& A_bar,
                              const FaceScalarField& A) {
  if (h_bar.size() != A_bar.size() || h_bar.size() != A.size())
    throw Error("prescribe_rho: field size mismatch");
  FaceScalarField rho(h_bar.size());
  for (int i = 0; i < h_bar.size(); ++i) {
    if (!(A[i] > 0.0) || !(A_bar[i] > 0.0))
      throw GeometryError("prescribe_rho: non-positive area at face " + std::to_string(i));
    rho[i] = h_bar[i] * std::sqrt(A_bar[i] / A[i]);
  }
  return rho;
}

Eigen::SparseMatrix<double> face_laplacian(const FaceEdgeNet& net) {
  const int n = net.face_count();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(4 * net.edge_count());
  for (int e = 0; e < net.edge_count(); ++e) {
    const auto& rec = net.edge(e);
    const double dist = (net.face_centroid(rec.face_left) - net.face_centroid(rec.face_right)).norm();
    const double w = rec.length / dist;
    trip.emplace_back(rec.face_left, rec.face_right, -w);
    trip.emplace_back(rec.face_right, rec.face_left, -w);
    trip.emplace_back(rec.face_left, rec.face_left, w);
    trip.emplace_back(rec.face_right, rec.face_right, w);
  }
  Eigen::SparseMatrix<double> l(n, n);
  l.setFromTriplets(trip.begin(), trip.end());
  return l;
}

FaceScalarField filter_face_field(const FaceEdgeNet& net, const FaceScalarField& field,
                                  double strength) {
  if (strength < 0.0) throw Error("filter_face_field: negative strength");
  if (strength == 0.0) return field;
  Eigen::SparseMatrix<double> m = face_laplacian(net) * strength;
  for (int i = 0; i < net.face_count(); ++i) m.coeffRef(i, i) += net.face_area(i);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(m);
  if (solver.info() != Eigen::Success) throw SolverError("filter_face_field: factorization failed");
  return solver.solve(net.face_areas().cwiseProduct(field).eval());
}

AreaPenaltyTerms area_penalty_terms(const FaceEdgeNet& net, const SpinField& phi,
                                    const FaceScalarField& lambda,
                                    const FaceScalarField& current_areas,
                                    const FaceScalarField& reference_areas) {
  const int n = net.face_count();
  const FaceScalarField& ref = reference_areas.size() ? reference_areas : net.face_areas();
  if (static_cast<int>(phi.size()) != n || lambda.size() != n || current_areas.size() != n ||
      ref.size() != n)
    throw Error("area_penalty_terms: field size mismatch");

  AreaPenaltyTerms out;
  out.diag_vectors.resize(n);
  out.low_rank.setZero(4 * n, 3);
  out.linear.setZero(4 * n);
  out.log_distortion.resize(n);

  const double cur_total = current_areas.sum();
  const double mean_ratio = std::log((cur_total / n) / (ref.sum() / n));
  Eigen::VectorXd a(n);
  for (int i = 0; i < n; ++i) {
    if (!(current_areas[i] > 0.0) || !(ref[i] > 0.0))
      throw GeometryError("area_penalty_terms: non-positive area at face " + std::to_string(i));
    if (lambda[i] < 0.0)
      throw Error("area_penalty_terms: negative multiplier at face " + std::to_string(i));
    a[i] = current_areas[i] / cur_total;
    out.log_distortion[i] = std::log(current_areas[i] / ref[i]) - mean_ratio;
  }

  double sl_mean = 0.0, lam_mean = 0.0;
  for (int i = 0; i < n; ++i) {
    sl_mean += a[i] * out.log_distortion[i] * lambda[i];
    lam_mean += a[i] * lambda[i];
  }

  for (int i = 0; i < n; ++i) {
    if (phi[i].norm2() == 0.0)
      throw GeometryError("area_penalty_terms: zero spin quaternion at face " + std::to_string(i));
    const Vec4 q = phi[i].coeffs() / phi[i].norm2();
    out.diag_vectors[i] = std::sqrt(a[i] * lambda[i]) * q;
    out.low_rank.block<4, 1>(4 * i, 0) = a[i] * std::sqrt(lam_mean) * q;
    out.low_rank.block<4, 1>(4 * i, 1) = a[i] * lambda[i] * q;
    out.low_rank.block<4, 1>(4 * i, 2) = a[i] * q;
    out.linear.segment<4>(4 * i) =
        4.0 * (sl_mean - out.log_distortion[i] * lambda[i]) * a[i] * q;
  }
  return out;
}

PenalizedSystem::PenalizedSystem(const Eigen::SparseMatrix<double>& sparse_core,
                                 const Eigen::MatrixXd& u, const Eigen::MatrixXd& core) {
  factor_.compute(sparse_core);
  if (factor_.info() != Eigen::Success)
    throw SolverError("PenalizedSystem: sparse core factorization failed");
  if (u.cols() == 0) return;

  // Compress U C U^T to an orthonormal, non-degenerate basis (the raw rank-1
  // sum degenerates for instance when all multipliers are equal).
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(u);
  const Eigen::MatrixXd thin_q =
      qr.householderQ() * Eigen::MatrixXd::Identity(u.rows(), u.cols());
  Eigen::MatrixXd r = qr.matrixR().topRows(u.cols()).triangularView<Eigen::Upper>();
  r = r * qr.colsPermutation().transpose();
  Eigen::MatrixXd small = r * core * r.transpose();
  small = 0.5 * (small + small.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(small);
  const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
  std::vector<int> keep;
  for (int i = 0; i < small.rows(); ++i)
    if (std::abs(es.eigenvalues()[i]) > 1e-12 * scale && scale > 0.0) keep.push_back(i);
  if (keep.empty()) return;

  reduced_u_.resize(u.rows(), keep.size());
  Eigen::VectorXd d(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    reduced_u_.col(i) = thin_q * es.eigenvectors().col(keep[i]);
    d[i] = es.eigenvalues()[keep[i]];
  }

  // Capacitance K = D^{-1} + U^T S^{-1} U.
  Eigen::MatrixXd y(u.rows(), keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) y.col(i) = factor_.solve(reduced_u_.col(i));
  Eigen::MatrixXd k = d.cwiseInverse().asDiagonal();
  k += reduced_u_.transpose() * y;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(k);
  if (lu.isInvertible()) {
    capacitance_inv_ = lu.inverse();
  } else {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(k);
    capacitance_inv_ = cod.pseudoInverse();
    used_pseudo_inverse_ = true;
  }
}

Eigen::VectorXd PenalizedSystem::solve(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd x = factor_.solve(rhs);
  if (reduced_u_.cols() == 0) return x;
  const Eigen::VectorXd c = capacitance_inv_ * (reduced_u_.transpose() * x);
  return x - factor_.solve((reduced_u_ * c).eval());
}

FaceScalarField closedness_residual(const FaceEdgeNet& net, const HyperedgeField& E,
                                    const SpinField& phi) {
  const int n = net.face_count();
  FaceScalarField res(n);
  for (int f = 0; f < n; ++f) {
    Quaternion g;
    double perim = 0.0;
    for (int s = 0; s < 3; ++s) {
      const int j = net.side(f, s).neighbor;
      const Quaternion e = E.at(f, s);
      g += mul(e, phi[j]);
      perim += e.norm() * phi[j].norm();
    }
    const Quaternion w = mul(phi[f].conj(), g);
    const double den = phi[f].norm() * g.norm() + phi[f].norm() * perim;
    res[f] = den > 0.0 ? w.imag().norm() / den : 0.0;
  }
  return res;
}

SpinField enforce_closedness(const FaceEdgeNet& net, const HyperedgeField& E, const SpinField& phi0,
                             double target, int max_iterations) {
  const int n = net.face_count();
  SpinField phi = phi0;
  const Mat4 conj_flip = Vec4(1, -1, -1, -1).asDiagonal();

  double best = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < max_iterations; ++iter) {
    const double res = closedness_residual(net, E, phi).maxCoeff();
    if (res < target) return phi;
    best = std::min(best, res);

    const Eigen::VectorXd perim = transformed_perimeters(net, E, phi);
    Eigen::VectorXd c(3 * n);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(16 * 3 * n);
    for (int f = 0; f < n; ++f) {
      Quaternion g;
      for (int s = 0; s < 3; ++s) g += mul(E.at(f, s), phi[net.side(f, s).neighbor]);
      const Quaternion w = mul(phi[f].conj(), g);
      const double scale = 1.0 / perim[f];
      c.segment<3>(3 * f) = scale * w.imag();

      const Mat4 self_block = right_mul_matrix(g) * conj_flip;
      for (int r = 0; r < 3; ++r)
        for (int col = 0; col < 4; ++col)
          trip.emplace_back(3 * f + r, 4 * f + col, scale * self_block(r + 1, col));
      for (int s = 0; s < 3; ++s) {
        const int j = net.side(f, s).neighbor;
        const Mat4 nb_block = to_real_matrix(mul(phi[f].conj(), E.at(f, s)));
        for (int r = 0; r < 3; ++r)
          for (int col = 0; col < 4; ++col)
            trip.emplace_back(3 * f + r, 4 * j + col, scale * nb_block(r + 1, col));
      }
    }
    Eigen::SparseMatrix<double> j(3 * n, 4 * n);
    j.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseMatrix<double> jjt = (j * Eigen::SparseMatrix<double>(j.transpose())).pruned();
    double diag_mean = 0.0;
    for (int i = 0; i < 3 * n; ++i) diag_mean += jjt.coeff(i, i);
    diag_mean /= 3 * n;
    for (int i = 0; i < 3 * n; ++i) jjt.coeffRef(i, i) += 1e-12 * diag_mean;

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(jjt);
    if (solver.info() != Eigen::Success)
      throw SolverError("enforce_closedness: normal-equation factorization failed");
    const Eigen::VectorXd mu = solver.solve(c);
    const Eigen::VectorXd step = j.transpose() * mu;
    Eigen::VectorXd x = to_coords(phi) - step;
    phi = from_coords(x);
  }
  throw SolverError("enforce_closedness: no convergence after " +
                    std::to_string(max_iterations) + " iterations (best residual " +
                    std::to_string(best) + ")");
}

double spin_objective(const FaceEdgeNet& net, const HyperedgeField& E, const FaceScalarField& rho,
                      double alpha, double beta, const SpinField& phi) {
  const int n = net.face_count();
  double term1 = 0.0;
  for (int f = 0; f < n; ++f) {
    Quaternion y;
    for (int s = 0; s < 3; ++s) y += mul(E.at(f, s), phi[net.side(f, s).neighbor]);
    y -= rho[f] * net.face_area(f) * phi[f];
    term1 += y.norm2() / net.face_area(f);
  }
  double reg = 0.0;
  for (int f = 0; f < n; ++f)
    reg += net.face_area(f) * (phi[f] - Quaternion::identity()).norm2();
  for (int e = 0; e < net.edge_count(); ++e) {
    const auto& rec = net.edge(e);
    const double dist = (net.face_centroid(rec.face_left) - net.face_centroid(rec.face_right)).norm();
    const double w = rec.length / dist;
    reg += beta * w * (phi[rec.face_left] - phi[rec.face_right]).norm2();
  }
  return term1 + alpha * reg;
}

SpinSolveResult solve_spin(const FaceEdgeNet& net, const HyperedgeField& E,
                           const FaceScalarField& rho, const SolveConfig& config,
                           const ExactnessProjector* projector) {
  const int n = net.face_count();
  if (rho.size() != n) throw Error("solve_spin: rho size mismatch");
  if (!rho.allFinite()) throw Error("solve_spin: rho has non-finite entries");
  const double beta = config.resolved_beta(net);

  SpinSolveResult out;
  FaceScalarField rho_used = rho;
  if (config.enforce_exactness && projector && !projector->empty()) {
    const FaceScalarField h = face_mean_curvature(net).density;
    rho_used = h + project_rho_update(rho - h, *projector);
  }

  using SpMat = Eigen::SparseMatrix<double>;
  const SpMat D = assemble_shifted(net, E, rho_used).to_real();
  Eigen::VectorXd ainv(4 * n), adiag(4 * n);
  for (int i = 0; i < n; ++i) {
    ainv.segment<4>(4 * i).setConstant(1.0 / net.face_area(i));
    adiag.segment<4>(4 * i).setConstant(net.face_area(i));
  }
  const SpMat C = SpMat(D * ainv.asDiagonal()) * D;
  const SpMat Lf4 = kron_identity4(face_laplacian(net));

  SpMat base = 2.0 * C + (2.0 * config.alpha * beta) * Lf4;
  for (int i = 0; i < 4 * n; ++i) base.coeffRef(i, i) += 2.0 * config.alpha * adiag[i];

  const Eigen::VectorXd ones = to_coords(SpinField(n, Quaternion::identity()));
  const Eigen::VectorXd reg_rhs = 2.0 * config.alpha * adiag.cwiseProduct(ones);

  SpinField phi(n, Quaternion::identity());
  const Eigen::VectorXd lambda =
      config.area_penalty_enabled() ? config.resolved_multipliers(n) : Eigen::VectorXd();
  const int outer = config.area_penalty_enabled() ? 2 : 1;

  for (int m = 0; m < outer; ++m) {
    Eigen::VectorXd x;
    if (config.area_penalty_enabled()) {
      FaceScalarField cur(n);
      for (int i = 0; i < n; ++i) cur[i] = net.face_area(i) * phi[i].norm2() * phi[i].norm2();
      const AreaPenaltyTerms terms =
          area_penalty_terms(net, phi, lambda, cur, config.penalty_reference_areas);

      SpMat sys = base;
      std::vector<Eigen::Triplet<double>> dtrip;
      dtrip.reserve(16 * n);
      for (int i = 0; i < n; ++i) {
        const Mat4 block = 16.0 * terms.diag_vectors[i] * terms.diag_vectors[i].transpose();
        for (int r = 0; r < 4; ++r)
          for (int cidx = 0; cidx < 4; ++cidx)
            if (block(r, cidx) != 0.0) dtrip.emplace_back(4 * i + r, 4 * i + cidx, block(r, cidx));
      }
      SpMat dmat(4 * n, 4 * n);
      dmat.setFromTriplets(dtrip.begin(), dtrip.end());
      sys += dmat;

      const Eigen::MatrixXd u = 4.0 * terms.low_rank;
      Eigen::Matrix3d mid;
      mid << 1, 0, 0, 0, 0, -1, 0, -1, 0;
      PenalizedSystem system(sys, u, mid);
      if (system.used_pseudo_inverse())
        out.warnings.push_back("area penalty capacitance singular, pseudo-inverse used");

      const Eigen::VectorXd prev = to_coords(phi);
      Eigen::VectorXd rhs = reg_rhs + terms.linear;
      rhs += dmat * prev;
      rhs += u * (mid * (u.transpose() * prev));
      x = system.solve(rhs);
      ++out.relinearizations;
    } else if (4 * n <= 60000) {
      Eigen::SimplicialLDLT<SpMat> solver(base);
      if (solver.info() != Eigen::Success)
        throw SolverError("solve_spin: system factorization failed (singular system)");
      x = solver.solve(reg_rhs);
      if (solver.info() != Eigen::Success) throw SolverError("solve_spin: linear solve failed");
    } else {
      // Past the direct-factorization size, conjugate gradients with a
      // diagonal preconditioner.
      Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper,
                               Eigen::DiagonalPreconditioner<double>>
          cg(base);
      cg.setTolerance(config.linear_solver_tolerance);
      cg.setMaxIterations(std::max(1000, config.max_iterations * 100));
      x = cg.solve(reg_rhs);
      if (cg.info() != Eigen::Success)
        throw SolverError("solve_spin: conjugate gradient stalled at error " +
                          std::to_string(cg.error()));
    }
    if (!x.allFinite()) throw SolverError("solve_spin: non-finite solution");
    phi = from_coords(x);
  }

  double mean_norm = 0.0;
  for (const Quaternion& q : phi) mean_norm += q.norm();
  mean_norm /= n;
  if (!(mean_norm > 0.0))
    throw SolverError("solve_spin: zero solution (singular system)");
  for (int i = 0; i < n; ++i)
    if (phi[i].norm() < 1e-10 * mean_norm)
      throw SolverError("solve_spin: vanishing spin quaternion at face " + std::to_string(i));

  if (config.enforce_closedness)
    phi = enforce_closedness(net, E, phi, 1e-8, config.max_iterations);

  gauge_fix(phi, net.face_areas());
  out.max_closedness_residual = closedness_residual(net, E, phi).maxCoeff();
  out.objective = spin_objective(net, E, rho_used, config.alpha, beta, phi);
  out.objective_at_identity =
      spin_objective(net, E, rho_used, config.alpha, beta, SpinField(n, Quaternion::identity()));
  out.phi = std::move(phi);
  return out;
}

} // namespace spinmesh
