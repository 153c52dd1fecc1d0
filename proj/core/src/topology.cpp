#include "spinmesh/topology.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <cmath>
#include <optional>

#include "spinmesh/dirac.hpp"
#include "spinmesh/eigs.hpp"
#include "spinmesh/errors.hpp"
#include "spinmesh/spin.hpp"

namespace spinmesh {

Eigen::VectorXd curl(const FaceEdgeNet& net, const ScalarOneForm& form) {
  Eigen::VectorXd out(net.face_count());
  for (int f = 0; f < net.face_count(); ++f) {
    double acc = 0.0;
    for (int s = 0; s < 3; ++s) acc += form.at(f, s);
    out[f] = acc;
  }
  return out;
}

std::vector<Vec3> curl(const FaceEdgeNet& net, const EdgeOneForm& form) {
  std::vector<Vec3> out(net.face_count());
  for (int f = 0; f < net.face_count(); ++f) {
    Vec3 acc = Vec3::Zero();
    for (int s = 0; s < 3; ++s) acc += form.at(f, s);
    out[f] = acc;
  }
  return out;
}

double one_form_inner(const FaceEdgeNet& net, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double acc = 0.0;
  for (int e = 0; e < net.edge_count(); ++e) acc += net.edge(e).cot_weight * a[e] * b[e];
  return acc;
}

HarmonicBasis helmholtzian_nullspace(const FaceEdgeNet& net) {
  using SpMat = Eigen::SparseMatrix<double>;
  const int ne = net.edge_count();
  const int nv = net.vertex_count();
  const int nf = net.face_count();

  // Incidence operators: gradient G (edges x vertices) and face-cycle curl
  // C (faces x edges), both on canonical edge orientations.
  std::vector<Eigen::Triplet<double>> gt, ct;
  gt.reserve(2 * ne);
  for (int e = 0; e < ne; ++e) {
    gt.emplace_back(e, net.edge(e).vb, 1.0);
    gt.emplace_back(e, net.edge(e).va, -1.0);
  }
  SpMat G(ne, nv);
  G.setFromTriplets(gt.begin(), gt.end());

  ct.reserve(3 * nf);
  for (int f = 0; f < nf; ++f)
    for (int s = 0; s < 3; ++s)
      ct.emplace_back(f, net.side(f, s).edge, static_cast<double>(net.side(f, s).sign));
  SpMat C(nf, ne);
  C.setFromTriplets(ct.begin(), ct.end());

  Eigen::VectorXd w(ne), minv(nv), m2(nf);
  for (int e = 0; e < ne; ++e) w[e] = net.edge(e).cot_weight;
  for (int v = 0; v < nv; ++v) minv[v] = 1.0 / net.vertex_area(v);
  for (int f = 0; f < nf; ++f) m2[f] = net.face_area(f);

  // Normal-matrix form of the Helmholtzian kernel conditions: S is PSD with
  // ker S = ker(div) /\ ker(curl) for any sign pattern of the edge weights.
  const SpMat WG = w.asDiagonal() * G;
  const SpMat S = SpMat(WG * minv.asDiagonal() * SpMat(WG.transpose())) +
                  SpMat(SpMat(C.transpose()) * m2.asDiagonal() * C);

  const int probe = std::min(ne, 8);
  SymEigsOptions opts;
  opts.k = probe;
  opts.sigma = -1e-8 * S.diagonal().mean() - 1e-30;
  opts.tol = 1e-11;
  auto pairs = smallest_sym_eigs(S, Eigen::VectorXd::Ones(ne), opts);

  std::vector<double> lam(probe);
  for (int i = 0; i < probe; ++i) lam[i] = std::abs(pairs[i].value);

  const double ref = lam.back();
  int b1 = 0;
  while (b1 < probe - 1 && lam[b1] < 1e-10 * ref) ++b1;
  if (b1 > 0) {
    const double null_top = std::max(lam[b1 - 1], 1e-300);
    if (lam[b1] / null_top < 1e4)
      throw SolverError("helmholtzian_nullspace: ambiguous eigen-gap between " +
                        std::to_string(lam[b1 - 1]) + " and " + std::to_string(lam[b1]));
  }

  HarmonicBasis basis;
  std::vector<Eigen::VectorXd> ortho;
  for (int i = 0; i < b1; ++i) {
    Eigen::VectorXd v = pairs[i].vector;
    for (const auto& u : ortho) v -= one_form_inner(net, u, v) * u;
    const double n2 = one_form_inner(net, v, v);
    if (n2 <= 0.0)
      throw SolverError("helmholtzian_nullspace: indefinite edge metric on the harmonic space");
    v /= std::sqrt(n2);
    ortho.push_back(v);
    basis.forms.emplace_back(net, std::move(v));
  }
  return basis;
}

namespace {

// Solve D_e z = rhs with the 4-dimensional constant kernel deflated through a
// bordered system.
SpinField solve_extrinsic_deflated(const FaceEdgeNet& net, const HyperedgeField& E,
                                   const SpinField& rhs) {
  using SpMat = Eigen::SparseMatrix<double>;
  const int n = net.face_count();
  const SpMat De = assemble_extrinsic(net, E).to_real();

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(De.nonZeros() + 8 * n);
  for (int c = 0; c < De.outerSize(); ++c)
    for (SpMat::InnerIterator it(De, c); it; ++it)
      trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int i = 0; i < n; ++i) {
    for (int b = 0; b < 4; ++b) {
      trip.emplace_back(4 * i + b, 4 * n + b, scale);
      trip.emplace_back(4 * n + b, 4 * i + b, scale);
    }
  }
  SpMat K(4 * n + 4, 4 * n + 4);
  K.setFromTriplets(trip.begin(), trip.end());

  Eigen::SparseLU<SpMat> lu(K);
  if (lu.info() != Eigen::Success)
    throw SolverError("exactness_constraint_vectors: bordered D_e factorization failed");

  Eigen::VectorXd b(4 * n + 4);
  b.head(4 * n) = to_coords(rhs);
  b.tail(4).setZero();
  const Eigen::VectorXd x = lu.solve(b);
  if (lu.info() != Eigen::Success)
    throw SolverError("exactness_constraint_vectors: bordered D_e solve failed");
  return from_coords(x.head(4 * n));
}

} // namespace

ExactnessProjector exactness_constraint_vectors(const FaceEdgeNet& net, const HyperedgeField& E,
                                                const HarmonicBasis& basis, double alpha,
                                                double beta) {
  using SpMat = Eigen::SparseMatrix<double>;
  ExactnessProjector proj;
  proj.areas = net.face_areas();
  if (basis.betti() == 0) return proj;
  const int n = net.face_count();

  // Regularized solve operator (matches solve_spin's first-order map at the
  // fixed point); only built when alpha > 0.
  SpMat De;
  std::optional<Eigen::SimplicialLDLT<SpMat>> reg_solver;
  if (alpha > 0.0) {
    if (beta < 0.0) beta = 0.1 * net.total_area() / n;
    De = assemble_extrinsic(net, E).to_real();
    Eigen::VectorXd ainv(4 * n);
    for (int i = 0; i < n; ++i) ainv.segment<4>(4 * i).setConstant(1.0 / net.face_area(i));
    SpMat k = SpMat(De * ainv.asDiagonal()) * De;
    const SpMat lf = face_laplacian(net);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(4 * lf.nonZeros() + 4 * n);
    for (int c = 0; c < lf.outerSize(); ++c)
      for (SpMat::InnerIterator it(lf, c); it; ++it)
        for (int b = 0; b < 4; ++b)
          trip.emplace_back(4 * static_cast<int>(it.row()) + b,
                            4 * static_cast<int>(it.col()) + b, alpha * beta * it.value());
    for (int i = 0; i < n; ++i)
      for (int b = 0; b < 4; ++b) trip.emplace_back(4 * i + b, 4 * i + b, alpha * net.face_area(i));
    SpMat reg(4 * n, 4 * n);
    reg.setFromTriplets(trip.begin(), trip.end());
    k = k + reg;
    reg_solver.emplace(k);
    if (reg_solver->info() != Eigen::Success)
      throw SolverError("exactness_constraint_vectors: regularized operator factorization failed");
  }

  const Quaternion axes[3] = {{0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}};
  std::vector<FaceScalarField> raw;
  for (const ScalarOneForm& omega : basis.forms) {
    // c^k_i = sum_{j ~ i} w_ij E_ij omega_ij.
    SpinField c(n);
    for (int f = 0; f < n; ++f) {
      Quaternion acc;
      for (int s = 0; s < 3; ++s) {
        const double w = net.edge(net.side(f, s).edge).cot_weight;
        acc += w * omega.at(f, s) * E.at(f, s);
      }
      c[f] = acc;
    }
    if (alpha > 0.0) {
      for (const Quaternion& nu : axes) {
        SpinField cnu(n);
        for (int i = 0; i < n; ++i) cnu[i] = mul(c[i], nu);
        const Eigen::VectorXd g = De * reg_solver->solve(to_coords(cnu));
        FaceScalarField field(n);
        for (int i = 0; i < n; ++i) field[i] = g[4 * i] / net.face_area(i);
        raw.push_back(std::move(field));
      }
    } else {
      const SpinField z = solve_extrinsic_deflated(net, E, c);
      for (int nu = 0; nu < 3; ++nu) {
        FaceScalarField field(n);
        for (int f = 0; f < n; ++f) field[f] = z[f].imag()[nu];
        raw.push_back(std::move(field));
      }
    }
  }

  // Area-weighted Gram-Schmidt, dropping degenerate directions.
  const auto adot = [&](const FaceScalarField& a, const FaceScalarField& b) {
    return a.dot(proj.areas.cwiseProduct(b));
  };
  for (FaceScalarField& v : raw) {
    const double n0 = std::sqrt(adot(v, v));
    if (n0 == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& u : proj.fields) v -= adot(u, v) * u;
    const double n = std::sqrt(adot(v, v));
    if (n < 1e-8 * n0) continue;
    v /= n;
    proj.fields.push_back(std::move(v));
  }
  return proj;
}

FaceScalarField project_rho_update(const FaceScalarField& delta_rho,
                                   const ExactnessProjector& projector) {
  if (projector.empty()) return delta_rho;
  FaceScalarField out = delta_rho;
  for (const auto& u : projector.fields)
    out -= u.dot(projector.areas.cwiseProduct(out)) * u;
  return out;
}

Eigen::MatrixXd exactness_residual(const HyperedgeField& transformed, const HarmonicBasis& basis,
                                   const Eigen::VectorXd& cot_weights) {
  const FaceEdgeNet& net = transformed.net();
  Eigen::MatrixXd res(basis.betti(), 3);
  for (int k = 0; k < basis.betti(); ++k) {
    Quaternion acc;
    for (int f = 0; f < net.face_count(); ++f) {
      for (int s = 0; s < 3; ++s) {
        const int e = net.side(f, s).edge;
        acc += cot_weights[e] * basis.forms[k].at(f, s) * transformed.at(f, s);
      }
    }
    // Re(nu q) for nu = i, j, k is minus the matching imaginary component.
    res(k, 0) = -0.5 * acc.x;
    res(k, 1) = -0.5 * acc.y;
    res(k, 2) = -0.5 * acc.z;
  }
  return res;
}

} // namespace spinmesh
