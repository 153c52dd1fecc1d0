#include "spinmesh/dirac.hpp"

#include <algorithm>
#include <cmath>

#include "spinmesh/errors.hpp"

namespace spinmesh {

bool QuaternionSparseMatrix::is_symmetric() const {
  const int n = quaternion_dimension();
  for (int i = 0; i < n; ++i) {
    for (const Entry& e : rows_[i]) {
      const Quaternion want = e.value.conj();
      bool found = false;
      for (const Entry& t : rows_[e.col]) {
        if (t.col != i) continue;
        if (t.value.w == want.w && t.value.x == want.x && t.value.y == want.y &&
            t.value.z == want.z) {
          found = true;
          break;
        }
      }
      if (!found) return false;
    }
  }
  return true;
}

SpinField QuaternionSparseMatrix::apply(const SpinField& phi) const {
  const int n = quaternion_dimension();
  SpinField out(n);
  for (int i = 0; i < n; ++i) {
    Quaternion acc;
    for (const Entry& e : rows_[i]) acc += mul(e.value, phi[e.col]);
    out[i] = acc;
  }
  return out;
}

Eigen::SparseMatrix<double> QuaternionSparseMatrix::to_real() const {
  const int n = quaternion_dimension();
  std::vector<Eigen::Triplet<double>> trip;
  std::size_t nnz = 0;
  for (const auto& row : rows_) nnz += row.size();
  trip.reserve(16 * nnz);
  for (int i = 0; i < n; ++i) {
    for (const Entry& e : rows_[i]) {
      const Mat4 block = to_real_matrix(e.value);
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
          if (block(r, c) != 0.0) trip.emplace_back(4 * i + r, 4 * e.col + c, block(r, c));
    }
  }
  Eigen::SparseMatrix<double> m(4 * n, 4 * n);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

QuaternionSparseMatrix assemble_intrinsic(const FaceEdgeNet& net, const HyperedgeField& E) {
  QuaternionSparseMatrix d(net.face_count());
  for (int f = 0; f < net.face_count(); ++f)
    for (int s = 0; s < 3; ++s) d.add(f, net.side(f, s).neighbor, E.at(f, s));
  return d;
}

QuaternionSparseMatrix assemble_extrinsic(const FaceEdgeNet& net, const HyperedgeField& E) {
  QuaternionSparseMatrix d(net.face_count());
  for (int f = 0; f < net.face_count(); ++f) {
    Quaternion diag;
    for (int s = 0; s < 3; ++s) {
      const Quaternion e = E.at(f, s);
      d.add(f, net.side(f, s).neighbor, e);
      diag.w -= e.w;  // -H_i, the imaginary parts of a closed face cancel
    }
    d.add(f, f, diag);
  }
  return d;
}

QuaternionSparseMatrix assemble_shifted(const FaceEdgeNet& net, const HyperedgeField& E,
                                        const FaceScalarField& rho) {
  QuaternionSparseMatrix d(net.face_count());
  for (int f = 0; f < net.face_count(); ++f) {
    for (int s = 0; s < 3; ++s) d.add(f, net.side(f, s).neighbor, E.at(f, s));
    d.add(f, f, Quaternion(-rho[f] * net.face_area(f)));
  }
  return d;
}

Eigen::VectorXd to_coords(const SpinField& phi) {
  Eigen::VectorXd v(4 * phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) v.segment<4>(4 * i) = phi[i].coeffs();
  return v;
}

SpinField from_coords(const Eigen::VectorXd& v) {
  SpinField phi(v.size() / 4);
  for (std::size_t i = 0; i < phi.size(); ++i)
    phi[i] = Quaternion::from_coeffs(v.segment<4>(4 * i));
  return phi;
}

Quaternion gauge_fix(SpinField& phi, const FaceScalarField& areas) {
  Quaternion mean;
  double scale = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    mean += areas[i] * phi[i];
    scale += areas[i] * phi[i].norm();
  }
  Quaternion rot;
  if (mean.norm() > 1e-12 * scale) {
    rot = mean.conj() / mean.norm();
  } else {
    // Degenerate mean: fall back to the largest entry.
    std::size_t best = 0;
    for (std::size_t i = 1; i < phi.size(); ++i)
      if (phi[i].norm2() > phi[best].norm2()) best = i;
    if (phi[best].norm() == 0.0) return Quaternion::identity();
    rot = phi[best].conj() / phi[best].norm();
  }
  for (Quaternion& q : phi) q = mul(q, rot);
  return rot;
}

std::vector<EigenPair> smallest_eigenpairs(const QuaternionSparseMatrix& D,
                                           const FaceScalarField& areas, int k,
                                           const DiracEigsOptions& opts) {
  const int n = D.quaternion_dimension();
  if (k < 1 || k > n)
    throw SolverError("smallest_eigenpairs: k must be in [1, " + std::to_string(n) + "]");

  const Eigen::SparseMatrix<double> S = D.to_real();
  Eigen::VectorXd b(4 * n);
  for (int i = 0; i < n; ++i) b.segment<4>(4 * i).setConstant(areas[i]);

  SymEigsOptions sopts;
  sopts.k = 4 * k;
  sopts.subspace_pad = std::min(4 * n - sopts.k, 12);
  sopts.tol = opts.tol;
  sopts.max_iterations = opts.max_iterations;
  sopts.seed = opts.seed;
  const auto real_pairs = smallest_sym_eigs(S, b, sopts);

  // Each quaternionic eigenvalue spans a 4-dimensional real eigenspace
  // {phi q : q in H}; group the real pairs into such lines and keep one
  // representative per line.
  const auto b_dot = [&](const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    return u.dot(b.cwiseProduct(v));
  };
  const Quaternion basis[4] = {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}};

  std::vector<EigenPair> out;
  std::vector<Eigen::VectorXd> line_basis;  // 4 B-orthonormal vectors per line
  for (const auto& pair : real_pairs) {
    if (static_cast<int>(out.size()) == k) break;
    Eigen::VectorXd v = pair.vector;
    for (const auto& lb : line_basis) v -= b_dot(lb, v) * lb;
    const double rem = std::sqrt(std::max(b_dot(v, v), 0.0));
    if (rem < 0.3) continue;  // lives in an already-captured line
    v /= rem;

    SpinField phi = from_coords(v);
    for (const Quaternion& q : basis) {
      SpinField rotated(phi.size());
      for (std::size_t i = 0; i < phi.size(); ++i) rotated[i] = mul(phi[i], q);
      Eigen::VectorXd col = to_coords(rotated);
      col /= std::sqrt(b_dot(col, col));
      line_basis.push_back(std::move(col));
    }

    EigenPair ep;
    ep.value = v.dot(S * v) / b_dot(v, v);
    gauge_fix(phi, areas);
    ep.vector = std::move(phi);
    const Eigen::VectorXd w = to_coords(ep.vector);
    const Eigen::VectorXd r = S * w - ep.value * b.cwiseProduct(w);
    ep.residual = std::sqrt(r.dot(r.cwiseQuotient(b))) / std::sqrt(b_dot(w, w));
    out.push_back(std::move(ep));
  }
  if (static_cast<int>(out.size()) < k)
    throw SolverError("smallest_eigenpairs: could not separate " + std::to_string(k) +
                      " quaternionic lines");
  return out;
}

} // namespace spinmesh
