#include "spinmesh/integrate.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>

#include "spinmesh/errors.hpp"

namespace spinmesh {

EdgeOneForm EdgeOneForm::from_hyperedges(const HyperedgeField& E) {
  std::vector<Vec3> values(E.edge_count());
  for (int e = 0; e < E.edge_count(); ++e) values[e] = E.canonical(e).imag();
  return EdgeOneForm(E.net(), std::move(values));
}

EdgeOneForm EdgeOneForm::gradient_of(const FaceEdgeNet& net, const VertexField& f) {
  std::vector<Vec3> values(net.edge_count());
  for (int e = 0; e < net.edge_count(); ++e) {
    const auto& rec = net.edge(e);
    values[e] = f[rec.vb] - f[rec.va];
  }
  return EdgeOneForm(net, std::move(values));
}

TransformedNet transform_hyperedges(const HyperedgeField& E, const SpinField& phi) {
  const FaceEdgeNet& net = E.net();
  const int nf = net.face_count();
  if (static_cast<int>(phi.size()) != nf)
    throw Error("transform_hyperedges: spin field size mismatch");
  for (int i = 0; i < nf; ++i)
    if (phi[i].norm2() == 0.0)
      throw GeometryError("transform_hyperedges: zero spin quaternion on face " + std::to_string(i));

  std::vector<Quaternion> canon(net.edge_count());
  for (int e = 0; e < net.edge_count(); ++e) {
    const auto& rec = net.edge(e);
    canon[e] = mul(mul(phi[rec.face_left].conj(), E.canonical(e)), phi[rec.face_right]);
  }
  TransformedNet out{HyperedgeField::from_canonical(net, std::move(canon)), {}};
  out.normals.resize(nf);
  for (int i = 0; i < nf; ++i) {
    const Quaternion n = conjugate_by(phi[i], Quaternion::pure(net.face_normal(i)));
    out.normals[i] = n.imag().normalized();
  }
  return out;
}

VertexField divergence_of_edges(const FaceEdgeNet& metric, const EdgeOneForm& form) {
  VertexField div(metric.vertex_count(), Vec3::Zero());
  for (int e = 0; e < metric.edge_count(); ++e) {
    const auto& rec = metric.edge(e);
    const Vec3 w = rec.cot_weight * form.canonical(e);
    div[rec.va] += w;   // outbound from va along the canonical direction
    div[rec.vb] -= w;   // outbound from vb is the negated value
  }
  return div;
}

VertexField integrate_edges(const FaceEdgeNet& metric, const EdgeOneForm& form) {
  const int nv = metric.vertex_count();
  if (form.edge_count() != metric.edge_count())
    throw Error("integrate_edges: combinatorics mismatch");

  // Cotangent Laplacian grounded at vertex 0 (the pencil kernel is the
  // constant translation; the right-hand side is orthogonal to it exactly
  // because the form is alternating).
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(4 * metric.edge_count());
  for (int e = 0; e < metric.edge_count(); ++e) {
    const auto& rec = metric.edge(e);
    const double w = rec.cot_weight;
    if (rec.va > 0) trip.emplace_back(rec.va - 1, rec.va - 1, w);
    if (rec.vb > 0) trip.emplace_back(rec.vb - 1, rec.vb - 1, w);
    if (rec.va > 0 && rec.vb > 0) {
      trip.emplace_back(rec.va - 1, rec.vb - 1, -w);
      trip.emplace_back(rec.vb - 1, rec.va - 1, -w);
    }
  }
  Eigen::SparseMatrix<double> L(nv - 1, nv - 1);
  L.setFromTriplets(trip.begin(), trip.end());

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(L);
  if (solver.info() != Eigen::Success)
    throw SolverError("integrate_edges: Poisson factorization failed");

  const VertexField div = divergence_of_edges(metric, form);
  VertexField f(nv, Vec3::Zero());
  for (int c = 0; c < 3; ++c) {
    Eigen::VectorXd rhs(nv - 1);
    for (int v = 1; v < nv; ++v) rhs[v - 1] = -div[v][c];
    const Eigen::VectorXd x = solver.solve(rhs);
    if (solver.info() != Eigen::Success)
      throw SolverError("integrate_edges: Poisson solve failed");
    for (int v = 1; v < nv; ++v) f[v][c] = x[v - 1];
  }
  Vec3 mean = Vec3::Zero();
  for (const Vec3& p : f) mean += p;
  mean /= static_cast<double>(nv);
  for (Vec3& p : f) p -= mean;
  return f;
}

double integrability_residual(const HyperedgeField& transformed, const VertexField& positions) {
  const FaceEdgeNet& net = transformed.net();
  double mean_len = 0.0;
  for (int e = 0; e < net.edge_count(); ++e)
    mean_len += transformed.canonical(e).imag().norm();
  mean_len /= static_cast<double>(net.edge_count());
  if (mean_len == 0.0) return 0.0;

  double worst = 0.0;
  for (int e = 0; e < net.edge_count(); ++e) {
    const auto& rec = net.edge(e);
    const Vec3 diff = transformed.canonical(e).imag() - (positions[rec.vb] - positions[rec.va]);
    worst = std::max(worst, diff.norm());
  }
  return worst / mean_len;
}

RebuildResult rebuild_net(const FaceEdgeNet& source, const TransformedNet& transformed,
                          const VertexField& positions) {
  MeshData mesh;
  mesh.positions = positions;
  mesh.faces.reserve(source.face_count());
  for (int f = 0; f < source.face_count(); ++f) mesh.faces.push_back(source.face_vertices(f));

  RebuildResult out{FaceEdgeNet::build(mesh), 0.0, 0.0};

  for (int f = 0; f < out.net.face_count(); ++f) {
    const double c = std::clamp(out.net.face_normal(f).dot(transformed.normals[f]), -1.0, 1.0);
    out.normal_discrepancy = std::max(out.normal_discrepancy, std::acos(c));
  }
  int worst_edge = -1;
  for (int e = 0; e < transformed.hyperedges.edge_count(); ++e) {
    const auto& rec = source.edge(e);
    const Vec3 et = transformed.hyperedges.canonical(e).imag();
    const double len = et.norm();
    if (len == 0.0) continue;
    const double r =
        std::abs((transformed.normals[rec.face_left] + transformed.normals[rec.face_right]).dot(et)) / len;
    if (r > out.edge_constraint_residual) {
      out.edge_constraint_residual = r;
      worst_edge = e;
    }
  }
  if (out.edge_constraint_residual > 1e-6) {
    const auto& rec = source.edge(worst_edge);
    throw GeometryError("rebuild_net: transformed edge constraint violated at edge (" +
                        std::to_string(rec.va) + ", " + std::to_string(rec.vb) + "), residual " +
                        std::to_string(out.edge_constraint_residual));
  }
  return out;
}

} // namespace spinmesh
