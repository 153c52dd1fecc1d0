#include "spinmesh/metrics.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "spinmesh/errors.hpp"

namespace spinmesh {

double triangle_conformality(const Vec3 src[3], const Vec3 dst[3]) {
  auto frame2d = [](const Vec3 p[3], Eigen::Matrix2d& m) {
    const Vec3 e1 = p[1] - p[0];
    const Vec3 e2 = p[2] - p[0];
    const Vec3 n = e1.cross(e2);
    const double n2 = n.norm();
    if (n2 == 0.0) return false;
    const Vec3 u = e1.normalized();
    const Vec3 v = n.cross(u).normalized();
    m << e1.dot(u), e2.dot(u), e1.dot(v), e2.dot(v);
    return true;
  };
  Eigen::Matrix2d s, t;
  if (!frame2d(src, s) || !frame2d(dst, t))
    return std::numeric_limits<double>::infinity();
  const double det = s.determinant();
  const double scale = s.cwiseAbs().maxCoeff();
  if (std::abs(det) < 1e-14 * scale * scale)
    return std::numeric_limits<double>::infinity();
  const Eigen::Matrix2d j = t * s.inverse();
  const Eigen::JacobiSVD<Eigen::Matrix2d> svd(j);
  const double smin = svd.singularValues()[1];
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return svd.singularValues()[0] / smin;
}

FaceScalarField conformality_factor(const FaceEdgeNet& src, const FaceEdgeNet& dst) {
  if (src.face_count() != dst.face_count())
    throw Error("conformality_factor: combinatorics mismatch");
  FaceScalarField q(src.face_count());
  for (int f = 0; f < src.face_count(); ++f) {
    Vec3 a[3], b[3];
    for (int s = 0; s < 3; ++s) {
      a[s] = src.position(src.face_vertices(f)[s]);
      b[s] = dst.position(dst.face_vertices(f)[s]);
    }
    q[f] = triangle_conformality(a, b);
  }
  return q;
}

FaceScalarField area_distortion_from_areas(const FaceScalarField& src_areas,
                                           const FaceScalarField& dst_areas) {
  const double global = std::log(dst_areas.sum() / src_areas.sum());
  FaceScalarField eps(src_areas.size());
  for (int i = 0; i < src_areas.size(); ++i) {
    if (src_areas[i] <= 0.0 || dst_areas[i] <= 0.0)
      eps[i] = std::numeric_limits<double>::infinity();
    else
      eps[i] = std::log(dst_areas[i] / src_areas[i]) - global;
  }
  return eps;
}

FaceScalarField area_distortion(const FaceEdgeNet& src, const FaceEdgeNet& dst) {
  if (src.face_count() != dst.face_count()) throw Error("area_distortion: combinatorics mismatch");
  return area_distortion_from_areas(src.face_areas(), dst.face_areas());
}

double willmore_energy(const FaceEdgeNet& net) {
  const FaceCurvature c = face_mean_curvature(net);
  double acc = 0.0;
  for (int f = 0; f < net.face_count(); ++f) acc += c.density[f] * c.density[f] * net.face_area(f);
  return acc;
}

AlignmentResult align_similarity(const FaceEdgeNet& moving, const FaceEdgeNet& fixed) {
  const int nv = moving.vertex_count();
  if (nv != fixed.vertex_count()) throw Error("align_similarity: combinatorics mismatch");

  Eigen::MatrixXd src(3, nv), dst(3, nv);
  for (int v = 0; v < nv; ++v) {
    src.col(v) = moving.position(v);
    dst.col(v) = fixed.position(v);
  }
  const Eigen::MatrixXd c_src = src.colwise() - src.rowwise().mean();
  const Eigen::Matrix3d cov = c_src * c_src.transpose() / nv;
  const Eigen::JacobiSVD<Eigen::Matrix3d> cov_svd(cov);
  if (cov_svd.singularValues()[1] < 1e-12 * cov_svd.singularValues()[0])
    throw GeometryError("align_similarity: degenerate vertex covariance");

  const Eigen::Matrix4d t = Eigen::umeyama(src, dst, true);
  SimilarityTransform out;
  const Eigen::Matrix3d sr = t.topLeftCorner<3, 3>();
  out.scale = std::cbrt(sr.determinant());
  out.rotation = sr / out.scale;
  out.translation = t.topRightCorner<3, 1>();

  MeshData mesh = moving.mesh();
  double acc = 0.0;
  for (int v = 0; v < nv; ++v) {
    mesh.positions[v] = out.apply(mesh.positions[v]);
    acc += (mesh.positions[v] - fixed.position(v)).squaredNorm();
  }
  out.residual_rms = std::sqrt(acc / nv);
  return {out, FaceEdgeNet::build(mesh)};
}

namespace {

// Ericson-style exact closest point on a triangle.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);

  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

struct AabbNode {
  Vec3 lo, hi;
  int left = -1, right = -1;   // children, or
  int begin = 0, end = 0;      // leaf triangle range
};

class AabbTree {
public:
  explicit AabbTree(const FaceEdgeNet& net) : net_(&net) {
    order_.resize(net.face_count());
    std::iota(order_.begin(), order_.end(), 0);
    centroids_.reserve(net.face_count());
    for (int f = 0; f < net.face_count(); ++f) centroids_.push_back(net.face_centroid(f));
    nodes_.reserve(2 * net.face_count());
    build(0, net.face_count());
  }

  double distance(const Vec3& p) const {
    double best = std::numeric_limits<double>::infinity();
    search(0, p, best);
    return std::sqrt(best);
  }

private:
  int build(int begin, int end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
    Vec3 hi = Vec3::Constant(std::numeric_limits<double>::lowest());
    for (int i = begin; i < end; ++i) {
      for (int v : net_->face_vertices(order_[i])) {
        lo = lo.cwiseMin(net_->position(v));
        hi = hi.cwiseMax(net_->position(v));
      }
    }
    nodes_[id].lo = lo;
    nodes_[id].hi = hi;
    if (end - begin <= 4) {
      nodes_[id].begin = begin;
      nodes_[id].end = end;
      return id;
    }
    int axis;
    (hi - lo).maxCoeff(&axis);
    const int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) { return centroids_[a][axis] < centroids_[b][axis]; });
    const int l = build(begin, mid);
    const int r = build(mid, end);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  double box_dist2(const AabbNode& n, const Vec3& p) const {
    const Vec3 d = (n.lo - p).cwiseMax(Vec3::Zero()).cwiseMax(p - n.hi);
    return d.squaredNorm();
  }

  void search(int id, const Vec3& p, double& best) const {
    const AabbNode& n = nodes_[id];
    if (box_dist2(n, p) >= best) return;
    if (n.left < 0) {
      for (int i = n.begin; i < n.end; ++i) {
        const auto& tri = net_->face_vertices(order_[i]);
        const Vec3 q = closest_point_on_triangle(p, net_->position(tri[0]), net_->position(tri[1]),
                                                 net_->position(tri[2]));
        best = std::min(best, (p - q).squaredNorm());
      }
      return;
    }
    const double dl = box_dist2(nodes_[n.left], p);
    const double dr = box_dist2(nodes_[n.right], p);
    if (dl < dr) {
      search(n.left, p, best);
      search(n.right, p, best);
    } else {
      search(n.right, p, best);
      search(n.left, p, best);
    }
  }

  const FaceEdgeNet* net_;
  std::vector<int> order_;
  std::vector<Vec3> centroids_;
  std::vector<AabbNode> nodes_;
};

} // namespace

PointSurfaceError point_to_surface_error(const FaceEdgeNet& query, const FaceEdgeNet& reference) {
  const AabbTree tree(reference);
  PointSurfaceError out;
  double wsum = 0.0;
  for (int v = 0; v < query.vertex_count(); ++v) {
    const double d = tree.distance(query.position(v));
    out.max = std::max(out.max, d);
    out.mean += query.vertex_area(v) * d;
    wsum += query.vertex_area(v);
  }
  out.mean /= wsum;
  return out;
}

namespace {

double robust_max(std::vector<double> values) {
  // Max after dropping the top 0.1% (at least one entry).
  std::sort(values.begin(), values.end());
  const int drop = std::max<int>(1, static_cast<int>(values.size() / 1000));
  const int idx = std::max<int>(0, static_cast<int>(values.size()) - 1 - drop);
  return values[idx];
}

} // namespace

DeformationReport deformation_report(const FaceEdgeNet& src, const FaceEdgeNet& dst) {
  DeformationReport rep;
  rep.q = conformality_factor(src, dst);
  rep.eps_s = area_distortion(src, dst);
  rep.willmore_src = willmore_energy(src);
  rep.willmore_dst = willmore_energy(dst);

  std::vector<double> qv, ev;
  double q_acc = 0.0, e_acc = 0.0, w_acc = 0.0;
  for (int f = 0; f < src.face_count(); ++f) {
    if (!std::isfinite(rep.q[f])) {
      ++rep.degenerate_faces;
      continue;
    }
    qv.push_back(rep.q[f]);
    ev.push_back(std::abs(rep.eps_s[f]));
    const double w = src.face_area(f);
    q_acc += w * rep.q[f];
    e_acc += w * rep.eps_s[f] * rep.eps_s[f];
    w_acc += w;
  }
  if (!qv.empty()) {
    rep.q_max = *std::max_element(qv.begin(), qv.end());
    rep.q_max_robust = robust_max(qv);
    rep.q_mean = q_acc / w_acc;
    rep.eps_abs_max = *std::max_element(ev.begin(), ev.end());
    rep.eps_abs_max_robust = robust_max(ev);
    rep.eps_rms = std::sqrt(e_acc / w_acc);
  }
  return rep;
}

} // namespace spinmesh
