#pragma once

#include <limits>
#include <vector>

#include "spinmesh/net.hpp"

namespace spinmesh {

// Per-face ratio of largest to smallest singular value of the in-plane
// Jacobian from src to dst (identical combinatorics); 1 for conformal maps.
// Degenerate triangles record +infinity.
FaceScalarField conformality_factor(const FaceEdgeNet& src, const FaceEdgeNet& dst);

// In-plane singular-value ratio for one triangle pair.
double triangle_conformality(const Vec3 src[3], const Vec3 dst[3]);

// eps_s,i = log(A~_i / A_i) - log(A~_tot / A_tot).
FaceScalarField area_distortion(const FaceEdgeNet& src, const FaceEdgeNet& dst);
FaceScalarField area_distortion_from_areas(const FaceScalarField& src_areas,
                                           const FaceScalarField& dst_areas);

// sum_i h_i^2 A_i, scale invariant.
double willmore_energy(const FaceEdgeNet& net);

struct SimilarityTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();  // det +1 always
  Vec3 translation = Vec3::Zero();
  double scale = 1.0;
  double residual_rms = 0.0;

  Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }
};

struct AlignmentResult {
  SimilarityTransform transform;
  FaceEdgeNet aligned;  // moving net mapped onto the fixed one
};

// Least-squares similarity over corresponding vertices (identical
// combinatorics). Throws GeometryError on a degenerate covariance.
AlignmentResult align_similarity(const FaceEdgeNet& moving, const FaceEdgeNet& fixed);

struct PointSurfaceError {
  double max = 0.0;
  double mean = 0.0;  // area-weighted over query vertices
};

// Exact distance from every query vertex to the nearest point of the
// reference surface, accelerated by an axis-aligned BVH.
PointSurfaceError point_to_surface_error(const FaceEdgeNet& query, const FaceEdgeNet& reference);

struct DeformationReport {
  FaceScalarField q;      // conformality factor per face
  FaceScalarField eps_s;  // log area distortion per face
  double q_max = 1.0;
  double q_max_robust = 1.0;  // max excluding the top 0.1% of faces
  double q_mean = 1.0;        // area-weighted
  double eps_abs_max = 0.0;
  double eps_abs_max_robust = 0.0;
  double eps_rms = 0.0;  // area-weighted
  double willmore_src = 0.0;
  double willmore_dst = 0.0;
  int degenerate_faces = 0;
  // Filled by the flow drivers when available.
  double closedness_residual = std::numeric_limits<double>::quiet_NaN();
  double integrability_residual = std::numeric_limits<double>::quiet_NaN();
};

DeformationReport deformation_report(const FaceEdgeNet& src, const FaceEdgeNet& dst);

} // namespace spinmesh
