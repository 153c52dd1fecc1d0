#include "spinmesh/flows.hpp"

#include <algorithm>
#include <cmath>

#include "spinmesh/errors.hpp"
#include "spinmesh/integrate.hpp"
#include "spinmesh/metrics.hpp"
#include "spinmesh/topology.hpp"

namespace spinmesh {

namespace {

double total_area_of(const VertexField& positions, const FaceEdgeNet& combinatorics) {
  double acc = 0.0;
  for (int f = 0; f < combinatorics.face_count(); ++f) {
    const auto& tri = combinatorics.face_vertices(f);
    acc += 0.5 * (positions[tri[1]] - positions[tri[0]])
                     .cross(positions[tri[2]] - positions[tri[0]])
                     .norm();
  }
  return acc;
}

double willmore_of(const FaceEdgeNet& net) { return willmore_energy(net); }

} // namespace

CurvatureMap make_curvature_map(const FaceEdgeNet& net, const std::string& source_id) {
  CurvatureMap map;
  const FaceCurvature c = face_mean_curvature(net);
  map.h_star = c.density;
  map.A_star = net.face_areas();
  map.total_area = net.total_area();
  map.face_count = net.face_count();
  map.source_id = source_id;
  return map;
}

double radius_coefficient_of_variation(const FaceEdgeNet& net) {
  Vec3 centroid = Vec3::Zero();
  for (const Vec3& p : net.positions()) centroid += p;
  centroid /= net.vertex_count();
  double mean = 0.0, mean2 = 0.0;
  for (const Vec3& p : net.positions()) {
    const double r = (p - centroid).norm();
    mean += r;
    mean2 += r * r;
  }
  mean /= net.vertex_count();
  mean2 /= net.vertex_count();
  return std::sqrt(std::max(0.0, mean2 - mean * mean)) / mean;
}

double min_face_angle(const FaceEdgeNet& net) {
  double worst = M_PI;
  for (int f = 0; f < net.face_count(); ++f) {
    const auto& tri = net.face_vertices(f);
    for (int s = 0; s < 3; ++s) {
      const Vec3& a = net.position(tri[s]);
      const Vec3 u = net.position(tri[(s + 1) % 3]) - a;
      const Vec3 v = net.position(tri[(s + 2) % 3]) - a;
      worst = std::min(worst, std::atan2(u.cross(v).norm(), u.dot(v)));
    }
  }
  return worst;
}

FaceScalarField filter_curvature(const FaceScalarField& delta_rho, const FaceEdgeNet& net,
                                 double strength) {
  return filter_face_field(net, delta_rho, strength);
}

FairingStepResult fairing_step(const FaceEdgeNet& net, const FlowConfig& config,
                               const ExactnessProjector* projector,
                               const FaceScalarField* multipliers) {
  if (!(config.tau > 0.0) || config.tau > 1.0) throw Error("fairing_step: tau must be in (0, 1]");

  FairingStepResult out;
  out.input_curvature = make_curvature_map(net, "");
  const FaceCurvature curv = face_mean_curvature(net);
  StepDiagnostics& diag = out.diagnostics;
  double willmore_before = 0.0;
  for (int f = 0; f < net.face_count(); ++f)
    willmore_before += curv.density[f] * curv.density[f] * net.face_area(f);
  diag.willmore_before = willmore_before;

  FaceScalarField delta = -config.tau * curv.density;
  if (config.filter_strength > 0.0) delta = filter_curvature(delta, net, config.filter_strength);
  const FaceScalarField rho =
      prescribe_rho(curv.density + delta, net.face_areas(), net.face_areas());

  const HyperedgeField E = hyperedges(net);

  SolveConfig sc = config.solve;
  const bool project_closedness = sc.enforce_closedness;
  sc.enforce_closedness = false;  // applied separately so both residuals get recorded
  if (multipliers && sc.area_penalty_enabled()) sc.area_multipliers = *multipliers;

  ExactnessProjector local;
  if (sc.enforce_exactness && net.genus() > 0 && projector == nullptr) {
    local = exactness_constraint_vectors(net, E, helmholtzian_nullspace(net), sc.alpha,
                                         sc.resolved_beta(net));
    projector = &local;
  }

  SpinSolveResult sol = solve_spin(net, E, rho, sc, projector);
  diag.warnings = sol.warnings;
  diag.closedness_pre = sol.max_closedness_residual;
  SpinField phi = std::move(sol.phi);
  if (project_closedness) {
    phi = enforce_closedness(net, E, phi, 1e-8, std::max(sc.max_iterations, 30));
    diag.closedness_post = closedness_residual(net, E, phi).maxCoeff();
  } else {
    diag.closedness_post = diag.closedness_pre;
  }

  const TransformedNet transformed = transform_hyperedges(E, phi);
  const EdgeOneForm form = EdgeOneForm::from_hyperedges(transformed.hyperedges);
  VertexField positions = integrate_edges(net, form);
  if (config.metric_choice == MetricChoice::Target) {
    MeshData tmp{positions, {net.face_vertices(0)}};
    tmp.faces.clear();
    for (int f = 0; f < net.face_count(); ++f) tmp.faces.push_back(net.face_vertices(f));
    const FaceEdgeNet target_metric = FaceEdgeNet::build(tmp);
    positions = integrate_edges(target_metric, form);
  }
  diag.integrability = integrability_residual(transformed.hyperedges, positions);

  if (config.renormalize_area) {
    const double scale = std::sqrt(net.total_area() / total_area_of(positions, net));
    for (Vec3& p : positions) p *= scale;
  }

  RebuildResult rebuilt = rebuild_net(net, transformed, positions);
  diag.normal_discrepancy = rebuilt.normal_discrepancy;
  out.net = std::make_shared<FaceEdgeNet>(std::move(rebuilt.net));

  diag.willmore_after = willmore_of(*out.net);
  if (diag.willmore_after > 1.01 * diag.willmore_before)
    diag.warnings.push_back("fairing step increased Willmore energy by more than 1%");
  diag.min_angle = min_face_angle(*out.net);
  const double mean_area = out.net->total_area() / out.net->face_count();
  diag.min_area_ratio = out.net->face_areas().minCoeff() / mean_area;
  diag.radius_cv = radius_coefficient_of_variation(*out.net);
  if (sc.area_penalty_enabled()) {
    const FaceScalarField& ref = sc.penalty_reference_areas.size() ? sc.penalty_reference_areas
                                                                   : net.face_areas();
    const FaceScalarField s = area_distortion_from_areas(ref, out.net->face_areas());
    diag.max_abs_log_distortion = s.cwiseAbs().maxCoeff();
  }
  return out;
}

FlowResult flow_to_sphere(const FaceEdgeNet& net, const FlowConfig& config) {
  FlowResult out;
  out.map = make_curvature_map(net, "");

  std::shared_ptr<FaceEdgeNet> cur;
  const FaceEdgeNet* cur_ptr = &net;

  FlowConfig step_cfg = config;
  if (step_cfg.solve.area_penalty_enabled() && step_cfg.solve.penalty_reference_areas.size() == 0)
    step_cfg.solve.penalty_reference_areas = net.face_areas();
  FaceScalarField lambda = step_cfg.solve.resolved_multipliers(net.face_count());

  for (int step = 0; step < config.steps; ++step) {
    if (radius_coefficient_of_variation(*cur_ptr) < config.sphericity_tolerance) {
      out.converged = true;
      break;
    }
    ExactnessProjector projector;
    const ExactnessProjector* proj_ptr = nullptr;
    if (step_cfg.solve.enforce_exactness && cur_ptr->genus() > 0) {
      projector = exactness_constraint_vectors(*cur_ptr, hyperedges(*cur_ptr),
                                               helmholtzian_nullspace(*cur_ptr),
                                               step_cfg.solve.alpha,
                                               step_cfg.solve.resolved_beta(*cur_ptr));
      proj_ptr = &projector;
    }
    FairingStepResult res = fairing_step(*cur_ptr, step_cfg, proj_ptr,
                                         step_cfg.solve.area_penalty_enabled() ? &lambda : nullptr);
    res.diagnostics.step = step;
    if (config.record_history) out.history.push_back(res.diagnostics);
    for (const std::string& w : res.diagnostics.warnings) out.warnings.push_back(w);

    if (step_cfg.solve.area_penalty_enabled() && config.update_multipliers) {
      const FaceScalarField s = area_distortion_from_areas(
          step_cfg.solve.penalty_reference_areas, res.net->face_areas());
      for (int i = 0; i < lambda.size(); ++i) {
        const double ratio = s[i] / step_cfg.solve.area_tolerance;
        lambda[i] *= std::max(1.0, ratio * ratio);
      }
    }
    cur = res.net;
    cur_ptr = cur.get();
  }
  if (!cur) {
    // Already sphere-like: return a copy of the input.
    cur = std::make_shared<FaceEdgeNet>(FaceEdgeNet::build(net.mesh()));
    out.converged = true;
  } else if (!out.converged) {
    out.converged = radius_coefficient_of_variation(*cur) < config.sphericity_tolerance;
  }
  if (!out.converged)
    out.warnings.push_back("flow_to_sphere: sphericity tolerance not reached within budget");
  out.net = cur;
  return out;
}

ExtrudeResult extrude(const FaceEdgeNet& sphere_net, const CurvatureMap& target,
                      const FlowConfig& config) {
  if (target.face_count != sphere_net.face_count())
    throw Error("extrude: curvature map face count mismatch");

  // Work at the carrier's scale; the half-density pair (h*, A*) is similarity
  // covariant, so rescaling both keeps the encoded shape.
  const double area_ratio = sphere_net.total_area() / target.total_area;
  const FaceScalarField a_star = area_ratio * target.A_star;
  const FaceScalarField h_star = target.h_star / std::sqrt(area_ratio);

  ExtrudeResult out;
  std::shared_ptr<FaceEdgeNet> cur = std::make_shared<FaceEdgeNet>(FaceEdgeNet::build(sphere_net.mesh()));

  int grew = 0;
  for (int step = 0; step < config.extrude_steps; ++step) {
    const FaceCurvature curv = face_mean_curvature(*cur);
    double num = 0.0, den = 0.0;
    for (int f = 0; f < cur->face_count(); ++f) {
      const double d = curv.density[f] - h_star[f];
      num += cur->face_area(f) * d * d;
      den += cur->face_area(f) * h_star[f] * h_star[f];
    }
    const double residual = std::sqrt(num / std::max(den, 1e-300));
    if (residual < 1e-6) {  // curvature target met
      out.curvature_residuals.push_back(residual);
      break;
    }
    if (!out.curvature_residuals.empty()) {
      const double prev = out.curvature_residuals.back();
      grew = residual > 1.02 * prev ? grew + 1 : 0;
      if (grew >= 3)
        throw SolverError("extrude: curvature residual grew over 3 consecutive steps (" +
                          std::to_string(prev) + " -> " + std::to_string(residual) + " at step " +
                          std::to_string(step) + ")");
      if (residual > 0.99 * prev && grew == 0) {
        out.curvature_residuals.push_back(residual);
        break;  // stagnation
      }
    }
    out.curvature_residuals.push_back(residual);

    FaceScalarField delta = config.extrude_fraction * (h_star - curv.density);
    if (config.filter_strength > 0.0) delta = filter_curvature(delta, *cur, config.filter_strength);
    const FaceScalarField rho = prescribe_rho(curv.density + delta, a_star, cur->face_areas());

    const HyperedgeField E = hyperedges(*cur);
    SolveConfig sc = config.solve;
    const bool project_closedness = sc.enforce_closedness;
    sc.enforce_closedness = false;
    SpinSolveResult sol = solve_spin(*cur, E, rho, sc, nullptr);
    SpinField phi = std::move(sol.phi);

    StepDiagnostics diag;
    diag.step = step;
    diag.closedness_pre = sol.max_closedness_residual;
    if (project_closedness) phi = enforce_closedness(*cur, E, phi, 1e-8, 30);
    diag.closedness_post = closedness_residual(*cur, E, phi).maxCoeff();

    const TransformedNet transformed = transform_hyperedges(E, phi);
    VertexField positions = integrate_edges(*cur, EdgeOneForm::from_hyperedges(transformed.hyperedges));
    diag.integrability = integrability_residual(transformed.hyperedges, positions);

    if (config.renormalize_area) {
      const double scale = std::sqrt(sphere_net.total_area() / total_area_of(positions, *cur));
      for (Vec3& p : positions) p *= scale;
    }
    RebuildResult rebuilt = rebuild_net(*cur, transformed, positions);
    diag.normal_discrepancy = rebuilt.normal_discrepancy;
    cur = std::make_shared<FaceEdgeNet>(std::move(rebuilt.net));
    diag.willmore_after = willmore_of(*cur);
    diag.min_angle = min_face_angle(*cur);
    diag.radius_cv = radius_coefficient_of_variation(*cur);
    if (config.record_history) out.history.push_back(diag);
    for (const std::string& w : diag.warnings) out.warnings.push_back(w);
  }

  // Restore the stored absolute scale.
  MeshData mesh = cur->mesh();
  const double back = std::sqrt(target.total_area / cur->total_area());
  for (Vec3& p : mesh.positions) p *= back;
  out.net = std::make_shared<FaceEdgeNet>(FaceEdgeNet::build(mesh));
  return out;
}

McFlowResult mean_curvature_flow_baseline(const FaceEdgeNet& net, double tau, int steps,
                                          bool incompressible, double stop_at_willmore) {
  const int nv = net.vertex_count();
  const int nf = net.face_count();
  std::vector<Vec3> pos(net.positions());
  std::vector<std::array<int, 3>> faces(nf);
  for (int f = 0; f < nf; ++f) faces[f] = net.face_vertices(f);

  McFlowResult out;
  out.net = std::make_shared<FaceEdgeNet>(FaceEdgeNet::build(net.mesh()));
  const double diag0 = net.bbox_diagonal();

  for (int step = 0; step < steps; ++step) {
    // Cotangent Laplacian of the position function, assembled directly so a
    // degrading mesh keeps flowing (quality loss is recorded, not fatal).
    std::vector<Vec3> lap(nv, Vec3::Zero());
    std::vector<double> varea(nv, 0.0), wsum(nv, 0.0);
    std::vector<Vec3> vnormal(nv, Vec3::Zero());
    bool degenerate = false;
    for (const auto& tri : faces) {
      const Vec3& a = pos[tri[0]];
      const Vec3& b = pos[tri[1]];
      const Vec3& c = pos[tri[2]];
      const Vec3 cr = (b - a).cross(c - a);
      const double area2 = cr.norm();
      if (area2 < 1e-300) {
        degenerate = true;
        continue;
      }
      for (int s = 0; s < 3; ++s) {
        const Vec3& p0 = pos[tri[s]];
        const Vec3& p1 = pos[tri[(s + 1) % 3]];
        const Vec3& p2 = pos[tri[(s + 2) % 3]];
        // cot of the angle at p2 weights edge (p0, p1)
        double cot = (p0 - p2).dot(p1 - p2) / (p0 - p2).cross(p1 - p2).norm();
        cot = std::clamp(cot, -1e8, 1e8);
        lap[tri[s]] += 0.5 * cot * (p1 - p0);
        lap[tri[(s + 1) % 3]] += 0.5 * cot * (p0 - p1);
        wsum[tri[s]] += 0.5 * std::abs(cot);
        wsum[tri[(s + 1) % 3]] += 0.5 * std::abs(cot);
      }
      for (int v : tri) {
        varea[v] += area2 / 6.0;  // a third of the face area
        vnormal[v] += cr;
      }
    }
    if (degenerate && out.warnings.empty())
      out.warnings.push_back("mesh quality collapsed (degenerate face) at step " +
                             std::to_string(step));

    double h_mean = 0.0, w_sum = 0.0;
    std::vector<double> h(nv);
    std::vector<Vec3> n(nv);
    for (int v = 0; v < nv; ++v) {
      const Vec3 mc = lap[v] / varea[v];  // discrete Laplace of position
      n[v] = vnormal[v].norm() > 0 ? vnormal[v].normalized() : Vec3(0, 0, 1);
      h[v] = -mc.dot(n[v]);
      h_mean += h[v] * varea[v];
      w_sum += varea[v];
    }
    h_mean = incompressible ? h_mean / w_sum : 0.0;

    double step_tau = tau;
    if (tau <= 0.0) {
      // Explicit-scheme stability bound of the cotangent diffusion.
      double bound = std::numeric_limits<double>::max();
      for (int v = 0; v < nv; ++v)
        if (wsum[v] > 1e-12) bound = std::min(bound, varea[v] / wsum[v]);
      step_tau = 0.5 * bound;
    }

    for (int v = 0; v < nv; ++v) pos[v] -= step_tau * (h[v] - h_mean) * n[v];

    double extent = 0.0;
    bool finite = true;
    for (const Vec3& p : pos) {
      if (!p.allFinite()) finite = false;
      extent = std::max(extent, p.cwiseAbs().maxCoeff());
    }
    if (!finite || extent > 1e6 * diag0)
      throw SolverError("mean_curvature_flow_baseline: numeric overflow at step " +
                        std::to_string(step));
    out.steps_taken = step + 1;

    StepDiagnostics diag;
    diag.step = step;
    try {
      const FaceEdgeNet stepped = FaceEdgeNet::build(MeshData{pos, faces});
      diag.willmore_after = willmore_of(stepped);
      diag.min_angle = min_face_angle(stepped);
      diag.min_area_ratio =
          stepped.face_areas().minCoeff() / (stepped.total_area() / stepped.face_count());
      diag.radius_cv = radius_coefficient_of_variation(stepped);
      out.net = std::make_shared<FaceEdgeNet>(stepped);
      if (stop_at_willmore > 0.0 && diag.willmore_after <= stop_at_willmore) {
        out.history.push_back(diag);
        break;
      }
    } catch (const Error& e) {
      diag.warnings.push_back(std::string("invalid intermediate mesh: ") + e.what());
    }
    out.history.push_back(diag);
  }
  return out;
}

CurvatureMap resample_curvature_map(const CurvatureMap& map, const FaceEdgeNet& sphere_net,
                                    const FaceEdgeNet& canonical) {
  if (map.face_count != sphere_net.face_count())
    throw Error("resample_curvature_map: map does not match its carrier");

  // Face -> vertex on the carrier (area-weighted), with A* as a density.
  const int nv = sphere_net.vertex_count();
  std::vector<double> hv(nv, 0.0), dv(nv, 0.0), wv(nv, 0.0);
  for (int f = 0; f < sphere_net.face_count(); ++f) {
    const double w = sphere_net.face_area(f);
    const double density = map.A_star[f] / sphere_net.face_area(f);
    for (int v : sphere_net.face_vertices(f)) {
      hv[v] += w * map.h_star[f];
      dv[v] += w * density;
      wv[v] += w;
    }
  }
  for (int v = 0; v < nv; ++v) {
    hv[v] /= wv[v];
    dv[v] /= wv[v];
  }

  // Vertex -> vertex transfer through the unit sphere: both meshes are
  // sphere-like, so radial projection gives the correspondence.
  std::vector<std::vector<int>> vertex_faces(nv);
  for (int f = 0; f < sphere_net.face_count(); ++f)
    for (int v : sphere_net.face_vertices(f)) vertex_faces[v].push_back(f);

  std::vector<Vec3> unit(nv);
  for (int v = 0; v < nv; ++v) unit[v] = sphere_net.position(v).normalized();

  const int cv = canonical.vertex_count();
  std::vector<double> hq(cv), dq(cv);
  for (int q = 0; q < cv; ++q) {
    const Vec3 dir = canonical.position(q).normalized();
    int nearest = 0;
    double best = -2.0;
    for (int v = 0; v < nv; ++v) {
      const double d = dir.dot(unit[v]);
      if (d > best) {
        best = d;
        nearest = v;
      }
    }
    // Barycentric interpolation in the best incident face.
    double bw[3] = {1.0, 0.0, 0.0};
    int bface = -1;
    double bdist = std::numeric_limits<double>::max();
    for (int f : vertex_faces[nearest]) {
      const auto& tri = sphere_net.face_vertices(f);
      Eigen::Matrix3d m;
      for (int s = 0; s < 3; ++s) m.col(s) = unit[tri[s]];
      const Eigen::Vector3d bc = m.colPivHouseholderQr().solve(dir);
      Eigen::Vector3d clamped = bc.cwiseMax(0.0);
      const double sum = clamped.sum();
      if (sum <= 0.0) continue;
      clamped /= sum;
      Vec3 proj = Vec3::Zero();
      for (int s = 0; s < 3; ++s) proj += clamped[s] * unit[tri[s]];
      const double dist = (proj.normalized() - dir).norm();
      if (dist < bdist) {
        bdist = dist;
        bface = f;
        for (int s = 0; s < 3; ++s) bw[s] = clamped[s];
      }
    }
    if (bface < 0) {
      hq[q] = hv[nearest];
      dq[q] = dv[nearest];
    } else {
      const auto& tri = sphere_net.face_vertices(bface);
      hq[q] = bw[0] * hv[tri[0]] + bw[1] * hv[tri[1]] + bw[2] * hv[tri[2]];
      dq[q] = bw[0] * dv[tri[0]] + bw[1] * dv[tri[1]] + bw[2] * dv[tri[2]];
    }
  }

  // Vertex -> face on the canonical mesh.
  CurvatureMap out;
  out.face_count = canonical.face_count();
  out.total_area = map.total_area;
  out.source_id = map.source_id;
  out.h_star.resize(canonical.face_count());
  out.A_star.resize(canonical.face_count());
  for (int f = 0; f < canonical.face_count(); ++f) {
    const auto& tri = canonical.face_vertices(f);
    out.h_star[f] = (hq[tri[0]] + hq[tri[1]] + hq[tri[2]]) / 3.0;
    out.A_star[f] = (dq[tri[0]] + dq[tri[1]] + dq[tri[2]]) / 3.0 * canonical.face_area(f);
  }
  out.A_star *= map.A_star.sum() / out.A_star.sum();
  return out;
}

} // namespace spinmesh
